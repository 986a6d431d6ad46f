#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rsep/errors.hpp"
#include "rsep/expr.hpp"
#include "rsep/jet.hpp"

namespace rsep {

/// Axis-aligned closed box; the sampling domain of a metric.
struct Box {
  std::vector<std::array<double, 2>> interval;  // per-axis {lo, hi}

  int dim() const { return static_cast<int>(interval.size()); }

  double diameter() const {
    double s = 0.0;
    for (const auto& iv : interval) s += (iv[1] - iv[0]) * (iv[1] - iv[0]);
    return std::sqrt(s);
  }

  std::vector<double> center() const {
    std::vector<double> c(interval.size());
    for (std::size_t i = 0; i < interval.size(); ++i) c[i] = 0.5 * (interval[i][0] + interval[i][1]);
    return c;
  }
};

/// A real-valued function of `arity` coordinates, evaluable as a jet.
/// Backed either by a parsed expression (printable, exportable) or by an
/// opaque closure.
class ScalarField {
 public:
  using Fn = std::function<Jet(std::span<const Jet>)>;

  ScalarField() = default;

  static ScalarField function(int arity, Fn fn) {
    ScalarField f;
    f.arity_ = arity;
    f.fn_ = std::move(fn);
    return f;
  }

  static ScalarField constant(int arity, double v) {
    ScalarField f;
    f.arity_ = arity;
    f.fn_ = [v](std::span<const Jet> seeds) {
      return Jet::constant(seeds[0].arity(), seeds[0].order(), v);
    };
    f.constant_value_ = v;
    return f;
  }

  static ScalarField expression(ExprPtr e, std::vector<std::string> coords,
                                std::vector<double> bindings = {}) {
    ScalarField f;
    f.arity_ = static_cast<int>(coords.size());
    f.expr_ = std::move(e);
    f.coords_ = std::move(coords);
    f.bindings_ = std::move(bindings);
    const Expr* raw = f.expr_.get();
    auto bind = std::make_shared<std::vector<double>>(f.bindings_);
    f.fn_ = [raw, bind](std::span<const Jet> seeds) { return eval_jet(*raw, seeds, *bind); };
    return f;
  }

  /// Parse-and-wrap convenience; constants are bound by value.
  static ScalarField expression(std::string_view text, std::vector<std::string> coords,
                                const std::map<std::string, double>& constants = {}) {
    std::vector<std::string> names;
    std::vector<double> values;
    for (const auto& [k, v] : constants) {
      names.push_back(k);
      values.push_back(v);
    }
    ExprPtr e = parse(text, coords, names);
    return expression(std::move(e), std::move(coords), std::move(values));
  }

  bool valid() const { return static_cast<bool>(fn_); }
  int arity() const { return arity_; }
  const ExprPtr& expr() const { return expr_; }
  const std::vector<std::string>& coords() const { return coords_; }

  Jet operator()(std::span<const Jet> seeds) const { return fn_(seeds); }

  Jet at(std::span<const double> point, int order) const {
    const std::vector<Jet> seeds = Jet::seed(point, order);
    return fn_(seeds);
  }

  double value(std::span<const double> point) const { return at(point, 0).value(); }

  /// Univariate convenience (arity-1 fields).
  double operator()(double t) const {
    return value(std::span<const double>(&t, 1));
  }

  bool is_known_constant(double v) const { return constant_value_ && *constant_value_ == v; }

 private:
  int arity_ = 0;
  Fn fn_;
  ExprPtr expr_;
  std::vector<std::string> coords_;
  std::vector<double> bindings_;
  std::optional<double> constant_value_;
};

/// Evaluate an arity-1 field at a jet argument by series recomposition,
/// so univariate factors can enter full-arity jet arithmetic exactly.
inline Jet compose1(const ScalarField& f, const Jet& arg) {
  if (f.arity() != 1) throw invalid_input("compose1 requires an arity-1 field");
  const double t0 = arg.value();
  const Jet inner = f.at(std::span<const double>(&t0, 1), arg.order());
  std::array<double, kMaxOrder + 1> cs{};
  for (int k = 0; k <= arg.order(); ++k) cs[k] = inner.coefficient(k);
  return Jet::compose(arg, std::span<const double>(cs.data(), arg.order() + 1));
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

inline constexpr int kHaltonBases[kMaxArity] = {2, 3, 5, 7, 11, 13};

}  // namespace detail

/// Deterministic low-discrepancy points in `box`, shifted by `seed` and
/// rejected against guard fields with margin 1e-6 x box diameter.
inline std::vector<std::vector<double>> sample_box(
    const Box& box, std::span<const ScalarField> guards, int count, std::uint64_t seed) {
  const int n = box.dim();
  std::uint64_t state = seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL;
  std::array<double, kMaxArity> shift{};
  for (int i = 0; i < n; ++i)
    shift[i] = static_cast<double>(detail::splitmix64(state) >> 11) * 0x1.0p-53;
  const double margin = 1e-6 * box.diameter();

  std::vector<std::vector<double>> out;
  out.reserve(count);
  std::vector<double> pt(n);
  const std::uint64_t max_tries = 1000ULL * static_cast<std::uint64_t>(count) + 10000ULL;
  for (std::uint64_t k = 1; k <= max_tries && static_cast<int>(out.size()) < count; ++k) {
    for (int i = 0; i < n; ++i) {
      double u = detail::halton(k, detail::kHaltonBases[i]) + shift[i];
      u -= std::floor(u);
      pt[i] = box.interval[i][0] + u * (box.interval[i][1] - box.interval[i][0]);
    }
    bool ok = true;
    for (const auto& g : guards) {
      try {
        if (std::abs(g.value(pt)) <= margin) {
          ok = false;
          break;
        }
      } catch (const domain_error&) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(pt);
  }
  if (static_cast<int>(out.size()) < count)
    throw domain_error("sampling failed: guards reject nearly all of the domain box");
  return out;
}

/// Uniform per-axis grid including both endpoints.
inline std::vector<double> axis_grid(double lo, double hi, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i)
    out[i] = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (count - 1);
  return out;
}

}  // namespace rsep
