#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <mutex>
#include <span>
#include <vector>

#include "rsep/errors.hpp"

namespace rsep {

inline constexpr int kMaxArity = 6;
inline constexpr int kMaxOrder = 5;

/// Values closer to a singular locus than this are treated as on it.
inline constexpr double kSingularGuard = 1e-9;

namespace detail {

struct MulEntry {
  std::uint16_t a, b, c;  // coeff[c] += x[a] * y[b]
};

/// Per-(arity, order) layout of truncated Taylor coefficients in
/// graded-lexicographic order, plus the precomputed product table.
struct JetTable {
  int arity = 0;
  int order = 0;
  std::vector<std::array<std::uint8_t, kMaxArity>> index;  // rank -> multi-index
  std::vector<std::uint8_t> degree;                        // rank -> total degree
  std::vector<double> factorial;                           // rank -> alpha!
  std::vector<std::int32_t> rank_of;                       // radix encoding -> rank
  std::vector<MulEntry> mul;

  int size() const { return static_cast<int>(index.size()); }

  int encode(std::span<const int> alpha) const {
    int code = 0;
    for (int i = arity - 1; i >= 0; --i) code = code * (order + 1) + alpha[i];
    return code;
  }

  int rank(std::span<const int> alpha) const {
    for (int i = 0; i < arity; ++i)
      if (alpha[i] < 0 || alpha[i] > order) return -1;
    return rank_of[encode(alpha)];
  }
};

inline JetTable build_jet_table(int arity, int order) {
  JetTable t;
  t.arity = arity;
  t.order = order;
  // Enumerate multi-indices with total degree <= order, by (degree, lex).
  std::vector<std::array<std::uint8_t, kMaxArity>> all;
  std::array<int, kMaxArity> alpha{};
  const auto total = [&] {
    int s = 0;
    for (int i = 0; i < arity; ++i) s += alpha[i];
    return s;
  };
  for (int deg = 0; deg <= order; ++deg) {
    alpha.fill(0);
    while (true) {
      if (total() == deg) {
        std::array<std::uint8_t, kMaxArity> a{};
        for (int i = 0; i < arity; ++i) a[i] = static_cast<std::uint8_t>(alpha[i]);
        all.push_back(a);
      }
      int i = arity - 1;
      while (i >= 0 && alpha[i] == deg) alpha[i--] = 0;
      if (i < 0) break;
      ++alpha[i];
    }
  }
  t.index = std::move(all);
  int radix_size = 1;
  for (int i = 0; i < arity; ++i) radix_size *= (order + 1);
  t.rank_of.assign(radix_size, -1);
  t.degree.resize(t.index.size());
  t.factorial.resize(t.index.size());
  for (int r = 0; r < t.size(); ++r) {
    int deg = 0, code = 0;
    double fact = 1.0;
    for (int i = arity - 1; i >= 0; --i) code = code * (order + 1) + t.index[r][i];
    for (int i = 0; i < arity; ++i) {
      deg += t.index[r][i];
      for (int k = 2; k <= t.index[r][i]; ++k) fact *= k;
    }
    t.degree[r] = static_cast<std::uint8_t>(deg);
    t.rank_of[code] = r;
    t.factorial[r] = fact;
  }
  for (int a = 0; a < t.size(); ++a) {
    for (int b = 0; b < t.size(); ++b) {
      if (t.degree[a] + t.degree[b] > order) continue;
      std::array<int, kMaxArity> sum{};
      int code = 0;
      for (int i = 0; i < arity; ++i) sum[i] = t.index[a][i] + t.index[b][i];
      for (int i = arity - 1; i >= 0; --i) code = code * (order + 1) + sum[i];
      t.mul.push_back({static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b),
                       static_cast<std::uint16_t>(t.rank_of[code])});
    }
  }
  return t;
}

inline const JetTable& jet_table(int arity, int order) {
  if (arity < 1 || arity > kMaxArity) throw invalid_input("jet arity must be in [1, 6]");
  if (order < 0 || order > kMaxOrder) throw invalid_input("jet order must be in [0, 5]");
  static std::array<std::array<JetTable, kMaxOrder + 1>, kMaxArity + 1> cache;
  static std::array<std::array<std::once_flag, kMaxOrder + 1>, kMaxArity + 1> flags;
  std::call_once(flags[arity][order],
                 [&] { cache[arity][order] = build_jet_table(arity, order); });
  return cache[arity][order];
}

}  // namespace detail

/// Truncated multivariate Taylor expansion: value plus all partial
/// derivatives up to a fixed total order, propagated exactly through
/// arithmetic and elementary functions.
class Jet {
 public:
  Jet() = default;
  Jet(int arity, int order) : tab_(&detail::jet_table(arity, order)), c_(tab_->size(), 0.0) {}

  static Jet constant(int arity, int order, double v) {
    Jet j(arity, order);
    j.c_[0] = v;
    return j;
  }

  /// Coordinate jets at `point`: jet i carries value point[i] and unit
  /// first derivative in slot i.
  static std::vector<Jet> seed(std::span<const double> point, int order) {
    const int n = static_cast<int>(point.size());
    std::vector<Jet> out;
    out.reserve(n);
    std::array<int, kMaxArity> e{};
    for (int i = 0; i < n; ++i) {
      Jet j(n, order);
      j.c_[0] = point[i];
      if (order >= 1) {
        e.fill(0);
        e[i] = 1;
        j.c_[j.tab_->rank(std::span<const int>(e.data(), n))] = 1.0;
      }
      out.push_back(std::move(j));
    }
    return out;
  }

  int arity() const { return tab_->arity; }
  int order() const { return tab_->order; }
  double value() const { return c_[0]; }
  std::span<const double> coefficients() const { return c_; }
  double coefficient(int rank) const { return c_[rank]; }

  /// Raw partial derivative: alpha! times the Taylor coefficient.
  double partial(std::span<const int> alpha) const {
    const int r = tab_->rank(alpha);
    if (r < 0) throw invalid_input("multi-index degree exceeds jet order");
    return c_[r] * tab_->factorial[r];
  }
  double partial(std::initializer_list<int> alpha) const {
    return partial(std::span<const int>(alpha.begin(), alpha.size()));
  }

  /// Jet of the partial derivative along `axis`, one order lower.
  Jet derivative(int axis) const {
    if (order() < 1) throw invalid_input("cannot differentiate an order-0 jet");
    Jet out(arity(), order() - 1);
    std::array<int, kMaxArity> alpha{};
    for (int r = 0; r < out.tab_->size(); ++r) {
      for (int i = 0; i < arity(); ++i) alpha[i] = out.tab_->index[r][i];
      ++alpha[axis];
      const int src = tab_->rank(std::span<const int>(alpha.data(), arity()));
      out.c_[r] = c_[src] * alpha[axis];
    }
    return out;
  }

  Jet truncated(int new_order) const {
    if (new_order > order()) throw invalid_input("cannot raise jet order by truncation");
    Jet out(arity(), new_order);
    for (int r = 0; r < out.tab_->size(); ++r) out.c_[r] = c_[r];
    return out;
  }

  Jet& operator+=(const Jet& o) {
    check_same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    check_same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return -a + s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
  friend Jet operator-(const Jet& a) {
    Jet out = a;
    for (double& x : out.c_) x = -x;
    return out;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_same(b);
    Jet out(a.arity(), a.order());
    for (const auto& e : a.tab_->mul) out.c_[e.c] += a.c_[e.a] * b.c_[e.b];
    return out;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

  /// Horner evaluation of sum_k coeffs[k] * (arg - arg.value())^k.
  static Jet compose(const Jet& arg, std::span<const double> coeffs) {
    Jet t = arg;
    t.c_[0] = 0.0;
    const int K = arg.order();
    Jet res = Jet::constant(arg.arity(), K, coeffs[K]);
    for (int k = K - 1; k >= 0; --k) {
      res = res * t;
      res.c_[0] += coeffs[k];
    }
    return res;
  }

  static Jet reciprocal(const Jet& b) {
    const double v = b.value();
    if (std::abs(v) <= kSingularGuard)
      throw domain_error("division by value " + std::to_string(v) + " within singular guard");
    std::array<double, kMaxOrder + 1> cs{};
    double p = 1.0 / v;
    for (int k = 0; k <= b.order(); ++k) {
      cs[k] = p;
      p *= -1.0 / v;
    }
    return compose(b, std::span<const double>(cs.data(), b.order() + 1));
  }

 private:
  void check_same(const Jet& o) const {
    if (tab_ != o.tab_) throw invalid_input("jet arity/order mismatch");
  }

  const detail::JetTable* tab_ = nullptr;
  std::vector<double> c_;
};

enum class Uni { exp, log, sin, cos, sinh, cosh, tanh, sqrt };

inline const char* uni_name(Uni f) {
  switch (f) {
    case Uni::exp: return "exp";
    case Uni::log: return "ln";
    case Uni::sin: return "sin";
    case Uni::cos: return "cos";
    case Uni::sinh: return "sinh";
    case Uni::cosh: return "cosh";
    case Uni::tanh: return "tanh";
    case Uni::sqrt: return "sqrt";
  }
  return "?";
}

/// Taylor recomposition of an elementary function applied to a jet.
inline Jet apply(Uni f, const Jet& a) {
  const double v = a.value();
  const int K = a.order();
  std::array<double, kMaxOrder + 1> cs{};
  double kfact = 1.0;
  switch (f) {
    case Uni::exp: {
      const double e = std::exp(v);
      for (int k = 0; k <= K; ++k) {
        if (k > 0) kfact *= k;
        cs[k] = e / kfact;
      }
      break;
    }
    case Uni::log: {
      if (v <= kSingularGuard) throw domain_error("ln of non-positive value");
      cs[0] = std::log(v);
      double p = 1.0 / v;
      for (int k = 1; k <= K; ++k) {
        cs[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
        p /= v;
      }
      break;
    }
    case Uni::sin:
    case Uni::cos: {
      const double cycle[4] = {std::sin(v), std::cos(v), -std::sin(v), -std::cos(v)};
      const int shift = (f == Uni::cos) ? 1 : 0;
      for (int k = 0; k <= K; ++k) {
        if (k > 0) kfact *= k;
        cs[k] = cycle[(k + shift) % 4] / kfact;
      }
      break;
    }
    case Uni::sinh:
    case Uni::cosh: {
      const double sh = std::sinh(v), ch = std::cosh(v);
      for (int k = 0; k <= K; ++k) {
        if (k > 0) kfact *= k;
        const bool even = (k % 2) == 0;
        const double d = (f == Uni::sinh) == even ? sh : ch;
        cs[k] = d / kfact;
      }
      break;
    }
    case Uni::tanh: {
      // y' = 1 - y^2 turned into a coefficient recurrence.
      cs[0] = std::tanh(v);
      for (int k = 0; k < K; ++k) {
        double conv = 0.0;
        for (int j = 0; j <= k; ++j) conv += cs[j] * cs[k - j];
        cs[k + 1] = ((k == 0 ? 1.0 : 0.0) - conv) / (k + 1);
      }
      break;
    }
    case Uni::sqrt: {
      if (v <= kSingularGuard) throw domain_error("sqrt of non-positive value");
      cs[0] = std::sqrt(v);
      for (int k = 1; k <= K; ++k) cs[k] = cs[k - 1] * (1.5 - k) / (k * v);
      break;
    }
  }
  return Jet::compose(a, std::span<const double>(cs.data(), K + 1));
}

/// a^p for real constant p; integer exponents work for any nonzero base,
/// fractional ones require a positive base.
inline Jet pow(const Jet& a, double p) {
  const double v = a.value();
  const double r = std::nearbyint(p);
  if (std::abs(p - r) < 1e-12 && std::abs(r) <= 32) {
    int e = static_cast<int>(r);
    if (e == 0) return Jet::constant(a.arity(), a.order(), 1.0);
    Jet base = e > 0 ? a : Jet::reciprocal(a);
    e = std::abs(e);
    Jet acc = base;
    for (int k = 1; k < e; ++k) acc = acc * base;
    return acc;
  }
  if (v <= kSingularGuard) throw domain_error("fractional power of non-positive value");
  const int K = a.order();
  std::array<double, kMaxOrder + 1> cs{};
  cs[0] = std::pow(v, p);
  for (int k = 1; k <= K; ++k) cs[k] = cs[k - 1] * (p - k + 1) / (k * v);
  return Jet::compose(a, std::span<const double>(cs.data(), K + 1));
}

inline bool is_constant(const Jet& a) {
  for (int r = 1; r < static_cast<int>(a.coefficients().size()); ++r)
    if (a.coefficient(r) != 0.0) return false;
  return true;
}

inline Jet pow(const Jet& a, const Jet& b) {
  if (is_constant(b)) return pow(a, b.value());
  return apply(Uni::exp, b * apply(Uni::log, a));
}

}  // namespace rsep
