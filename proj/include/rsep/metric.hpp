#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsep/errors.hpp"
#include "rsep/field.hpp"
#include "rsep/jet.hpp"

namespace rsep {

/// Orthogonal metric ds^2 = sum_i eps_i H_i^2 (du^i)^2 with positive
/// Lame magnitudes H_i and per-axis signature signs.
struct DiagonalMetric {
  std::vector<std::string> coords;
  std::vector<int> signature;     // +1 / -1 per axis
  std::vector<ScalarField> H;     // arity-n, positive on the guarded box
  Box domain;
  std::vector<ScalarField> guards;  // |g| must exceed the sampling margin

  int n() const { return static_cast<int>(coords.size()); }

  std::vector<std::vector<double>> sample(int count, std::uint64_t seed) const {
    return sample_box(domain, guards, count, seed);
  }
};

/// Factorization H_i^2 = R^{4/(2-n)} (prod_k G_k)^{2/(n-2)} G_i^{-2} f_i^{-2}
/// with G_i independent of u^i and f_i univariate. f_sq stores the signed
/// square f_i^2; its sign fixes the axis signature.
struct IsothermicForm {
  std::vector<std::string> coords;
  ScalarField R;                   // arity n, positive
  std::vector<ScalarField> G;      // arity n, numerically independent of u^i
  std::vector<ScalarField> f_sq;   // arity 1 in coordinate i, signed
  Box domain;
  std::vector<ScalarField> guards;

  int n() const { return static_cast<int>(coords.size()); }
};

/// Pairwise factorization with G_ij = G_ij(u^i, u^j) for i < j.
struct BinaryForm {
  std::vector<std::string> coords;
  ScalarField R;
  std::vector<std::vector<ScalarField>> G;  // G[i][j] valid for i < j, arity n
  std::vector<ScalarField> f_sq;            // arity 1, signed
  Box domain;
  std::vector<ScalarField> guards;

  int n() const { return static_cast<int>(coords.size()); }
};

struct ResidualReport {
  double max_raw = 0.0;
  double max_scaled = 0.0;           // raw / (1 + largest participating term)
  std::vector<double> argmax;        // point attaining max_scaled
  int samples = 0;
  std::uint64_t seed = 0;

  void feed(double raw, double scale, std::span<const double> pt) {
    max_raw = std::max(max_raw, std::abs(raw));
    const double s = std::abs(raw) / scale;
    if (s >= max_scaled) {
      max_scaled = s;
      argmax.assign(pt.begin(), pt.end());
    }
  }
};

namespace detail {

/// Sign of a univariate field sampled over an interval; throws if mixed.
inline int sampled_sign(const ScalarField& f, double lo, double hi, const char* what) {
  int sign = 0;
  for (double t : axis_grid(lo, hi, 9)) {
    const double v = f(t);
    if (std::abs(v) <= kSingularGuard)
      throw domain_error(std::string(what) + " vanishes inside the domain box");
    const int s = v > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) throw domain_error(std::string(what) + " changes sign inside the domain box");
  }
  return sign;
}

/// Numeric independence: |d f / d u^axis| <= tol * scale on samples.
inline void check_independent(const ScalarField& f, int axis, const Box& box,
                              std::span<const ScalarField> guards, const char* what,
                              std::uint64_t seed = 7, int count = 24, double tol = 1e-10) {
  const auto pts = sample_box(box, guards, count, seed);
  for (const auto& p : pts) {
    const Jet j = f.at(p, 1);
    std::array<int, kMaxArity> e{};
    e[axis] = 1;
    const double d = j.partial(std::span<const int>(e.data(), f.arity()));
    const double scale = 1.0 + std::abs(j.value());
    if (std::abs(d) > tol * scale)
      throw invalid_input(std::string(what) + " depends on an excluded coordinate (derivative " +
                          std::to_string(d) + ")");
  }
}

}  // namespace detail

/// Assemble the metric generated by an isothermic factorization (n >= 3).
inline DiagonalMetric assemble_isothermic(const IsothermicForm& form) {
  const int n = form.n();
  if (n < 3) throw invalid_input("isothermic assembly needs n >= 3 (exponent 2/(n-2))");
  for (int i = 0; i < n; ++i) {
    detail::check_independent(form.G[i], i, form.domain, form.guards, "G_(i)");
    if (form.f_sq[i].arity() != 1) throw invalid_input("f_i^2 must be univariate");
  }

  DiagonalMetric m;
  m.coords = form.coords;
  m.domain = form.domain;
  m.guards = form.guards;
  m.signature.resize(n);
  const double rexp = 4.0 / (2.0 - n);
  const double gexp = 2.0 / (n - 2.0);
  for (int i = 0; i < n; ++i) {
    m.signature[i] = detail::sampled_sign(form.f_sq[i], form.domain.interval[i][0],
                                          form.domain.interval[i][1], "f_i^2");
    const double sgn = m.signature[i];
    auto R = form.R;
    auto G = form.G;
    auto fsq = form.f_sq[i];
    m.H.push_back(ScalarField::function(n, [R, G, fsq, i, n, rexp, gexp, sgn](
                                               std::span<const Jet> seeds) {
      Jet acc = pow(R(seeds), rexp);
      Jet prod = G[0](seeds);
      for (int k = 1; k < n; ++k) prod = prod * G[k](seeds);
      acc = acc * pow(prod, gexp);
      const Jet gi = G[i](seeds);
      acc = acc / (gi * gi);
      acc = acc * (sgn / compose1(fsq, seeds[i]));
      return apply(Uni::sqrt, acc);  // rejects a negative radicand
    }));
  }
  return m;
}

/// Assemble the metric generated by a binary factorization (n >= 3).
inline DiagonalMetric assemble_binary(const BinaryForm& form) {
  const int n = form.n();
  if (n < 3) throw invalid_input("binary assembly needs n >= 3 (exponent 4/(2-n))");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (k != i && k != j)
          detail::check_independent(form.G[i][j], k, form.domain, form.guards, "G_ij");

  DiagonalMetric m;
  m.coords = form.coords;
  m.domain = form.domain;
  m.guards = form.guards;
  m.signature.resize(n);
  const double rexp = 4.0 / (2.0 - n);
  for (int i = 0; i < n; ++i) {
    m.signature[i] = detail::sampled_sign(form.f_sq[i], form.domain.interval[i][0],
                                          form.domain.interval[i][1], "f_i^2");
    const double sgn = m.signature[i];
    auto R = form.R;
    const auto& G = form.G;
    auto fsq = form.f_sq[i];
    std::vector<ScalarField> factors;  // all G_pq with p == i or q == i
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q)
        if (p == i || q == i) factors.push_back(G[p][q]);
    m.H.push_back(
        ScalarField::function(n, [R, factors, fsq, i, rexp, sgn](std::span<const Jet> seeds) {
          Jet acc = pow(R(seeds), rexp);
          for (const auto& g : factors) {
            const Jet gj = g(seeds);
            acc = acc * (gj * gj);
          }
          acc = acc * (sgn / compose1(fsq, seeds[i]));
          return apply(Uni::sqrt, acc);
        }));
  }
  return m;
}

/// Max over sample points and pairs i != j of |[ln(R^2 h / H_i^2)]_{,ij}|.
/// The scale at a point is 1 + the largest participating log term.
inline ResidualReport first_condition_residual(const DiagonalMetric& m, const ScalarField& R,
                                               std::span<const std::vector<double>> points) {
  const int n = m.n();
  ResidualReport rep;
  rep.samples = static_cast<int>(points.size());
  std::array<int, kMaxArity> idx{};
  for (const auto& p : points) {
    const std::vector<Jet> seeds = Jet::seed(p, 2);
    std::vector<Jet> logH;
    logH.reserve(n);
    for (int k = 0; k < n; ++k) logH.push_back(apply(Uni::log, m.H[k](seeds)));
    const Jet logR = apply(Uni::log, R(seeds));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        idx.fill(0);
        idx[i] += 1;
        idx[j] += 1;
        const std::span<const int> alpha(idx.data(), n);
        double sum = 2.0 * logR.partial(alpha);
        double scale = 1.0 + std::abs(sum);
        for (int k = 0; k < n; ++k) {
          const double term = (k == i ? -1.0 : 1.0) * logH[k].partial(alpha);
          sum += term;
          scale = std::max(scale, 1.0 + std::abs(term));
        }
        rep.feed(sum, scale, p);
      }
    }
  }
  return rep;
}

/// Tabulated p_i together with its worst cross-coordinate variation.
struct PTable {
  int axis = 0;
  std::vector<double> abscissae;
  std::vector<double> values;            // p_i on the axis grid (first transverse sample)
  double max_cross_variation = 0.0;      // over transverse resamples
};

/// p_i = [ln(R^2 h / H_i^2)]_{,i} sampled on a per-axis grid with the other
/// coordinates varied; throws if p_i fails to be univariate.
inline std::vector<PTable> extract_p(const DiagonalMetric& m, const ScalarField& R,
                                     int grid = 16, int transverse = 6, double tol = 1e-8,
                                     std::uint64_t seed = 11) {
  const int n = m.n();
  const auto cross = sample_box(m.domain, m.guards, transverse, seed);
  std::vector<PTable> tables;
  std::array<int, kMaxArity> idx{};
  for (int i = 0; i < n; ++i) {
    PTable t;
    t.axis = i;
    t.abscissae = axis_grid(m.domain.interval[i][0], m.domain.interval[i][1], grid);
    for (double u : t.abscissae) {
      double first = 0.0;
      bool have_first = false;
      for (const auto& c : cross) {
        std::vector<double> p = c;
        p[i] = u;
        const std::vector<Jet> seeds = Jet::seed(p, 1);
        idx.fill(0);
        idx[i] = 1;
        const std::span<const int> alpha(idx.data(), n);
        double v = 2.0 * apply(Uni::log, R(seeds)).partial(alpha);
        for (int k = 0; k < n; ++k)
          v += (k == i ? -1.0 : 1.0) * apply(Uni::log, m.H[k](seeds)).partial(alpha);
        if (!have_first) {
          first = v;
          have_first = true;
          t.values.push_back(v);
        } else {
          t.max_cross_variation =
              std::max(t.max_cross_variation, std::abs(v - first) / (1.0 + std::abs(first)));
        }
      }
    }
    if (t.max_cross_variation > tol)
      throw domain_error("p_" + std::to_string(i + 1) +
                         " depends on other coordinates (variation " +
                         std::to_string(t.max_cross_variation) + "): metric not separable");
    tables.push_back(std::move(t));
  }
  return tables;
}

/// Laplace-Beltrami value at a point:
/// (Delta f)(p) = h^-1 sum_i d_i(eps_i h H_i^-2 d_i f), h = prod H_i.
inline double laplace_beltrami(const DiagonalMetric& m, const ScalarField& f,
                               std::span<const double> point, int order = 2) {
  const int n = m.n();
  if (order < 2) throw invalid_input("laplace_beltrami needs jet order >= 2");
  const std::vector<Jet> seeds = Jet::seed(point, order);
  std::vector<Jet> H;
  H.reserve(n);
  for (int k = 0; k < n; ++k) H.push_back(m.H[k](seeds));
  Jet h = H[0];
  for (int k = 1; k < n; ++k) h = h * H[k];
  const Jet fj = f(seeds);
  std::array<int, kMaxArity> idx{};
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const Jet Ai = h / (H[i] * H[i]);
    idx.fill(0);
    idx[i] = 1;
    const double dA = Ai.partial(std::span<const int>(idx.data(), n));
    const double df = fj.partial(std::span<const int>(idx.data(), n));
    idx[i] = 2;
    const double d2f = fj.partial(std::span<const int>(idx.data(), n));
    acc += m.signature[i] * (dA * df + Ai.value() * d2f);
  }
  return acc / h.value();
}

}  // namespace rsep
