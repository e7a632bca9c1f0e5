#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// it is used to check.

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "coag/model.hpp"

namespace coag::testing {

inline ModelSpec single_component() { return ModelSpec(Matrix::Ones(1, 1), Vector::Ones(1)); }

inline ModelSpec bipartite(double weight = 1.0) {
  Matrix A(2, 2);
  A << 0, weight, weight, 0;
  return ModelSpec(A, Vector::Constant(2, 0.5));
}

inline ModelSpec three_component() {
  Matrix A(3, 3);
  A << 1, 2, 0, 2, 1, 1, 0, 1, 1;
  Vector p(3);
  p << 0.3, 0.3, 0.4;
  return ModelSpec(A, p);
}

/// n^{n-2} t^{n-1} e^{-nt} / n! with ln n! accumulated term by term.
inline double borel_direct(double t, int n) {
  long double log_fact = 0.0L;
  for (int k = 2; k <= n; ++k) log_fact += std::log(static_cast<long double>(k));
  const long double dn = n;
  const long double lw = (dn - 2) * std::log(dn) + (dn - 1) * std::log(static_cast<long double>(t)) - dn * t - log_fact;
  return static_cast<double>(std::exp(lw));
}

/// Root of xi = exp(t (xi - 1)) in [0, 1) by bisection (t > 1).
inline double extinction_bisection(double t) {
  double lo = 0.0, hi = 1.0 - 1e-12;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid - std::exp(t * (mid - 1.0)) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// max over x in [a, b] of a unimodal f.
inline double golden_section_max(const std::function<double(double)>& f, double a, double b) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 300 && b - a > 1e-15; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return f(0.5 * (a + b));
}

/// sum_l (rho_l ln(rho_l / (t s_l)) + t s_l) - 1 with s = (A^T rho) .* p,
/// evaluated for any positive rho (not only on the simplex).
inline double gamma_formula(const Matrix& A, const Vector& p, double t, const Vector& rho) {
  double g = -1.0;
  for (int l = 0; l < rho.size(); ++l) {
    double s = 0.0;
    for (int k = 0; k < rho.size(); ++k) s += rho[k] * A(k, l) * p[l];
    g += rho[l] * std::log(rho[l] / (t * s)) + t * s;
  }
  return g;
}

/// sum_l sup_lambda {lambda rho_l - c s_l (e^lambda - 1)} by golden section
/// on each coordinate, with s = (A^T rho) .* p.
inline double legendre_sum(const Matrix& A, const Vector& p, double c, const Vector& rho) {
  double total = 0.0;
  for (int l = 0; l < rho.size(); ++l) {
    double s = 0.0;
    for (int k = 0; k < rho.size(); ++k) s += rho[k] * A(k, l) * p[l];
    total += golden_section_max([&](double lam) { return lam * rho[l] - c * s * std::expm1(lam); }, -60.0, 60.0);
  }
  return total;
}

/// Uniform point in the open simplex (flat Dirichlet).
inline Vector dirichlet_point(std::mt19937_64& rng, int m) {
  std::exponential_distribution<double> e(1.0);
  Vector v(m);
  for (int i = 0; i < m; ++i) v[i] = e(rng) + 1e-300;
  return v / v.sum();
}

/// Ordered-pair gain/loss convolution with an arbitrary (possibly
/// asymmetric) kernel matrix, restricted to compositions with |n| <= n_max.
/// The pair rate is the average of both orderings.
inline std::map<Composition, double> brute_force_derivative(const Matrix& A, const Vector& p,
                                                            const std::map<Composition, double>& w, int n_max,
                                                            bool reduced) {
  const auto kern = [&](const Composition& k, const Composition& l) {
    double s = 0.0;
    for (int i = 0; i < k.dim(); ++i)
      for (int j = 0; j < l.dim(); ++j) s += 0.5 * (k[i] * A(i, j) * l[j] + l[i] * A(i, j) * k[j]);
    return s;
  };
  std::map<Composition, double> out;
  for (const auto& [k, wk] : w)
    for (const auto& [l, wl] : w) {
      const Composition n = k + l;
      if (n.total() <= n_max) out[n] += 0.5 * kern(k, l) * wk * wl;
    }
  for (const auto& [n, wn] : w) {
    double loss = 0.0;
    if (reduced) {
      for (int i = 0; i < n.dim(); ++i)
        for (int j = 0; j < n.dim(); ++j) loss += 0.5 * n[i] * (A(i, j) + A(j, i)) * p[j];
    } else {
      for (const auto& [k, wk] : w) loss += kern(n, k) * wk;
    }
    out[n] -= loss * wn;
  }
  return out;
}

/// Symmetric nonnegative kernel with some zero entries, strictly positive p,
/// and a time uniformly placed in (lo, hi) * T_c by the caller.
struct RandomInstance {
  Matrix A;
  Vector p;
};

inline RandomInstance random_instance(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomInstance r{Matrix::Zero(m, m), Vector(m)};
  for (int i = 0; i < m; ++i) {
    r.A(i, i) = u(rng) < 0.3 ? 0.0 : 2.0 * u(rng);
    for (int j = i + 1; j < m; ++j) r.A(i, j) = r.A(j, i) = u(rng) < 0.3 ? 0.0 : 2.0 * u(rng);
  }
  if ((r.A.array() == 0).all()) r.A(0, 0) = 1.0;
  for (int i = 0; i < m; ++i) r.p[i] = 0.1 + u(rng);
  r.p /= r.p.sum();
  return r;
}

}  // namespace coag::testing
