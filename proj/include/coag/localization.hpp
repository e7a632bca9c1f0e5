#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "coag/model.hpp"

namespace coag {

/// Interior point of the probability simplex.
class SimplexPoint {
 public:
  /// Requires strictly positive entries summing to one within 1e-14.
  explicit SimplexPoint(Vector rho);

  static SimplexPoint normalized(const Vector& weights);
  static SimplexPoint uniform(int m);

  const Vector& values() const { return rho_; }
  int size() const { return static_cast<int>(rho_.size()); }
  double operator[](int i) const { return rho_[i]; }

 private:
  Vector rho_;
};

/// sigma_l = sum_k rho_k A_kl p_l
Vector sigma(const ModelSpec& spec, const Vector& rho);

/// Rate function sum_l (rho_l ln(rho_l / (t sigma_l)) + t sigma_l) - 1.
/// Throws Error(hypothesis) when some sigma_l vanishes while rho_l > 0.
double gamma(const ModelSpec& spec, double t, const SimplexPoint& rho);

/// Euclidean gradient of the rate function (extended off the simplex by
/// the same formula).
Vector gamma_gradient(const ModelSpec& spec, double t, const SimplexPoint& rho);

/// Component of g tangent to the simplex.
Vector project_tangent(const Vector& g);

struct MinimizeOptions {
  double tol = 1e-10;
  int max_iter = 100'000;
  double armijo = 1e-4;
};

struct LocalizationResult {
  SimplexPoint rho_star;
  double gamma_min = 0.0;
  double gradient_norm = 0.0;  // norm of the tangent gradient
  int iterations = 0;
  bool boundary = false;       // some coordinate hit the 1e-14 wall
};

/// Exponentiated-gradient descent from the uniform point with Armijo
/// backtracking from step 1. Needs 0 < t < T_c and every p_i > 0.
LocalizationResult minimize_gamma(const ModelSpec& spec, double t, const MinimizeOptions& options = {});

struct RatePoint {
  int n = 0;
  double rate = 0.0;  // -(1/N) ln w_{N rho}
  bool precision_limited = false;
};

struct RateSequence {
  std::vector<RatePoint> points;
  // Limit from the fit rate_N = L + a ln(N)/N + b/N; needs three distinct N.
  std::optional<double> extrapolated;
};

RateSequence empirical_rate(const ModelSpec& spec, double t, const SimplexPoint& rho,
                            const std::vector<int>& n_list);

}  // namespace coag
