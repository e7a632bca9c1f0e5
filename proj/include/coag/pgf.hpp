#pragma once

#include <functional>
#include <string>
#include <vector>

#include "coag/model.hpp"

namespace coag {

/// G_{X_k}(s) = exp(sum_l t A_kl p_l (s_l - 1)). s must lie in [0,1]^m
/// up to 1e-12.
double offspring_pgf(const ModelSpec& spec, double t, int k, const Vector& s);

struct FixedPointOptions {
  double tol = 1e-13;
  long max_iter = 1'000'000;
  // Finish with Newton steps on g - diag(e^{-x}) G_X(g) once the plain
  // iteration is within newton_switch.
  bool newton = false;
  double newton_switch = 1e-6;
  std::function<void(const Vector&)> on_iterate;
};

struct FixedPointResult {
  Vector g;  // G_{T^(l)}(e^{-x}) per root type l
  long iterations = 0;
  double residual = 0.0;
};

/// Minimal fixed point of g = diag(e^{-x}) G_X(g), reached by monotone
/// iteration from g = 0. At x = 0 this is the vector of extinction
/// probabilities.
FixedPointResult solve_fixed_point(const ModelSpec& spec, double t, const Vector& x,
                                   const FixedPointOptions& options = {});

struct GelationBlock {
  std::vector<int> components;
  double spectral_value = 0.0;
  double t_c = 0.0;  // +inf when the block has no coagulation
};

struct GelationReport {
  double t_c = 0.0;
  double spectral_value = 0.0;
  std::vector<GelationBlock> blocks;
  bool reducible = false;
};

/// Perron root of AP via the symmetric similarity P^{1/2} A P^{1/2}, block
/// by block over the irreducible components of the support of p.
GelationReport gelation_time(const ModelSpec& spec);

inline double critical_time(const ModelSpec& spec) { return gelation_time(spec).t_c; }

/// du/dt + (grad u) A (u - p) for u = P g(t, x), using second-order finite
/// differences with step h (one-sided near t = 0 or x_j = 0).
Vector pde_residual(const ModelSpec& spec, double t, const Vector& x, double h);

}  // namespace coag
