#include "coag/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "coag/analytic.hpp"
#include "coag/pgf.hpp"

namespace coag {

namespace {

constexpr double kBoundaryWall = 1e-14;
constexpr double kEpsilon = std::numeric_limits<double>::epsilon();

void check_sigma(const Vector& rho, const Vector& s) {
  for (Eigen::Index l = 0; l < rho.size(); ++l) {
    if (s[l] <= 0.0 && rho[l] > 0.0)
      throw Error(ErrorKind::hypothesis, "rate is infinite: direction unreachable under this kernel");
  }
}

}  // namespace

SimplexPoint::SimplexPoint(Vector rho) : rho_(std::move(rho)) {
  if (rho_.size() < 1) throw Error(ErrorKind::validation, "simplex point needs at least one entry");
  if (!rho_.allFinite() || (rho_.array() <= 0.0).any())
    throw Error(ErrorKind::validation, "simplex point entries must be strictly positive");
  if (std::abs(rho_.sum() - 1.0) > 1e-14) throw Error(ErrorKind::validation, "simplex point must sum to one");
}

SimplexPoint SimplexPoint::normalized(const Vector& weights) {
  return SimplexPoint(weights / weights.sum());
}

SimplexPoint SimplexPoint::uniform(int m) {
  return SimplexPoint(Vector::Constant(m, 1.0 / m));
}

Vector sigma(const ModelSpec& spec, const Vector& rho) {
  if (rho.size() != spec.m()) throw Error(ErrorKind::validation, "rho has wrong length");
  return (spec.A().transpose() * rho).cwiseProduct(spec.p());
}

double gamma(const ModelSpec& spec, double t, const SimplexPoint& rho) {
  if (!(t > 0.0)) throw Error(ErrorKind::validation, "rate function needs t > 0");
  const Vector& r = rho.values();
  const Vector s = sigma(spec, r);
  check_sigma(r, s);
  double g = -1.0;
  for (Eigen::Index l = 0; l < r.size(); ++l) g += r[l] * std::log(r[l] / (t * s[l])) + t * s[l];
  return g;
}

Vector gamma_gradient(const ModelSpec& spec, double t, const SimplexPoint& rho) {
  if (!(t > 0.0)) throw Error(ErrorKind::validation, "rate function needs t > 0");
  const Vector& r = rho.values();
  const Vector s = sigma(spec, r);
  check_sigma(r, s);
  // d/d rho_j: ln(rho_j / (t sigma_j)) + 1 + sum_l (t - rho_l / sigma_l) A_jl p_l
  const Vector weight = (t - r.array() / s.array()).matrix().cwiseProduct(spec.p());
  Vector grad = spec.A() * weight;
  for (Eigen::Index j = 0; j < r.size(); ++j) grad[j] += std::log(r[j] / (t * s[j])) + 1.0;
  return grad;
}

Vector project_tangent(const Vector& g) {
  return (g.array() - g.mean()).matrix();
}

LocalizationResult minimize_gamma(const ModelSpec& spec, double t, const MinimizeOptions& options) {
  if (!spec.all_p_positive())
    throw Error(ErrorKind::hypothesis, "localization requires every p_i > 0");
  const double t_c = critical_time(spec);
  if (!(t > 0.0) || t >= t_c) {
    std::ostringstream os;
    os.precision(17);
    os << "localization needs 0 < t < T_c = " << t_c << ", got t = " << t;
    throw Error(ErrorKind::criticality, os.str());
  }

  LocalizationResult res{SimplexPoint::uniform(spec.m())};
  Vector rho = res.rho_star.values();
  double value = gamma(spec, t, res.rho_star);
  Vector grad = gamma_gradient(spec, t, res.rho_star);

  for (;;) {
    res.gradient_norm = project_tangent(grad).norm();
    if (res.gradient_norm <= options.tol) break;
    if (res.iterations >= options.max_iter) {
      std::ostringstream os;
      os << "rate minimization stalled after " << res.iterations << " iterations (tangent gradient "
         << res.gradient_norm << ")";
      throw Error(ErrorKind::numerical, os.str());
    }

    bool accepted = false;
    for (double eta = 1.0; eta > 1e-30; eta *= 0.5) {
      // Shift by the max exponent before exponentiating.
      Vector expo = -eta * grad;
      expo.array() -= expo.maxCoeff();
      Vector trial = rho.cwiseProduct(expo.array().exp().matrix());
      trial /= trial.sum();
      if ((trial.array() < kBoundaryWall).any()) {
        res.boundary = true;
        continue;
      }
      const SimplexPoint candidate = SimplexPoint::normalized(trial);
      const double trial_value = gamma(spec, t, candidate);
      const Vector trial_grad = gamma_gradient(spec, t, candidate);
      const bool armijo = trial_value <= value + options.armijo * grad.dot(candidate.values() - rho);
      // Near the minimum the decrease drowns in rounding; fall back to the gradient.
      const bool flat = std::abs(trial_value - value) <= 64.0 * kEpsilon * (1.0 + std::abs(value)) &&
                        project_tangent(trial_grad).norm() < res.gradient_norm;
      if (armijo || flat) {
        rho = candidate.values();
        value = trial_value;
        res.rho_star = candidate;
        grad = trial_grad;
        res.boundary = false;
        accepted = true;
        break;
      }
    }
    ++res.iterations;
    // No representable decrease left: the iterate is optimal to rounding.
    if (!accepted) {
      res.gradient_norm = project_tangent(grad).norm();
      break;
    }
  }
  res.gamma_min = value;
  return res;
}

RateSequence empirical_rate(const ModelSpec& spec, double t, const SimplexPoint& rho, const std::vector<int>& n_list) {
  if (rho.size() != spec.m()) throw Error(ErrorKind::validation, "rho has wrong length");
  const AnalyticSolver solver(spec, t);
  RateSequence seq;
  for (int big_n : n_list) {
    if (big_n < 1) throw Error(ErrorKind::validation, "N must be positive");
    std::vector<int> counts(static_cast<std::size_t>(spec.m()));
    for (int l = 0; l < spec.m(); ++l) {
      const double x = big_n * rho[l];
      const double r = std::round(x);
      if (std::abs(x - r) > 1e-9) {
        std::ostringstream os;
        os << "N rho is not integral for N = " << big_n;
        throw Error(ErrorKind::validation, os.str());
      }
      counts[static_cast<std::size_t>(l)] = static_cast<int>(r);
    }
    const Composition n(std::move(counts));
    const auto roots = solver.valid_roots(n);
    if (roots.empty()) throw Error(ErrorKind::hypothesis, "composition has no valid root type");
    const int i = roots.front();
    const auto pmf = solver.progeny_pmf(i, n);
    const double w = spec.p()[i] / n[i] * pmf.probability;
    if (!(w > 0.0)) {
      std::ostringstream os;
      os << "w_n underflows to zero at N = " << big_n;
      throw Error(ErrorKind::numerical, os.str());
    }
    seq.points.push_back({big_n, -std::log(w) / big_n, pmf.precision_limited});
  }

  std::set<int> distinct(n_list.begin(), n_list.end());
  if (distinct.size() >= 3) {
    const auto rows = static_cast<Eigen::Index>(seq.points.size());
    Matrix design(rows, 3);
    Vector rhs(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double big_n = seq.points[static_cast<std::size_t>(r)].n;
      design(r, 0) = 1.0;
      design(r, 1) = std::log(big_n) / big_n;
      design(r, 2) = 1.0 / big_n;
      rhs[r] = seq.points[static_cast<std::size_t>(r)].rate;
    }
    seq.extrapolated = design.colPivHouseholderQr().solve(rhs)[0];
  }
  return seq;
}

}  // namespace coag
