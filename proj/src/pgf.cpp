#include "coag/pgf.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace coag {

namespace {

double offspring_exponent(const ModelSpec& spec, double t, int k, const Vector& s) {
  double e = 0.0;
  for (int l = 0; l < spec.m(); ++l) e += spec.A()(k, l) * spec.p()[l] * (s[l] - 1.0);
  return t * e;
}

// One sweep of g <- diag(e^{-x}) G_X(g).
Vector apply_map(const ModelSpec& spec, double t, const Vector& decay, const Vector& g) {
  Vector out(spec.m());
  for (int k = 0; k < spec.m(); ++k) out[k] = decay[k] * std::exp(offspring_exponent(spec, t, k, g));
  return out;
}

}  // namespace

double offspring_pgf(const ModelSpec& spec, double t, int k, const Vector& s) {
  if (s.size() != spec.m()) throw Error(ErrorKind::validation, "offspring_pgf: s has wrong length");
  if (k < 0 || k >= spec.m()) throw Error(ErrorKind::validation, "offspring_pgf: type out of range");
  if ((s.array() < -1e-12).any() || (s.array() > 1.0 + 1e-12).any())
    throw Error(ErrorKind::validation, "offspring_pgf: s outside [0,1]^m");
  return std::exp(offspring_exponent(spec, t, k, s));
}

FixedPointResult solve_fixed_point(const ModelSpec& spec, double t, const Vector& x,
                                   const FixedPointOptions& options) {
  const int m = spec.m();
  if (!(t >= 0.0)) throw Error(ErrorKind::validation, "solve_fixed_point needs t >= 0");
  if (x.size() != m || (x.array() < 0).any()) throw Error(ErrorKind::validation, "solve_fixed_point needs x >= 0");

  const Vector decay = (-x.array()).exp().matrix();
  FixedPointResult r;
  r.g = Vector::Zero(m);
  const double switch_at = options.newton ? std::max(options.tol, options.newton_switch) : options.tol;

  while (true) {
    const Vector next = apply_map(spec, t, decay, r.g);
    r.residual = (next - r.g).cwiseAbs().maxCoeff();
    if (r.residual <= switch_at) break;
    r.g = next;
    ++r.iterations;
    if (options.on_iterate) options.on_iterate(r.g);
    if (r.iterations >= options.max_iter) {
      std::ostringstream os;
      os << "fixed point did not converge in " << options.max_iter << " iterations (residual " << r.residual << ")";
      throw Error(ErrorKind::numerical, os.str());
    }
  }

  if (options.newton && r.residual > options.tol) {
    for (int step = 0; step < 50 && r.residual > options.tol; ++step) {
      const Vector mapped = apply_map(spec, t, decay, r.g);
      Matrix jac = Matrix::Identity(m, m);
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) jac(k, l) -= mapped[k] * t * spec.A()(k, l) * spec.p()[l];
      const Vector trial = r.g - jac.partialPivLu().solve(r.g - mapped);
      if (!trial.allFinite() || (trial.array() < 0).any() || (trial.array() > 1.0 + 1e-12).any()) break;
      r.g = trial;
      ++r.iterations;
      if (options.on_iterate) options.on_iterate(r.g);
      r.residual = (apply_map(spec, t, decay, r.g) - r.g).cwiseAbs().maxCoeff();
    }
  }
  return r;
}

GelationReport gelation_time(const ModelSpec& spec) {
  GelationReport report;
  const auto& blocks = spec.report().blocks;
  report.reducible = blocks.size() > 1;
  for (const auto& members : blocks) {
    const auto size = static_cast<Eigen::Index>(members.size());
    Matrix sym(size, size);
    for (Eigen::Index a = 0; a < size; ++a) {
      for (Eigen::Index b = 0; b < size; ++b) {
        const int i = members[static_cast<std::size_t>(a)];
        const int j = members[static_cast<std::size_t>(b)];
        sym(a, b) = spec.A()(i, j) * (i == j ? spec.p()[i] : std::sqrt(spec.p()[i] * spec.p()[j]));
      }
    }
    GelationBlock block;
    block.components = members;
    if (size == 1) {
      block.spectral_value = sym(0, 0);
    } else if (size == 2) {
      const double mean = 0.5 * (sym(0, 0) + sym(1, 1));
      const double half_gap = 0.5 * (sym(0, 0) - sym(1, 1));
      block.spectral_value = mean + std::hypot(half_gap, sym(0, 1));
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
      block.spectral_value = std::max(0.0, eig.eigenvalues().maxCoeff());
    }
    block.t_c = block.spectral_value > 0.0 ? 1.0 / block.spectral_value : std::numeric_limits<double>::infinity();
    report.spectral_value = std::max(report.spectral_value, block.spectral_value);
    report.blocks.push_back(std::move(block));
  }
  if (!(report.spectral_value > 0.0))
    throw Error(ErrorKind::hypothesis, "no coagulation on the support of p (spectral value is zero)");
  report.t_c = 1.0 / report.spectral_value;
  return report;
}

namespace {

Vector u_at(const ModelSpec& spec, double t, const Vector& x) {
  FixedPointOptions opt;
  opt.tol = 1e-15;
  opt.newton = true;
  const auto r = solve_fixed_point(spec, t, x, opt);
  return spec.p().cwiseProduct(r.g);
}

// Second-order derivative estimate of f along one coordinate; one-sided
// when the backward point would leave the domain.
template <class F>
Vector diff(F&& f, double at, double h) {
  if (at - h >= 0.0) return (f(at + h) - f(at - h)) / (2.0 * h);
  return (-3.0 * f(at) + 4.0 * f(at + h) - f(at + 2.0 * h)) / (2.0 * h);
}

}  // namespace

Vector pde_residual(const ModelSpec& spec, double t, const Vector& x, double h) {
  const int m = spec.m();
  if (!(h > 0.0)) throw Error(ErrorKind::validation, "pde_residual needs h > 0");
  if (x.size() != m || (x.array() < 0).any()) throw Error(ErrorKind::validation, "pde_residual needs x >= 0");

  const Vector u = u_at(spec, t, x);
  const Vector du_dt = diff([&](double tt) { return u_at(spec, tt, x); }, t, h);
  Matrix jac(m, m);
  for (int j = 0; j < m; ++j) {
    jac.col(j) = diff(
        [&](double xj) {
          Vector xs = x;
          xs[j] = xj;
          return u_at(spec, t, xs);
        },
        x[j], h);
  }
  return du_dt + jac * spec.A() * (u - spec.p());
}

}  // namespace coag
