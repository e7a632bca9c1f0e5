#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "coag/model.hpp"
#include "coag/ode.hpp"

namespace coag {

inline constexpr int kMaxMinorComponents = 20;
inline constexpr double kPmfNegativeTol = 1e-10;
inline constexpr double kPrecisionLimitRatio = 1e-12;

/// k ln(lambda) - lambda - ln k!, with the conventions
/// log P(Poi(0) = 0) = 0 and -inf for impossible k.
double log_poisson_pmf(double lambda, long k);

/// Coefficients of det(I - t diag(r) A P) = sum_I c_I prod_{i in I} r_i,
/// indexed by subset bitmask.
class MinorTable {
 public:
  MinorTable(const ModelSpec& spec, double t);

  int m() const { return m_; }
  double t() const { return t_; }
  double coefficient(std::uint32_t subset) const { return c_[subset]; }
  const std::vector<double>& coefficients() const { return c_; }

  /// sum_I c_I r_I
  double evaluate(const Vector& r) const;

 private:
  int m_;
  double t_;
  std::vector<double> c_;
};

struct PmfEvaluation {
  double probability = 0.0;
  // The signed subset sum lost more than twelve digits to cancellation.
  bool precision_limited = false;
};

/// Exact total-progeny law and size distribution for 0 <= t < T_c.
class AnalyticSolver {
 public:
  AnalyticSolver(const ModelSpec& spec, double t);

  double t() const { return t_; }
  double critical_time() const { return t_c_; }
  const MinorTable& minors() const { return minors_; }

  /// P(T^(root) = n).
  PmfEvaluation progeny_pmf(int root, const Composition& n) const;

  /// w_n(t) = (p_i / n_i) P(T^(i) = n) for the smallest valid root i. Returns
  /// 0 when n lives only on components with p_i = 0.
  double solve(const Composition& n) const;

  /// Every composition with |n| <= n_max, omitting exact zeros.
  SizeDistribution distribution(TruncationWindow window) const;

  /// Valid roots for n: indices with n_i > 0 and p_i > 0.
  std::vector<int> valid_roots(const Composition& n) const;

 private:
  ModelSpec spec_;
  double t_;
  double t_c_;
  MinorTable minors_;
};

double progeny_pmf(const ModelSpec& spec, double t, int root, const Composition& n);
double analytic_solution(const ModelSpec& spec, double t, const Composition& n);

/// Keyed by (root type, composition).
using ProgenyTable = std::map<std::pair<int, Composition>, double>;

/// Brute-force P(T^(i) = n) for all 1 <= |n| <= degree_cap by iterating the
/// implicit PGF system on truncated multivariate power series.
ProgenyTable series_oracle(const ModelSpec& spec, double t, int degree_cap,
                           std::size_t memory_budget = std::size_t{256} << 20);

}  // namespace coag
