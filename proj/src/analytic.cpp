#include "coag/analytic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "coag/pgf.hpp"

namespace coag {

double log_poisson_pmf(double lambda, long k) {
  if (!std::isfinite(lambda) || lambda < 0.0) throw Error(ErrorKind::validation, "Poisson mean must be finite and >= 0");
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (k < 0) return neg_inf;
  if (lambda == 0.0) return k == 0 ? 0.0 : neg_inf;
  const double dk = static_cast<double>(k);
  return dk * std::log(lambda) - lambda - std::lgamma(dk + 1.0);
}

namespace {

double principal_minor(const Matrix& ap, const std::vector<int>& idx) {
  const auto at = [&](std::size_t a, std::size_t b) { return ap(idx[a], idx[b]); };
  switch (idx.size()) {
    case 0:
      return 1.0;
    case 1:
      return at(0, 0);
    case 2:
      return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
    case 3:
      return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
             at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
             at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
    default: {
      const auto n = static_cast<Eigen::Index>(idx.size());
      Matrix sub(n, n);
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = at(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
      return sub.fullPivLu().determinant();
    }
  }
}

// Neumaier summation of the addends in increasing magnitude.
double compensated_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  long double sum = 0.0L, comp = 0.0L;
  for (double x : terms) {
    const long double y = x;
    const long double s = sum + y;
    comp += (std::abs(sum) >= std::abs(y)) ? (sum - s) + y : (y - s) + sum;
    sum = s;
  }
  return static_cast<double>(sum + comp);
}

}  // namespace

MinorTable::MinorTable(const ModelSpec& spec, double t) : m_(spec.m()), t_(t) {
  if (m_ > kMaxMinorComponents) throw Error(ErrorKind::validation, "minor table supports at most 20 components");
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::validation, "minor table needs finite t >= 0");
  const Matrix ap = spec.A() * spec.p().asDiagonal();
  const std::uint32_t count = std::uint32_t{1} << m_;
  c_.assign(count, 0.0);
  std::vector<int> idx;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    idx.clear();
    for (int i = 0; i < m_; ++i)
      if (mask & (std::uint32_t{1} << i)) idx.push_back(i);
    const int size = static_cast<int>(idx.size());
    const double scale = (size % 2 ? -1.0 : 1.0) * std::pow(t, size);
    c_[mask] = scale == 0.0 ? 0.0 : scale * principal_minor(ap, idx);
  }
}

double MinorTable::evaluate(const Vector& r) const {
  if (r.size() != m_) throw Error(ErrorKind::validation, "minor table evaluation: wrong length");
  std::vector<double> terms;
  terms.reserve(c_.size());
  for (std::uint32_t mask = 0; mask < c_.size(); ++mask) {
    double term = c_[mask];
    for (int i = 0; i < m_; ++i)
      if (mask & (std::uint32_t{1} << i)) term *= r[i];
    terms.push_back(term);
  }
  return compensated_sum(terms);
}

AnalyticSolver::AnalyticSolver(const ModelSpec& spec, double t)
    : spec_(spec), t_(t), t_c_(coag::critical_time(spec)), minors_(spec, t) {
  if (t >= t_c_) {
    std::ostringstream os;
    os.precision(17);
    os << "t = " << t << " is not below the critical time T_c = " << t_c_;
    throw Error(ErrorKind::criticality, os.str());
  }
}

PmfEvaluation AnalyticSolver::progeny_pmf(int root, const Composition& n) const {
  const int m = spec_.m();
  if (root < 0 || root >= m) throw Error(ErrorKind::validation, "root type out of range");
  if (n.dim() != m) throw Error(ErrorKind::validation, "composition dimension mismatch");

  // Z_l ~ Poi(lambda_l); each subset shifts the argument of Z_l by one
  // more when l belongs to it.
  std::vector<double> log_base(static_cast<std::size_t>(m)), log_shift(static_cast<std::size_t>(m));
  for (int l = 0; l < m; ++l) {
    double lambda = 0.0;
    for (int k = 0; k < m; ++k) lambda += n[k] * spec_.A()(k, l);
    lambda *= t_ * spec_.p()[l];
    const long arg = n[l] - (l == root ? 1 : 0);
    log_base[static_cast<std::size_t>(l)] = log_poisson_pmf(lambda, arg);
    log_shift[static_cast<std::size_t>(l)] = log_poisson_pmf(lambda, arg - 1);
  }

  std::vector<double> terms;
  terms.reserve(minors_.coefficients().size());
  for (std::uint32_t mask = 0; mask < minors_.coefficients().size(); ++mask) {
    const double c = minors_.coefficient(mask);
    if (c == 0.0) continue;
    double log_term = std::log(std::abs(c));
    for (int l = 0; l < m; ++l)
      log_term += (mask & (std::uint32_t{1} << l)) ? log_shift[static_cast<std::size_t>(l)]
                                                   : log_base[static_cast<std::size_t>(l)];
    if (log_term == -std::numeric_limits<double>::infinity()) continue;
    terms.push_back(std::copysign(std::exp(log_term), c));
  }

  PmfEvaluation out;
  if (terms.empty()) return out;
  double largest = 0.0;
  for (double x : terms) largest = std::max(largest, std::abs(x));
  const double sum = compensated_sum(terms);
  if (sum < -kPmfNegativeTol) {
    std::ostringstream os;
    os.precision(17);
    os << "progeny pmf evaluated to " << sum << " (cancellation breakdown)";
    throw Error(ErrorKind::numerical, os.str());
  }
  out.precision_limited = std::abs(sum) < kPrecisionLimitRatio * largest;
  out.probability = std::clamp(sum, 0.0, 1.0);
  return out;
}

std::vector<int> AnalyticSolver::valid_roots(const Composition& n) const {
  std::vector<int> roots;
  for (int i = 0; i < spec_.m(); ++i)
    if (n[i] > 0 && spec_.p()[i] > 0) roots.push_back(i);
  return roots;
}

double AnalyticSolver::solve(const Composition& n) const {
  if (n.dim() != spec_.m()) throw Error(ErrorKind::validation, "composition dimension mismatch");
  if (n.total() < 1) throw Error(ErrorKind::validation, "cluster species need |n| >= 1");
  const auto roots = valid_roots(n);
  if (roots.empty()) return 0.0;
  const auto value_for = [&](int i) { return spec_.p()[i] / n[i] * progeny_pmf(i, n).probability; };
  const double w = value_for(roots.front());
#ifndef NDEBUG
  for (std::size_t r = 1; r < roots.size(); ++r) {
    if (std::abs(value_for(roots[r]) - w) > 1e-12)
      throw Error(ErrorKind::numerical, "root-type cross-check failed in analytic solve");
  }
#endif
  return w;
}

SizeDistribution AnalyticSolver::distribution(TruncationWindow window) const {
  const StateSpace states(spec_.m(), window);
  SizeDistribution d;
  d.t = t_;
  d.m = spec_.m();
  for (std::size_t idx = 0; idx < states.size(); ++idx) {
    auto n = states.composition(idx);
    const double w = solve(n);
    if (w > 0.0) d.entries.emplace(std::move(n), w);
  }
  return d;
}

double progeny_pmf(const ModelSpec& spec, double t, int root, const Composition& n) {
  return AnalyticSolver(spec, t).progeny_pmf(root, n).probability;
}

double analytic_solution(const ModelSpec& spec, double t, const Composition& n) {
  return AnalyticSolver(spec, t).solve(n);
}

namespace {

// Dense truncated power series in m variables, total degree <= cap.
class SeriesSpace {
 public:
  SeriesSpace(int m, int cap) : m_(m), cap_(cap) {
    std::size_t size = 1;
    for (int i = 0; i < m; ++i) size *= static_cast<std::size_t>(cap + 1);
    size_ = size;
    std::vector<int> cur(static_cast<std::size_t>(m), 0);
    for (std::size_t idx = 0; idx < size_; ++idx) {
      std::size_t rest = idx;
      int total = 0;
      for (int i = 0; i < m; ++i) {
        cur[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(cap + 1));
        rest /= static_cast<std::size_t>(cap + 1);
        total += cur[static_cast<std::size_t>(i)];
      }
      if (total <= cap) {
        order_.push_back(idx);
        degree_.push_back(total);
      }
    }
    std::vector<std::size_t> perm(order_.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return degree_[a] < degree_[b]; });
    std::vector<std::size_t> order(order_.size());
    std::vector<int> degree(order_.size());
    for (std::size_t a = 0; a < perm.size(); ++a) {
      order[a] = order_[perm[a]];
      degree[a] = degree_[perm[a]];
    }
    order_ = std::move(order);
    degree_ = std::move(degree);
  }

  std::size_t size() const { return size_; }
  const std::vector<std::size_t>& order() const { return order_; }
  int degree_at(std::size_t pos) const { return degree_[pos]; }

  int exponent(std::size_t idx, int i) const {
    for (int j = 0; j < i; ++j) idx /= static_cast<std::size_t>(cap_ + 1);
    return static_cast<int>(idx % static_cast<std::size_t>(cap_ + 1));
  }

  std::size_t stride(int i) const {
    std::size_t s = 1;
    for (int j = 0; j < i; ++j) s *= static_cast<std::size_t>(cap_ + 1);
    return s;
  }

  /// F = exp(H) for H with zero constant term, via deg(n) F_n = sum_{k <= n, k != 0} deg(k) H_k F_{n-k}.
  std::vector<double> exp(const std::vector<double>& h) const {
    std::vector<double> f(size_, 0.0);
    f[0] = 1.0;
    std::vector<int> target(static_cast<std::size_t>(m_)), sub(static_cast<std::size_t>(m_));
    for (std::size_t pos = 1; pos < order_.size(); ++pos) {
      const std::size_t n_idx = order_[pos];
      for (int i = 0; i < m_; ++i) target[static_cast<std::size_t>(i)] = exponent(n_idx, i);
      std::fill(sub.begin(), sub.end(), 0);
      double acc = 0.0;
      // Odometer over 0 <= k <= n componentwise.
      while (true) {
        int i = 0;
        while (i < m_ && sub[static_cast<std::size_t>(i)] == target[static_cast<std::size_t>(i)]) {
          sub[static_cast<std::size_t>(i)] = 0;
          ++i;
        }
        if (i == m_) break;
        ++sub[static_cast<std::size_t>(i)];
        std::size_t k_idx = 0;
        int k_deg = 0;
        for (int j = 0; j < m_; ++j) {
          k_idx += static_cast<std::size_t>(sub[static_cast<std::size_t>(j)]) * stride(j);
          k_deg += sub[static_cast<std::size_t>(j)];
        }
        if (h[k_idx] != 0.0) acc += k_deg * h[k_idx] * f[n_idx - k_idx];
      }
      f[n_idx] = acc / degree_at(pos);
    }
    return f;
  }

 private:
  int m_;
  int cap_;
  std::size_t size_ = 0;
  std::vector<std::size_t> order_;
  std::vector<int> degree_;
};

}  // namespace

ProgenyTable series_oracle(const ModelSpec& spec, double t, int degree_cap, std::size_t memory_budget) {
  const int m = spec.m();
  if (degree_cap < 1) throw Error(ErrorKind::validation, "series oracle needs degree_cap >= 1");
  double cells = static_cast<double>(m + 2);
  for (int i = 0; i < m; ++i) cells *= degree_cap + 1;
  if (cells * sizeof(double) > static_cast<double>(memory_budget))
    throw Error(ErrorKind::validation, "series oracle table exceeds the memory budget");

  const SeriesSpace space(m, degree_cap);
  std::vector<std::vector<double>> g(static_cast<std::size_t>(m), std::vector<double>(space.size(), 0.0));
  std::vector<double> h(space.size());
  for (int iter = 0; iter <= degree_cap; ++iter) {
    std::vector<std::vector<double>> next(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      // G_k <- s_k exp(sum_l t A_kl p_l (G_l - 1))
      double constant = 0.0;
      std::fill(h.begin(), h.end(), 0.0);
      for (int l = 0; l < m; ++l) {
        const double rate = t * spec.A()(k, l) * spec.p()[l];
        if (rate == 0.0) continue;
        constant += rate;
        const auto& gl = g[static_cast<std::size_t>(l)];
        for (std::size_t idx : space.order()) h[idx] += rate * gl[idx];
      }
      const auto e = space.exp(h);
      auto& out = next[static_cast<std::size_t>(k)];
      out.assign(space.size(), 0.0);
      const std::size_t shift = space.stride(k);
      const double scale = std::exp(-constant);
      for (std::size_t idx : space.order()) {
        if (space.exponent(idx, k) == degree_cap) continue;
        // Only monomials whose shifted total degree stays <= cap are kept.
        std::size_t total = 0;
        for (int i = 0; i < m; ++i) total += static_cast<std::size_t>(space.exponent(idx, i));
        if (total + 1 > static_cast<std::size_t>(degree_cap)) continue;
        out[idx + shift] = scale * e[idx];
      }
    }
    g = std::move(next);
  }

  ProgenyTable table;
  for (int k = 0; k < m; ++k) {
    for (std::size_t pos = 0; pos < space.order().size(); ++pos) {
      const std::size_t idx = space.order()[pos];
      if (space.degree_at(pos) < 1) continue;
      std::vector<int> n(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) n[static_cast<std::size_t>(i)] = space.exponent(idx, i);
      table.emplace(std::make_pair(k, Composition(std::move(n))), g[static_cast<std::size_t>(k)][idx]);
    }
  }
  return table;
}

}  // namespace coag
