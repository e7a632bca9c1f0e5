#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>

#include "coag/model.hpp"
#include "coag/ode.hpp"

namespace coag {

struct McConfig {
  std::uint64_t replicates = 1;
  std::uint64_t population_cap = 100'000;
  std::uint64_t seed = 0;
  std::optional<int> root;  // unset: root type drawn with probability p
  unsigned threads = 0;     // 0: hardware concurrency
};

struct ProgenySample {
  Composition counts;
  bool censored = false;
  int root = 0;
};

/// Multi-type Poisson branching process with offspring means t A_kl p_l.
class ProgenySampler {
 public:
  ProgenySampler(const ModelSpec& spec, double t, std::uint64_t population_cap);

  /// Generation by generation: the type-l children of a whole generation
  /// are one Poisson draw with mean sum_k Z_k t A_kl p_l. Stops at
  /// extinction or once the total exceeds the cap.
  ProgenySample sample(int root, std::mt19937_64& rng) const;

  int draw_root(std::mt19937_64& rng) const;

 private:
  int m_;
  std::uint64_t cap_;
  Matrix mean_;  // mean_(k, l) = t A_kl p_l
  std::discrete_distribution<int> root_dist_;
};

/// One realization with a generator seeded from config.seed.
ProgenySample sample_progeny(const ModelSpec& spec, double t, int root, const McConfig& config);

struct McHistogram {
  std::map<Composition, std::uint64_t> counts;  // uncensored samples only
  std::uint64_t replicates = 0;
  std::uint64_t censored = 0;

  std::uint64_t uncensored() const { return replicates - censored; }
  double censoring_rate() const {
    return replicates ? static_cast<double>(censored) / static_cast<double>(replicates) : 0.0;
  }
};

/// Runs config.replicates independent samples. Replicates are split into
/// fixed blocks with their own seeded streams, so the result does not
/// depend on the thread count.
McHistogram simulate(const ModelSpec& spec, double t, const McConfig& config);

struct PmfEstimate {
  double freq = 0.0;
  double se = 0.0;
};

struct McEstimate {
  std::map<Composition, PmfEstimate> cells;
  std::uint64_t replicates = 0;
  std::uint64_t censored = 0;
  double censoring_rate = 0.0;

  PmfEstimate at(const Composition& n) const {
    auto it = cells.find(n);
    return it == cells.end() ? PmfEstimate{} : it->second;
  }
};

/// Empirical total-progeny frequencies over uncensored samples with
/// |n| <= n_max, with binomial standard errors.
McEstimate estimate_pmf(const ModelSpec& spec, double t, const McConfig& config, TruncationWindow window);

}  // namespace coag
