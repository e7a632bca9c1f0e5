#include "coag/branching_mc.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace coag {

namespace {

constexpr std::uint64_t kBlockSize = 4096;

std::mt19937_64 block_stream(std::uint64_t seed, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

ProgenySampler::ProgenySampler(const ModelSpec& spec, double t, std::uint64_t population_cap)
    : m_(spec.m()), cap_(population_cap), mean_(t * spec.A() * spec.p().asDiagonal()) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::validation, "branching process needs finite t >= 0");
  if (cap_ < 1) throw Error(ErrorKind::validation, "population cap must be >= 1");
  root_dist_ = std::discrete_distribution<int>(spec.p().data(), spec.p().data() + spec.m());
}

int ProgenySampler::draw_root(std::mt19937_64& rng) const {
  auto dist = root_dist_;
  return dist(rng);
}

ProgenySample ProgenySampler::sample(int root, std::mt19937_64& rng) const {
  if (root < 0 || root >= m_) throw Error(ErrorKind::validation, "root type out of range");
  const auto m = static_cast<std::size_t>(m_);
  std::vector<std::uint64_t> total(m, 0), current(m, 0), next(m, 0);
  current[static_cast<std::size_t>(root)] = 1;
  total[static_cast<std::size_t>(root)] = 1;
  std::uint64_t size = 1;
  bool censored = false;

  while (!censored) {
    bool any = false;
    for (std::size_t l = 0; l < m; ++l) {
      double mean = 0.0;
      for (std::size_t k = 0; k < m; ++k)
        if (current[k]) mean += static_cast<double>(current[k]) * mean_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
      next[l] = 0;
      if (mean > 0.0) next[l] = std::poisson_distribution<std::uint64_t>(mean)(rng);
      total[l] += next[l];
      size += next[l];
      any = any || next[l] > 0;
    }
    if (size > cap_) censored = true;
    if (!any) break;
    current.swap(next);
  }

  std::vector<int> counts(m);
  for (std::size_t l = 0; l < m; ++l)
    counts[l] = static_cast<int>(std::min<std::uint64_t>(total[l], static_cast<std::uint64_t>(INT32_MAX)));
  return {Composition(std::move(counts)), censored, root};
}

ProgenySample sample_progeny(const ModelSpec& spec, double t, int root, const McConfig& config) {
  ProgenySampler sampler(spec, t, config.population_cap);
  auto rng = block_stream(config.seed, 0);
  return sampler.sample(root, rng);
}

McHistogram simulate(const ModelSpec& spec, double t, const McConfig& config) {
  if (config.replicates < 1) throw Error(ErrorKind::validation, "need at least one replicate");
  if (config.root && (*config.root < 0 || *config.root >= spec.m()))
    throw Error(ErrorKind::validation, "root type out of range");
  const ProgenySampler sampler(spec, t, config.population_cap);
  const std::uint64_t blocks = (config.replicates + kBlockSize - 1) / kBlockSize;
  std::vector<McHistogram> partial(blocks);

  std::atomic<std::uint64_t> next_block{0};
  auto worker = [&] {
    for (std::uint64_t b = next_block++; b < blocks; b = next_block++) {
      auto rng = block_stream(config.seed, b);
      const std::uint64_t begin = b * kBlockSize;
      const std::uint64_t end = std::min(config.replicates, begin + kBlockSize);
      auto& h = partial[b];
      for (std::uint64_t r = begin; r < end; ++r) {
        const int root = config.root ? *config.root : sampler.draw_root(rng);
        auto s = sampler.sample(root, rng);
        ++h.replicates;
        if (s.censored)
          ++h.censored;
        else
          ++h.counts[s.counts];
      }
    }
  };

  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, blocks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  McHistogram out;
  for (auto& h : partial) {
    out.replicates += h.replicates;
    out.censored += h.censored;
    for (auto& [n, c] : h.counts) out.counts[n] += c;
  }
  return out;
}

McEstimate estimate_pmf(const ModelSpec& spec, double t, const McConfig& config, TruncationWindow window) {
  const auto hist = simulate(spec, t, config);
  McEstimate est;
  est.replicates = hist.replicates;
  est.censored = hist.censored;
  est.censoring_rate = hist.censoring_rate();
  const auto denom = static_cast<double>(hist.uncensored());
  if (denom == 0.0) return est;
  for (const auto& [n, c] : hist.counts) {
    if (n.total() > window.n_max) continue;
    const double f = static_cast<double>(c) / denom;
    est.cells.emplace(n, PmfEstimate{f, std::sqrt(f * (1.0 - f) / denom)});
  }
  return est;
}

}  // namespace coag
