#include "coag/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coag {

namespace {

constexpr std::uint64_t kMaxRankTable = std::uint64_t{1} << 24;

void enumerate_size(int m, int remaining, int pos, std::vector<int>& cur, std::vector<int>& out) {
  if (pos == m - 1) {
    cur[static_cast<std::size_t>(pos)] = remaining;
    out.insert(out.end(), cur.begin(), cur.end());
    return;
  }
  for (int v = 0; v <= remaining; ++v) {
    cur[static_cast<std::size_t>(pos)] = v;
    enumerate_size(m, remaining - v, pos + 1, cur, out);
  }
}

}  // namespace

StateSpace::StateSpace(int m, TruncationWindow window) : m_(m), n_max_(window.n_max) {
  if (m < 1) throw Error(ErrorKind::validation, "state space needs m >= 1");
  if (n_max_ < 1) throw Error(ErrorKind::validation, "truncation window needs n_max >= 1");

  std::uint64_t table = 1;
  for (int i = 0; i < m; ++i) {
    table *= static_cast<std::uint64_t>(n_max_ + 1);
    if (table > kMaxRankTable) {
      std::ostringstream os;
      os << "truncation window too large for m=" << m << ", n_max=" << n_max_;
      throw Error(ErrorKind::validation, os.str());
    }
  }

  size_offsets_.assign(static_cast<std::size_t>(n_max_) + 2, 0);
  std::vector<int> cur(static_cast<std::size_t>(m));
  for (int s = 1; s <= n_max_; ++s) {
    size_offsets_[static_cast<std::size_t>(s)] = counts_.size() / static_cast<std::size_t>(m);
    enumerate_size(m, s, 0, cur, counts_);
  }
  const std::size_t n_states = counts_.size() / static_cast<std::size_t>(m);
  size_offsets_[static_cast<std::size_t>(n_max_) + 1] = n_states;

  sizes_.resize(n_states);
  codes_.resize(n_states);
  rank_.assign(table, -1);
  for (std::size_t idx = 0; idx < n_states; ++idx) {
    std::uint64_t code = 0, radix = 1;
    int total = 0;
    for (int i = 0; i < m; ++i) {
      const int c = count(idx, i);
      code += static_cast<std::uint64_t>(c) * radix;
      radix *= static_cast<std::uint64_t>(n_max_ + 1);
      total += c;
    }
    sizes_[idx] = total;
    codes_[idx] = code;
    rank_[code] = static_cast<std::int32_t>(idx);
  }
}

Composition StateSpace::composition(std::size_t idx) const {
  auto first = counts_.begin() + static_cast<std::ptrdiff_t>(idx * static_cast<std::size_t>(m_));
  return Composition(std::vector<int>(first, first + m_));
}

std::optional<std::size_t> StateSpace::index(const Composition& n) const {
  if (n.dim() != m_) return std::nullopt;
  const int total = n.total();
  if (total < 1 || total > n_max_) return std::nullopt;
  std::uint64_t code = 0, radix = 1;
  for (int i = 0; i < m_; ++i) {
    code += static_cast<std::uint64_t>(n[i]) * radix;
    radix *= static_cast<std::uint64_t>(n_max_ + 1);
  }
  return static_cast<std::size_t>(rank_[code]);
}

std::size_t StateSpace::count_up_to(int total) const {
  if (total < 1) return 0;
  if (total >= n_max_) return size();
  return size_offsets_[static_cast<std::size_t>(total) + 1];
}

CoagulationSystem::CoagulationSystem(const ModelSpec& spec, TruncationWindow window, OdeForm form)
    : states_(spec.m(), window), form_(form), m_(spec.m()), A_(spec.A()) {
  const std::size_t n = states_.size();
  const auto m = static_cast<std::size_t>(m_);
  a_times_n_.assign(n * m, 0.0);
  reduced_loss_.assign(n, 0.0);
  const Vector ap = A_ * spec.p();
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int j = 0; j < m_; ++j) {
      double s = 0.0;
      for (int i = 0; i < m_; ++i) s += A_(j, i) * states_.count(idx, i);
      a_times_n_[idx * m + static_cast<std::size_t>(j)] = s;
      reduced_loss_[idx] += states_.count(idx, j) * ap[j];
    }
  }
}

double CoagulationSystem::rhs(const std::vector<double>& w, std::vector<double>& dw) const {
  const std::size_t n = states_.size();
  const auto m = static_cast<std::size_t>(m_);
  const int n_max = states_.n_max();
  dw.assign(n, 0.0);

  // Gain: each unordered pair {k, l} with k + l inside the window once;
  // the diagonal pair carries the factor 1/2 from the ordered sum.
  for (std::size_t a = 0; a < n; ++a) {
    const double wa = w[a];
    if (wa == 0.0) continue;
    const std::size_t limit = states_.count_up_to(n_max - states_.total(a));
    const double* an = &a_times_n_[a * m];
    for (std::size_t b = a; b < limit; ++b) {
      const double wb = w[b];
      if (wb == 0.0) continue;
      double k = 0.0;
      for (std::size_t j = 0; j < m; ++j) k += an[j] * states_.count(b, static_cast<int>(j));
      double rate = k * wa * wb;
      if (a == b) rate *= 0.5;
      dw[states_.sum_index(a, b)] += rate;
    }
  }

  const Vector mw = mass(w);
  // Mass carried by all gain events among window clusters, minus the part
  // that lands inside the window.
  double total_gain_mass = 0.0, window_gain_mass = 0.0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    const double* an = &a_times_n_[idx * m];
    double loss_rate = 0.0;
    for (std::size_t j = 0; j < m; ++j) loss_rate += an[j] * mw[static_cast<Eigen::Index>(j)];
    total_gain_mass += states_.total(idx) * w[idx] * loss_rate;
    window_gain_mass += states_.total(idx) * dw[idx];
    if (form_ == OdeForm::reduced) loss_rate = reduced_loss_[idx];
    dw[idx] -= loss_rate * w[idx];
  }
  return total_gain_mass - window_gain_mass;
}

std::vector<double> CoagulationSystem::to_dense(const SizeDistribution& dist) const {
  if (dist.m != m_) throw Error(ErrorKind::validation, "distribution dimension mismatch");
  std::vector<double> w(states_.size(), 0.0);
  for (const auto& [n, mass] : dist.entries) {
    auto idx = states_.index(n);
    if (!idx) {
      if (mass == 0.0) continue;
      throw Error(ErrorKind::validation, "distribution has support outside the truncation window");
    }
    w[*idx] = mass;
  }
  return w;
}

SizeDistribution CoagulationSystem::to_distribution(const std::vector<double>& w, double t, double floor) const {
  SizeDistribution d;
  d.t = t;
  d.m = m_;
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    if (w[idx] >= floor && w[idx] > 0.0) d.entries.emplace_hint(d.entries.end(), states_.composition(idx), w[idx]);
  }
  return d;
}

Vector CoagulationSystem::mass(const std::vector<double>& w) const {
  Vector mass = Vector::Zero(m_);
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    if (w[idx] == 0.0) continue;
    for (int i = 0; i < m_; ++i) mass[i] += states_.count(idx, i) * w[idx];
  }
  return mass;
}

std::map<Composition, double> derivative(const ModelSpec& spec, const SizeDistribution& dist,
                                         TruncationWindow window, OdeForm form) {
  CoagulationSystem sys(spec, window, form);
  const auto w = sys.to_dense(dist);
  std::vector<double> dw;
  sys.rhs(w, dw);
  std::map<Composition, double> out;
  for (std::size_t idx = 0; idx < dw.size(); ++idx) {
    if (dw[idx] != 0.0) out.emplace_hint(out.end(), sys.states().composition(idx), dw[idx]);
  }
  return out;
}

namespace {

class Stepper {
 public:
  Stepper(const CoagulationSystem& sys, const OdeConfig& config) : sys_(sys), config_(config) {}

  void step(std::vector<double>& w, double& flux, double h) {
    if (config_.method == OdeMethod::euler) {
      const double f1 = sys_.rhs(w, k1_);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += h * k1_[i];
      flux += h * f1;
      return;
    }
    const std::size_t n = w.size();
    tmp_.resize(n);
    const double f1 = sys_.rhs(w, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = w[i] + 0.5 * h * k1_[i];
    const double f2 = sys_.rhs(tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = w[i] + 0.5 * h * k2_[i];
    const double f3 = sys_.rhs(tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = w[i] + h * k3_[i];
    const double f4 = sys_.rhs(tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i) w[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    flux += h / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
  }

 private:
  const CoagulationSystem& sys_;
  const OdeConfig& config_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

void sanitize(std::vector<double>& w, double t, double floor) {
  for (double& x : w) {
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << "non-finite state at t=" << t << " (step too large?)";
      throw Error(ErrorKind::numerical, os.str());
    }
    if (x < -kNegativeMassTol) {
      std::ostringstream os;
      os.precision(17);
      os << "negative mass " << x << " at t=" << t;
      throw Error(ErrorKind::numerical, os.str());
    }
    if (x < floor) x = 0.0;
  }
}

}  // namespace

std::vector<Snapshot> integrate(const ModelSpec& spec, TruncationWindow window, const OdeConfig& config,
                                double t_end) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw Error(ErrorKind::validation, "integrate needs t_end > 0");
  if (!(config.dt > 0.0)) throw Error(ErrorKind::validation, "integrate needs dt > 0");
  std::vector<double> times = config.record_times;
  if (times.empty()) times.push_back(t_end);
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0 || times.back() > t_end)
    throw Error(ErrorKind::validation, "record times must be sorted and lie in [0, t_end]");

  CoagulationSystem sys(spec, window, config.form);
  auto w = sys.to_dense(SizeDistribution::monodisperse(spec));
  const double initial_mass = sys.mass(w).sum();
  Stepper stepper(sys, config);

  std::vector<Snapshot> out;
  out.reserve(times.size());
  double t = 0.0, flux = 0.0;
  for (double target : times) {
    const double span = target - t;
    if (span > 0.0) {
      const auto steps = static_cast<long>(std::max(1.0, std::ceil(span / config.dt - 1e-9)));
      const double h = span / static_cast<double>(steps);
      for (long s = 0; s < steps; ++s) {
        stepper.step(w, flux, h);
        sanitize(w, t + static_cast<double>(s + 1) * h, config.mass_floor);
      }
      t = target;
    }
    Snapshot snap;
    snap.dist = sys.to_distribution(w, t, config.mass_floor);
    snap.mass = sys.mass(w);
    snap.flux_out = flux;
    snap.deficit = initial_mass - snap.mass.sum();
    out.push_back(std::move(snap));
  }
  return out;
}

std::vector<std::pair<double, double>> mass_loss_curve(const ModelSpec& spec, TruncationWindow window,
                                                       OdeConfig config, const std::vector<double>& t_grid) {
  if (t_grid.empty()) return {};
  config.record_times = t_grid;
  const double t_end = std::max(t_grid.back(), config.dt);
  const auto snaps = integrate(spec, window, config, t_end);
  std::vector<std::pair<double, double>> curve;
  curve.reserve(snaps.size());
  for (const auto& s : snaps) curve.emplace_back(s.dist.t, s.deficit);
  return curve;
}

}  // namespace coag
