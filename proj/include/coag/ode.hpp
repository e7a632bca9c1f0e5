#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "coag/model.hpp"

namespace coag {

/// Keeps every composition with 1 <= |n| <= n_max.
struct TruncationWindow {
  int n_max = 1;
};

enum class OdeMethod { rk4, euler };
enum class OdeForm { full, reduced };

struct OdeConfig {
  double dt = 1e-3;
  OdeMethod method = OdeMethod::rk4;
  OdeForm form = OdeForm::reduced;
  // Snapshot times; empty means "only t_end".
  std::vector<double> record_times;
  double mass_floor = kDefaultMassFloor;
};

inline constexpr double kNegativeMassTol = 1e-10;

/// Compositions of the window, ordered by total size and then
/// lexicographically, with O(1) rank lookup through a mixed-radix code.
class StateSpace {
 public:
  StateSpace(int m, TruncationWindow window);

  int m() const { return m_; }
  int n_max() const { return n_max_; }
  std::size_t size() const { return sizes_.size(); }

  Composition composition(std::size_t idx) const;
  int total(std::size_t idx) const { return sizes_[idx]; }
  int count(std::size_t idx, int component) const {
    return counts_[idx * static_cast<std::size_t>(m_) + static_cast<std::size_t>(component)];
  }
  std::optional<std::size_t> index(const Composition& n) const;

  /// Number of states with |n| <= total.
  std::size_t count_up_to(int total) const;

  /// Rank of the composition k + l; the caller guarantees |k| + |l| <= n_max.
  std::size_t sum_index(std::size_t k, std::size_t l) const {
    return static_cast<std::size_t>(rank_[codes_[k] + codes_[l]]);
  }

 private:
  int m_;
  int n_max_;
  std::vector<int> counts_;  // size() x m, row major
  std::vector<int> sizes_;
  std::vector<std::uint64_t> codes_;
  std::vector<std::int32_t> rank_;
  std::vector<std::size_t> size_offsets_;  // first index of each total size
};

/// Right-hand side of the truncated system on a dense state vector.
class CoagulationSystem {
 public:
  CoagulationSystem(const ModelSpec& spec, TruncationWindow window, OdeForm form);

  const StateSpace& states() const { return states_; }
  OdeForm form() const { return form_; }

  /// Writes dw/dt into dw and returns the rate at which gain terms carry
  /// mass out of the window.
  double rhs(const std::vector<double>& w, std::vector<double>& dw) const;

  std::vector<double> to_dense(const SizeDistribution& dist) const;
  SizeDistribution to_distribution(const std::vector<double>& w, double t, double floor) const;
  Vector mass(const std::vector<double>& w) const;

 private:
  StateSpace states_;
  OdeForm form_;
  int m_;
  Matrix A_;
  std::vector<double> a_times_n_;     // size() x m: (A n)_j per state
  std::vector<double> reduced_loss_;  // n^T A p per state
};

struct Snapshot {
  SizeDistribution dist;
  Vector mass;
  double flux_out = 0.0;  // accumulated mass discarded by the truncation
  double deficit = 0.0;   // |m(0)| - |m(t)| over the window
};

/// dw/dt restricted to the window, omitting exact zeros. Throws if dist has
/// support outside the window.
std::map<Composition, double> derivative(const ModelSpec& spec, const SizeDistribution& dist,
                                         TruncationWindow window, OdeForm form);

/// Integrates from the monodisperse initial state with fixed steps of at
/// most config.dt, landing exactly on each record time.
std::vector<Snapshot> integrate(const ModelSpec& spec, TruncationWindow window, const OdeConfig& config,
                                double t_end);

/// (t, |m(0)| - |m(t)|) at each grid time.
std::vector<std::pair<double, double>> mass_loss_curve(const ModelSpec& spec, TruncationWindow window,
                                                       OdeConfig config, const std::vector<double>& t_grid);

}  // namespace coag
