#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coag/error.hpp"

namespace coag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kProbabilitySumTol = 1e-12;
inline constexpr double kRenormalizeTol = 1e-6;
inline constexpr double kDefaultMassFloor = 1e-300;

/// Cluster species: monomer counts per component type.
class Composition {
 public:
  Composition() = default;
  explicit Composition(std::vector<int> counts);

  static Composition unit(int m, int i);

  int dim() const { return static_cast<int>(counts_.size()); }
  int operator[](int i) const { return counts_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& counts() const { return counts_; }

  /// Overall size |n|.
  int total() const;

  Composition operator+(const Composition& other) const;

  auto operator<=>(const Composition&) const = default;

 private:
  std::vector<int> counts_;
};

struct ValidationReport {
  bool symmetrized = false;
  bool renormalized = false;
  bool irreducible = true;
  std::vector<int> zero_p;
  // Connected components of the kernel support graph on {i : p_i > 0}.
  std::vector<std::vector<int>> blocks;
  std::vector<std::string> warnings;
};

/// Checks a raw (A, p) pair. Throws Error(validation) on negative or
/// non-finite entries, an all-zero kernel, or a p that does not sum to one
/// within kRenormalizeTol. Reducible instances are reported, not rejected.
ValidationReport validate(const Matrix& A, const Vector& p);

/// Immutable problem instance. The stored kernel matrix is always the
/// symmetric part of the input and p always sums to one.
class ModelSpec {
 public:
  ModelSpec(Matrix A, Vector p);

  int m() const { return static_cast<int>(p_.size()); }
  const Matrix& A() const { return A_; }
  const Vector& p() const { return p_; }
  const ValidationReport& report() const { return report_; }
  bool irreducible() const { return report_.irreducible; }
  bool all_p_positive() const { return report_.zero_p.empty(); }

 private:
  Matrix A_;
  Vector p_;
  ValidationReport report_;
};

/// K(k, l) = k^T A l.
double kernel(const ModelSpec& spec, const Composition& k, const Composition& l);

/// Sparse cluster-size distribution at time t.
struct SizeDistribution {
  double t = 0.0;
  int m = 0;
  std::map<Composition, double> entries;

  static SizeDistribution monodisperse(const ModelSpec& spec);

  /// Drops entries whose mass is below floor.
  void prune(double floor = kDefaultMassFloor);

  double at(const Composition& n) const;
};

/// (sum_n n_i w_n)_i
Vector mass_vector(const SizeDistribution& dist);

/// Closed-form single-component solution n^{n-2} t^{n-1} e^{-nt} / n!,
/// evaluated in the log domain. Requires 0 < t < 1 and n >= 1.
double borel_oracle(double t, int n);

}  // namespace coag
