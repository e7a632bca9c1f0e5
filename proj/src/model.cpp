#include "coag/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace coag {

Composition::Composition(std::vector<int> counts) : counts_(std::move(counts)) {
  for (int c : counts_) {
    if (c < 0) throw Error(ErrorKind::validation, "composition entries must be nonnegative");
  }
}

Composition Composition::unit(int m, int i) {
  std::vector<int> c(static_cast<std::size_t>(m), 0);
  c.at(static_cast<std::size_t>(i)) = 1;
  return Composition(std::move(c));
}

int Composition::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), 0);
}

Composition Composition::operator+(const Composition& other) const {
  if (dim() != other.dim()) throw Error(ErrorKind::validation, "composition dimension mismatch");
  std::vector<int> c(counts_);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += other.counts_[i];
  return Composition(std::move(c));
}

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[static_cast<std::size_t>(i)] != i) {
    auto& up = parent[static_cast<std::size_t>(i)];
    up = parent[static_cast<std::size_t>(up)];
    i = up;
  }
  return i;
}

std::vector<std::vector<int>> support_blocks(const Matrix& A, const Vector& p) {
  const int m = static_cast<int>(p.size());
  std::vector<int> parent(static_cast<std::size_t>(m));
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (p[i] > 0 && p[j] > 0 && (A(i, j) > 0 || A(j, i) > 0)) {
        parent[static_cast<std::size_t>(find_root(parent, i))] = find_root(parent, j);
      }
    }
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < m; ++i) {
    if (p[i] > 0) groups[find_root(parent, i)].push_back(i);
  }
  std::vector<std::vector<int>> blocks;
  for (auto& [root, members] : groups) blocks.push_back(std::move(members));
  std::sort(blocks.begin(), blocks.end());
  return blocks;
}

}  // namespace

ValidationReport validate(const Matrix& A, const Vector& p) {
  const auto m = p.size();
  if (m < 1) throw Error(ErrorKind::validation, "model needs at least one component");
  if (A.rows() != m || A.cols() != m) {
    std::ostringstream os;
    os << "kernel matrix is " << A.rows() << "x" << A.cols() << ", expected " << m << "x" << m;
    throw Error(ErrorKind::validation, os.str());
  }
  if (!A.allFinite() || (A.array() < 0).any())
    throw Error(ErrorKind::validation, "kernel matrix entries must be finite and nonnegative");
  if (!p.allFinite() || (p.array() < 0).any())
    throw Error(ErrorKind::validation, "initial masses p must be finite and nonnegative");
  if ((A.array() == 0).all()) throw Error(ErrorKind::validation, "kernel matrix is identically zero");

  ValidationReport report;
  const double sum = p.sum();
  if (std::abs(sum - 1.0) > kRenormalizeTol) {
    std::ostringstream os;
    os.precision(17);
    os << "initial masses sum to " << sum << ", expected 1";
    throw Error(ErrorKind::validation, os.str());
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTol) {
    report.renormalized = true;
    report.warnings.push_back("initial masses renormalized to sum to 1");
  }
  report.symmetrized = !(A.array() == A.transpose().array()).all();
  if (report.symmetrized) report.warnings.push_back("kernel matrix replaced by its symmetric part");

  for (Eigen::Index i = 0; i < m; ++i) {
    if (p[i] == 0) report.zero_p.push_back(static_cast<int>(i));
  }
  report.blocks = support_blocks(A, p);
  report.irreducible = report.blocks.size() <= 1;
  if (!report.irreducible) {
    report.warnings.push_back("kernel is reducible on the support of p; there may be several critical points");
  }
  return report;
}

ModelSpec::ModelSpec(Matrix A, Vector p) : report_(validate(A, p)) {
  A_ = 0.5 * (A + A.transpose());
  p_ = report_.renormalized ? Vector(p / p.sum()) : std::move(p);
}

double kernel(const ModelSpec& spec, const Composition& k, const Composition& l) {
  const int m = spec.m();
  if (k.dim() != m || l.dim() != m) throw Error(ErrorKind::validation, "composition dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    if (k[i] == 0) continue;
    for (int j = 0; j < m; ++j) s += k[i] * spec.A()(i, j) * l[j];
  }
  return s;
}

SizeDistribution SizeDistribution::monodisperse(const ModelSpec& spec) {
  SizeDistribution d;
  d.m = spec.m();
  for (int i = 0; i < spec.m(); ++i) {
    if (spec.p()[i] > 0) d.entries.emplace(Composition::unit(spec.m(), i), spec.p()[i]);
  }
  return d;
}

void SizeDistribution::prune(double floor) {
  std::erase_if(entries, [floor](const auto& kv) { return kv.second < floor; });
}

double SizeDistribution::at(const Composition& n) const {
  auto it = entries.find(n);
  return it == entries.end() ? 0.0 : it->second;
}

Vector mass_vector(const SizeDistribution& dist) {
  Vector mass = Vector::Zero(dist.m);
  for (const auto& [n, w] : dist.entries) {
    for (int i = 0; i < dist.m; ++i) mass[i] += n[i] * w;
  }
  return mass;
}

double borel_oracle(double t, int n) {
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::validation, "borel_oracle requires 0 < t < 1");
  if (n < 1) throw Error(ErrorKind::validation, "borel_oracle requires n >= 1");
  const double dn = n;
  const double log_w = (dn - 2.0) * std::log(dn) + (dn - 1.0) * std::log(t) - dn * t - std::lgamma(dn + 1.0);
  return std::exp(log_w);
}

}  // namespace coag
