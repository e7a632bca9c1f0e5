#include "coag/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace coag {

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ModelSpec model_from_json(const nlohmann::json& doc) {
  try {
    const auto& a = doc.at("A");
    const auto& pj = doc.at("p");
    const int m = doc.contains("m") ? doc.at("m").get<int>() : static_cast<int>(pj.size());
    if (m < 1 || static_cast<int>(pj.size()) != m || static_cast<int>(a.size()) != m)
      throw Error(ErrorKind::validation, "model document: m, A and p sizes disagree");
    Matrix A(m, m);
    Vector p(m);
    for (int i = 0; i < m; ++i) {
      const auto& row = a.at(static_cast<std::size_t>(i));
      if (static_cast<int>(row.size()) != m) throw Error(ErrorKind::validation, "model document: A is not square");
      for (int j = 0; j < m; ++j) A(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
      p[i] = pj.at(static_cast<std::size_t>(i)).get<double>();
    }
    return ModelSpec(std::move(A), std::move(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, std::string("model document: ") + e.what());
  }
}

nlohmann::json model_to_json(const ModelSpec& spec) {
  nlohmann::json doc;
  doc["m"] = spec.m();
  auto rows = nlohmann::json::array();
  for (int i = 0; i < spec.m(); ++i) {
    auto row = nlohmann::json::array();
    for (int j = 0; j < spec.m(); ++j) row.push_back(spec.A()(i, j));
    rows.push_back(std::move(row));
  }
  doc["A"] = std::move(rows);
  doc["p"] = std::vector<double>(spec.p().data(), spec.p().data() + spec.m());
  return doc;
}

ModelSpec read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::validation, "cannot open model file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, path + ": " + e.what());
  }
  return model_from_json(doc);
}

nlohmann::json validation_to_json(const ValidationReport& report) {
  return {{"symmetrized", report.symmetrized},
          {"renormalized", report.renormalized},
          {"irreducible", report.irreducible},
          {"zero_p", report.zero_p},
          {"blocks", report.blocks},
          {"warnings", report.warnings}};
}

void write_distribution_csv(std::ostream& os, const SizeDistribution& dist) {
  for (int i = 1; i <= dist.m; ++i) os << "n_" << i << ',';
  os << "w\n";
  for (const auto& [n, w] : dist.entries) {
    for (int c : n.counts()) os << c << ',';
    os << format_real(w) << '\n';
  }
}

nlohmann::json distribution_to_json(const SizeDistribution& dist) {
  auto entries = nlohmann::json::array();
  for (const auto& [n, w] : dist.entries) entries.push_back({{"n", n.counts()}, {"w", w}});
  return {{"t", dist.t}, {"m", dist.m}, {"entries", std::move(entries)}};
}

SizeDistribution distribution_from_json(const nlohmann::json& doc) {
  SizeDistribution d;
  d.t = doc.at("t").get<double>();
  d.m = doc.at("m").get<int>();
  for (const auto& e : doc.at("entries")) {
    Composition n(e.at("n").get<std::vector<int>>());
    if (n.dim() != d.m) throw Error(ErrorKind::validation, "distribution entry has wrong dimension");
    d.entries[n] = e.at("w").get<double>();
  }
  return d;
}

std::string spec_hash(const ModelSpec& spec) {
  const std::string canonical = model_to_json(spec).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace coag
