#include "hgl/hypergraph.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hgl {

namespace {

int column_nnz(const SpMat& m, int col) {
  int c = 0;
  for (SpMat::InnerIterator it(m, col); it; ++it) ++c;
  return c;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Hypergraph validate(const Hypergraph& h) {
  const int n = h.n_vertices();
  const int m = h.n_edges();
  if (static_cast<int>(h.edge_weights.size()) != m ||
      static_cast<int>(h.edge_modality.size()) != m) {
    throw std::runtime_error("hypergraph: weight/modality length does not match edge count");
  }

  std::vector<int> keep;
  keep.reserve(m);
  for (int e = 0; e < m; ++e) {
    if (h.edge_weights[e] <= 0.0 || !std::isfinite(h.edge_weights[e])) {
      throw std::runtime_error("hypergraph: edge weight must be finite and > 0");
    }
    int members = 0;
    for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
      if (!std::isfinite(it.value()) || it.value() < 0.0) {
        throw std::runtime_error("hypergraph: incidence entries must be finite and >= 0");
      }
      if (it.value() > 0.0) ++members;
    }
    if (members >= 2) keep.push_back(e);
  }
  if (keep.empty()) throw std::runtime_error("hypergraph: no hyperedges");

  Hypergraph out;
  out.incidence.resize(n, static_cast<int>(keep.size()));
  std::vector<Eigen::Triplet<double>> trip;
  out.edge_weights.resize(static_cast<int>(keep.size()));
  out.edge_modality.resize(keep.size());
  for (int j = 0; j < static_cast<int>(keep.size()); ++j) {
    const int e = keep[j];
    for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
      if (it.value() > 0.0) trip.emplace_back(static_cast<int>(it.row()), j, it.value());
    }
    out.edge_weights[j] = h.edge_weights[e];
    out.edge_modality[j] = h.edge_modality[e];
  }
  out.incidence.setFromTriplets(trip.begin(), trip.end());
  out.incidence.makeCompressed();
  return out;
}

DegreeVectors degrees(const Hypergraph& h) {
  const int n = h.n_vertices();
  const int m = h.n_edges();
  DegreeVectors d;
  d.vertex_degree = Eigen::VectorXd::Zero(n);
  d.edge_degree = Eigen::VectorXd::Zero(m);
  for (int e = 0; e < m; ++e) {
    int members = 0;
    for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
      if (it.value() > 0.0) {
        d.vertex_degree[it.row()] += h.edge_weights[e];
        ++members;
      }
    }
    d.edge_degree[e] = members;
  }
  return d;
}

std::vector<int> edge_members(const Hypergraph& h, int e) {
  std::vector<int> out;
  out.reserve(column_nnz(h.incidence, e));
  for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
    if (it.value() > 0.0) out.push_back(static_cast<int>(it.row()));
  }
  return out;
}

std::vector<std::vector<int>> vertex_incidence(const Hypergraph& h) {
  std::vector<std::vector<int>> inc(h.n_vertices());
  for (int e = 0; e < h.n_edges(); ++e) {
    for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
      if (it.value() > 0.0) inc[it.row()].push_back(e);
    }
  }
  return inc;
}

void save_hypergraph(const Hypergraph& h, std::ostream& out) {
  out << h.n_vertices() << ' ' << h.n_edges() << '\n';
  for (int e = 0; e < h.n_edges(); ++e) {
    out << fmt17(h.edge_weights[e]) << ' ' << h.edge_modality[e];
    for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
      out << ' ' << it.row() << ':' << fmt17(it.value());
    }
    out << '\n';
  }
}

void save_hypergraph(const Hypergraph& h, const std::string& path,
                     std::uint64_t seed_echo) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "# seed=" << seed_echo << '\n';
  save_hypergraph(h, f);
}

Hypergraph load_hypergraph(std::istream& in) {
  std::string line;
  int n = -1, m = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream header(line);
    if (!(header >> n >> m) || n < 0 || m < 0) {
      throw std::runtime_error("hypergraph file: bad header line");
    }
    break;
  }
  if (n < 0) throw std::runtime_error("hypergraph file: missing header");

  Hypergraph h;
  h.incidence.resize(n, m);
  h.edge_weights.resize(m);
  h.edge_modality.resize(m);
  std::vector<Eigen::Triplet<double>> trip;
  for (int e = 0; e < m; ++e) {
    if (!std::getline(in, line)) throw std::runtime_error("hypergraph file: truncated");
    std::istringstream ls(line);
    double w;
    int mod;
    if (!(ls >> w >> mod)) throw std::runtime_error("hypergraph file: bad edge line");
    h.edge_weights[e] = w;
    h.edge_modality[e] = mod;
    std::string pair;
    while (ls >> pair) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos) throw std::runtime_error("hypergraph file: bad member pair");
      const int v = std::stoi(pair.substr(0, colon));
      const double val = std::stod(pair.substr(colon + 1));
      if (v < 0 || v >= n) throw std::runtime_error("hypergraph file: vertex index out of range");
      trip.emplace_back(v, e, val);
    }
  }
  h.incidence.setFromTriplets(trip.begin(), trip.end());
  h.incidence.makeCompressed();
  return h;
}

Hypergraph load_hypergraph(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return load_hypergraph(f);
}

}  // namespace hgl
