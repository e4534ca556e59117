#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hgl {

using SpMat = Eigen::SparseMatrix<double>;  // column-major; one column per hyperedge

/// Vertex-by-hyperedge incidence with positive entries for members, plus
/// per-edge weights and the modality block each edge came from. Values are
/// immutable after validate(); share freely across threads.
struct Hypergraph {
  SpMat incidence;                 // n x m, entry (a,e) > 0 iff vertex a is in edge e
  Eigen::VectorXd edge_weights;    // m, strictly positive
  std::vector<int> edge_modality;  // m

  int n_vertices() const { return static_cast<int>(incidence.rows()); }
  int n_edges() const { return static_cast<int>(incidence.cols()); }
};

struct DegreeVectors {
  Eigen::VectorXd vertex_degree;  // sum of incident edge weights per vertex
  Eigen::VectorXd edge_degree;    // member count per edge
};

/// Drops empty and singleton hyperedges (with their weight/modality entries).
/// Vertex count is unchanged. Throws std::runtime_error if nothing survives.
Hypergraph validate(const Hypergraph& h);

DegreeVectors degrees(const Hypergraph& h);

/// Member vertices of edge e (structural nonzeros of column e), ascending.
std::vector<int> edge_members(const Hypergraph& h, int e);

/// vertex -> incident edge ids.
std::vector<std::vector<int>> vertex_incidence(const Hypergraph& h);

/// Text format: optional leading '#' comment lines, a header "n m", then one
/// line per edge: "weight modality v1:w1 v2:w2 ...". Values are printed with
/// 17 significant digits so round-trips are lossless.
void save_hypergraph(const Hypergraph& h, std::ostream& out);
void save_hypergraph(const Hypergraph& h, const std::string& path,
                     std::uint64_t seed_echo);
Hypergraph load_hypergraph(std::istream& in);
Hypergraph load_hypergraph(const std::string& path);

}  // namespace hgl
