#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "hgl/hypergraph.hpp"
#include "hgl/rng.hpp"

namespace hgl {

/// Action ids follow the reporting convention: A0 node removal, A1 hyperedge
/// removal, A2 subgraph removal, A3 feature perturbation. "A4" means all four
/// enabled.
enum Action { kNodeRemoval = 0, kHyperedgeRemoval = 1, kSubgraphRemoval = 2,
              kFeaturePerturb = 3 };

struct AugmentationPolicy {
  double node_removal_ratio = 0.0;
  double hyperedge_removal_ratio = 0.0;
  double subgraph_removal_ratio = 0.0;
  int walk_length = 10;
  double feature_perturb_ratio = 0.0;
  double delta = 0.0;
  std::array<bool, 4> enabled{false, false, false, false};

  static constexpr double kMaxRatio = 0.5;

  /// Throws std::invalid_argument on out-of-range fields.
  void check() const;

  static AugmentationPolicy zero();
  std::string to_json_string() const;
  static AugmentationPolicy from_json_string(const std::string& text);
};

/// A policy applied to one (hypergraph, features) pair. kept_vertices maps
/// view vertex index -> original vertex index (injective, ascending).
struct AugmentedView {
  Hypergraph hypergraph;
  Eigen::MatrixXd features;
  std::vector<int> kept_vertices;
};

/// Removes floor(ratio*n) uniformly chosen unprotected vertices, then drops
/// edges that fall below two members.
std::pair<Hypergraph, std::vector<int>> node_removal(const Hypergraph& h, double ratio,
                                                     const std::vector<char>& protected_mask,
                                                     Rng& rng);

/// Removes floor(ratio*m) uniformly chosen hyperedges, keeping the vertex set.
/// If a removal isolates vertices it is re-drawn up to 10 times, then repaired
/// deterministically by restoring each isolated vertex's highest-weight edge.
Hypergraph hyperedge_removal(const Hypergraph& h, double ratio, Rng& rng);

/// Vertex -> edge -> vertex random walk from a uniform unprotected start;
/// removes the visited vertices (minus protected ones) and traversed edges
/// once floor(ratio*n) vertices are collected or walk_length steps elapse.
std::pair<Hypergraph, std::vector<int>> subgraph_removal(const Hypergraph& h, double ratio,
                                                         int walk_length,
                                                         const std::vector<char>& protected_mask,
                                                         Rng& rng);

/// Adds N(0, (delta * column std)^2) noise to floor(ratio*n) uniformly chosen
/// rows; all other rows are bit-identical.
Eigen::MatrixXd feature_perturbation(const Eigen::MatrixXd& x, double ratio, double delta,
                                     Rng& rng);

/// Applies the enabled actions in the fixed order subgraph -> node -> edge ->
/// feature, composing vertex maps. Deterministic for a given rng state.
AugmentedView apply_policy(const Hypergraph& h, const Eigen::MatrixXd& x,
                           const AugmentationPolicy& policy,
                           const std::vector<char>& labeled_mask, Rng& rng);

}  // namespace hgl
