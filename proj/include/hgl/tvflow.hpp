#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hgl/data.hpp"
#include "hgl/hypergraph.hpp"

namespace hgl {

/// Integrator settings. The subgradient may be taken at the current iterate
/// (Lagged, the default) or refined by a short fixed-point loop that
/// re-evaluates it at the candidate half-step until the active max/min sets
/// stabilise.
struct FlowParams {
  double dt = 0.1;
  int max_iters = 1000;
  double tol = 1e-6;  // max over channels of relative iterate change
  enum class DMode { Ones, VertexDegree } d_mode = DMode::VertexDegree;
  enum class GammaMode { Lagged, FixedPoint } gamma_mode = GammaMode::Lagged;
  int fixed_point_iters = 5;
};

struct FlowChannelDiag {
  double tv = 0.0;        // TV of the channel before the step
  double proj_err = 0.0;  // |<d, c - c_tilde>|
  double col_norm = 0.0;  // channel norm after the step
  double residual = 0.0;  // relative change of the channel over the step
};

/// Iterate state. Columns of u are class channels with unit L2 norm after
/// every full step. Labelled rows are re-clamped to their encoding after each
/// step so label information persists through the flow.
struct FlowState {
  Eigen::MatrixXd u;         // n x L
  double dt = 0.1;
  Eigen::VectorXd d;         // strictly positive scaling vector
  int iter = 0;
  Eigen::MatrixXd encoding;  // n x L clamp target (nonzero on labelled rows)
  std::vector<int> labeled_idx;
  FlowParams params;
  std::vector<FlowChannelDiag> last_diag;
};

/// Total variation of a vertex signal: sum over edges of weight * (max - min)
/// over the edge's members. Convex, one-homogeneous, zero iff the signal is
/// constant on every edge.
double tv(const Hypergraph& h, const Eigen::VectorXd& u_col);

/// Subgradient selection distributing each edge's unit mass uniformly over
/// the members attaining the max (positive side) and the min (negative side),
/// with ties detected at 1e-12. Satisfies <gamma, u> = tv(u).
Eigen::VectorXd tv_subgradient(const Hypergraph& h, const Eigen::VectorXd& u_col);

FlowState init_flow(const Hypergraph& h, const LabelState& labels, const FlowParams& p);

/// One semi-explicit step applied to every channel; increments state.iter and
/// fills state.last_diag. Throws on flow collapse (half-step norm < 1e-12).
void flow_step(const Hypergraph& h, FlowState& state);

using FlowObserver = std::function<void(const FlowState&)>;

/// Runs the flow to the relative-change tolerance or the iteration cap and
/// returns the final iterate. Requires at least one labelled vertex per class.
Eigen::MatrixXd run_flow(const Hypergraph& h, const LabelState& labels,
                         const FlowParams& p, const FlowObserver& observer = {});

/// Per-row argmax; ties resolve to the smallest class index.
Eigen::VectorXi extract_pseudo_labels(const Eigen::MatrixXd& u_star);

/// 1 - (mean softmax entropy of the unlabelled rows) / log(L), clamped to
/// [0, 1]. Pass a positive normalizer_count to divide by log(count) instead
/// of log(#classes).
double uncertainty_tau(const Eigen::MatrixXd& u_star, const std::vector<int>& unlabeled_idx,
                       int normalizer_count = 0);

}  // namespace hgl
