#include "hgl/tvflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hgl {

namespace {
constexpr double kTieTol = 1e-12;
constexpr double kCollapseTol = 1e-12;
}  // namespace

double tv(const Hypergraph& h, const Eigen::VectorXd& u_col) {
  double total = 0.0;
  for (int e = 0; e < h.n_edges(); ++e) {
    double mx = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
      if (it.value() <= 0.0) continue;
      const double v = u_col[it.row()];
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
    if (mx >= mn) total += h.edge_weights[e] * (mx - mn);
  }
  return total;
}

Eigen::VectorXd tv_subgradient(const Hypergraph& h, const Eigen::VectorXd& u_col) {
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(u_col.size());
  std::vector<int> members;
  for (int e = 0; e < h.n_edges(); ++e) {
    members.clear();
    double mx = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
      if (it.value() <= 0.0) continue;
      members.push_back(static_cast<int>(it.row()));
      const double v = u_col[it.row()];
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
    if (members.empty()) continue;
    int n_max = 0, n_min = 0;
    for (int a : members) {
      if (u_col[a] >= mx - kTieTol) ++n_max;
      if (u_col[a] <= mn + kTieTol) ++n_min;
    }
    const double w = h.edge_weights[e];
    for (int a : members) {
      if (u_col[a] >= mx - kTieTol) gamma[a] += w / n_max;
      if (u_col[a] <= mn + kTieTol) gamma[a] -= w / n_min;
    }
  }
  return gamma;
}

FlowState init_flow(const Hypergraph& h, const LabelState& labels, const FlowParams& p) {
  const int n = h.n_vertices();
  const int L = labels.num_classes;
  if (L < 2) throw std::invalid_argument("flow: need >= 2 classes");
  if (labels.n != n) throw std::invalid_argument("flow: label state does not match hypergraph");

  std::vector<int> per_class(L, 0);
  for (int i = 0; i < labels.labeled_y.size(); ++i) {
    const int y = labels.labeled_y[i];
    if (y < 0 || y >= L) throw std::invalid_argument("flow: class label out of range");
    ++per_class[y];
  }
  for (int c = 0; c < L; ++c) {
    if (per_class[c] == 0) {
      throw std::runtime_error("flow: no labeled vertex for class " + std::to_string(c));
    }
  }

  FlowState st;
  st.params = p;
  st.dt = p.dt;
  st.labeled_idx = labels.labeled_idx;

  if (p.d_mode == FlowParams::DMode::Ones) {
    st.d = Eigen::VectorXd::Ones(n);
  } else {
    st.d = degrees(h).vertex_degree;
    if ((st.d.array() <= 0.0).any()) {
      throw std::runtime_error("flow: zero-degree vertex; degree scaling undefined");
    }
  }

  st.encoding = Eigen::MatrixXd::Zero(n, L);
  for (std::size_t i = 0; i < labels.labeled_idx.size(); ++i) {
    const int v = labels.labeled_idx[i];
    const int y = labels.labeled_y[static_cast<int>(i)];
    for (int c = 0; c < L; ++c) {
      st.encoding(v, c) = (c == y) ? 1.0 : -1.0 / (L - 1);
    }
  }

  st.u = st.encoding;
  const double dd = st.d.squaredNorm();
  for (int c = 0; c < L; ++c) {
    Eigen::VectorXd col = st.u.col(c);
    col -= (st.d.dot(col) / dd) * st.d;
    const double norm = col.norm();
    if (norm < kCollapseTol) {
      throw std::runtime_error("flow: degenerate initial channel " + std::to_string(c));
    }
    st.u.col(c) = col / norm;
  }
  // Labels are re-clamped to their initialised, unit-norm-scale values. The
  // clamp target's labelled part has norm < 1, which leaves room for the
  // unlabelled signal to build up under the per-step renormalisation.
  st.encoding = st.u;
  st.last_diag.assign(L, FlowChannelDiag{});
  return st;
}

void flow_step(const Hypergraph& h, FlowState& state) {
  const int L = static_cast<int>(state.u.cols());
  const Eigen::VectorXd& d = state.d;
  const double dd = d.squaredNorm();
  state.last_diag.assign(L, FlowChannelDiag{});

  for (int j = 0; j < L; ++j) {
    const Eigen::VectorXd u = state.u.col(j);
    const double norm = u.norm();
    if (norm < kCollapseTol) throw std::runtime_error("flow: collapsed channel");
    const double tvv = tv(h, u);
    const Eigen::VectorXd c = u / norm;
    const Eigen::VectorXd ctilde = (d.dot(c) / dd) * d;

    Eigen::VectorXd gamma = tv_subgradient(h, u);
    Eigen::VectorXd u_half;
    auto half_step = [&](const Eigen::VectorXd& g) {
      return ((norm * u + state.dt * (tvv * (c - ctilde) - norm * g)) / norm).eval();
    };
    u_half = half_step(gamma);
    if (state.params.gamma_mode == FlowParams::GammaMode::FixedPoint) {
      for (int it = 0; it < state.params.fixed_point_iters; ++it) {
        Eigen::VectorXd g2 = tv_subgradient(h, u_half);
        if ((g2 - gamma).lpNorm<Eigen::Infinity>() < kTieTol) break;
        gamma = std::move(g2);
        u_half = half_step(gamma);
      }
    }

    const double nh = u_half.norm();
    if (nh < kCollapseTol) {
      throw std::runtime_error("flow: collapse at iteration " + std::to_string(state.iter));
    }
    Eigen::VectorXd u_next = u_half / nh;

    // Re-clamp labels at the post-normalisation scale, then restore unit norm.
    for (int v : state.labeled_idx) u_next[v] = state.encoding(v, j);
    const double cn = u_next.norm();
    if (cn < kCollapseTol) throw std::runtime_error("flow: collapse after label clamp");
    u_next /= cn;

    auto& diag = state.last_diag[j];
    diag.tv = tvv;
    diag.proj_err = std::abs(d.dot(c - ctilde));
    diag.col_norm = u_next.norm();
    diag.residual = (u_next - u).norm() / std::max(norm, kCollapseTol);
    state.u.col(j) = u_next;
  }
  ++state.iter;
}

Eigen::MatrixXd run_flow(const Hypergraph& h, const LabelState& labels,
                         const FlowParams& p, const FlowObserver& observer) {
  if (p.max_iters < 1) throw std::invalid_argument("flow: max_iters must be >= 1");
  if (p.tol <= 0.0) throw std::invalid_argument("flow: tol must be > 0");
  FlowState st = init_flow(h, labels, p);
  for (int k = 0; k < p.max_iters; ++k) {
    flow_step(h, st);
    double residual = 0.0;
    for (const auto& dgn : st.last_diag) residual = std::max(residual, dgn.residual);
    if (observer) observer(st);
    if (residual < p.tol) break;
  }
  return st.u;
}

Eigen::VectorXi extract_pseudo_labels(const Eigen::MatrixXd& u_star) {
  Eigen::VectorXi out(u_star.rows());
  for (int i = 0; i < u_star.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < u_star.cols(); ++j) {
      if (u_star(i, j) > u_star(i, best)) best = j;
    }
    out[i] = best;
  }
  return out;
}

double uncertainty_tau(const Eigen::MatrixXd& u_star, const std::vector<int>& unlabeled_idx,
                       int normalizer_count) {
  const int L = static_cast<int>(u_star.cols());
  if (unlabeled_idx.empty()) return 1.0;
  double q_sum = 0.0;
  for (int i : unlabeled_idx) {
    const double mx = u_star.row(i).maxCoeff();
    double z = 0.0;
    for (int j = 0; j < L; ++j) z += std::exp(u_star(i, j) - mx);
    double entropy = 0.0;
    for (int j = 0; j < L; ++j) {
      const double pj = std::exp(u_star(i, j) - mx) / z;
      if (pj > 0.0) entropy -= pj * std::log(pj);
    }
    q_sum += entropy;
  }
  const double q = q_sum / static_cast<double>(unlabeled_idx.size());
  const double denom = std::log(normalizer_count > 1 ? static_cast<double>(normalizer_count)
                                                     : static_cast<double>(L));
  return std::clamp(1.0 - q / denom, 0.0, 1.0);
}

}  // namespace hgl
