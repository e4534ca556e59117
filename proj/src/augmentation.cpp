#include "hgl/augmentation.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace hgl {

namespace {

void check_ratio(double r, const char* what) {
  if (!(r >= 0.0 && r <= AugmentationPolicy::kMaxRatio)) {
    throw std::invalid_argument(std::string(what) + " must be in [0, 0.5]");
  }
}

/// Rebuilds h keeping the listed vertices (ascending) and edges; edges that
/// fall below two members are dropped via validate.
Hypergraph subset(const Hypergraph& h, const std::vector<int>& kept_vertices,
                  const std::vector<char>& edge_kept) {
  const int n2 = static_cast<int>(kept_vertices.size());
  std::vector<int> vmap(h.n_vertices(), -1);
  for (int i = 0; i < n2; ++i) vmap[kept_vertices[i]] = i;

  int m2 = 0;
  for (int e = 0; e < h.n_edges(); ++e) m2 += edge_kept[e] ? 1 : 0;

  Hypergraph out;
  out.incidence.resize(n2, m2);
  out.edge_weights.resize(m2);
  out.edge_modality.resize(m2);
  std::vector<Eigen::Triplet<double>> trip;
  int col = 0;
  for (int e = 0; e < h.n_edges(); ++e) {
    if (!edge_kept[e]) continue;
    for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
      const int v = vmap[it.row()];
      if (v >= 0 && it.value() > 0.0) trip.emplace_back(v, col, it.value());
    }
    out.edge_weights[col] = h.edge_weights[e];
    out.edge_modality[col] = h.edge_modality[e];
    ++col;
  }
  out.incidence.setFromTriplets(trip.begin(), trip.end());
  return validate(out);
}

std::vector<int> identity_map(int n) {
  std::vector<int> m(n);
  for (int i = 0; i < n; ++i) m[i] = i;
  return m;
}

}  // namespace

void AugmentationPolicy::check() const {
  check_ratio(node_removal_ratio, "node removal ratio");
  check_ratio(hyperedge_removal_ratio, "hyperedge removal ratio");
  check_ratio(subgraph_removal_ratio, "subgraph removal ratio");
  check_ratio(feature_perturb_ratio, "feature perturbation ratio");
  if (delta < 0.0) throw std::invalid_argument("delta must be >= 0");
  if (walk_length < 1) throw std::invalid_argument("walk_length must be >= 1");
}

AugmentationPolicy AugmentationPolicy::zero() { return AugmentationPolicy{}; }

std::string AugmentationPolicy::to_json_string() const {
  json j;
  j["node_removal_ratio"] = node_removal_ratio;
  j["hyperedge_removal_ratio"] = hyperedge_removal_ratio;
  j["subgraph_removal_ratio"] = subgraph_removal_ratio;
  j["walk_length"] = walk_length;
  j["feature_perturb_ratio"] = feature_perturb_ratio;
  j["delta"] = delta;
  json acts = json::array();
  const char* names[4] = {"A0", "A1", "A2", "A3"};
  for (int a = 0; a < 4; ++a) {
    if (enabled[a]) acts.push_back(names[a]);
  }
  j["enabled_actions"] = acts;
  return j.dump(2);
}

AugmentationPolicy AugmentationPolicy::from_json_string(const std::string& text) {
  const json j = json::parse(text);
  AugmentationPolicy p;
  p.node_removal_ratio = j.value("node_removal_ratio", 0.0);
  p.hyperedge_removal_ratio = j.value("hyperedge_removal_ratio", 0.0);
  p.subgraph_removal_ratio = j.value("subgraph_removal_ratio", 0.0);
  p.walk_length = j.value("walk_length", 10);
  p.feature_perturb_ratio = j.value("feature_perturb_ratio", 0.0);
  p.delta = j.value("delta", 0.0);
  if (j.contains("enabled_actions")) {
    for (const auto& a : j["enabled_actions"]) {
      const std::string s = a.get<std::string>();
      if (s == "A0") p.enabled[kNodeRemoval] = true;
      else if (s == "A1") p.enabled[kHyperedgeRemoval] = true;
      else if (s == "A2") p.enabled[kSubgraphRemoval] = true;
      else if (s == "A3") p.enabled[kFeaturePerturb] = true;
      else throw std::invalid_argument("unknown action '" + s + "'");
    }
  }
  p.check();
  return p;
}

std::pair<Hypergraph, std::vector<int>> node_removal(const Hypergraph& h, double ratio,
                                                     const std::vector<char>& protected_mask,
                                                     Rng& rng) {
  check_ratio(ratio, "node removal ratio");
  const int n = h.n_vertices();
  int count = static_cast<int>(std::floor(ratio * n));
  if (count == 0) return {h, identity_map(n)};

  std::vector<int> eligible;
  for (int v = 0; v < n; ++v) {
    if (v >= static_cast<int>(protected_mask.size()) || !protected_mask[v]) {
      eligible.push_back(v);
    }
  }
  count = std::min<int>(count, static_cast<int>(eligible.size()));
  if (count == 0) return {h, identity_map(n)};

  const std::vector<int> picked = rng.sample_without_replacement(
      static_cast<int>(eligible.size()), count);
  std::vector<char> removed(n, 0);
  for (int t : picked) removed[eligible[t]] = 1;

  std::vector<int> kept;
  kept.reserve(n - count);
  for (int v = 0; v < n; ++v) {
    if (!removed[v]) kept.push_back(v);
  }
  std::vector<char> all_edges(h.n_edges(), 1);
  return {subset(h, kept, all_edges), kept};
}

Hypergraph hyperedge_removal(const Hypergraph& h, double ratio, Rng& rng) {
  check_ratio(ratio, "hyperedge removal ratio");
  const int m = h.n_edges();
  const int count = static_cast<int>(std::floor(ratio * m));
  if (count == 0) return h;

  const int n = h.n_vertices();
  const auto vinc = vertex_incidence(h);

  auto isolated_under = [&](const std::vector<char>& edge_kept) {
    std::vector<int> bad;
    for (int v = 0; v < n; ++v) {
      if (vinc[v].empty()) continue;  // was already isolated
      bool any = false;
      for (int e : vinc[v]) {
        if (edge_kept[e]) {
          any = true;
          break;
        }
      }
      if (!any) bad.push_back(v);
    }
    return bad;
  };

  std::vector<char> edge_kept;
  std::vector<int> bad;
  for (int attempt = 0; attempt < 10; ++attempt) {
    edge_kept.assign(m, 1);
    for (int e : rng.sample_without_replacement(m, count)) edge_kept[e] = 0;
    bad = isolated_under(edge_kept);
    if (bad.empty()) break;
  }

  // Deterministic repair: give each isolated vertex back its highest-weight
  // incident edge (ties to the lowest edge index).
  while (!bad.empty()) {
    const int v = bad.front();
    int best = -1;
    for (int e : vinc[v]) {
      if (best < 0 || h.edge_weights[e] > h.edge_weights[best]) best = e;
    }
    edge_kept[best] = 1;
    bad = isolated_under(edge_kept);
  }

  Hypergraph out;
  int m2 = 0;
  for (char c : edge_kept) m2 += c;
  out.incidence.resize(n, m2);
  out.edge_weights.resize(m2);
  out.edge_modality.resize(m2);
  std::vector<Eigen::Triplet<double>> trip;
  int col = 0;
  for (int e = 0; e < m; ++e) {
    if (!edge_kept[e]) continue;
    for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
      trip.emplace_back(static_cast<int>(it.row()), col, it.value());
    }
    out.edge_weights[col] = h.edge_weights[e];
    out.edge_modality[col] = h.edge_modality[e];
    ++col;
  }
  out.incidence.setFromTriplets(trip.begin(), trip.end());
  out.incidence.makeCompressed();
  return out;
}

std::pair<Hypergraph, std::vector<int>> subgraph_removal(const Hypergraph& h, double ratio,
                                                         int walk_length,
                                                         const std::vector<char>& protected_mask,
                                                         Rng& rng) {
  check_ratio(ratio, "subgraph removal ratio");
  if (walk_length < 1) throw std::invalid_argument("walk_length must be >= 1");
  const int n = h.n_vertices();
  const int target = static_cast<int>(std::floor(ratio * n));
  if (target == 0) return {h, identity_map(n)};

  std::vector<int> starts;
  for (int v = 0; v < n; ++v) {
    if (v >= static_cast<int>(protected_mask.size()) || !protected_mask[v]) starts.push_back(v);
  }
  if (starts.empty()) return {h, identity_map(n)};

  const auto vinc = vertex_incidence(h);
  std::vector<char> visited(n, 0);
  std::vector<char> edge_removed(h.n_edges(), 0);

  int v = starts[rng.next_int(static_cast<int>(starts.size()))];
  visited[v] = 1;
  int n_visited = 1;
  for (int step = 0; step < walk_length && n_visited < target; ++step) {
    if (vinc[v].empty()) break;
    const int e = vinc[v][rng.next_int(static_cast<int>(vinc[v].size()))];
    edge_removed[e] = 1;
    const auto members = edge_members(h, e);
    v = members[rng.next_int(static_cast<int>(members.size()))];
    if (!visited[v]) {
      visited[v] = 1;
      ++n_visited;
    }
  }

  std::vector<int> kept;
  kept.reserve(n);
  for (int i = 0; i < n; ++i) {
    const bool prot = i < static_cast<int>(protected_mask.size()) && protected_mask[i];
    if (!visited[i] || prot) kept.push_back(i);
  }
  std::vector<char> edge_kept(h.n_edges());
  for (int e = 0; e < h.n_edges(); ++e) edge_kept[e] = edge_removed[e] ? 0 : 1;
  return {subset(h, kept, edge_kept), kept};
}

Eigen::MatrixXd feature_perturbation(const Eigen::MatrixXd& x, double ratio, double delta,
                                     Rng& rng) {
  check_ratio(ratio, "feature perturbation ratio");
  if (delta < 0.0) throw std::invalid_argument("delta must be >= 0");
  const int n = static_cast<int>(x.rows());
  const int count = static_cast<int>(std::floor(ratio * n));
  if (count == 0 || delta == 0.0 || n < 2) return x;

  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd std_dev =
      ((x.rowwise() - mean).colwise().squaredNorm() / (n - 1)).cwiseSqrt();

  Eigen::MatrixXd out = x;
  for (int row : rng.sample_without_replacement(n, count)) {
    for (int c = 0; c < x.cols(); ++c) {
      out(row, c) += delta * std_dev[c] * rng.next_gaussian();
    }
  }
  return out;
}

AugmentedView apply_policy(const Hypergraph& h, const Eigen::MatrixXd& x,
                           const AugmentationPolicy& policy,
                           const std::vector<char>& labeled_mask, Rng& rng) {
  policy.check();
  if (x.rows() != h.n_vertices()) {
    throw std::invalid_argument("apply_policy: feature rows must match vertex count");
  }

  AugmentedView view;
  view.hypergraph = h;
  view.features = x;
  view.kept_vertices = identity_map(h.n_vertices());
  std::vector<char> mask = labeled_mask;
  mask.resize(h.n_vertices(), 0);

  auto shrink = [&](const std::vector<int>& kept) {
    std::vector<int> new_total(kept.size());
    std::vector<char> new_mask(kept.size());
    Eigen::MatrixXd new_x(static_cast<int>(kept.size()), view.features.cols());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      new_total[i] = view.kept_vertices[kept[i]];
      new_mask[i] = mask[kept[i]];
      new_x.row(static_cast<int>(i)) = view.features.row(kept[i]);
    }
    view.kept_vertices = std::move(new_total);
    mask = std::move(new_mask);
    view.features = std::move(new_x);
  };

  if (policy.enabled[kSubgraphRemoval] && policy.subgraph_removal_ratio > 0.0) {
    auto [h2, kept] = subgraph_removal(view.hypergraph, policy.subgraph_removal_ratio,
                                       policy.walk_length, mask, rng);
    view.hypergraph = std::move(h2);
    shrink(kept);
  }
  if (policy.enabled[kNodeRemoval] && policy.node_removal_ratio > 0.0) {
    auto [h2, kept] = node_removal(view.hypergraph, policy.node_removal_ratio, mask, rng);
    view.hypergraph = std::move(h2);
    shrink(kept);
  }
  if (policy.enabled[kHyperedgeRemoval] && policy.hyperedge_removal_ratio > 0.0) {
    view.hypergraph = hyperedge_removal(view.hypergraph, policy.hyperedge_removal_ratio, rng);
  }
  if (policy.enabled[kFeaturePerturb] && policy.feature_perturb_ratio > 0.0 &&
      policy.delta > 0.0) {
    view.features = feature_perturbation(view.features, policy.feature_perturb_ratio,
                                         policy.delta, rng);
  }
  return view;
}

}  // namespace hgl
