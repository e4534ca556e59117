#include "hgl/construction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hgl {

double SimilarityFn::operator()(const Eigen::RowVectorXd& a,
                                const Eigen::RowVectorXd& b) const {
  switch (kind) {
    case Kind::DotProduct:
      return a.dot(b);
    case Kind::GaussianKernel: {
      const double s = sigma > 0.0 ? sigma : 1.0;
      return std::exp(-(a - b).squaredNorm() / (2.0 * s * s));
    }
    case Kind::NegativeEuclidean:
      return -(a - b).norm();
  }
  return 0.0;
}

SpMat knn_block(const Eigen::MatrixXd& features, int k, const SimilarityFn& sim) {
  const int n = static_cast<int>(features.rows());
  if (k < 1 || k >= n) throw std::invalid_argument("knn_block: need 1 <= k < N");
  if (!features.allFinite()) throw std::invalid_argument("knn_block: non-finite features");

  SpMat block(n, n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * (k + 1));

  std::vector<std::pair<double, int>> cand;  // (similarity, index)
  cand.reserve(n - 1);
  for (int j = 0; j < n; ++j) {
    cand.clear();
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      cand.emplace_back(sim(features.row(i), features.row(j)), i);
    }
    // Highest similarity first, ties toward the smaller index.
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });

    double lo = cand[0].first, hi = cand[0].first;
    for (int t = 1; t < k; ++t) {
      lo = std::min(lo, cand[t].first);
      hi = std::max(hi, cand[t].first);
    }
    if (lo <= 0.0) {
      // Members must stay strictly positive; rebase the column at a small
      // floor above zero, keeping the ranking intact. Grouping (value - lo)
      // first keeps the floor from vanishing in rounding.
      const double span = hi - lo;
      const double floor = span > 0.0 ? 1e-3 * span : 1.0;
      for (int t = 0; t < k; ++t) {
        trip.emplace_back(cand[t].second, j, (cand[t].first - lo) + floor);
      }
      trip.emplace_back(j, j, (hi - lo) + floor);  // centre entry = column maximum
    } else {
      for (int t = 0; t < k; ++t) {
        trip.emplace_back(cand[t].second, j, cand[t].first);
      }
      trip.emplace_back(j, j, hi);  // centre entry = column maximum
    }
  }
  block.setFromTriplets(trip.begin(), trip.end());
  block.makeCompressed();
  return block;
}

SpMat phenotype_block(const Eigen::MatrixXd& features, int k, const SimilarityFn& sim) {
  return knn_block(features, k, sim);
}

Hypergraph concat(const std::vector<SpMat>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("concat: no blocks");
  const int n = static_cast<int>(blocks[0].rows());
  int m = 0;
  for (const auto& b : blocks) {
    if (b.rows() != n) throw std::invalid_argument("concat: blocks disagree on vertex count");
    m += static_cast<int>(b.cols());
  }

  Hypergraph h;
  h.incidence.resize(n, m);
  h.edge_weights = Eigen::VectorXd::Ones(m);
  h.edge_modality.resize(m);
  std::vector<Eigen::Triplet<double>> trip;
  int col = 0;
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
    for (int j = 0; j < blocks[b].cols(); ++j, ++col) {
      h.edge_modality[col] = b;
      for (SpMat::InnerIterator it(blocks[b], j); it; ++it) {
        trip.emplace_back(static_cast<int>(it.row()), col, it.value());
      }
    }
  }
  h.incidence.setFromTriplets(trip.begin(), trip.end());
  h.incidence.makeCompressed();
  return validate(h);
}

ModalityConfig default_modality_config(ModalityKind kind, int k) {
  ModalityConfig cfg;
  cfg.k = k;
  if (kind == ModalityKind::ImagingFeatures) {
    cfg.sim = {SimilarityFn::Kind::DotProduct, 0.0};
  } else {
    cfg.sim = {SimilarityFn::Kind::GaussianKernel, 0.0};
  }
  return cfg;
}

double median_pairwise_distance(const Eigen::MatrixXd& features) {
  const int n = static_cast<int>(features.rows());
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      dist.push_back((features.row(i) - features.row(j)).norm());
    }
  }
  if (dist.empty()) return 1.0;
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + mid, dist.end());
  return dist[mid] > 0.0 ? dist[mid] : 1.0;
}

namespace {

Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  for (int i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

}  // namespace

Hypergraph build_multimodal(const std::vector<ModalityData>& modalities,
                            const std::vector<ModalityConfig>& configs) {
  if (modalities.empty()) throw std::invalid_argument("build_multimodal: no modalities");
  if (modalities.size() != configs.size()) {
    throw std::invalid_argument("build_multimodal: one config per modality required");
  }
  std::vector<SpMat> blocks;
  blocks.reserve(modalities.size());
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    const auto& mod = modalities[i];
    ModalityConfig cfg = configs[i];
    Eigen::MatrixXd feats = mod.features;
    if (mod.kind == ModalityKind::ImagingFeatures &&
        cfg.sim.kind == SimilarityFn::Kind::DotProduct) {
      feats = l2_normalize_rows(feats);
    }
    if (cfg.sim.kind == SimilarityFn::Kind::GaussianKernel && cfg.sim.sigma <= 0.0) {
      cfg.sim.sigma = median_pairwise_distance(feats);
    }
    blocks.push_back(mod.kind == ModalityKind::Phenotype
                         ? phenotype_block(feats, cfg.k, cfg.sim)
                         : knn_block(feats, cfg.k, cfg.sim));
  }
  return concat(blocks);
}

}  // namespace hgl
