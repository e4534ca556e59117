#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hgl/hypergraph.hpp"

namespace hgl {

enum class ModalityKind { ImagingFeatures, Phenotype };

/// One modality block: N subjects by d features. N must agree across the
/// modalities of a dataset.
struct ModalityData {
  ModalityKind kind = ModalityKind::ImagingFeatures;
  Eigen::MatrixXd features;
  std::string name;
};

/// Symmetric similarity used for neighbourhood selection. For the gaussian
/// kernel, sigma <= 0 means "resolve from data" (median pairwise distance),
/// done by the build pipeline before any block is formed.
struct SimilarityFn {
  enum class Kind { DotProduct, GaussianKernel, NegativeEuclidean };
  Kind kind = Kind::DotProduct;
  double sigma = 0.0;

  double operator()(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const;
};

/// One hyperedge per subject: column j holds the k nearest neighbours of row j
/// under sim, plus j itself. Exactly k+1 structural nonzeros per column, all
/// strictly positive (similarities are shifted when the selected minimum is
/// <= 0). Ties break toward the smaller row index. Neighbourhoods are NOT
/// symmetrised.
SpMat knn_block(const Eigen::MatrixXd& features, int k, const SimilarityFn& sim);

/// Same selection rule applied to phenotype vectors.
SpMat phenotype_block(const Eigen::MatrixXd& features, int k, const SimilarityFn& sim);

/// Horizontal concatenation of per-modality blocks into one hypergraph with
/// unit edge weights and per-edge modality provenance. Result is validated.
Hypergraph concat(const std::vector<SpMat>& blocks);

/// Per-modality construction settings.
struct ModalityConfig {
  int k = 25;
  SimilarityFn sim;
};

/// Full pipeline: per-modality preprocessing (row L2-normalisation for
/// dot-product imaging blocks, median-distance sigma for unset gaussian
/// kernels), block construction, concatenation.
Hypergraph build_multimodal(const std::vector<ModalityData>& modalities,
                            const std::vector<ModalityConfig>& configs);

/// Default config for a modality: dot product on L2-normalised rows for
/// imaging features, gaussian kernel with data-resolved sigma for phenotypes.
ModalityConfig default_modality_config(ModalityKind kind, int k);

double median_pairwise_distance(const Eigen::MatrixXd& features);

}  // namespace hgl
