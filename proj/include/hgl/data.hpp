#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hgl/construction.hpp"

namespace hgl {

/// Labelled/unlabelled bookkeeping over n subjects. For the flow and the
/// classifier's unsupervised term, "unlabelled" means every subject whose
/// label the model may not see (including evaluation folds).
struct LabelState {
  std::vector<int> labeled_idx;
  Eigen::VectorXi labeled_y;  // parallel to labeled_idx
  std::vector<int> unlabeled_idx;
  int n = 0;
  int num_classes = 0;
};

struct SyntheticModalitySpec {
  std::string name;
  ModalityKind kind = ModalityKind::ImagingFeatures;
  int dim = 64;
  double cluster_separation = 4.0;  // pairwise distance between class means
  double noise_std = 1.0;
};

struct SyntheticSpec {
  int n_subjects = 500;
  int n_classes = 4;
  std::vector<SyntheticModalitySpec> modalities;
  std::uint64_t seed = 0;
};

/// Class-balanced gaussian blobs (imaging kind) or class-correlated one-hot
/// categories (phenotype kind), with class means placed pairwise
/// cluster_separation apart on a simplex. Deterministic per spec.
std::pair<std::vector<ModalityData>, Eigen::VectorXi> generate(const SyntheticSpec& spec);

struct SplitSpec {
  double label_rate = 0.05;        // of the non-test pool
  double test_fraction = 0.2;
  double outer_val_fraction = 0.2; // of the labelled budget
  std::uint64_t seed = 0;
};

/// Disjoint, exhaustive partition of subjects: labelled training set,
/// unlabelled pool, test fold, outer-validation fold (carved out of the
/// labelled budget). Stratified per class with a floor of one labelled
/// training subject per class.
struct SplitResult {
  std::vector<int> labeled;
  std::vector<int> unlabeled;
  std::vector<int> test;
  std::vector<int> outer_val;
};

SplitResult split(const Eigen::VectorXi& labels, const SplitSpec& spec);

/// LabelState for model consumption: labelled = split.labeled, unlabelled =
/// everything else (unlabelled pool + both evaluation folds).
LabelState make_label_state(const SplitResult& s, const Eigen::VectorXi& labels,
                            int num_classes);

/// Dataset manifest: modality CSVs plus construction settings and an optional
/// label CSV ("subject_index,class_label", any subset of subjects).
struct ManifestEntry {
  std::string name;
  std::string csv_path;
  ModalityKind kind = ModalityKind::ImagingFeatures;
  int k = 25;
  SimilarityFn sim;
};

struct Manifest {
  std::vector<ManifestEntry> modalities;
  std::string labels_csv;  // empty if absent
  std::uint64_t seed = 0;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& m, const std::string& path);

struct LoadedDataset {
  std::vector<ModalityData> modalities;
  std::vector<ModalityConfig> configs;
  Eigen::VectorXi labels;  // -1 where unknown
  std::uint64_t seed = 0;
};

LoadedDataset load(const std::string& manifest_path);

/// Writes feature CSVs, the label CSV and a manifest into dir so synthetic
/// data round-trips through the ingestion path.
void export_dataset(const std::string& dir, const std::vector<ModalityData>& modalities,
                    const std::vector<ModalityConfig>& configs,
                    const Eigen::VectorXi& labels, std::uint64_t seed);

}  // namespace hgl
