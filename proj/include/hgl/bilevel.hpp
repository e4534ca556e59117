#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hgl/augmentation.hpp"
#include "hgl/classifier.hpp"
#include "hgl/data.hpp"
#include "hgl/metrics.hpp"
#include "hgl/tvflow.hpp"

namespace hgl {

/// Assembled dataset: the multi-modal hypergraph, the horizontally
/// concatenated feature matrix and ground-truth labels (-1 where unknown).
/// conv is the clean-graph convolution, cached for evaluation.
struct Dataset {
  Hypergraph h;
  Eigen::MatrixXd features;
  Eigen::VectorXi labels;
  int num_classes = 0;
  SpMat conv;
};

Dataset assemble_dataset(const std::vector<ModalityData>& modalities,
                         const std::vector<ModalityConfig>& configs,
                         const Eigen::VectorXi& labels);

/// Pseudo-label source shared by every policy evaluation of one split.
struct PseudoArtifacts {
  Eigen::MatrixXd u_star;   // n x L (flow mode) or logits (network mode)
  Eigen::VectorXi pseudo;   // length n; true labels on labelled rows
  double tau = 0.0;
};

enum class ScoreMode { HeldOut, TrainUnion };
enum class PseudoMode { Flow, NetworkArgmax };

struct PipelineConfig {
  FlowParams flow;
  TrainConfig train;
  ScoreMode score_mode = ScoreMode::HeldOut;
  PseudoMode pseudo_mode = PseudoMode::Flow;
  bool flow_on_augmented = false;  // re-run the flow per augmented view
};

PseudoArtifacts compute_pseudo_artifacts(const Dataset& ds, const SplitResult& folds,
                                         const PipelineConfig& cfg, std::uint64_t seed);

struct PolicyCandidate {
  AugmentationPolicy policy;
  int index = -1;
  double score = 0.0;        // mean outer score over all evaluations so far
  double stage1_score = 0.0; // score of the first evaluation only
  std::vector<double> seed_scores;
  std::uint64_t seed = 0;    // evaluation seed of the first evaluation
  bool divergent = false;
  double avg_er = 0.0;       // outer-validation fold, first evaluation
  double ppv = 0.0;
};

/// Full inner pipeline for one policy: pseudo-labels -> augmented view ->
/// classifier training -> outer score on the clean graph. Training divergence
/// is reported as score 0 with the divergent flag; structural errors
/// propagate.
PolicyCandidate evaluate_policy(const AugmentationPolicy& policy, const Dataset& ds,
                                const SplitResult& folds, const PipelineConfig& cfg,
                                std::uint64_t eval_seed);
PolicyCandidate evaluate_policy(const AugmentationPolicy& policy, const Dataset& ds,
                                const SplitResult& folds, const PseudoArtifacts& artifacts,
                                const PipelineConfig& cfg, std::uint64_t eval_seed);

struct SearchConfig {
  int budget = 32;           // stage-1 candidates sampled uniformly from the box
  int survivor_seeds = 3;    // fresh evaluation seeds per survivor and round
  int max_rounds = 2;        // successive-halving rounds after stage 1
  std::array<bool, 4> actions{true, true, true, true};
  double delta_max = 2.0;
  int walk_min = 2;
  int walk_max = 20;
  int workers = 1;
  std::uint64_t seed = 0;
  std::vector<AugmentationPolicy> pool;  // explicit stage-1 pool (overrides sampling)
};

struct SearchResult {
  PolicyCandidate best;
  std::vector<PolicyCandidate> leaderboard;  // sorted by score desc, index asc
};

/// Derivative-free policy search: uniform stage-1 sampling followed by
/// successive halving with fresh-seed re-evaluation of survivors. Candidate
/// policies and evaluation seeds depend only on (cfg.seed, candidate index),
/// so candidate pools are nested across budgets. Throws when every candidate
/// diverges.
SearchResult outer_search(const Dataset& ds, const SplitResult& folds,
                          const PseudoArtifacts& artifacts, const PipelineConfig& cfg,
                          const SearchConfig& search);

/// Trains the policy once with the given seed and scores the test fold on the
/// clean graph.
MetricsReport test_metrics(const AugmentationPolicy& policy, const Dataset& ds,
                           const SplitResult& folds, const PseudoArtifacts& artifacts,
                           const PipelineConfig& cfg, std::uint64_t eval_seed);

struct ExperimentConfig {
  std::vector<std::string> arms{"baseline", "A0", "A1", "A2", "A3", "A4"};
  int n_split_seeds = 5;
  SplitSpec split;  // seed field is derived per split from master_seed
  PipelineConfig pipeline;
  int a4_budget = 32;
  int single_action_budget = 8;
  int survivor_seeds = 3;
  int max_rounds = 1;
  std::vector<double> label_rate_sweep;  // empty = skip the sweep
  int sweep_budget = 6;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

struct ArmSummary {
  std::string arm;
  double avg_er_mean = 0.0, avg_er_std = 0.0;  // x100 scale
  double ppv_mean = 0.0, ppv_std = 0.0;        // x100 scale
  double accuracy_mean = 0.0;
  std::vector<MetricsReport> per_seed;
};

struct SweepRow {
  double label_rate;
  double avg_er_mean, avg_er_std, ppv_mean, ppv_std;  // x100 scale
};

struct LeaderboardRow {
  int split_seed_index;
  std::string arm;
  PolicyCandidate candidate;
};

struct ExperimentReport {
  std::vector<ArmSummary> by_arm;
  std::vector<SweepRow> sweep;
  std::vector<LeaderboardRow> leaderboard;
  AugmentationPolicy winning_policy;
  double winning_score = 0.0;
  std::string winning_arm;
};

/// Repeats the bilevel pipeline per split seed and arm, aggregates test-fold
/// metrics as mean +/- std, and optionally sweeps label rates for the
/// all-actions arm. Deterministic per master seed.
ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg);

/// Writes leaderboard.csv, metrics_by_arm.csv, label_rate_sweep.csv and
/// policy.json into dir.
void write_report_bundle(const ExperimentReport& rep, const std::string& dir,
                         std::uint64_t master_seed);

}  // namespace hgl
