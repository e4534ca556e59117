#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgl/hypergraph.hpp"

namespace hgl {

/// Two-layer hypergraph convolution weights.
struct HgnnParams {
  Eigen::MatrixXd w1, w2;
  Eigen::RowVectorXd b1, b2;
};

struct TrainConfig {
  double lr = 0.05;
  double weight_decay = 2e-4;
  int epochs = 150;
  int hidden_dim = 64;
  std::uint64_t seed = 0;
};

struct EpochTrace {
  int epoch;
  double lr;
  double loss_lab;
  double loss_unc;
  double total;
};

struct TrainResult {
  HgnnParams params;
  std::vector<EpochTrace> trace;
};

/// Thrown when the training loss becomes non-finite.
struct divergence_error : std::runtime_error {
  int epoch;
  explicit divergence_error(int epoch_)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch_)),
        epoch(epoch_) {}
};

/// Normalised convolution Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2} over binary
/// membership. Symmetric; largest eigenvalue 1 with eigenvector Dv^{1/2} 1.
/// Throws on zero vertex degree.
SpMat hg_conv_operator(const Hypergraph& h);

/// logits = conv * relu(conv * x * w1 + b1) * w2 + b2
Eigen::MatrixXd forward(const SpMat& conv, const Eigen::MatrixXd& x, const HgnnParams& p);
Eigen::MatrixXd forward(const Hypergraph& h, const Eigen::MatrixXd& x, const HgnnParams& p);

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

struct LossValue {
  double total;
  double loss_lab;
  double loss_unc;
  Eigen::MatrixXd dlogits;  // exact gradient of total w.r.t. logits
};

/// Mean cross entropy over labelled rows plus tau times mean cross entropy of
/// unlabelled rows against their pseudo-labels.
LossValue loss(const Eigen::MatrixXd& logits, const std::vector<int>& labeled_idx,
               const Eigen::VectorXi& labeled_y, const std::vector<int>& unlabeled_idx,
               const Eigen::VectorXi& pseudo_y, double tau);

struct ParamGrads {
  Eigen::MatrixXd w1, w2;
  Eigen::RowVectorXd b1, b2;
};

/// Forward + exact reverse-mode gradients for the fixed architecture.
/// conv_x = conv * x may be passed precomputed (it is constant over training).
struct ForwardBackward {
  double total, loss_lab, loss_unc;
  ParamGrads grads;
};
ForwardBackward forward_backward(const SpMat& conv, const Eigen::MatrixXd& conv_x,
                                 const HgnnParams& p, const std::vector<int>& labeled_idx,
                                 const Eigen::VectorXi& labeled_y,
                                 const std::vector<int>& unlabeled_idx,
                                 const Eigen::VectorXi& pseudo_y, double tau);

HgnnParams init_params(int d_in, int hidden, int n_classes, std::uint64_t seed);

/// Full-batch gradient descent with the cosine-annealed learning-rate
/// schedule lr0 * (1 + cos(pi e / epochs)) / 2 and L2 decay on w1, w2.
/// Deterministic under cfg.seed. Throws divergence_error when the loss stops
/// being finite.
TrainResult train_inner(const Hypergraph& h, const Eigen::MatrixXd& x,
                        const std::vector<int>& labeled_idx, const Eigen::VectorXi& labeled_y,
                        const std::vector<int>& unlabeled_idx, const Eigen::VectorXi& pseudo_y,
                        double tau, const TrainConfig& cfg);

Eigen::VectorXi predict(const SpMat& conv, const Eigen::MatrixXd& x, const HgnnParams& p);

void save_checkpoint(const HgnnParams& p, const std::string& path, std::uint64_t seed_echo);
HgnnParams load_checkpoint(const std::string& path);

}  // namespace hgl
