#include "hgl/classifier.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hgl/csv.hpp"
#include "hgl/rng.hpp"

namespace hgl {

SpMat hg_conv_operator(const Hypergraph& h) {
  const int n = h.n_vertices();
  const DegreeVectors deg = degrees(h);
  for (int v = 0; v < n; ++v) {
    if (deg.vertex_degree[v] <= 0.0) {
      throw std::runtime_error("hg_conv_operator: vertex " + std::to_string(v) +
                               " has zero degree");
    }
  }

  // Binary membership scaled per edge by w(e)/d_e(e).
  SpMat hw(n, h.n_edges());
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < h.n_edges(); ++e) {
      const double we = h.edge_weights[e] / deg.edge_degree[e];
      for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
        if (it.value() > 0.0) trip.emplace_back(static_cast<int>(it.row()), e, we);
      }
    }
    hw.setFromTriplets(trip.begin(), trip.end());
  }
  SpMat hb(n, h.n_edges());
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (int e = 0; e < h.n_edges(); ++e) {
      for (SpMat::InnerIterator it(h.incidence, e); it; ++it) {
        if (it.value() > 0.0) trip.emplace_back(static_cast<int>(it.row()), e, 1.0);
      }
    }
    hb.setFromTriplets(trip.begin(), trip.end());
  }

  Eigen::VectorXd dinv_sqrt = deg.vertex_degree.array().rsqrt();
  SpMat conv = hw * hb.transpose();
  conv = dinv_sqrt.asDiagonal() * conv * dinv_sqrt.asDiagonal();
  conv.makeCompressed();
  return conv;
}

Eigen::MatrixXd forward(const SpMat& conv, const Eigen::MatrixXd& x, const HgnnParams& p) {
  if (x.cols() != p.w1.rows()) throw std::invalid_argument("forward: feature width mismatch");
  if (p.w1.cols() != p.w2.rows()) throw std::invalid_argument("forward: hidden width mismatch");
  Eigen::MatrixXd z1 = (conv * x) * p.w1;
  z1.rowwise() += p.b1;
  Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
  Eigen::MatrixXd logits = (conv * h1) * p.w2;
  logits.rowwise() += p.b2;
  return logits;
}

Eigen::MatrixXd forward(const Hypergraph& h, const Eigen::MatrixXd& x, const HgnnParams& p) {
  return forward(hg_conv_operator(h), x, p);
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
    p.row(i) = (e / e.sum()).matrix();
  }
  return p;
}

LossValue loss(const Eigen::MatrixXd& logits, const std::vector<int>& labeled_idx,
               const Eigen::VectorXi& labeled_y, const std::vector<int>& unlabeled_idx,
               const Eigen::VectorXi& pseudo_y, double tau) {
  if (labeled_idx.empty()) throw std::invalid_argument("loss: empty labeled set");
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("loss: tau must be in [0,1]");

  LossValue out;
  out.dlogits = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  const Eigen::MatrixXd probs = softmax_rows(logits);

  double lab = 0.0;
  for (std::size_t t = 0; t < labeled_idx.size(); ++t) {
    const int i = labeled_idx[t];
    const int y = labeled_y[static_cast<int>(t)];
    lab -= std::log(std::max(probs(i, y), 1e-300));
    out.dlogits.row(i) += probs.row(i) / static_cast<double>(labeled_idx.size());
    out.dlogits(i, y) -= 1.0 / static_cast<double>(labeled_idx.size());
  }
  lab /= static_cast<double>(labeled_idx.size());

  double unc = 0.0;
  if (!unlabeled_idx.empty() && tau > 0.0) {
    for (std::size_t t = 0; t < unlabeled_idx.size(); ++t) {
      const int i = unlabeled_idx[t];
      const int y = pseudo_y[static_cast<int>(t)];
      unc -= std::log(std::max(probs(i, y), 1e-300));
      out.dlogits.row(i) += tau * probs.row(i) / static_cast<double>(unlabeled_idx.size());
      out.dlogits(i, y) -= tau / static_cast<double>(unlabeled_idx.size());
    }
    unc /= static_cast<double>(unlabeled_idx.size());
  }

  out.loss_lab = lab;
  out.loss_unc = unc;
  out.total = lab + tau * unc;
  return out;
}

ForwardBackward forward_backward(const SpMat& conv, const Eigen::MatrixXd& conv_x,
                                 const HgnnParams& p, const std::vector<int>& labeled_idx,
                                 const Eigen::VectorXi& labeled_y,
                                 const std::vector<int>& unlabeled_idx,
                                 const Eigen::VectorXi& pseudo_y, double tau) {
  Eigen::MatrixXd z1 = conv_x * p.w1;
  z1.rowwise() += p.b1;
  const Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
  const Eigen::MatrixXd ch1 = conv * h1;
  Eigen::MatrixXd logits = ch1 * p.w2;
  logits.rowwise() += p.b2;

  const LossValue lv = loss(logits, labeled_idx, labeled_y, unlabeled_idx, pseudo_y, tau);

  ForwardBackward fb;
  fb.total = lv.total;
  fb.loss_lab = lv.loss_lab;
  fb.loss_unc = lv.loss_unc;

  const Eigen::MatrixXd cdl = conv * lv.dlogits;  // conv is symmetric
  fb.grads.w2 = ch1.transpose() * lv.dlogits;
  fb.grads.b2 = lv.dlogits.colwise().sum();
  Eigen::MatrixXd dh1 = cdl * p.w2.transpose();
  dh1 = (z1.array() > 0.0).select(dh1, 0.0);
  fb.grads.w1 = conv_x.transpose() * dh1;
  fb.grads.b1 = dh1.colwise().sum();
  return fb;
}

HgnnParams init_params(int d_in, int hidden, int n_classes, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "hgnn-init");
  auto xavier = [&](int rows, int cols) {
    const double a = std::sqrt(6.0 / (rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-a, a);
    }
    return m;
  };
  HgnnParams p;
  p.w1 = xavier(d_in, hidden);
  p.w2 = xavier(hidden, n_classes);
  p.b1 = Eigen::RowVectorXd::Zero(hidden);
  p.b2 = Eigen::RowVectorXd::Zero(n_classes);
  return p;
}

TrainResult train_inner(const Hypergraph& h, const Eigen::MatrixXd& x,
                        const std::vector<int>& labeled_idx, const Eigen::VectorXi& labeled_y,
                        const std::vector<int>& unlabeled_idx, const Eigen::VectorXi& pseudo_y,
                        double tau, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.lr <= 0.0) throw std::invalid_argument("train: lr must be > 0");
  if (static_cast<int>(unlabeled_idx.size()) != pseudo_y.size()) {
    throw std::invalid_argument("train: pseudo-labels must cover the unlabeled set");
  }

  const SpMat conv = hg_conv_operator(h);
  const Eigen::MatrixXd conv_x = conv * x;
  const int L = std::max(labeled_y.size() > 0 ? labeled_y.maxCoeff() + 1 : 2,
                         pseudo_y.size() > 0 ? pseudo_y.maxCoeff() + 1 : 2);

  TrainResult res;
  res.params = init_params(static_cast<int>(x.cols()), cfg.hidden_dim, L, cfg.seed);
  res.trace.reserve(cfg.epochs);

  for (int e = 0; e < cfg.epochs; ++e) {
    const double lr = cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * e / cfg.epochs));
    const ForwardBackward fb = forward_backward(conv, conv_x, res.params, labeled_idx,
                                                labeled_y, unlabeled_idx, pseudo_y, tau);
    if (!std::isfinite(fb.total)) throw divergence_error(e);
    res.trace.push_back({e, lr, fb.loss_lab, fb.loss_unc, fb.total});

    res.params.w1 -= lr * (fb.grads.w1 + cfg.weight_decay * res.params.w1);
    res.params.w2 -= lr * (fb.grads.w2 + cfg.weight_decay * res.params.w2);
    res.params.b1 -= lr * fb.grads.b1;
    res.params.b2 -= lr * fb.grads.b2;
  }
  return res;
}

Eigen::VectorXi predict(const SpMat& conv, const Eigen::MatrixXd& x, const HgnnParams& p) {
  const Eigen::MatrixXd logits = forward(conv, x, p);
  Eigen::VectorXi out(logits.rows());
  for (int i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    out[i] = best;
  }
  return out;
}

void save_checkpoint(const HgnnParams& p, const std::string& path, std::uint64_t seed_echo) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "# seed=" << seed_echo << '\n';
  f << p.w1.rows() << ' ' << p.w1.cols() << ' ' << p.w2.cols() << '\n';
  auto dump = [&f](const Eigen::MatrixXd& m) {
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        f << format_g17(m(i, j)) << (j + 1 < m.cols() ? " " : "");
      }
      f << '\n';
    }
  };
  dump(p.w1);
  dump(p.b1);
  dump(p.w2);
  dump(p.b2);
}

HgnnParams load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  int d_in = -1, hidden = -1, classes = -1;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    if (!(ss >> d_in >> hidden >> classes)) {
      throw std::runtime_error(path + ": bad checkpoint header");
    }
    break;
  }
  if (d_in <= 0 || hidden <= 0 || classes <= 0) {
    throw std::runtime_error(path + ": bad checkpoint header");
  }
  HgnnParams p;
  auto read = [&](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        if (!(f >> m(i, j))) throw std::runtime_error(path + ": truncated checkpoint");
      }
    }
    return m;
  };
  p.w1 = read(d_in, hidden);
  p.b1 = read(1, hidden);
  p.w2 = read(hidden, classes);
  p.b2 = read(1, classes);
  return p;
}

}  // namespace hgl
