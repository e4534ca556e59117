#include "hgl/metrics.hpp"

#include <stdexcept>

namespace hgl {

MetricsReport metrics(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth,
                      int num_classes) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("metrics: prediction/truth length mismatch");
  }
  if (predicted.size() == 0) throw std::invalid_argument("metrics: empty input");
  if (num_classes < 1) throw std::invalid_argument("metrics: need >= 1 class");

  const int L = num_classes;
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(L, L);  // (truth, predicted)
  int correct = 0;
  for (int i = 0; i < predicted.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || t >= L || p < 0 || p >= L) {
      throw std::invalid_argument("metrics: label out of range");
    }
    confusion(t, p) += 1;
    correct += t == p ? 1 : 0;
  }

  MetricsReport rep;
  rep.n_eval = static_cast<int>(predicted.size());
  rep.accuracy = static_cast<double>(correct) / predicted.size();
  rep.per_class_error_rate.assign(L, 0.0);
  double er_sum = 0.0, ppv_sum = 0.0;
  for (int c = 0; c < L; ++c) {
    const int support = confusion.row(c).sum();
    const int predicted_c = confusion.col(c).sum();
    const int tp = confusion(c, c);
    const double er = support > 0 ? 1.0 - static_cast<double>(tp) / support : 0.0;
    rep.per_class_error_rate[c] = er;
    er_sum += er;
    ppv_sum += predicted_c > 0 ? static_cast<double>(tp) / predicted_c : 0.0;
  }
  rep.avg_er = er_sum / L;
  rep.ppv = ppv_sum / L;
  return rep;
}

}  // namespace hgl
