#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hgl {

/// Rates are in [0, 1]; reports multiply by 100 when printing.
struct MetricsReport {
  std::vector<double> per_class_error_rate;  // 1 - recall per class
  double avg_er = 0.0;                       // macro mean of the above
  double ppv = 0.0;                          // macro precision; empty classes count 0
  double accuracy = 0.0;                     // micro fraction correct
  int n_eval = 0;
};

MetricsReport metrics(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth,
                      int num_classes);

}  // namespace hgl
