#include <doctest.h>

#include "hgl/metrics.hpp"
#include "oracles.hpp"

using namespace hgl;

TEST_CASE("perfect predictions") {
  Eigen::VectorXi y(8);
  y << 0, 1, 2, 3, 0, 1, 2, 3;
  const MetricsReport m = metrics(y, y, 4);
  for (double er : m.per_class_error_rate) CHECK(er == 0.0);
  CHECK(m.avg_er == 0.0);
  CHECK(m.ppv == 1.0);
  CHECK(m.accuracy == 1.0);
  CHECK(m.n_eval == 8);
}

TEST_CASE("constant predictor on a balanced set") {
  Eigen::VectorXi truth(8), pred = Eigen::VectorXi::Zero(8);
  truth << 0, 1, 2, 3, 0, 1, 2, 3;
  const MetricsReport m = metrics(pred, truth, 4);
  CHECK(m.per_class_error_rate[0] == 0.0);
  CHECK(m.per_class_error_rate[1] == 1.0);
  CHECK(m.per_class_error_rate[2] == 1.0);
  CHECK(m.per_class_error_rate[3] == 1.0);
  CHECK(m.avg_er == doctest::Approx(0.75));
  CHECK(m.accuracy == doctest::Approx(0.25));
  // Class 0 precision 1/4; classes without predictions contribute 0.
  CHECK(m.ppv == doctest::Approx(0.25 / 4.0));
}

TEST_CASE("cyclically shifted predictions score zero") {
  Eigen::VectorXi truth(8), pred(8);
  truth << 0, 1, 2, 3, 0, 1, 2, 3;
  for (int i = 0; i < 8; ++i) pred[i] = (truth[i] + 1) % 4;
  const MetricsReport m = metrics(pred, truth, 4);
  CHECK(m.accuracy == 0.0);
  CHECK(m.ppv == 0.0);
  CHECK(m.avg_er == 1.0);
}

TEST_CASE("metrics agree with a brute-force confusion matrix") {
  Rng rng(83);
  for (int t = 0; t < 1000; ++t) {
    const int L = 2 + rng.next_int(5);
    const int n = 1 + rng.next_int(60);
    Eigen::VectorXi truth(n), pred(n);
    for (int i = 0; i < n; ++i) {
      truth[i] = rng.next_int(L);
      pred[i] = rng.next_int(L);
    }
    const MetricsReport m = metrics(pred, truth, L);
    const auto conf = oracle::confusion_bruteforce(pred, truth, L).counts;

    double er_sum = 0.0, ppv_sum = 0.0;
    int correct = 0;
    for (int c = 0; c < L; ++c) {
      const int support = conf.row(c).sum();
      const int predicted = conf.col(c).sum();
      correct += conf(c, c);
      er_sum += support > 0 ? 1.0 - double(conf(c, c)) / support : 0.0;
      ppv_sum += predicted > 0 ? double(conf(c, c)) / predicted : 0.0;
    }
    CHECK(m.accuracy == doctest::Approx(double(correct) / n));
    CHECK(m.avg_er == doctest::Approx(er_sum / L));
    CHECK(m.ppv == doctest::Approx(ppv_sum / L));

    // Micro accuracy complements the support-weighted error rate.
    double weighted_er = 0.0;
    for (int c = 0; c < L; ++c) {
      const int support = conf.row(c).sum();
      weighted_er += support > 0 ? (1.0 - double(conf(c, c)) / support) * support / n : 0.0;
    }
    CHECK(m.accuracy == doctest::Approx(1.0 - weighted_er));
  }
}

TEST_CASE("errors on bad input") {
  Eigen::VectorXi a(2), b(3);
  a << 0, 1;
  b << 0, 1, 0;
  CHECK_THROWS_AS(metrics(a, b, 2), std::invalid_argument);
  CHECK_THROWS_AS(metrics(Eigen::VectorXi{}, Eigen::VectorXi{}, 2), std::invalid_argument);
}
