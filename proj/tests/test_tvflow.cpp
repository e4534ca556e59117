#include <doctest.h>

#include <cmath>

#include "hgl/tvflow.hpp"
#include "oracles.hpp"

using namespace hgl;

namespace {

Eigen::VectorXd random_signal(Rng& rng, int n) {
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = rng.next_gaussian();
  return u;
}

LabelState two_cluster_labels(int n, int l0, int l1) {
  LabelState ls;
  ls.n = n;
  ls.num_classes = 2;
  ls.labeled_idx = {l0, l1};
  ls.labeled_y.resize(2);
  ls.labeled_y << 0, 1;
  for (int v = 0; v < n; ++v) {
    if (v != l0 && v != l1) ls.unlabeled_idx.push_back(v);
  }
  return ls;
}

}  // namespace

TEST_CASE("tv basics") {
  oracle::EdgeListGraph g{3, {{0, 1}, {1, 2}}, {1.0, 1.0}};
  const Hypergraph h = validate(oracle::to_hypergraph(g));

  CHECK(tv(h, Eigen::Vector3d::Constant(0.7)) == 0.0);

  Eigen::Vector3d u(0, 1, 3);
  CHECK(tv(h, u) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(tv(h, u) == doctest::Approx(oracle::tv_bruteforce(g, u)));

  // Translation invariance.
  CHECK(tv(h, u.array() + 17.5) == doctest::Approx(tv(h, u)).epsilon(1e-13));
}

TEST_CASE("tv equals the edge-list oracle on random hypergraphs") {
  Rng rng(101);
  for (int t = 0; t < 100; ++t) {
    auto g = oracle::random_edge_list(rng, 20, 30);
    const Hypergraph h = validate(oracle::to_hypergraph(g));
    const Eigen::VectorXd u = random_signal(rng, g.n);
    CHECK(std::abs(tv(h, u) - oracle::tv_bruteforce(g, u)) <= 1e-12);
  }
}

TEST_CASE("subgradient on hand cases") {
  {
    oracle::EdgeListGraph g{2, {{0, 1}}, {1.0}};
    const Hypergraph h = validate(oracle::to_hypergraph(g));
    Eigen::Vector2d u(0, 1);
    const Eigen::VectorXd gamma = tv_subgradient(h, u);
    CHECK(gamma[0] == doctest::Approx(-1.0));
    CHECK(gamma[1] == doctest::Approx(1.0));
  }
  {
    oracle::EdgeListGraph g{4, {{0, 1, 2}, {2, 3}}, {0.5, 2.0}};
    const Hypergraph h = validate(oracle::to_hypergraph(g));
    CHECK(tv_subgradient(h, Eigen::Vector4d::Constant(3.0)).norm() == 0.0);
  }
}

TEST_CASE("subgradient satisfies the Euler identity and subgradient inequality") {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    auto g = oracle::random_edge_list(rng, 30, 20);
    const Hypergraph h = validate(oracle::to_hypergraph(g));
    const Eigen::VectorXd u = random_signal(rng, g.n);
    const Eigen::VectorXd v = random_signal(rng, g.n);
    const Eigen::VectorXd gamma = tv_subgradient(h, u);
    CHECK(std::abs(gamma.dot(u) - tv(h, u)) <= 1e-10);
    CHECK(tv(h, v) >= tv(h, u) + gamma.dot(v - u) - 1e-10);
    // gamma is unchanged by constant shifts.
    CHECK((tv_subgradient(h, u.array() + 3.25) - gamma).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("one-homogeneity of tv") {
  Rng rng(15);
  auto g = oracle::random_edge_list(rng, 15, 10);
  const Hypergraph h = validate(oracle::to_hypergraph(g));
  const Eigen::VectorXd u = random_signal(rng, g.n);
  for (double a : {0.5, 2.0, 13.0}) {
    CHECK(tv(h, a * u) == doctest::Approx(a * tv(h, u)).epsilon(1e-12));
  }
}

TEST_CASE("flow_step keeps constant channels fixed and projects along d") {
  oracle::EdgeListGraph g{4, {{0, 1}, {1, 2}, {2, 3}}, {}};
  const Hypergraph h = validate(oracle::to_hypergraph(g));

  FlowState st;
  st.params = FlowParams{};
  st.dt = 0.1;
  st.d = Eigen::VectorXd::Ones(4);
  st.u = Eigen::MatrixXd::Constant(4, 1, 0.5);  // unit-norm constant column
  st.encoding = Eigen::MatrixXd::Zero(4, 1);
  st.last_diag.resize(1);

  FlowState before = st;
  flow_step(h, st);
  CHECK((st.u - before.u).lpNorm<Eigen::Infinity>() <= 1e-15);
  CHECK(st.last_diag[0].proj_err <= 1e-12);
  CHECK(st.iter == 1);
}

TEST_CASE("flow invariants hold over random runs") {
  Rng rng(55);
  for (int t = 0; t < 20; ++t) {
    auto g = oracle::random_edge_list(rng, 16, 20);
    const Hypergraph h = validate(oracle::to_hypergraph(g));
    LabelState ls;
    ls.n = g.n;
    ls.num_classes = 2;
    ls.labeled_idx = {0, 1};
    ls.labeled_y.resize(2);
    ls.labeled_y << 0, 1;
    for (int v = 2; v < g.n; ++v) ls.unlabeled_idx.push_back(v);

    FlowParams p;
    p.d_mode = FlowParams::DMode::Ones;
    FlowState st = init_flow(h, ls, p);
    for (int k = 0; k < 25; ++k) {
      flow_step(h, st);
      for (const auto& dg : st.last_diag) {
        CHECK(std::abs(dg.col_norm - 1.0) <= 1e-9);
        CHECK(dg.proj_err <= 1e-12);
      }
    }
  }
}

TEST_CASE("two clusters joined by a bridge recover the planted partition") {
  // Two triangles {0,1,2} and {3,4,5} with a bridge edge {2,3}.
  oracle::EdgeListGraph g{6, {{0, 1, 2}, {0, 1}, {1, 2}, {3, 4, 5}, {3, 4}, {4, 5}, {2, 3}}, {}};
  const Hypergraph h = validate(oracle::to_hypergraph(g));

  // The planted split minimises TV among balanced sign vectors.
  double planted_tv = 0.0, best_other = 1e300;
  for (int bits = 0; bits < 64; ++bits) {
    Eigen::VectorXd s(6);
    int pop = 0;
    for (int v = 0; v < 6; ++v) {
      const bool one = bits & (1 << v);
      s[v] = one ? 1.0 : -1.0;
      pop += one;
    }
    if (pop != 3) continue;
    const double val = oracle::tv_bruteforce(g, s);
    const bool is_planted = (bits == 0b000111) || (bits == 0b111000);
    if (is_planted) {
      planted_tv = val;
    } else {
      best_other = std::min(best_other, val);
    }
  }
  CHECK(planted_tv < best_other);

  FlowParams p;
  p.dt = 0.1;
  p.max_iters = 200;
  p.tol = 1e-12;
  const LabelState ls = two_cluster_labels(6, 0, 5);
  const Eigen::MatrixXd u = run_flow(h, ls, p);
  const Eigen::VectorXi labels = extract_pseudo_labels(u);
  for (int v = 0; v < 3; ++v) CHECK(labels[v] == 0);
  for (int v = 3; v < 6; ++v) CHECK(labels[v] == 1);
}

TEST_CASE("run_flow stopping and label handling") {
  oracle::EdgeListGraph g{4, {{0, 1}, {1, 2}, {2, 3}}, {}};
  const Hypergraph h = validate(oracle::to_hypergraph(g));

  SUBCASE("fully labelled input reproduces the encodings") {
    LabelState ls;
    ls.n = 4;
    ls.num_classes = 2;
    ls.labeled_idx = {0, 1, 2, 3};
    ls.labeled_y.resize(4);
    ls.labeled_y << 0, 1, 0, 1;
    const Eigen::MatrixXd u = run_flow(h, ls, FlowParams{});
    const Eigen::VectorXi out = extract_pseudo_labels(u);
    for (int v = 0; v < 4; ++v) CHECK(out[v] == ls.labeled_y[v]);
    // Columns proportional to the clamped encodings.
    Eigen::VectorXd enc(4);
    enc << 1, -1, 1, -1;
    enc.normalize();
    CHECK((u.col(0) - enc).lpNorm<Eigen::Infinity>() <= 1e-12);
  }

  SUBCASE("huge tolerance stops after one iteration") {
    FlowParams p;
    p.tol = 1e9;
    int iters = 0;
    run_flow(h, two_cluster_labels(4, 0, 3), p, [&](const FlowState&) { ++iters; });
    CHECK(iters == 1);
  }

  SUBCASE("missing class is reported") {
    LabelState ls = two_cluster_labels(4, 0, 3);
    ls.labeled_y << 0, 0;  // class 1 never labelled
    CHECK_THROWS_AS(run_flow(h, ls, FlowParams{}), std::runtime_error);
  }
}

TEST_CASE("run_flow is permutation-equivariant") {
  Rng rng(91);
  auto g = oracle::random_edge_list(rng, 12, 14);
  const Hypergraph h = validate(oracle::to_hypergraph(g));
  const LabelState ls = two_cluster_labels(g.n, 0, 1);

  std::vector<int> perm(g.n);
  for (int i = 0; i < g.n; ++i) perm[i] = i;
  for (int i = g.n - 1; i > 0; --i) std::swap(perm[i], perm[rng.next_int(i + 1)]);

  oracle::EdgeListGraph gp = g;
  for (auto& e : gp.edges) {
    for (int& v : e) v = perm[v];
  }
  LabelState lsp = ls;
  for (int& v : lsp.labeled_idx) v = perm[v];
  lsp.unlabeled_idx.clear();
  std::vector<char> lab(g.n, 0);
  for (int v : lsp.labeled_idx) lab[v] = 1;
  for (int v = 0; v < g.n; ++v) {
    if (!lab[v]) lsp.unlabeled_idx.push_back(v);
  }

  FlowParams p;
  p.max_iters = 40;
  p.d_mode = FlowParams::DMode::Ones;
  const Eigen::MatrixXd u = run_flow(h, ls, p);
  const Eigen::MatrixXd up = run_flow(validate(oracle::to_hypergraph(gp)), lsp, p);
  for (int v = 0; v < g.n; ++v) {
    CHECK((u.row(v) - up.row(perm[v])).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("pseudo-label extraction ties to the smallest class") {
  Eigen::MatrixXd u(3, 4);
  u << 0.1, 0.9, 0.0, 0.0,
       0.25, 0.25, 0.25, 0.25,
       0.0, 0.0, 0.0, 1.0;
  const Eigen::VectorXi y = extract_pseudo_labels(u);
  CHECK(y[0] == 1);
  CHECK(y[1] == 0);
  CHECK(y[2] == 3);
}

TEST_CASE("uncertainty weight tau") {
  std::vector<int> idx{0, 1};

  Eigen::MatrixXd sharp = Eigen::MatrixXd::Zero(2, 4);
  sharp(0, 2) = 1e3;
  sharp(1, 0) = 1e3;
  CHECK(uncertainty_tau(sharp, idx) == doctest::Approx(1.0).epsilon(1e-9));

  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(2, 4, 0.3);
  CHECK(uncertainty_tau(uniform, idx) == doctest::Approx(0.0));

  // Two active classes at log-2 entropy: tau = 1 - log2/log4 = 1/2.
  Eigen::MatrixXd half(2, 4);
  half << 30, 30, -30, -30, 30, 30, -30, -30;
  CHECK(uncertainty_tau(half, idx) == doctest::Approx(0.5).epsilon(1e-9));

  // Alternative normaliser uses the given count.
  CHECK(uncertainty_tau(half, idx, 2) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(uncertainty_tau(half, {}) == 1.0);
}
