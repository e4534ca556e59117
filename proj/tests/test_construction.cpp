#include <doctest.h>

#include <set>

#include "hgl/construction.hpp"
#include "oracles.hpp"

using namespace hgl;

namespace {

Eigen::MatrixXd points_1d(std::initializer_list<double> xs) {
  Eigen::MatrixXd m(static_cast<int>(xs.size()), 1);
  int i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

const SimilarityFn kNegEuclid{SimilarityFn::Kind::NegativeEuclidean, 0.0};
const SimilarityFn kDot{SimilarityFn::Kind::DotProduct, 0.0};

}  // namespace

TEST_CASE("knn_block on a line matches the pairwise-distance oracle") {
  const Eigen::MatrixXd x = points_1d({0.0, 1.0, 10.0});
  const SpMat block = knn_block(x, 1, kNegEuclid);
  const auto got = oracle::membership_of({block, Eigen::VectorXd::Ones(3), {0, 0, 0}});
  const auto want = oracle::knn_membership_bruteforce(x, 1, kNegEuclid);
  REQUIRE(got.size() == want.size());
  for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j] == want[j]);
  CHECK(got[0] == std::set<int>{0, 1});
  CHECK(got[1] == std::set<int>{1, 0});
  CHECK(got[2] == std::set<int>{2, 1});
}

TEST_CASE("k = N-1 gives full columns") {
  Rng rng(2);
  Eigen::MatrixXd x(5, 3);
  for (int i = 0; i < x.size(); ++i) x(i / 3, i % 3) = rng.next_gaussian();
  const SpMat block = knn_block(x, 4, kDot);
  for (const auto& col : oracle::membership_of({block, Eigen::VectorXd::Ones(5), {0, 0, 0, 0, 0}})) {
    CHECK(col.size() == 5);
  }
}

TEST_CASE("identical points break ties toward the smallest index") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 2);
  const SpMat block = knn_block(x, 1, kNegEuclid);
  const auto cols = oracle::membership_of({block, Eigen::VectorXd::Ones(4), {0, 0, 0, 0}});
  CHECK(cols[2] == std::set<int>{2, 0});
  CHECK(cols[0] == std::set<int>{0, 1});  // 0 itself excluded from candidates
}

TEST_CASE("columns have exactly k+1 strictly positive members, centre at max") {
  Rng rng(9);
  Eigen::MatrixXd x(12, 4);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.next_gaussian();
  }
  for (const auto& sim : {kDot, kNegEuclid}) {
    const int k = 3;
    const SpMat block = knn_block(x, k, sim);
    for (int j = 0; j < block.cols(); ++j) {
      int nnz = 0;
      double mx = 0.0, centre = -1.0;
      for (SpMat::InnerIterator it(block, j); it; ++it) {
        CHECK(it.value() > 0.0);
        mx = std::max(mx, it.value());
        if (it.row() == j) centre = it.value();
        ++nnz;
      }
      CHECK(nnz == k + 1);
      CHECK(centre == doctest::Approx(mx));
    }
  }
}

TEST_CASE("neighbourhoods are not symmetrised") {
  // Dense cluster near the origin plus one outlier: the outlier's nearest
  // neighbour is in the cluster, but no cluster point reaches back.
  Eigen::MatrixXd x(6, 1);
  x << 0.0, 0.05, 0.1, 0.15, 0.2, 10.0;
  const SpMat block = knn_block(x, 2, kNegEuclid);
  const auto cols = oracle::membership_of(
      {block, Eigen::VectorXd::Ones(6), std::vector<int>(6, 0)});
  const auto want = oracle::knn_membership_bruteforce(x, 2, kNegEuclid);
  for (int j = 0; j < 6; ++j) CHECK(cols[j] == want[j]);
  CHECK(cols[5].count(4) == 1);   // outlier reaches into the cluster
  CHECK(cols[4].count(5) == 0);   // but is nobody's neighbour
}

TEST_CASE("knn_block is permutation-equivariant") {
  Rng rng(31);
  Eigen::MatrixXd x(9, 3);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.next_gaussian();
  }
  std::vector<int> perm{3, 7, 0, 5, 1, 8, 2, 6, 4};
  Eigen::MatrixXd xp(9, 3);
  for (int i = 0; i < 9; ++i) xp.row(perm[i]) = x.row(i);

  const auto base = oracle::membership_of(
      {knn_block(x, 3, kNegEuclid), Eigen::VectorXd::Ones(9), std::vector<int>(9, 0)});
  const auto permuted = oracle::membership_of(
      {knn_block(xp, 3, kNegEuclid), Eigen::VectorXd::Ones(9), std::vector<int>(9, 0)});
  for (int j = 0; j < 9; ++j) {
    std::set<int> mapped;
    for (int v : base[j]) mapped.insert(perm[v]);
    CHECK(permuted[perm[j]] == mapped);
  }
}

TEST_CASE("phenotype_block groups one-hot genotypes") {
  // Three genotypes, three subjects each; with k=2 every hyperedge stays pure.
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(9, 3);
  for (int i = 0; i < 9; ++i) x(i, i / 3) = 1.0;
  const SpMat block = phenotype_block(x, 2, kDot);
  const auto cols = oracle::membership_of(
      {block, Eigen::VectorXd::Ones(9), std::vector<int>(9, 0)});
  const auto want = oracle::knn_membership_bruteforce(x, 2, kDot);
  for (int j = 0; j < 9; ++j) {
    CHECK(cols[j] == want[j]);
    for (int v : cols[j]) CHECK(v / 3 == j / 3);
  }
}

TEST_CASE("constant phenotype gives index-ordered prefix neighbourhoods") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(6, 1);
  const SpMat block = phenotype_block(x, 2, {SimilarityFn::Kind::GaussianKernel, 1.0});
  const auto cols = oracle::membership_of(
      {block, Eigen::VectorXd::Ones(6), std::vector<int>(6, 0)});
  CHECK(cols[0] == std::set<int>{0, 1, 2});
  CHECK(cols[3] == std::set<int>{3, 0, 1});
  CHECK(cols[5] == std::set<int>{5, 0, 1});
}

TEST_CASE("ages pair up under k=1") {
  const Eigen::MatrixXd ages = points_1d({20, 21, 50, 51});
  const auto want = oracle::knn_membership_bruteforce(ages, 1, kNegEuclid);
  const auto cols = oracle::membership_of(
      {phenotype_block(ages, 1, kNegEuclid), Eigen::VectorXd::Ones(4), std::vector<int>(4, 0)});
  for (int j = 0; j < 4; ++j) CHECK(cols[j] == want[j]);
  CHECK(cols[0] == std::set<int>{0, 1});
  CHECK(cols[2] == std::set<int>{2, 3});
}

TEST_CASE("knn_block rejects bad k") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 2);
  CHECK_THROWS_AS(knn_block(x, 4, kDot), std::invalid_argument);
  CHECK_THROWS_AS(knn_block(x, 0, kDot), std::invalid_argument);
}

TEST_CASE("concat stacks blocks with provenance") {
  Rng rng(13);
  Eigen::MatrixXd a(5, 2), b(5, 3);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) a(i, j) = rng.next_gaussian();
    for (int j = 0; j < 3; ++j) b(i, j) = rng.next_gaussian();
  }
  const SpMat ba = knn_block(a, 2, kNegEuclid);
  const SpMat bb = knn_block(b, 2, kNegEuclid);
  const Hypergraph h = concat({ba, bb});
  CHECK(h.n_vertices() == 5);
  CHECK(h.n_edges() == 10);
  for (int e = 0; e < 10; ++e) {
    CHECK(h.edge_modality[e] == (e < 5 ? 0 : 1));
    CHECK(h.edge_weights[e] == 1.0);
  }
  // Every vertex in at least one edge per modality.
  const auto inc = vertex_incidence(h);
  for (int v = 0; v < 5; ++v) {
    std::set<int> mods;
    for (int e : inc[v]) mods.insert(h.edge_modality[e]);
    CHECK(mods == std::set<int>{0, 1});
  }

  SpMat six(6, 6);
  CHECK_THROWS_AS(concat({ba, six}), std::invalid_argument);
}

TEST_CASE("build_multimodal end to end") {
  Rng rng(77);
  ModalityData imaging{ModalityKind::ImagingFeatures, Eigen::MatrixXd(8, 4), "img"};
  ModalityData pheno{ModalityKind::Phenotype, Eigen::MatrixXd::Zero(8, 2), "phe"};
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 4; ++j) imaging.features(i, j) = rng.next_gaussian();
    pheno.features(i, i % 2) = 1.0;
  }
  const Hypergraph h = build_multimodal(
      {imaging, pheno}, {default_modality_config(ModalityKind::ImagingFeatures, 3),
                         default_modality_config(ModalityKind::Phenotype, 3)});
  CHECK(h.n_vertices() == 8);
  CHECK(h.n_edges() == 16);
  CHECK(degrees(h).vertex_degree.minCoeff() >= 2.0);
}
