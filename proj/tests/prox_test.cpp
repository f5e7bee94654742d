#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ipg/errors.hpp"
#include "ipg/prox.hpp"
#include "ipg/rng.hpp"
#include "ipg/verify.hpp"

using namespace ipg;

namespace {
Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}
}  // namespace

TEST_CASE("soft threshold closed form") {
  CHECK(prox_weighted_l1(vec({2.0}), 0.5)(0) == doctest::Approx(1.5));
  CHECK(prox_weighted_l1(vec({-0.3}), 0.5)(0) == 0.0);
  const Eigen::VectorXd y = vec({1.0, -2.0, 0.0, 0.2});
  CHECK((prox_weighted_l1(y, 0.0) - y).norm() == 0.0);  // c = 0 is the identity
  CHECK_THROWS_AS(prox_weighted_l1(y, -1.0), InvariantError);
}

TEST_CASE("pairwise prox branches") {
  const PairwiseGeometry geom = make_pairwise_geometry({1}, 2, 1);
  SUBCASE("shrink branch") {
    const BlockVector out = prox_pairwise_l1(BlockVector(2, 1, vec({3.0, 1.0})), 0.5, geom);
    CHECK(out.vec()(0) == doctest::Approx(2.5));
    CHECK(out.vec()(1) == doctest::Approx(1.5));
  }
  SUBCASE("averaging branch") {
    const BlockVector out = prox_pairwise_l1(BlockVector(2, 1, vec({3.0, 1.0})), 1.5, geom);
    CHECK(out.vec()(0) == doctest::Approx(2.0));
    CHECK(out.vec()(1) == doctest::Approx(2.0));
  }
  SUBCASE("tie uses the averaging branch") {
    const BlockVector out = prox_pairwise_l1(BlockVector(2, 1, vec({3.0, 1.0})), 1.0, geom);
    CHECK(out.vec()(0) == doctest::Approx(2.0));
    CHECK(out.vec()(1) == doctest::Approx(2.0));
  }
  SUBCASE("consensus points are fixed points") {
    const PairwiseGeometry g6 = make_pairwise_geometry({2, 4}, 6, 2);
    Rng rng(3);
    BlockVector x(6, 2);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 2; ++j) x.block(i)(j) = rng.uniform(-2, 2);
    }
    x.block(2) = x.block(1);  // pair (2,3)
    x.block(4) = x.block(3);  // pair (4,5)
    const BlockVector out = prox_pairwise_l1(x, 0.7, g6);
    CHECK((out.vec() - x.vec()).norm() == 0.0);
  }
  SUBCASE("overlapping pairs rejected at construction") {
    CHECK_THROWS_AS(make_pairwise_geometry({2, 3}, 6, 1), InvariantError);
    CHECK_THROWS_AS(make_pairwise_geometry({0}, 6, 1), InvariantError);
  }
}

TEST_CASE("conjugate prox via the Moreau identity") {
  auto prox_l1 = [](const Eigen::VectorXd& v, double t) { return prox_weighted_l1(v, t * 0.5); };
  SUBCASE("scalar box") {
    for (double eta : {0.1, 1.0, 7.0}) {
      CHECK(prox_conjugate(prox_l1, vec({2.0}), eta)(0) == doctest::Approx(0.5).epsilon(1e-14));
      CHECK(prox_conjugate(prox_l1, vec({0.0}), eta)(0) == 0.0);
    }
  }
  SUBCASE("matches the direct box projection") {
    Rng rng(17);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd z(6);
      for (int i = 0; i < 6; ++i) z(i) = rng.uniform(-3, 3);
      const double eta = rng.uniform(0.05, 5.0);
      const Eigen::VectorXd a = prox_conjugate(prox_l1, z, eta);
      const Eigen::VectorXd b = project_linf_ball(z, 0.5);
      CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
  CHECK_THROWS_AS(prox_conjugate(prox_l1, vec({1.0}), 0.0), InvariantError);
}

TEST_CASE("linf ball projection") {
  const Eigen::VectorXd out = project_linf_ball(vec({3.0, -0.2}), 1.0);
  CHECK(out(0) == 1.0);
  CHECK(out(1) == -0.2);
  const Eigen::VectorXd inside = vec({0.3, -0.9});
  CHECK((project_linf_ball(inside, 1.0) - inside).norm() == 0.0);
}

TEST_CASE("subdifferential distance closed form") {
  CHECK(subdiff_distance_weighted_l1(vec({1.0}), vec({0.7}), 0.7) == 0.0);
  CHECK(subdiff_distance_weighted_l1(vec({0.0}), vec({1.7}), 0.7) == doctest::Approx(1.0));
  CHECK(subdiff_distance_weighted_l1(vec({0.0}), vec({0.3}), 0.7) == 0.0);
  CHECK(subdiff_distance_weighted_l1(vec({-2.0}), vec({0.7}), 0.7) == doctest::Approx(1.4));
}

TEST_CASE("subdifferential projection") {
  const Eigen::VectorXd y = vec({2.0, 0.0, -1.0});
  const Eigen::VectorXd u = vec({0.0, 5.0, 5.0});
  const Eigen::VectorXd p = subdiff_project_weighted_l1(y, u, 0.7);
  CHECK(p(0) == 0.7);
  CHECK(p(1) == 0.7);
  CHECK(p(2) == -0.7);
}

TEST_CASE("prox spec dispatcher") {
  ProxSpec soft{ProxKind::weighted_l1, 0.5, std::nullopt};
  CHECK(soft.apply(vec({2.0}), 1.0)(0) == doctest::Approx(1.5));
  ProxSpec ball{ProxKind::linf_ball_indicator, 1.0, std::nullopt};
  CHECK(ball.apply(vec({3.0}), 0.2)(0) == 1.0);
  ProxSpec pair{ProxKind::pairwise_l1, 1.0, make_pairwise_geometry({1}, 2, 1)};
  CHECK(pair.apply(vec({3.0, 1.0}), 0.5)(0) == doctest::Approx(2.5));
  ProxSpec broken{ProxKind::pairwise_l1, 1.0, std::nullopt};
  CHECK_THROWS_AS(broken.apply(vec({1.0, 2.0}), 1.0), InvariantError);
}

TEST_CASE("prox property suite") {
  const auto r = check_prox_oracles(60, 4242);
  CHECK_MESSAGE(r.passed, r.detail);
}
