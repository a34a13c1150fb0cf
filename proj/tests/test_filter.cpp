#include <cmath>
#include <vector>

#include <doctest.h>

#include "filterstab/errors.hpp"
#include "filterstab/filter.hpp"
#include "filterstab/math_util.hpp"
#include "oracles.hpp"

using namespace filterstab;
using testutil::TestRng;

namespace {

StochasticMatrix example3_q() {
  return StochasticMatrix(3, 3,
                          {0.1, 0.3, 0.6,  //
                           0.5, 0.3, 0.2,  //
                           0.9, 0.1, 0.0});
}

}  // namespace

TEST_CASE("normalizer") {
  const LikelihoodTable like(example3_q());
  const FiniteDistribution mu({0.05, 0.65, 0.3});
  CHECK(normalizer(mu, 0, like) == doctest::Approx(0.6).epsilon(1e-14));

  CHECK(normalizer(FiniteDistribution::point_mass(2, 3), 1, like) ==
        doctest::Approx(0.1).epsilon(1e-15));

  // Point mass on the state whose likelihood row has a zero at symbol 2.
  CHECK(normalizer(FiniteDistribution::point_mass(2, 3), 2, like) == 0.0);

  CHECK_THROWS_AS(normalizer(FiniteDistribution({0.5, 0.5}), 0, like), ContractViolation);
  CHECK_THROWS_AS(normalizer(mu, 3, like), ContractViolation);
}

TEST_CASE("bayes_update") {
  const LikelihoodTable like(example3_q());
  const FiniteDistribution mu({0.05, 0.65, 0.3});
  const auto post = bayes_update(mu, 0, like);
  REQUIRE(post.has_value());
  CHECK((*post)[0] == doctest::Approx(1.0 / 120.0).epsilon(1e-13));
  CHECK((*post)[1] == doctest::Approx(65.0 / 120.0).epsilon(1e-13));
  CHECK((*post)[2] == doctest::Approx(54.0 / 120.0).epsilon(1e-13));

  // Uninformative symbol: g(., y) constant leaves the prior untouched.
  const LikelihoodTable flat(StochasticMatrix(2, 2, {0.5, 0.5, 0.5, 0.5}));
  const FiniteDistribution p({0.3, 0.7});
  const auto same = bayes_update(p, 0, flat);
  REQUIRE(same.has_value());
  CHECK(tv_distance(*same, p) <= 1e-15);

  // Prior concentrated where the symbol is impossible.
  const auto degen = bayes_update(FiniteDistribution::point_mass(2, 3), 2, like);
  CHECK_FALSE(degen.has_value());
}

TEST_CASE("filter_update composes pushforward and Bayes update") {
  const LikelihoodTable like(example3_q());
  const FiniteDistribution pi({0.2, 0.5, 0.3});

  // Identity transition: plain Bayes update.
  const auto composed = filter_update(pi, 1, StochasticMatrix::identity(3), like);
  const auto direct = bayes_update(apply_kernel(StochasticMatrix::identity(3), pi), 1, like);
  REQUIRE(composed.has_value());
  REQUIRE(direct.has_value());
  CHECK(tv_distance(*composed, *direct) == 0.0);
  const auto plain = bayes_update(pi, 1, like);
  CHECK(tv_distance(*composed, *plain) <= 1e-15);

  // Identical transition rows erase the prior.
  const StochasticMatrix collapse(3, 3, {0.6, 0.3, 0.1, 0.6, 0.3, 0.1, 0.6, 0.3, 0.1});
  const auto a = filter_update(FiniteDistribution({0.9, 0.05, 0.05}), 0, collapse, like);
  const auto b = filter_update(FiniteDistribution({0.1, 0.1, 0.8}), 0, collapse, like);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(tv_distance(*a, *b) <= 1e-14);
}

TEST_CASE("filter_update two-state value against joint conditioning") {
  // P(X_1 | Y_1 = 0) with X_0 ~ (" .5 .5"), computed by hand from the joint:
  // pushforward (0.55, 0.45), likelihood column (0.8, 0.3),
  // posterior = (0.44, 0.135)/0.575.
  const StochasticMatrix t(2, 2, {0.9, 0.1, 0.2, 0.8});
  const LikelihoodTable like(StochasticMatrix(2, 2, {0.8, 0.2, 0.3, 0.7}));
  const auto post = filter_update(FiniteDistribution({0.5, 0.5}), 0, t, like);
  REQUIRE(post.has_value());
  CHECK((*post)[0] == doctest::Approx(0.44 / 0.575).epsilon(1e-13));
  CHECK((*post)[1] == doctest::Approx(0.135 / 0.575).epsilon(1e-13));
}

TEST_CASE("composition law holds bit for bit on random models") {
  TestRng rng(301);
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = 2 + rng.index(3);
    const std::size_t m = 2 + rng.index(3);
    const auto t = testutil::random_stochastic(rng, n, n, 0.2);
    const LikelihoodTable like(testutil::random_stochastic(rng, n, m, 0.2));
    const auto pi = testutil::random_distribution(rng, n, 0.2);
    const std::size_t y = rng.index(m);
    const auto lhs = filter_update(pi, y, t, like);
    const auto rhs = bayes_update(apply_kernel(t, pi), y, like);
    CHECK(lhs.has_value() == rhs.has_value());
    if (lhs && rhs) CHECK(tv_distance(*lhs, *rhs) == 0.0);
  }
}

TEST_CASE("filter_update_controlled") {
  const LikelihoodTable like(StochasticMatrix(2, 2, {0.8, 0.2, 0.3, 0.7}));
  ActionKernels kernels;
  kernels.emplace("drift", StochasticMatrix(2, 2, {0.9, 0.1, 0.2, 0.8}));
  kernels.emplace("reset", StochasticMatrix(2, 2, {0.5, 0.5, 0.5, 0.5}));

  const FiniteDistribution pi({0.7, 0.3});
  const auto via_action = filter_update_controlled(pi, "drift", 0, kernels, like);
  const auto direct = filter_update(pi, 0, kernels.at("drift"), like);
  REQUIRE(via_action.has_value());
  CHECK(tv_distance(*via_action, *direct) == 0.0);

  // Identical-row action: output ignores the prior.
  const auto r1 = filter_update_controlled(FiniteDistribution({0.9, 0.1}), "reset", 1, kernels, like);
  const auto r2 = filter_update_controlled(FiniteDistribution({0.2, 0.8}), "reset", 1, kernels, like);
  CHECK(tv_distance(*r1, *r2) <= 1e-15);

  // Distinct kernels produce distinct posteriors for the same input.
  const auto d1 = filter_update_controlled(pi, "drift", 0, kernels, like);
  const auto d2 = filter_update_controlled(pi, "reset", 0, kernels, like);
  CHECK(tv_distance(*d1, *d2) > 1e-3);

  CHECK_THROWS_AS(filter_update_controlled(pi, "warp", 0, kernels, like), ContractViolation);
}

TEST_CASE("run_filter basics") {
  const LikelihoodTable flat(StochasticMatrix(2, 2, {0.5, 0.5, 0.5, 0.5}));
  const FiniteDistribution prior({0.3, 0.7});

  // Single observation: the trajectory is just the time-0 Bayes update.
  const std::size_t one_obs[] = {1};
  const auto single = run_filter(prior, one_obs, StochasticMatrix::identity(2), flat);
  REQUIRE(single.states.size() == 1);
  CHECK(tv_distance(single.states[0], *bayes_update(prior, 1, flat)) == 0.0);

  // Uninformative sensor + identity dynamics: the prior never moves.
  const std::size_t obs[] = {0, 1, 0, 0, 1};
  const auto traj = run_filter(prior, obs, StochasticMatrix::identity(2), flat);
  REQUIRE(traj.states.size() == 5);
  CHECK_FALSE(traj.degenerate());
  for (const auto& s : traj.states) CHECK(tv_distance(s, prior) <= 1e-13);

  CHECK_THROWS_AS(run_filter(prior, std::span<const std::size_t>{},
                             StochasticMatrix::identity(2), flat),
                  ContractViolation);
}

TEST_CASE("run_filter truncates on a degenerate step") {
  // Symbol 1 is impossible from every state reachable after the first step.
  const StochasticMatrix t(2, 2, {1.0, 0.0, 1.0, 0.0});
  const LikelihoodTable like(StochasticMatrix(2, 2, {1.0, 0.0, 0.0, 1.0}));
  const FiniteDistribution prior({0.5, 0.5});
  const std::size_t obs[] = {1, 1};  // second symbol cannot be produced
  const auto traj = run_filter(prior, obs, t, like);
  CHECK(traj.degenerate());
  CHECK(traj.degenerate_step == 1);
  CHECK(traj.states.size() == 1);
  CHECK(traj.observations.size() == 2);
}

TEST_CASE("deterministic invertible observation merges priors in one step") {
  const StochasticMatrix t(3, 3,
                           {0.2, 0.5, 0.3,  //
                            0.4, 0.4, 0.2,  //
                            0.1, 0.6, 0.3});
  const LikelihoodTable direct(StochasticMatrix::identity(3));
  TestRng rng(302);
  for (int it = 0; it < 100; ++it) {
    const auto mu = testutil::random_distribution(rng, 3);
    const auto nu = testutil::random_distribution(rng, 3);
    const std::size_t y = rng.index(3);
    const auto a = filter_update(mu, y, t, direct);
    const auto b = filter_update(nu, y, t, direct);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(tv_distance(*a, *b) <= 1e-12);
    // The posterior is the point mass the observed symbol identifies.
    CHECK((*a)[y] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("full-support models never hit the degenerate branch") {
  TestRng rng(303);
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = 2 + rng.index(3);
    const std::size_t m = 2 + rng.index(3);
    const auto t = testutil::random_stochastic(rng, n, n, 0.0);
    const auto q = testutil::random_stochastic(rng, n, m, 0.0);
    const LikelihoodTable like(q);
    const auto prior = testutil::random_distribution(rng, n, 0.0);
    std::vector<std::size_t> obs(4);
    for (auto& y : obs) y = rng.index(m);
    const auto traj = run_filter(prior, obs, t, like);
    CHECK_FALSE(traj.degenerate());
  }
}

TEST_CASE("run_filter matches exhaustive joint conditioning") {
  TestRng rng(304);
  for (int it = 0; it < 60; ++it) {
    const std::size_t n = 2 + rng.index(3);  // up to 4 states
    const std::size_t m = 2 + rng.index(2);  // up to 3 symbols
    const auto t = testutil::random_stochastic(rng, n, n, 0.2);
    const auto q = testutil::random_stochastic(rng, n, m, 0.2);
    const auto prior = testutil::random_distribution(rng, n, 0.2);
    const std::size_t horizon = 1 + rng.index(4);
    std::vector<std::size_t> obs(horizon + 1);
    for (auto& y : obs) y = rng.index(m);

    const auto exact = testutil::exact_filter_enumeration(t, q, prior, obs);
    const auto traj = run_filter(prior, obs, t, LikelihoodTable(q));
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      REQUIRE(exact[k].has_value());
      CHECK(tv_distance(traj.states[k], *exact[k]) <= 1e-10);
    }
    if (traj.degenerate()) {
      CHECK_FALSE(exact[*traj.degenerate_step].has_value());
    }
  }
}

TEST_CASE("run_filter_controlled") {
  ActionKernels kernels;
  kernels.emplace("a", StochasticMatrix(2, 2, {0.9, 0.1, 0.2, 0.8}));
  kernels.emplace("b", StochasticMatrix(2, 2, {0.5, 0.5, 0.5, 0.5}));
  const LikelihoodTable like(StochasticMatrix(2, 2, {0.8, 0.2, 0.3, 0.7}));
  const FiniteDistribution prior({0.6, 0.4});
  const std::size_t obs[] = {0, 1, 1};
  const std::string policy[] = {"a", "b"};
  const auto traj = run_filter_controlled(prior, obs, kernels, policy, like);
  REQUIRE(traj.states.size() == 3);

  // Same steps spelled out by hand.
  auto expect = bayes_update(prior, 0, like);
  expect = filter_update(*expect, 1, kernels.at("a"), like);
  expect = filter_update(*expect, 1, kernels.at("b"), like);
  CHECK(tv_distance(traj.states[2], *expect) == 0.0);

  const std::string bad_policy[] = {"a"};
  CHECK_THROWS_AS(run_filter_controlled(prior, obs, kernels, bad_policy, like),
                  ContractViolation);
}

TEST_CASE("grid bayes update and filter step") {
  // Grid covers bound + ~6 sigma of the transition kernel used below.
  const GridSpec grid{-8.5, 8.5, 340};
  const double h = grid.cell_width();
  std::vector<double> v(grid.cells);
  double mass = 0.0;
  for (std::size_t i = 0; i < grid.cells; ++i) {
    v[i] = normal_pdf(grid.cell_center(i), 0.0, 1.0);
    mass += v[i] * h;
  }
  for (double& x : v) x /= mass;
  const GridDensity prior(grid.lo, grid.hi, std::move(v));

  const Gaussian1DKernel g_kernel(MeanFunction(AffineClipped{1.0, 0.0, 1.0}), 0.9);
  const GridLikelihood like(g_kernel);

  const double y = 0.8;
  CHECK(normalizer(prior, y, like) > 0.0);
  const auto post = bayes_update(prior, y, like);
  REQUIRE(post.has_value());
  // Posterior tilts toward the observation.
  double mean = 0.0;
  for (std::size_t i = 0; i < post->cells(); ++i) {
    mean += post->cell_center(i) * post->values()[i] * h;
  }
  CHECK(mean > 0.05);

  const Gaussian1DKernel f_kernel(MeanFunction(TanhScaled{1.0, 1.0}), 1.2);
  const GridTransition trans(f_kernel, grid);
  double defect = 0.0;
  const auto next = filter_update(prior, y, trans, like, &defect);
  REQUIRE(next.has_value());
  CHECK(defect <= 1e-6);

  const double obs[] = {0.8, -0.2, 0.1};
  const auto traj = run_filter(prior, obs, trans, like);
  REQUIRE(traj.states.size() == 3);
  CHECK(traj.mass_defects.size() == 2);
  CHECK_FALSE(traj.degenerate());
}
