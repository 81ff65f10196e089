// Walks on the infinite parent groups: values are frozen from exact-fraction
// convolutions over the group elements themselves (see tests/support), which
// share no code with the radial and ball models under test.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>

#include "doctest.h"
#include "roelab/common.hpp"
#include "roelab/walks.hpp"

using namespace roelab;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

MeasureSpec nonlazy() {
  MeasureSpec spec;
  spec.laziness = 0.0;
  return spec;
}
}  // namespace

TEST_CASE("free-rank-two parent: delta norms match the exact convolution") {
  const ParentWalk walk(Family::sl2, 26, nonlazy());
  CHECK(walk.coordinate_count() == 27);
  CHECK(walk.delta_norm(0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(walk.delta_norm(1, 2.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(walk.delta_norm(4, 2.0) == doctest::Approx(1.786655722817e-01).epsilon(1e-10));
  CHECK(walk.delta_norm(6, 2.0) == doctest::Approx(1.079068420730e-01).epsilon(1e-10));
  CHECK(walk.delta_norm(24, 2.0) == doctest::Approx(3.449287996591e-03).epsilon(1e-10));
  CHECK(walk.delta_norm(4, 4.0) == doctest::Approx(1.143660185362e-01).epsilon(1e-10));

  const ParentWalk lazy(Family::sl2, 26);  // default spec: laziness one half
  CHECK(lazy.laziness() == 0.5);
  CHECK(lazy.delta_norm(1, 2.0) == doctest::Approx(5.590169943749e-01).epsilon(1e-10));
  CHECK(lazy.delta_norm(4, 2.0) == doctest::Approx(2.597633304351e-01).epsilon(1e-10));
  CHECK(lazy.delta_norm(6, 2.0) == doctest::Approx(1.855626359946e-01).epsilon(1e-10));
  CHECK(lazy.delta_norm(16, 2.0) == doctest::Approx(5.4061543755e-02).epsilon(1e-9));
  CHECK(lazy.delta_norm(4, 2.0) / lazy.delta_norm(16, 2.0) ==
        doctest::Approx(4.804955840950).epsilon(1e-9));
}

TEST_CASE("free-rank-two parent: growth estimators") {
  const ParentWalk walk(Family::sl2, 26, nonlazy());
  const double limit = std::sqrt(3.0) / 2.0;  // spectral radius of the walk
  CHECK(walk.step_ratio(24) == doctest::Approx(0.841808444343).epsilon(1e-10));
  CHECK(walk.step_ratio(25) == doctest::Approx(0.842697244047).epsilon(1e-10));
  CHECK(walk.nth_root(24) == doctest::Approx(0.789596826264).epsilon(1e-10));
  // the consecutive-norm ratio sits within 5% of the limit at n = 24; the
  // literal n-th root does not (its polynomial prefactor decays too slowly),
  // which is why the ratio is the growth estimate
  CHECK(std::abs(walk.step_ratio(24) - limit) / limit < 0.05);
  CHECK(std::abs(walk.nth_root(24) - limit) / limit > 0.05);

  const WalkGrowth growth = walk_growth(Family::sl2, 24, 26, nonlazy());
  CHECK(growth.steps == 24);
  CHECK(growth.ball_radius == 26);
  CHECK(growth.growth == doctest::Approx(0.841808444343).epsilon(1e-10));
  CHECK(growth.nth_root == doctest::Approx(0.789596826264).epsilon(1e-10));
  CHECK(growth.ball_eigenvalue == doctest::Approx(0.86094068).epsilon(2e-8));
}

TEST_CASE("free-rank-two parent: ball eigenvalues increase toward the limit") {
  const double limit = std::sqrt(3.0) / 2.0;
  const double lazy_limit = 0.5 + 0.5 * limit;
  double prev = 0.0;
  double prev_lazy = 0.0;
  const double expected[] = {0.83001490, 0.85414900, 0.86094068};
  const double expected_lazy[] = {0.91500745, 0.92707450, 0.93047034};
  const std::size_t radii[] = {8, 16, 26};
  for (int i = 0; i < 3; ++i) {
    const double top = ParentWalk(Family::sl2, radii[i], nonlazy()).ball_top_eigenvalue();
    const double top_lazy = ParentWalk(Family::sl2, radii[i]).ball_top_eigenvalue();
    CHECK(top == doctest::Approx(expected[i]).epsilon(2e-8));
    CHECK(top_lazy == doctest::Approx(expected_lazy[i]).epsilon(2e-8));
    CHECK(top > prev);
    CHECK(top < limit);
    CHECK(top_lazy > prev_lazy);
    CHECK(top_lazy < lazy_limit);
    CHECK(top_lazy == doctest::Approx(0.5 + 0.5 * top).epsilon(1e-12));
    prev = top;
    prev_lazy = top_lazy;
  }
}

TEST_CASE("free-rank-two parent: safe-core local ratios") {
  const ParentWalk lazy(Family::sl2, 26);
  CHECK(lazy.local_ratio(4, 2.0) == doctest::Approx(0.747293210052).epsilon(1e-10));
  CHECK(lazy.local_ratio(16, 2.0) == doctest::Approx(0.278348227952).epsilon(1e-10));
  CHECK(lazy.local_ratio(24, 2.0) == doctest::Approx(0.066541393644).epsilon(1e-10));
  CHECK(lazy.local_ratio(4, 2.0) / lazy.local_ratio(16, 2.0) ==
        doctest::Approx(2.684742114405).epsilon(1e-9));

  // mass transport: the localized 1-norm and sup-norm ratios are exactly one
  // (columns are sub-distributions that stay inside the window)
  CHECK(lazy.local_ratio(4, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(lazy.local_ratio(4, kInf) == doctest::Approx(1.0).epsilon(1e-13));

  // intermediate exponents: achieved lower bounds, deterministic, sane
  const double r2 = lazy.local_ratio(4, 2.0);
  for (double p : {1.5, 3.0}) {
    const double r = lazy.local_ratio(4, p);
    CHECK(r == lazy.local_ratio(4, p));  // bitwise repeatable
    CHECK(r <= 1.0 + 1e-12);
    CHECK(r > 0.6 * r2);
  }
}

TEST_CASE("integer parent: exact binomial norms and the laziness identity") {
  const ParentWalk walk(Family::cyclic, 26, nonlazy());
  CHECK(walk.coordinate_count() == 27);
  CHECK(walk.delta_norm(1, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(walk.delta_norm(3, 2.0) == doctest::Approx(std::sqrt(20.0 / 64.0)).epsilon(1e-14));
  CHECK(walk.delta_norm(4, 2.0) == doctest::Approx(5.229125165838e-01).epsilon(1e-10));
  CHECK(walk.delta_norm(8, 2.0) == doctest::Approx(4.431485250279e-01).epsilon(1e-10));
  CHECK(walk.delta_norm(24, 2.0) == doctest::Approx(3.384767388071e-01).epsilon(1e-10));
  CHECK(walk.delta_norm(4, 4.0) == doctest::Approx(4.076614651945e-01).epsilon(1e-10));
  CHECK(walk.step_ratio(24) == doctest::Approx(0.989528507253).epsilon(1e-10));
  CHECK(walk.nth_root(24) == doctest::Approx(0.955866044903).epsilon(1e-10));

  // half-lazy n steps on the line distribute like 2n plain steps
  const ParentWalk lazy(Family::cyclic, 26);
  CHECK(lazy.delta_norm(4, 2.0) == doctest::Approx(4.431485250279e-01).epsilon(1e-10));
  CHECK(lazy.delta_norm(4, 2.0) == doctest::Approx(walk.delta_norm(8, 2.0)).epsilon(1e-13));
  CHECK(lazy.delta_norm(12, 2.0) == doctest::Approx(walk.delta_norm(24, 2.0)).epsilon(1e-13));
  CHECK(lazy.delta_norm(24, 2.0) == doctest::Approx(2.849946747493e-01).epsilon(1e-10));
  CHECK(lazy.step_ratio(24) == doctest::Approx(0.989472511525).epsilon(1e-10));
}

TEST_CASE("integer parent: ball eigenvalue has a closed form") {
  for (std::size_t radius : {8, 26}) {
    const double closed = std::cos(M_PI / double(2 * radius + 2));
    CHECK(ParentWalk(Family::cyclic, radius, nonlazy()).ball_top_eigenvalue() ==
          doctest::Approx(closed).epsilon(1e-12));
    CHECK(ParentWalk(Family::cyclic, radius).ball_top_eigenvalue() ==
          doctest::Approx(0.5 + 0.5 * closed).epsilon(1e-12));
  }
  const ParentWalk lazy(Family::cyclic, 26);
  CHECK(lazy.local_ratio(4, 2.0) == doctest::Approx(0.995615299046).epsilon(1e-10));
}

TEST_CASE("infinite dihedral parent: explicit ball matches the convolution") {
  const ParentWalk walk(Family::dihedral, 26, nonlazy());
  CHECK(walk.coordinate_count() == 104);  // word balls have four times the radius
  CHECK(walk.delta_norm(1, 2.0) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-14));
  CHECK(walk.delta_norm(4, 2.0) == doctest::Approx(4.107606113485e-01).epsilon(1e-10));
  CHECK(walk.delta_norm(8, 2.0) == doctest::Approx(3.474487351093e-01).epsilon(1e-10));
  CHECK(walk.delta_norm(4, 4.0) == doctest::Approx(2.844732576359e-01).epsilon(1e-10));
  CHECK(walk.step_ratio(8) == doctest::Approx(0.967986179085).epsilon(1e-10));

  const ParentWalk lazy(Family::dihedral, 26);
  CHECK(lazy.delta_norm(4, 2.0) == doctest::Approx(3.554126593640e-01).epsilon(1e-10));
  CHECK(lazy.delta_norm(8, 2.0) == doctest::Approx(2.941570175245e-01).epsilon(1e-10));
  CHECK(lazy.step_ratio(8) == doctest::Approx(0.966335487691).epsilon(1e-10));

  CHECK(ParentWalk(Family::dihedral, 8, nonlazy()).ball_top_eigenvalue() ==
        doctest::Approx(0.987842550615).epsilon(1e-10));
  CHECK(walk.ball_top_eigenvalue() == doctest::Approx(0.998803240859).epsilon(1e-10));
  CHECK(lazy.ball_top_eigenvalue() == doctest::Approx(0.999401620429).epsilon(1e-10));
  CHECK(lazy.local_ratio(4, 2.0) == doctest::Approx(0.996855416695).epsilon(1e-10));

  // an asymmetric flip weight is legitimate; rotation weights must pair up
  MeasureSpec heavy_flip;
  heavy_flip.laziness = 0.0;
  heavy_flip.generator_weights = {1.0, 5.0, 1.0};
  const ParentWalk skew(Family::dihedral, 8, heavy_flip);
  CHECK(skew.delta_norm(1, 2.0) == doctest::Approx(std::sqrt(27.0 / 49.0)).epsilon(1e-14));
}

TEST_CASE("walks conserve mass at every exponent one") {
  for (Family family : {Family::sl2, Family::cyclic, Family::dihedral}) {
    for (double laziness : {0.0, 0.5}) {
      MeasureSpec spec;
      spec.laziness = laziness;
      const ParentWalk walk(family, 12, spec);
      CHECK(walk.delta_norm(5, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(walk.delta_norm(12, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("walk validation: windows, weights, exponents") {
  const ParentWalk walk(Family::sl2, 26);
  CHECK_THROWS_WITH_AS(walk.delta_norm(27, 2.0), "truncation radius too small for n",
                       ValidationError);
  CHECK_THROWS_WITH_AS(walk.local_ratio(27, 2.0), "truncation radius too small for n",
                       ValidationError);
  CHECK_THROWS_AS(walk.delta_norm(4, 0.5), ValidationError);
  CHECK_THROWS_AS(walk.step_ratio(0), ValidationError);
  CHECK_THROWS_AS(ParentWalk(Family::sl2, 0), ValidationError);

  MeasureSpec bad;
  bad.laziness = 1.0;
  CHECK_THROWS_AS(ParentWalk(Family::sl2, 8, bad), ValidationError);

  MeasureSpec skew;
  skew.laziness = 0.0;
  skew.generator_weights = {1.0, 1.0, 1.0, 2.0};
  CHECK_THROWS_WITH_AS(ParentWalk(Family::sl2, 8, skew),
                       "parent walk requires uniform generator weights", ValidationError);
  skew.generator_weights = {2.0, 2.0, 2.0, 2.0};  // uniform after rescaling
  CHECK(ParentWalk(Family::sl2, 8, skew).delta_norm(1, 2.0) ==
        doctest::Approx(0.5).epsilon(1e-14));

  MeasureSpec lopsided;
  lopsided.laziness = 0.0;
  lopsided.generator_weights = {1.0, 2.0};
  CHECK_THROWS_WITH_AS(ParentWalk(Family::cyclic, 8, lopsided),
                       "generator weights must be symmetric", ValidationError);
  lopsided.generator_weights = {1.0, 5.0, 2.0};
  CHECK_THROWS_AS(ParentWalk(Family::dihedral, 8, lopsided), ValidationError);
  lopsided.generator_weights = {1.0, -1.0};
  CHECK_THROWS_AS(ParentWalk(Family::cyclic, 8, lopsided), ValidationError);
  lopsided.generator_weights = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(ParentWalk(Family::cyclic, 8, lopsided), ValidationError);
}
