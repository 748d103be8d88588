#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coagfrag/analysis.hpp"

namespace cf = coagfrag;

namespace {

const cf::FragmentationKernelSpec kBinary = cf::FragmentationKernelSpec::binary();

// Parameterisations of the six reference scenarios (laws + kernels).
struct Params {
  cf::FragmentationKernelSpec frag;
  cf::CoagulationKernelSpec coag;
  cf::RateLaws laws;
};

Params scenario(int id) {
  const auto brownian = cf::CoagulationKernelSpec::brownian_like(5e-3);
  const auto product = cf::CoagulationKernelSpec::product(5e-3, 1.0);
  const auto powerlaw = cf::FragmentationKernelSpec::powerlaw(0.1);
  switch (id) {
    case 1: return {kBinary, brownian, {.a = 1, .frag_exp = 1}};
    case 2: return {powerlaw, product, {.a = 1, .frag_exp = 2.5}};
    case 3: return {kBinary, brownian, {.g = 1, .growth_exp = 1, .d = 1, .decay_exp = 0, .s = 1, .sed_exp = 0, .a = 1, .frag_exp = 1}};
    case 4: return {powerlaw, product, {.g = 1, .growth_exp = 2.5, .d = 1, .decay_exp = 0, .s = 1, .sed_exp = 0, .a = 1, .frag_exp = 2.5}};
    case 5: return {kBinary, brownian, {.g = 0, .d = 1, .decay_exp = 0, .s = 1, .sed_exp = 1, .a = 1, .frag_exp = 1}};
    default: return {powerlaw, product, {.g = 0, .d = 1, .decay_exp = 0, .s = 1, .sed_exp = 2.5, .a = 1, .frag_exp = 2.5}};
  }
}

}  // namespace

TEST(DeltaP, BinaryValues) {
  EXPECT_DOUBLE_EQ(cf::delta_p(kBinary, 2, 2.0), 2.0);  // 4 - 2*1
  EXPECT_DOUBLE_EQ(cf::delta_p(kBinary, 3, 2.0), 4.0);  // 9 - (2/2)(1 + 4)
  EXPECT_THROW(cf::delta_p(kBinary, 1, 2.0), std::out_of_range);
}

TEST(DeltaP, FirstMomentDefectVanishes) {
  for (const auto& frag : {kBinary, cf::FragmentationKernelSpec::powerlaw(0.1), cf::FragmentationKernelSpec::powerlaw(-0.7)}) {
    for (cf::SizeIndex i = 2; i <= 500; ++i) {
      ASSERT_LE(std::abs(cf::delta_p(frag, i, 1.0)), 1e-9 * static_cast<double>(i));
    }
  }
}

TEST(Phi, Values) {
  EXPECT_DOUBLE_EQ(cf::phi(kBinary, 2, 2.0), 0.5);
  const double v = cf::phi(kBinary, 50, 1.5);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
  EXPECT_GT(cf::phi(kBinary, 10, 2.0), cf::phi(kBinary, 10, 1.5));
  EXPECT_THROW(cf::phi(kBinary, 10, 1.0), std::domain_error);
}

TEST(Phi, InUnitIntervalIncreasingAndConcave) {
  for (const auto& frag : {kBinary, cf::FragmentationKernelSpec::powerlaw(0.1), cf::FragmentationKernelSpec::powerlaw(2.0)}) {
    for (cf::SizeIndex i = 2; i <= 500; i += (i < 20 ? 1 : 7)) {
      double prev = 0.0;
      for (double p : {1.1, 1.5, 2.0, 3.0}) {
        const double v = cf::phi(frag, i, p);
        ASSERT_GT(v, 0.0);
        ASSERT_LT(v, 1.0);
        ASSERT_GT(v, prev);
        prev = v;
      }
      // Midpoint concavity on an even grid.
      for (double p = 1.1; p + 0.4 <= 4.0; p += 0.2) {
        const double mid = cf::phi(frag, i, p + 0.2);
        ASSERT_GT(mid, 0.5 * (cf::phi(frag, i, p) + cf::phi(frag, i, p + 0.4)) - 1e-15);
      }
    }
  }
}

TEST(Phi, LimitMatchesLargeSize) {
  EXPECT_NEAR(cf::phi(kBinary, 4000, 2.0), cf::phi_limit(kBinary, 2.0), 1e-3);
  const auto pl = cf::FragmentationKernelSpec::powerlaw(0.1);
  EXPECT_NEAR(cf::phi(pl, 4000, 2.0), cf::phi_limit(pl, 2.0), 1e-3);
  EXPECT_NEAR(cf::phi_limit(cf::FragmentationKernelSpec::powerlaw(0.0), 2.5), cf::phi_limit(kBinary, 2.5), 1e-12);
}

TEST(WeightedNorm, Values) {
  cf::RateLaws laws{.a = 1, .frag_exp = 1};
  EXPECT_EQ(cf::weighted_norm(Eigen::VectorXd::Zero(8), {1.0, 0.0}, laws), 0.0);

  Eigen::VectorXd block = Eigen::VectorXd::Zero(200);
  for (int n = 5; n <= 20; ++n) block[n - 1] = 10.0;
  EXPECT_DOUBLE_EQ(cf::weighted_norm(block, {1.0, 0.0}, laws), 2000.0);

  EXPECT_NEAR(cf::weighted_norm(Eigen::VectorXd::Unit(4, 1), {2.0, 0.5}, laws), 6.928203230275509174, 1e-14);
}

TEST(WeightedNorm, HomogeneousAndSubadditive) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> dist(0.0, 3.0);
  cf::RateLaws laws{.g = 1, .growth_exp = 1, .d = 1, .decay_exp = 0, .s = 1, .sed_exp = 0, .a = 1, .frag_exp = 1};
  const cf::NormSpec spec{1.5, 0.5};
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd u(40), v(40);
    for (int i = 0; i < 40; ++i) {
      u[i] = dist(rng);
      v[i] = dist(rng);
    }
    const double c = dist(rng);
    const double nu = cf::weighted_norm(u, spec, laws);
    ASSERT_NEAR(cf::weighted_norm(c * u, spec, laws), std::abs(c) * nu, 1e-12 * std::abs(c) * nu + 1e-300);
    ASSERT_LE(cf::weighted_norm(u + v, spec, laws), nu + cf::weighted_norm(v, spec, laws) * (1 + 1e-14));
  }
}

TEST(NormSpec, Validation) {
  EXPECT_THROW((cf::NormSpec{-1.0, 0.0}.validate()), cf::ValidationError);
  EXPECT_THROW((cf::NormSpec{1.0, 1.0}.validate()), cf::ValidationError);
  EXPECT_NO_THROW((cf::NormSpec{1.5, 0.5}.validate()));
}

TEST(CheckConditions, Example1) {
  const auto s = scenario(1);
  const auto r = cf::check_conditions(s.frag, s.coag, s.laws, 2.0, 1000);
  EXPECT_TRUE(r.frag_dominance.pass);
  EXPECT_TRUE(r.well_posed_for_p);
  EXPECT_TRUE(r.coag_bound.feasible);
  EXPECT_DOUBLE_EQ(r.coag_bound.min_weight_exp, 7.0 / 9.0);
  EXPECT_GT(r.coag_bound.kappa, 0.0);
  EXPECT_TRUE(r.omega1_bounded);
  EXPECT_EQ(r.omega1, 0.0);
  // a_i / theta_i = 1, so the liminf is phi_inf(2) = 1/3.
  EXPECT_NEAR(r.frag_dominance.asymptotic_limit, 1.0 / 3.0, 1e-15);
  EXPECT_GT(r.frag_dominance.sampled_min, 0.33);
}

TEST(CheckConditions, Example5SedimentationDominant) {
  const auto s = scenario(5);
  const auto r = cf::check_conditions(s.frag, s.coag, s.laws, 1.0, 1000);
  EXPECT_TRUE(r.sed_dominance.pass);
  EXPECT_TRUE(r.well_posed_for_p);
  EXPECT_TRUE(r.omega1_bounded);
  // Direct sweep oracle: i = 1 gives (0 - 0)/1 - 1 = -1, larger i are smaller.
  double sweep = -1e300;
  for (int i = 1; i <= 100000; ++i) {
    const double g = 0.0;
    const double d = i == 1 ? 0.0 : 1.0;
    sweep = std::max(sweep, (g - d) / i - 1.0 * i);
  }
  EXPECT_EQ(sweep, -1.0);
  EXPECT_EQ(r.omega1, sweep);
}

TEST(CheckConditions, GrowthBeyondFragmentationFails) {
  cf::RateLaws laws{.g = 1, .growth_exp = 2, .a = 1, .frag_exp = 1};
  const auto r = cf::check_conditions(kBinary, cf::CoagulationKernelSpec::brownian_like(5e-3), laws, 2.0, 500);
  EXPECT_FALSE(r.frag_dominance.pass);
  EXPECT_FALSE(r.well_posed_for_p);
  EXPECT_FALSE(r.omega1_bounded);
  EXPECT_FALSE(r.messages.empty());
}

TEST(CheckConditions, PreconditionsEnforced) {
  const auto s = scenario(1);
  EXPECT_THROW(cf::check_conditions(s.frag, s.coag, s.laws, 0.5, 1000), std::domain_error);
  EXPECT_THROW(cf::check_conditions(s.frag, s.coag, s.laws, 2.0, 99), std::domain_error);
}

TEST(CheckConditions, AllScenariosMatchRegimes) {
  for (int id = 1; id <= 6; ++id) {
    const auto s = scenario(id);
    if (id <= 4) {
      const auto r = cf::check_conditions(s.frag, s.coag, s.laws, 2.0, 1000);
      EXPECT_TRUE(r.frag_dominance.pass) << "example " << id;
      EXPECT_TRUE(r.coag_bound.feasible) << "example " << id;
    } else {
      const auto r = cf::check_conditions(s.frag, s.coag, s.laws, 1.0, 1000);
      EXPECT_TRUE(r.sed_dominance.pass) << "example " << id;
      EXPECT_EQ(r.omega1, -1.0) << "example " << id;
    }
  }
  // Product kernel against theta ~ i^2.5.
  const auto r2 = cf::check_conditions(scenario(2).frag, scenario(2).coag, scenario(2).laws, 2.0, 1000);
  EXPECT_DOUBLE_EQ(r2.coag_bound.min_weight_exp, 0.8);
  const auto r3 = cf::check_conditions(scenario(3).frag, scenario(3).coag, scenario(3).laws, 2.0, 1000);
  EXPECT_EQ(r3.omega1, 0.0);
  const auto r4 = cf::check_conditions(scenario(4).frag, scenario(4).coag, scenario(4).laws, 2.0, 1000);
  EXPECT_FALSE(r4.omega1_bounded);
}

TEST(CheckConditions, FragDominanceMonotoneInP) {
  for (int id = 1; id <= 6; ++id) {
    const auto s = scenario(id);
    bool passed = false;
    for (double p : {1.1, 1.5, 2.0, 3.0, 5.0}) {
      const bool now = cf::check_conditions(s.frag, s.coag, s.laws, p, 200).frag_dominance.pass;
      if (passed) ASSERT_TRUE(now);
      passed = passed || now;
    }
  }
}

TEST(CheckConditions, Omega1DominatesSampledRates) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> coef(0.0, 2.0), expo(-1.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    cf::RateLaws laws{coef(rng), expo(rng), coef(rng), expo(rng), coef(rng), expo(rng), coef(rng), expo(rng)};
    const auto r = cf::check_conditions(kBinary, cf::CoagulationKernelSpec::brownian_like(1e-3), laws, 1.0, 300);
    for (cf::SizeIndex i = 1; i <= 300; ++i) ASSERT_GE(r.omega1, cf::mass_growth_rate(laws, i));
  }
}
