#include <gtest/gtest.h>

#include <cmath>

#include "coagfrag/integrator.hpp"

namespace cf = coagfrag;

namespace {

cf::TruncatedSystem decay_system(cf::SizeIndex n) {
  cf::RateLaws laws;
  laws.s = 1.0;
  return {n, cf::FragmentationKernelSpec::binary(), cf::CoagulationKernelSpec::brownian_like(0.0), laws};
}

cf::TruncatedSystem example1_system(cf::SizeIndex n) {
  return {n, cf::FragmentationKernelSpec::binary(), cf::CoagulationKernelSpec::brownian_like(5e-3),
          cf::RateLaws{.a = 1, .frag_exp = 1}};
}

Eigen::VectorXd block_state(long n) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  for (long i = 5; i <= std::min<long>(20, n); ++i) u[i - 1] = 10.0;
  return u;
}

double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) d += static_cast<double>(i + 1) * std::abs(a[i] - b[i]);
  return d;
}

}  // namespace

TEST(Rk4Step, ConsistentWithRhs) {
  const auto sys = example1_system(20);
  const auto u = block_state(20);
  const double h = 1e-8;
  const Eigen::VectorXd approx = (cf::explicit_reference_step(sys, u, h) - u) / h;
  const auto exact = sys.rhs(u);
  EXPECT_LE((approx - exact).cwiseAbs().maxCoeff(), 1e-5 * exact.cwiseAbs().maxCoeff());
}

TEST(Rk4Step, FifthOrderLocalError) {
  // Scalar decay; local error ratio between h and h/2 should be near 2^5.
  const auto sys = decay_system(2);
  Eigen::VectorXd u(2);
  u << 1.0, 0.5;
  const auto local_error = [&](double h) {
    return std::abs(cf::explicit_reference_step(sys, u, h)[0] - std::exp(-h));
  };
  const double ratio = local_error(0.1) / local_error(0.05);
  EXPECT_GT(ratio, 32.0 * 0.8);
  EXPECT_LT(ratio, 32.0 * 1.2);
}

TEST(Rk4Step, ZeroStaysZero) {
  const auto sys = example1_system(10);
  EXPECT_EQ(cf::explicit_reference_step(sys, Eigen::VectorXd::Zero(10), 0.1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Integrate, ScalarDecayMatchesExponential) {
  // N = 1 is not a valid truncation, so use N = 2 with an empty second component.
  const auto sys = decay_system(2);
  Eigen::VectorXd u0(2);
  u0 << 3.0, 0.0;
  const auto cfg = cf::SolverConfig::for_interval(0.0, 1.0);
  const auto traj = cf::integrate(sys, u0, 0.0, 1.0, cfg, {1.0});
  ASSERT_TRUE(traj.ok()) << traj.message;
  ASSERT_EQ(traj.times.size(), 2u);
  EXPECT_EQ(traj.times.front(), 0.0);
  EXPECT_EQ(traj.times.back(), 1.0);
  const double exact = 3.0 * std::exp(-1.0);
  EXPECT_LE(std::abs(traj.states.back()[0] - exact) / exact, 10 * cfg.rtol);
}

TEST(Integrate, ZeroInitialStateStaysZero) {
  const auto sys = example1_system(15);
  const auto traj = cf::integrate(sys, Eigen::VectorXd::Zero(15), 0.0, 1.0, cf::SolverConfig::for_interval(0, 1),
                                  cf::uniform_grid(0.0, 1.0, 11));
  ASSERT_TRUE(traj.ok());
  ASSERT_EQ(traj.states.size(), 11u);
  for (const auto& s : traj.states) EXPECT_EQ(s.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Integrate, ImplicitMatchesExplicitReference) {
  const auto sys = example1_system(20);
  const auto u0 = block_state(20);
  const auto grid = cf::uniform_grid(0.0, 0.1, 11);
  auto ref_cfg = cf::SolverConfig::for_interval(0.0, 0.1);
  ref_cfg.method = cf::Method::explicit_reference;
  ref_cfg.h_init = 1e-5;
  const auto reference = cf::integrate(sys, u0, 0.0, 0.1, ref_cfg, grid);
  ASSERT_TRUE(reference.ok());

  double previous_error = std::numeric_limits<double>::infinity();
  for (double tol_scale : {1.0, 0.5, 0.25}) {
    auto cfg = cf::SolverConfig::for_interval(0.0, 0.1);
    cfg.rtol *= tol_scale;
    cfg.atol *= tol_scale;
    const auto traj = cf::integrate(sys, u0, 0.0, 0.1, cfg, grid);
    ASSERT_TRUE(traj.ok()) << traj.message;
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      ASSERT_EQ(traj.times[k], reference.times[k]);
      worst = std::max(worst, l1_distance(traj.states[k], reference.states[k]) / reference.moments[k][1]);
    }
    EXPECT_LE(worst, 1e-6);
    EXPECT_LE(worst, previous_error * (1.0 + 1e-3)) << "tightening tolerances increased the error";
    previous_error = worst;
  }
}

TEST(Integrate, MomentsRecomputableBitForBit) {
  const auto sys = example1_system(30);
  const auto traj = cf::integrate(sys, block_state(30), 0.0, 0.5, cf::SolverConfig::for_interval(0, 0.5),
                                  cf::uniform_grid(0.0, 0.5, 6));
  ASSERT_TRUE(traj.ok());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    for (std::size_t m = 0; m < 4; ++m) {
      ASSERT_EQ(traj.moments[k][m], cf::weighted_norm(traj.states[k], {cf::kMomentOrders[m], 0.0}, sys.laws()));
    }
    if (k > 0) ASSERT_GT(traj.times[k], traj.times[k - 1]);
  }
}

TEST(Integrate, StepLimitAbortsWithPartialTrajectory) {
  const auto sys = example1_system(20);
  auto cfg = cf::SolverConfig::for_interval(0.0, 1.0);
  cfg.max_steps = 5;
  const auto traj = cf::integrate(sys, block_state(20), 0.0, 1.0, cfg, cf::uniform_grid(0.0, 1.0, 11));
  EXPECT_FALSE(traj.ok());
  EXPECT_EQ(traj.status, cf::IntegrationStatus::max_steps_exceeded);
  EXPECT_GE(traj.times.size(), 1u);
  EXPECT_LT(traj.times.size(), 11u);
  EXPECT_FALSE(traj.message.empty());
}

TEST(Integrate, NewtonFailureReportedWhenStepCannotShrink) {
  // h_min equal to h_init and a single Newton iteration leave no room to recover
  // on this stiff start.
  const cf::TruncatedSystem sys(60, cf::FragmentationKernelSpec::powerlaw(0.1), cf::CoagulationKernelSpec::product(5e-3, 1.0),
                                cf::RateLaws{.a = 1, .frag_exp = 2.5});
  cf::SolverConfig cfg;
  cfg.h_init = 0.05;
  cfg.h_min = 0.05;
  cfg.h_max = 0.05;
  cfg.newton_max_iters = 1;
  cfg.newton_tol = 1e-12;
  const auto traj = cf::integrate(sys, block_state(60), 0.0, 1.0, cfg, {1.0});
  EXPECT_FALSE(traj.ok());
  EXPECT_TRUE(traj.status == cf::IntegrationStatus::newton_failure ||
              traj.status == cf::IntegrationStatus::step_size_underflow);
  EXPECT_EQ(traj.times.size(), 1u);
}

TEST(Integrate, RejectsBadArguments) {
  const auto sys = example1_system(10);
  const auto cfg = cf::SolverConfig::for_interval(0, 1);
  EXPECT_THROW(cf::integrate(sys, Eigen::VectorXd::Zero(10), 1.0, 1.0, cfg, {1.0}), std::invalid_argument);
  EXPECT_THROW(cf::integrate(sys, Eigen::VectorXd::Zero(9), 0.0, 1.0, cfg, {1.0}), std::invalid_argument);
  EXPECT_THROW(cf::integrate(sys, Eigen::VectorXd::Zero(10), 0.0, 1.0, cfg, {0.5, 2.0}), std::invalid_argument);
  EXPECT_THROW(cf::integrate(sys, Eigen::VectorXd::Zero(10), 0.0, 1.0, cfg, {0.5, 0.5}), std::invalid_argument);
  Eigen::VectorXd nan_state = Eigen::VectorXd::Zero(10);
  nan_state[3] = std::nan("");
  EXPECT_THROW(cf::integrate(sys, nan_state, 0.0, 1.0, cfg, {1.0}), std::invalid_argument);
  auto bad = cfg;
  bad.h_min = 1.0;
  EXPECT_THROW(cf::integrate(sys, Eigen::VectorXd::Zero(10), 0.0, 1.0, bad, {1.0}), cf::ValidationError);
}

TEST(Integrate, ConservesMassForPureCoagulationFragmentation) {
  const auto sys = example1_system(60);
  const auto traj = cf::integrate(sys, block_state(60), 0.0, 1.0, cf::SolverConfig::for_interval(0, 1),
                                  cf::uniform_grid(0.0, 1.0, 21));
  ASSERT_TRUE(traj.ok());
  for (const auto& m : traj.moments) EXPECT_NEAR(m[1], 2000.0, 2000.0 * 1e-6);
  for (const auto& s : traj.states) EXPECT_GE(s.minCoeff(), -1e-10);
}
