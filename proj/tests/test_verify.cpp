#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "maxentos/verify.hpp"
#include "oracles.hpp"

using namespace maxentos;

namespace {

Budget small_budget() {
  Budget b;
  b.mc_n = 20000;
  b.quad_resolution_2d = 128;
  b.quad_resolution_3d = 48;
  b.ks_n = 4000;
  return b;
}

}  // namespace

TEST(Verify, QuadratureOfKnownIntegrals) {
  // int_{0 < x < y < 1} 6 x dx dy = 1 and its entropy by the 1-D oracle.
  auto f = [](std::span<const double> x) { return 6.0 * x[0]; };
  const auto dom = domains::sorted_simplex(multidiagonal_of_iid_uniform(2));
  EXPECT_NEAR(quad_integral(f, dom, 128) / 2.0, 1.0, 1e-12);  // domain multiplicity is 2!
  const double ref = oracle::graded([](double x) { return -6 * x * std::log(6 * x) * (1 - x); }, 0, 1);
  EXPECT_NEAR(quad_entropy(f, dom, 128) / 2.0, ref, 1e-10);
  EXPECT_THROW(quad_integral(f, domains::unit_cube(4), 8), DimensionTooLarge);
}

TEST(Verify, McEstimatorsAndErrors) {
  std::vector<double> y(1000);
  std::iota(y.begin(), y.end(), 0.0);
  const McEstimate m = jackknife_mean(y);
  EXPECT_DOUBLE_EQ(m.estimate, 499.5);
  // For the mean the jackknife error is the usual s / sqrt(n).
  double ss = 0;
  for (double v : y) ss += (v - 499.5) * (v - 499.5);
  EXPECT_NEAR(m.std_error, std::sqrt(ss / 999.0 / 1000.0), 1e-9);
  EXPECT_THROW(jackknife_mean({}), EmptySample);
  EXPECT_THROW(ks_distance({}, MarginalCdf::uniform(0, 1)), EmptySample);
  const MaxEntModel model(MarginalVector({MarginalCdf::exponential(2), MarginalCdf::exponential(1)}));
  EXPECT_THROW(mc_entropy(model, 0, 0), EmptySample);
  const MaxEntModel uu(MarginalVector({MarginalCdf::uniform(0, 1), MarginalCdf::uniform(0, 1)}));
  EXPECT_THROW(mc_entropy(uu, 10, 0), Degenerate);
}

TEST(Verify, KsDistanceMatchesOracle) {
  std::mt19937_64 rng(9);
  std::vector<double> x(500);
  for (double& v : x) v = std::exponential_distribution<double>(1.5)(rng);
  const auto F = MarginalCdf::exponential(1.5);
  EXPECT_DOUBLE_EQ(ks_distance(x, F), oracle::ks(x, [&](double t) { return F.cdf(t); }));
}

TEST(Verify, McEntropyAgreesWithClosedForm) {
  const MaxEntModel model(MarginalVector({MarginalCdf::beta_1_k(2), MarginalCdf::uniform(0, 1)}));
  const McEstimate m = mc_entropy(model, 50000, 1);
  EXPECT_NEAR(m.estimate, oracle::beta_entropy(2), 3 * m.std_error);
}

TEST(Verify, NormalizationByJacobian) {
  const MaxEntModel model(MarginalVector({MarginalCdf::exponential(3), MarginalCdf::exponential(2), MarginalCdf::exponential(1)}));
  const McEstimate m = mc_normalization(model.chain(), [&](std::span<const double> x) { return model.density(x); }, 5000, 0);
  EXPECT_NEAR(m.estimate, 1.0, 1e-4);
  // A wrong density is detected.
  const McEstimate w = mc_normalization(model.chain(), [&](std::span<const double> x) { return 1.1 * model.density(x); }, 5000, 0);
  EXPECT_GT(std::abs(w.estimate - 1.0), 0.05);
}

TEST(Verify, FullReportPassesOnExponentialExample) {
  const auto rep = run_full_verification(MarginalVector({MarginalCdf::exponential(2), MarginalCdf::exponential(1)}), small_budget());
  EXPECT_TRUE(rep.all_passed()) << rep.to_text();
  EXPECT_EQ(rep.verdict, "ok");
  ASSERT_NE(rep.find("j_transport"), nullptr);
  const auto j = rep.to_json();
  EXPECT_TRUE(j["all_passed"].get<bool>());
  EXPECT_EQ(j["mc_settings"]["n"].get<std::size_t>(), 20000u);
  EXPECT_FALSE(j["checks"].empty());
}

TEST(Verify, FullReportFlagsDegenerateInput) {
  const auto rep = run_full_verification(MarginalVector({MarginalCdf::uniform(0, 1), MarginalCdf::uniform(0, 1)}), small_budget());
  EXPECT_FALSE(rep.all_passed());
  EXPECT_EQ(rep.verdict, "j_infinite");
  // Infinite values are written as strings.
  EXPECT_EQ(rep.to_json()["checks"][0]["name"], "stochastic_order");
}

TEST(Verify, MultidiagonalReport) {
  const auto rep = run_multidiagonal_verification(multidiagonal_of_iid_uniform(3), small_budget());
  EXPECT_TRUE(rep.all_passed()) << rep.to_text();
  const auto bad = run_multidiagonal_verification(Multidiagonal({MarginalCdf::uniform(0, 1), MarginalCdf::uniform(0, 1)}), small_budget());
  EXPECT_FALSE(bad.all_passed());
  EXPECT_EQ(bad.verdict, "not_D0");
}
