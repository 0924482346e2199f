#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "maxentos/joint.hpp"
#include "oracles.hpp"

using namespace maxentos;

namespace {

MarginalVector exponentials(const std::vector<double>& rates) {
  std::vector<MarginalCdf> m;
  for (double r : rates) m.push_back(MarginalCdf::exponential(r));
  return MarginalVector(m);
}

MarginalVector beta_example(int d) {
  std::vector<MarginalCdf> m;
  for (int i = 1; i <= d; ++i) m.push_back(i == d ? MarginalCdf::uniform(0, 1) : MarginalCdf::beta_1_k(d - i + 1));
  return MarginalVector(m);
}

std::vector<double> sorted_point(std::mt19937_64& rng, std::size_t d, double scale) {
  std::vector<double> x(d);
  for (double& v : x) v = scale * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::sort(x.begin(), x.end());
  return x;
}

}  // namespace

TEST(Joint, ExponentialDensityMatchesClosedForm) {
  for (const auto& rates : {std::vector<double>{3, 2, 1}, std::vector<double>{2.5, 0.7}, std::vector<double>{5, 3, 2.2, 0.4}}) {
    const MaxEntModel m(exponentials(rates));
    std::mt19937_64 rng(rates.size());
    for (int r = 0; r < 200; ++r) {
      const auto x = sorted_point(rng, rates.size(), 3.0);
      const double ref = oracle::exponential_density(rates, x);
      ASSERT_NEAR(m.density(x) / ref, 1.0, 1e-10);
    }
  }
}

TEST(Joint, BetaDensityMatchesClosedForm) {
  for (int d : {2, 3, 5}) {
    const MaxEntModel m(beta_example(d));
    std::mt19937_64 rng(d);
    for (int r = 0; r < 200; ++r) {
      const auto x = sorted_point(rng, d, 1.0);
      ASSERT_NEAR(m.density(x) / oracle::beta_density(x), 1.0, 1e-10);
    }
  }
  const double p[] = {0.5, 0.8};
  EXPECT_NEAR(MaxEntModel(beta_example(2)).density(p), 1.5625, 1e-14);
}

TEST(Joint, OffSupportIsZero) {
  const MaxEntModel m(exponentials({3, 2, 1}));
  const double unsorted[] = {0.5, 0.2, 0.9}, negative[] = {-0.1, 0.2, 0.3};
  EXPECT_EQ(m.density(unsorted), 0.0);
  EXPECT_EQ(m.density(negative), 0.0);
  EXPECT_EQ(m.log_density(unsorted), -kInf);
}

TEST(Joint, ClosedEntropy) {
  for (int d : {2, 3, 5}) EXPECT_NEAR(joint_entropy_closed(MaxEntModel(beta_example(d))), oracle::beta_entropy(d), 1e-8);
  // H = d - 1 + sum_i (1 - log lambda_i) - J with J = 4.5 for rates (3, 2, 1).
  const double sumH = 3 - std::log(6.0);
  EXPECT_NEAR(joint_entropy_closed(MaxEntModel(exponentials({3, 2, 1}))), 2 + sumH - 4.5, 1e-8);
  EXPECT_EQ(joint_entropy_closed(MaxEntModel(MarginalVector({MarginalCdf::uniform(0, 1)}))), 0.0);
}

TEST(Joint, HazardAgainstOracle) {
  const MaxEntModel m(exponentials({2, 1}));
  // l_2(t) = e^{-t} / (e^{-t} - e^{-2t}) = 1 / (1 - e^{-t}).
  EXPECT_NEAR(m.hazard(2, 0.4), 1 / (1 - std::exp(-0.4)), 1e-14);
  // Antiderivative log(e^t - 1).
  const double ref = std::log(std::expm1(1.7)) - std::log(std::expm1(0.3));
  EXPECT_NEAR(m.integrated_hazard(2, 0.3, 1.7), ref, 1e-10);
  EXPECT_THROW(m.hazard(1, 0.3), InvalidInput);
}

TEST(Joint, DegeneracyVerdicts) {
  const MaxEntModel uu(MarginalVector({MarginalCdf::uniform(0, 1), MarginalCdf::uniform(0, 1)}));
  EXPECT_EQ(uu.degeneracy().verdict, Verdict::j_infinite);
  EXPECT_FALSE(uu.in_F0());
  EXPECT_EQ(joint_entropy_closed(uu), -kInf);
  const double x[] = {0.2, 0.4};
  EXPECT_THROW(uu.density(x), Degenerate);
  EXPECT_THROW(uu.sample(5, 0), Degenerate);

  const MaxEntModel jump(MarginalVector({MarginalCdf::piecewise_linear({{0, 0}, {1, 1}}, false), MarginalCdf::uniform(0, 2)}));
  EXPECT_EQ(jump.degeneracy().verdict, Verdict::not_F0);

  const MaxEntModel ok(exponentials({2, 1}));
  EXPECT_EQ(ok.degeneracy().verdict, Verdict::ok);
  EXPECT_TRUE(ok.in_F0());

  EXPECT_THROW(MaxEntModel(exponentials({1, 2})), InvalidInput);
}

TEST(Joint, SamplingIsDeterministicAndSorted) {
  const MaxEntModel m(exponentials({3, 2, 1}));
  const auto a = m.sample(9000, 42);
  const auto b = m.sample(9000, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, m.sample(9000, 43));
  for (std::size_t r = 0; r < 9000; ++r) {
    ASSERT_LE(a[3 * r], a[3 * r + 1]);
    ASSERT_LE(a[3 * r + 1], a[3 * r + 2]);
  }
  // Streams are per block, so the thread count does not change the draws.
  ::setenv("MAXENTOS_THREADS", "1", 1);
  const auto one = m.sample(9000, 42);
  ::setenv("MAXENTOS_THREADS", "3", 1);
  const auto three = m.sample(9000, 42);
  ::unsetenv("MAXENTOS_THREADS");
  EXPECT_EQ(one, a);
  EXPECT_EQ(three, a);
}

TEST(Joint, SampleMarginalsPassKs) {
  const auto F = beta_example(2);
  const MaxEntModel m(F);
  const std::size_t n = 10000;
  const auto rows = m.sample(n, 5);
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = rows[r * 2 + i];
    EXPECT_LT(oracle::ks(col, [&](double t) { return F.margin(i + 1).cdf(t); }), 1.63 / std::sqrt(double(n)));
  }
}
