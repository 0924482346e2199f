#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "maxentos/marginals.hpp"
#include "oracles.hpp"

using namespace maxentos;

namespace {

MarginalVector exp21() { return MarginalVector({MarginalCdf::exponential(2), MarginalCdf::exponential(1)}); }

MarginalVector beta_example(int d) {
  std::vector<MarginalCdf> m;
  for (int i = 1; i <= d; ++i) m.push_back(i == d ? MarginalCdf::uniform(0, 1) : MarginalCdf::beta_1_k(d - i + 1));
  return MarginalVector(m);
}

}  // namespace

TEST(Cdf, FamiliesAgreeWithTextbookFormulas) {
  const auto e = MarginalCdf::exponential(2.0);
  EXPECT_NEAR(e.cdf(0.7), 1 - std::exp(-1.4), 1e-15);
  EXPECT_NEAR(e.pdf(0.7), 2 * std::exp(-1.4), 1e-15);
  EXPECT_NEAR(e.quantile(0.3), -std::log(0.7) / 2, 1e-15);
  const auto b = MarginalCdf::beta_1_k(3);
  EXPECT_NEAR(b.cdf(0.25), 1 - std::pow(0.75, 3), 1e-15);
  EXPECT_NEAR(b.pdf(0.25), 3 * 0.75 * 0.75, 1e-15);
  const auto u = MarginalCdf::uniform(-1, 3);
  EXPECT_DOUBLE_EQ(u.cdf(0.0), 0.25);
  EXPECT_DOUBLE_EQ(u.quantile(0.5), 1.0);
  const auto o = MarginalCdf::uniform_order_statistic(3, 2);
  EXPECT_NEAR(o.cdf(0.4), 3 * 0.16 * 0.6 + 0.064, 1e-14);  // P(at least 2 of 3 below 0.4)
  EXPECT_NEAR(o.pdf(0.4), 6 * 0.4 * 0.6, 1e-14);
}

TEST(Cdf, QuantileIsGeneralizedInverse) {
  // Flat between 0.4 and 0.6: the quantile of the plateau level is its left end.
  const auto p = MarginalCdf::piecewise_linear({{0, 0}, {0.4, 0.5}, {0.6, 0.5}, {1, 1}});
  EXPECT_DOUBLE_EQ(p.quantile(0.5), 0.4);
  EXPECT_DOUBLE_EQ(p.quantile(0.75), 0.8);
  const auto o = MarginalCdf::uniform_order_statistic(4, 3);
  for (double v : {1e-9, 0.1, 0.5, 0.999}) {
    const double ref = oracle::bisect([&](double t) { return o.cdf(t); }, v, 0, 1);
    EXPECT_NEAR(o.quantile(v), ref, 1e-12);
  }
}

TEST(Cdf, ClosedEntropyMatchesQuadratureOracle) {
  for (const auto& F : {MarginalCdf::exponential(3), MarginalCdf::beta_1_k(4), MarginalCdf::uniform_order_statistic(5, 2)}) {
    const auto s = F.support();
    auto integrand = [&](double t) {
      const double f = F.pdf(t);
      return f > 0 ? -f * std::log(f) : 0.0;
    };
    const double ref = std::isfinite(s.hi) ? oracle::graded(integrand, s.lo, s.hi) : oracle::graded_to_inf(integrand, s.lo);
    EXPECT_NEAR(F.entropy(), ref, 1e-9);
  }
  // Beta(1, k) entropy in closed form: -log k + (k - 1) / k.
  EXPECT_NEAR(MarginalCdf::beta_1_k(2).entropy(), -std::log(2.0) + 0.5, 1e-14);
}

TEST(Cdf, AverageQuantileInvertsTheAverage) {
  const auto G = MarginalCdf::average({MarginalCdf::exponential(3), MarginalCdf::exponential(2), MarginalCdf::exponential(1)});
  for (double u : {1e-12, 1e-3, 0.2, 0.5, 0.9, 1 - 1e-9}) {
    const double ref = oracle::bisect([&](double t) { return G.cdf(t); }, u, 0, 100);
    // cdf values carry ~1e-16 absolute error, which limits x to ~1e-16 / pdf.
    EXPECT_NEAR(G.quantile(u), ref, 1e-12 * std::max(1.0, ref) + 4e-16 / G.pdf(ref)) << u;
  }
  // Expected value frozen from the bisection oracle above.
  const auto G2 = MarginalCdf::average({MarginalCdf::exponential(2), MarginalCdf::exponential(1)});
  EXPECT_NEAR(G2.quantile(0.5), 0.48121182505960347, 1e-14);
}

TEST(Marginals, StochasticOrder) {
  EXPECT_TRUE(exp21().valid());
  const MarginalVector rev({MarginalCdf::exponential(1), MarginalCdf::exponential(2)});
  ASSERT_FALSE(rev.valid());
  EXPECT_EQ(rev.order().index, 2u);
  const double t = rev.order().witness;
  EXPECT_LT(rev.margin(1).cdf(t), rev.margin(2).cdf(t));
  EXPECT_THROW(rev.require_valid(), InvalidInput);
  // Crossing piecewise CDFs are caught on the knot grid.
  const MarginalVector cross({MarginalCdf::piecewise_linear({{0, 0}, {0.5, 0.9}, {1, 1}}),
                              MarginalCdf::piecewise_linear({{0, 0}, {0.2, 0.5}, {0.9, 0.95}, {1, 1}})});
  EXPECT_FALSE(cross.valid());
}

TEST(Marginals, PsiSets) {
  const auto F = exp21();
  ASSERT_EQ(F.psi(2).size(), 1u);
  EXPECT_EQ(F.psi(2)[0].lo, 0.0);
  EXPECT_TRUE(std::isinf(F.psi(2)[0].hi));
  // F_1 = F_2 on [0.4, 0.6] only.
  const MarginalVector pw({MarginalCdf::piecewise_linear({{0, 0}, {0.2, 0.4}, {0.4, 0.5}, {0.6, 0.7}, {0.8, 0.9}, {1, 1}}),
                           MarginalCdf::piecewise_linear({{0, 0}, {0.4, 0.5}, {0.6, 0.7}, {1, 1}})});
  ASSERT_TRUE(pw.valid());
  ASSERT_EQ(pw.psi(2).size(), 2u);
  EXPECT_NEAR(pw.psi(2)[0].hi, 0.4, 1e-15);
  EXPECT_NEAR(pw.psi(2)[1].lo, 0.6, 1e-15);
  EXPECT_FALSE(pw.psi(2).contains(0.5));
}

TEST(Marginals, SigmaMeasure) {
  EXPECT_EQ(sigma_measure(exp21()).measure, 0.0);
  const MarginalVector uu({MarginalCdf::uniform(0, 1), MarginalCdf::uniform(0, 1)});
  EXPECT_NEAR(sigma_measure(uu).measure, 1.0, 1e-15);
  EXPECT_FALSE(sigma_measure(uu).in_F0);
  // Equal on [0.4, 0.6] where F_2 rises by 0.1.
  const MarginalVector pw({MarginalCdf::piecewise_linear({{0, 0}, {0.4, 0.6}, {0.6, 0.7}, {1, 1}}),
                           MarginalCdf::piecewise_linear({{0, 0}, {0.2, 0.2}, {0.4, 0.6}, {0.6, 0.7}, {0.8, 0.8}, {1, 1}})});
  ASSERT_TRUE(pw.valid());
  EXPECT_NEAR(sigma_measure(pw).measure, 0.1, 1e-12);
  const MarginalVector jump({MarginalCdf::piecewise_linear({{0, 0}, {1, 1}}, false), MarginalCdf::uniform(0, 2)});
  EXPECT_FALSE(sigma_measure(jump).all_absolutely_continuous);
}

TEST(Marginals, SupportLF) {
  const auto F = exp21();
  const double a[] = {0.1, 0.3}, b[] = {0.3, 0.1}, c[] = {0.0, 0.2};
  EXPECT_TRUE(in_support_LF(F, a));
  EXPECT_FALSE(in_support_LF(F, b));
  EXPECT_TRUE(in_support_LF(F, c));  // closed at the ends of Psi
}

TEST(Marginals, JAgainstOracle) {
  // Oracle: int f_2 |log(F_1 - F_2)| by graded Gauss-Legendre on the half line.
  const double ref = oracle::graded_to_inf([](double t) { return std::exp(-t) * std::abs(-t + std::log(-std::expm1(-t))); }, 0);
  EXPECT_NEAR(ref, 2.0, 1e-10);
  EXPECT_NEAR(j_functional(exp21()).value, 2.0, 1e-8);
  // Beta example: J = d - 1 + sum H(F_i) - H(F_F) with the closed-form H(F_F).
  for (int d : {2, 3, 5}) {
    const auto F = beta_example(d);
    double sumH = 0;
    for (int k = 1; k <= d; ++k) sumH += -std::log(static_cast<double>(k)) + (k - 1.0) / k;
    EXPECT_NEAR(j_functional(F).value, d - 1 + sumH - oracle::beta_entropy(d), 1e-8) << "d = " << d;
  }
}

TEST(Marginals, JInfinite) {
  const MarginalVector uu({MarginalCdf::uniform(0, 1), MarginalCdf::uniform(0, 1)});
  const JValue J = j_functional(uu);
  EXPECT_FALSE(J.finite);
  EXPECT_TRUE(std::isinf(J.value));
}
