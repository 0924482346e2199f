#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "maxentos/copula.hpp"
#include "oracles.hpp"

using namespace maxentos;

namespace {

MarginalVector beta2() { return MarginalVector({MarginalCdf::beta_1_k(2), MarginalCdf::uniform(0, 1)}); }
MarginalVector exp321() {
  return MarginalVector({MarginalCdf::exponential(3), MarginalCdf::exponential(2), MarginalCdf::exponential(1)});
}

// int over the sorted simplex of [0, 1]^2 by nested graded Gauss-Legendre.
double simplex2(const std::function<double(double, double)>& f) {
  return oracle::graded([&](double a) { return oracle::graded([&](double b) { return f(a, b); }, a, 1, 40); }, 0, 1, 40);
}

}  // namespace

TEST(Copula, IndependenceKernel) {
  const CopulaKernel k(multidiagonal_of_iid_uniform(2));
  EXPECT_NEAR(k.K(2, 0.3), -std::log(1.4), 1e-14);
  EXPECT_NEAR(k.K(1, 0.3), -2 * std::log(0.7), 1e-14);
  EXPECT_EQ(k.K(3, 0.3), 0.0);
  EXPECT_NEAR(k.a(1, 0.3), 1.0, 1e-14);
  EXPECT_NEAR(k.a(2, 0.3), 2.0, 1e-14);
  for (int i = 1; i < 100; ++i) {
    for (int j = 1; j < 100; ++j) {
      const double u[] = {i / 100.0, j / 100.0};
      ASSERT_NEAR(k.density(u), 1.0, 1e-12);
    }
  }
  EXPECT_NEAR(copula_entropy_closed(multidiagonal_of_iid_uniform(2)), 0.0, 1e-9);
  EXPECT_NEAR(copula_entropy_closed(multidiagonal_of_iid_uniform(4)), 0.0, 1e-8);
}

TEST(Copula, IndependenceHigherDimensions) {
  for (std::size_t d : {3u, 5u}) {
    const CopulaKernel k(multidiagonal_of_iid_uniform(d));
    std::mt19937_64 rng(d);
    std::vector<double> u(d);
    for (int r = 0; r < 50; ++r) {
      for (double& x : u) x = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
      EXPECT_NEAR(k.density(u), 1.0, 1e-10);
    }
  }
}

TEST(Copula, BETimesEIsTheGap) {
  const auto delta = Multidiagonal::from_marginals(exp321());
  const CopulaKernel k(delta);
  for (std::size_t i = 2; i <= 3; ++i) {
    for (double t : {0.01, 0.3, 0.7, 0.99}) {
      EXPECT_NEAR(k.B(i, t) * k.E(i - 1, t), delta.component(i - 1).cdf(t) - delta.component(i).cdf(t), 1e-12);
    }
  }
}

TEST(Copula, OutOfPsi) {
  // Psi_2 = (0, 0.4) u (0.6, 1): K_2 is undefined in between.
  const Multidiagonal delta({MarginalCdf::piecewise_linear({{0, 0}, {0.2, 0.4}, {0.4, 0.4}, {0.6, 0.6}, {0.8, 0.9}, {1, 1}}),
                             MarginalCdf::piecewise_linear({{0, 0}, {0.2, 0}, {0.4, 0.4}, {0.6, 0.6}, {0.8, 0.7}, {1, 1}})});
  const auto r = validate_multidiagonal(delta);
  ASSERT_TRUE(r.is_D) << r.message;
  const CopulaKernel k(delta);
  EXPECT_NO_THROW(k.K(2, 0.3));
  EXPECT_NO_THROW(k.K(2, 0.7));
  EXPECT_THROW(k.K(2, 0.5), OutOfPsi);
  EXPECT_THROW(k.B(2, 0.5), OutOfPsi);
  EXPECT_FALSE(r.is_D0);
  EXPECT_THROW(k.K(9, 0.3), InvalidInput);
}

TEST(Copula, ComonotoneIsNotAbsolutelyContinuous) {
  const Multidiagonal comonotone({MarginalCdf::uniform(0, 1), MarginalCdf::uniform(0, 1)});
  const CopulaKernel k(comonotone);
  const double u[] = {0.3, 0.6};
  EXPECT_THROW(c_delta_density(k, u), NotAbsolutelyContinuous);
  EXPECT_THROW(k.sample(10, 0), NotAbsolutelyContinuous);
  EXPECT_EQ(copula_entropy_closed(comonotone), -kInf);
}

TEST(Copula, KernelIsSymmetricAndNormalized) {
  const CopulaKernel k(Multidiagonal::from_marginals(beta2()));
  const double a[] = {0.2, 0.7}, b[] = {0.7, 0.2};
  EXPECT_EQ(k.density(a), k.density(b));
  const double mass = simplex2([&](double x, double y) {
    const double u[] = {x, y};
    return 2 * k.density(u);
  });
  EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(Copula, BetaExampleValues) {
  const auto F = beta2();
  const OrderStatisticsCopula cF(F);
  // f_F(0.5, 0.8) = 1.5625 with f_1(0.5) = f_2(0.8) = 1.
  const double u[] = {F.margin(1).cdf(0.5), F.margin(2).cdf(0.8)};
  EXPECT_NEAR(c_F_density(cF, u), 1.5625, 1e-12);
  EXPECT_NEAR(copula_F_entropy_closed(cF.delta()), -1.0, 1e-8);
  // -J + log 2 + 1 + sum H(delta_i), frozen from an independent evaluation.
  EXPECT_NEAR(copula_entropy_closed(cF.delta()), -0.414416711617, 1e-9);
}

TEST(Copula, SymmetrizationRoundTrip) {
  const auto F = exp321();
  const OrderStatisticsCopula cF(F);
  const auto& map = cF.map();
  auto c = [&](std::span<const double> u) { return cF.density(u); };
  auto cd = [&](std::span<const double> v) { return cF.kernel().density(v); };
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int r = 0; r < 200 && checked < 50; ++r) {
    std::vector<double> x(3);
    for (std::size_t i = 0; i < 3; ++i) x[i] = F.margin(i + 1).quantile(std::uniform_real_distribution<double>(0, 1)(rng));
    std::sort(x.begin(), x.end());
    std::vector<double> u(3), v(3);
    for (std::size_t i = 0; i < 3; ++i) {
      u[i] = F.margin(i + 1).cdf(x[i]);
      v[i] = cF.delta().inverse(i + 1, u[i]);
    }
    if (!map.in_T(u) || map.unstable(u)) continue;
    ++checked;
    EXPECT_NEAR(map.backward(cd, u) / c(u), 1.0, 1e-9);
    EXPECT_NEAR(map.forward(c, v) / cd(v), 1.0, 1e-9);
  }
  EXPECT_GT(checked, 20);
}

TEST(Copula, SampleHasUniformMarginals) {
  const CopulaKernel k(Multidiagonal::from_marginals(exp321()));
  const std::size_t n = 10000;
  const auto rows = k.sample(n, 11);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = rows[r * 3 + i];
    EXPECT_LT(oracle::ks(col, [](double t) { return std::clamp(t, 0.0, 1.0); }), 1.63 / std::sqrt(double(n))) << i;
  }
}
