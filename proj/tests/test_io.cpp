#include <string>

#include <gtest/gtest.h>

#include "maxentos/io.hpp"

using namespace maxentos;

TEST(Io, ParsesEveryFamily) {
  const auto m = io::parse_margins(R"({"margins": [
    {"family": "exponential", "rate": 2.0},
    {"family": "uniform", "a": 0, "b": 2},
    {"family": "beta_1_k", "k": 3},
    {"family": "piecewise_linear", "knots": [[0, 0], [0.5, 0.7], [1, 1]]},
    {"family": "uniform_order_statistic", "n": 4, "rank": 2}]})");
  ASSERT_EQ(m.size(), 5u);
  EXPECT_DOUBLE_EQ(m[0].cdf(1.0), 1 - std::exp(-2.0));
  EXPECT_DOUBLE_EQ(m[1].cdf(1.0), 0.5);
  EXPECT_DOUBLE_EQ(m[2].cdf(0.5), 1 - 0.125);
  EXPECT_DOUBLE_EQ(m[3].cdf(0.25), 0.35);
  EXPECT_TRUE(m[3].absolutely_continuous());
  EXPECT_NEAR(m[4].cdf(0.5), 11.0 / 16.0, 1e-15);
}

TEST(Io, RejectsMalformedInput) {
  EXPECT_THROW(io::parse_margins("{"), ParseError);
  EXPECT_THROW(io::parse_margins(R"({"marg": []})"), ParseError);
  EXPECT_THROW(io::parse_margins(R"({"margins": []})"), ParseError);
  EXPECT_THROW(io::parse_margins(R"({"margins": [{"family": "gamma"}]})"), ParseError);
  EXPECT_THROW(io::parse_margins(R"({"margins": [{"family": "exponential"}]})"), ParseError);
  EXPECT_THROW(io::parse_margins(R"({"margins": [{"family": "exponential", "rate": -1}]})"), ParseError);
  EXPECT_THROW(io::parse_margins(R"({"margins": [{"family": "beta_1_k", "k": 1.5}]})"), ParseError);
  EXPECT_THROW(io::parse_margins(R"({"margins": [{"family": "piecewise_linear", "knots": [[0, 0], [1]]}]})"), ParseError);
  EXPECT_THROW(io::load_margins("/nonexistent/spec.json"), ParseError);
}

TEST(Io, RoundTrip) {
  const auto m = io::parse_margins(R"({"margins": [{"family": "beta_1_k", "k": 2},
    {"family": "piecewise_linear", "knots": [[0, 0], [0.5, 0.4], [1, 1]], "absolutely_continuous": false}]})");
  const auto again = io::margins_from_json(io::margins_to_json(m));
  ASSERT_EQ(again.size(), 2u);
  EXPECT_TRUE(again[0].same_model(m[0]) || again[0].cdf(0.3) == m[0].cdf(0.3));
  EXPECT_FALSE(again[1].absolutely_continuous());
  EXPECT_EQ(again[1].cdf(0.75), m[1].cdf(0.75));
}

TEST(Io, MultidiagonalExportIsAValidMultidiagonal) {
  const MarginalVector F({MarginalCdf::exponential(2), MarginalCdf::exponential(1)});
  const auto j = io::multidiagonal_to_json(Multidiagonal::from_marginals(F));
  const Multidiagonal back(io::margins_from_json(j));
  const auto r = validate_multidiagonal(back);
  EXPECT_TRUE(r.is_D0) << r.message;
  EXPECT_LT(r.max_sum_residual, 1e-9);
}

TEST(Io, Fnv1a) {
  EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}
