#pragma once

// Double-exponential (tanh-sinh) quadrature.
//
// Nodes cluster doubly-exponentially toward both ends of the interval, so
// integrable endpoint singularities such as log(F_{i-1} - F_i) need no special
// treatment. Infinite limits are mapped algebraically onto [0, 1].

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace maxentos::quad {

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-15;
  int max_level = 12;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
};

namespace detail {

inline constexpr double kTMaxAdaptive = 4.0;
inline constexpr double kTMaxFixed = 3.5;

// A node of the rule on the reference interval [0, 1]. `r` and `rc` = 1 - r
// are both kept so that points next to either end keep full precision.
struct Node {
  double r;
  double rc;
  double w;  // dr/dt
};

inline Node node_at(double t) {
  constexpr double half_pi = 0.5 * std::numbers::pi;
  const double u = half_pi * std::sinh(t);
  const double e = std::exp(-2.0 * std::abs(u));
  const double near_end = e / (1.0 + e);
  const double far_end = 1.0 / (1.0 + e);
  const double w = 2.0 * half_pi * std::cosh(t) * e / ((1.0 + e) * (1.0 + e));
  if (u >= 0.0) return {far_end, near_end, w};
  return {near_end, far_end, w};
}

// Affine or algebraic map from [0, 1] onto [a, b], where either end may be
// infinite.
class IntervalMap {
 public:
  IntervalMap(double a, double b) : a_(a), b_(b) {}

  // Returns (x, dx/dr).
  std::pair<double, double> operator()(double r, double rc) const {
    const bool fa = std::isfinite(a_);
    const bool fb = std::isfinite(b_);
    if (fa && fb) {
      const double len = b_ - a_;
      return {r <= 0.5 ? a_ + len * r : b_ - len * rc, len};
    }
    if (fa) return {a_ + r / rc, 1.0 / (rc * rc)};
    if (fb) return {b_ - rc / r, 1.0 / (r * r)};
    const double s = r - rc;
    const double q = 4.0 * r * rc;
    return {s / q, 2.0 * (1.0 + s * s) / (q * q)};
  }

  bool interior(double x) const { return x > a_ && x < b_; }

 private:
  double a_;
  double b_;
};

// Weighted integrand value at one reference node. Sets `bad` if the
// integrand is non-finite away from the ends of the interval.
template <class F>
double weighted_value(F& f, const IntervalMap& map, const Node& n, bool& bad) {
  const auto [x, jac] = map(n.r, n.rc);
  if (!map.interior(x)) return 0.0;
  const double fx = f(x);
  if (fx == 0.0) return 0.0;
  const double v = fx * jac * n.w;
  if (!std::isfinite(v)) {
    // Nodes within a relative 1e-12 of an end are numerically on the end;
    // their contribution to an integrable singularity is negligible.
    if (std::min(n.r, n.rc) < 1e-12) return 0.0;
    bad = true;
  }
  return v;
}

}  // namespace detail

/// Adaptive tanh-sinh integral of `f` over (a, b); either limit may be infinite.
/// The level is doubled until successive estimates agree to the tolerance.
/// A non-finite integrand value in the interior yields a non-converged,
/// infinite result, which callers treat as divergence.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  if (!(a < b)) return {0.0, 0.0, true};
  const detail::IntervalMap map(a, b);
  bool bad = false;

  double h = 0.5;
  double sum = 0.0;
  const int k_max = static_cast<int>(std::ceil(detail::kTMaxAdaptive / h));
  for (int k = -k_max; k <= k_max; ++k) {
    sum += detail::weighted_value(f, map, detail::node_at(k * h), bad);
  }
  double estimate = h * sum;
  if (bad) return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), false};

  double err = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= opt.max_level; ++level) {
    h *= 0.5;
    double added = 0.0;
    const int kmax = static_cast<int>(std::ceil(detail::kTMaxAdaptive / h));
    for (int k = -kmax; k <= kmax; ++k) {
      if (k % 2 == 0) continue;
      added += detail::weighted_value(f, map, detail::node_at(k * h), bad);
    }
    if (bad) return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), false};
    const double next = 0.5 * estimate + h * added;
    err = std::abs(next - estimate);
    estimate = next;
    if (level >= 3 && err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(estimate))) {
      return {estimate, err, true};
    }
  }
  return {estimate, err, false};
}

/// Integral over consecutive pieces [p0, p1], [p1, p2], ... of a sorted
/// breakpoint list; kinks of the integrand should sit on breakpoints.
template <class F>
Result integrate_pieces(F&& f, std::span<const double> points, const Options& opt = {}) {
  Result total{0.0, 0.0, true};
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const Result r = integrate(f, points[k], points[k + 1], opt);
    total.value += r.value;
    total.error += r.error;
    total.converged = total.converged && r.converged;
  }
  return total;
}

/// Fixed tanh-sinh rule with `n` nodes on [0, 1], used for tensor quadrature.
class FixedRule {
 public:
  explicit FixedRule(std::size_t n) {
    if (n < 3) n = 3;
    const double h = 2.0 * detail::kTMaxFixed / static_cast<double>(n - 1);
    nodes_.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      detail::Node node = detail::node_at(-detail::kTMaxFixed + h * static_cast<double>(k));
      node.w *= h;
      nodes_.push_back(node);
    }
  }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    if (!(a < b)) return 0.0;
    const detail::IntervalMap map(a, b);
    double sum = 0.0;
    for (const auto& n : nodes_) {
      const auto [x, jac] = map(n.r, n.rc);
      if (!map.interior(x)) continue;
      const double fx = f(x);
      if (fx != 0.0) sum += fx * jac * n.w;
    }
    return sum;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<detail::Node> nodes_;
};

/// Region of R^d described coordinate by coordinate: `pieces(prefix)` returns
/// the sorted breakpoints of the range of coordinate k = prefix.size() given
/// the already fixed coordinates. An empty or single-point list means the
/// slice is empty. `multiplicity` scales the integral (e.g. d! when only the
/// ordered simplex of a symmetric density is described).
struct IteratedDomain {
  std::size_t dim = 0;
  std::function<std::vector<double>(std::span<const double>)> pieces;
  double multiplicity = 1.0;
};

namespace detail {

template <class F>
double iterated(F& f, const IteratedDomain& dom, const FixedRule& rule, std::vector<double>& x,
                std::size_t k) {
  const std::vector<double> pts = dom.pieces(std::span<const double>(x.data(), k));
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
    total += rule.integrate(
        [&](double xk) {
          x[k] = xk;
          if (k + 1 == dom.dim) return f(std::span<const double>(x.data(), dom.dim));
          return iterated(f, dom, rule, x, k + 1);
        },
        pts[p], pts[p + 1]);
  }
  return total;
}

}  // namespace detail

/// Iterated tensor-product tanh-sinh integral of f over the domain.
template <class F>
double integrate_iterated(F&& f, const IteratedDomain& dom, std::size_t resolution) {
  const FixedRule rule(resolution);
  std::vector<double> x(dom.dim, 0.0);
  return dom.multiplicity * detail::iterated(f, dom, rule, x, 0);
}

}  // namespace maxentos::quad
