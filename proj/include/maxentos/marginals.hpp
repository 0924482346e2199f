#pragma once

// Marginal vectors of order statistics: stochastic order, the sets
// Psi_i = {F_{i-1} > F_i}, the measure of Sigma and the J functional.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "maxentos/cdf.hpp"
#include "maxentos/error.hpp"
#include "maxentos/interval_set.hpp"
#include "maxentos/quadrature.hpp"

namespace maxentos {

/// Absolute tolerance on CDF values when deciding F_{i-1}(t) = F_i(t).
inline constexpr double kEqualityTol = 1e-12;
/// Points per marginal used by grid-based order and Psi detection.
inline constexpr std::size_t kValidationGrid = 4096;
/// J is declared infinite above this value or when quadrature fails to converge.
inline constexpr double kDivergenceThreshold = 1e6;

/// F_{upper}(t) - F_{lower}(t), using survival functions in the upper tail
/// to avoid cancellation.
inline double cdf_gap(const MarginalCdf& upper, const MarginalCdf& lower, double t) {
  const double fu = upper.cdf(t);
  if (fu <= 0.5) return fu - lower.cdf(t);
  return lower.sf(t) - upper.sf(t);
}

namespace detail {

// Knots of CDFs that are linear between breakpoints.
inline std::optional<std::vector<Knot>> linear_knots(const MarginalCdf& F) {
  if (const auto* pw = F.as<PiecewiseLinearModel>()) return pw->knots();
  if (const auto* u = F.as<UniformModel>()) return std::vector<Knot>{{u->a(), 0.0}, {u->b(), 1.0}};
  return std::nullopt;
}

inline std::vector<double> union_abscissae(const std::vector<Knot>& a, const std::vector<Knot>& b) {
  std::vector<double> xs;
  for (const auto& k : a) xs.push_back(k.x);
  for (const auto& k : b) xs.push_back(k.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

// Sorted validation grid: quantile grids of both CDFs, their breakpoints and
// the midpoints between consecutive points, restricted to (lo, hi).
inline std::vector<double> validation_grid(const MarginalCdf& a, const MarginalCdf& b, double lo, double hi) {
  std::vector<double> pts;
  pts.reserve(4 * kValidationGrid);
  for (std::size_t j = 1; j < kValidationGrid; ++j) {
    const double u = static_cast<double>(j) / static_cast<double>(kValidationGrid);
    pts.push_back(a.quantile(u));
    pts.push_back(b.quantile(u));
  }
  for (double x : a.breakpoints()) pts.push_back(x);
  for (double x : b.breakpoints()) pts.push_back(x);
  std::erase_if(pts, [&](double x) { return !(x > lo && x < hi) || !std::isfinite(x); });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  for (std::size_t k = 0; k + 1 < n; ++k) pts.push_back(0.5 * (pts[k] + pts[k + 1]));
  std::sort(pts.begin(), pts.end());
  return pts;
}

template <class Pred>
double bisect_boundary(Pred positive, double zero_side, double pos_side) {
  for (int it = 0; it < 200; ++it) {
    const double mid = zero_side + 0.5 * (pos_side - zero_side);
    if (mid == zero_side || mid == pos_side) break;
    if (positive(mid)) pos_side = mid; else zero_side = mid;
  }
  return 0.5 * (zero_side + pos_side);
}

inline IntervalSet psi_linear(const MarginalCdf& upper, const MarginalCdf& lower, const std::vector<Knot>& ku,
                              const std::vector<Knot>& kl, double lo, double hi, double tol) {
  std::vector<double> xs{lo, hi};
  for (double x : union_abscissae(ku, kl)) {
    if (x > lo && x < hi) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  std::vector<bool> zero(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) zero[k] = !(cdf_gap(upper, lower, xs[k]) > tol);
  // The gap is linear between consecutive abscissae, so a segment is inside
  // Psi iff one of its ends has a positive gap; zero knots split intervals.
  std::vector<Interval> out;
  bool open = false;
  double start = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const bool pos = !zero[k] || !zero[k + 1];
    if (pos) {
      if (open && zero[k]) {
        out.push_back({start, xs[k]});
        open = false;
      }
      if (!open) {
        start = xs[k];
        open = true;
      }
    } else if (open) {
      out.push_back({start, xs[k]});
      open = false;
    }
  }
  if (open) out.push_back({start, xs.back()});
  return IntervalSet(std::move(out));
}

// Exponent k of 1 - (1 - t)^k, for beta_1_k and U[0, 1].
inline std::optional<int> beta_exponent(const MarginalCdf& F) {
  if (const auto* b = F.as<Beta1kModel>()) return b->k();
  if (const auto* u = F.as<UniformModel>(); u && u->a() == 0.0 && u->b() == 1.0) return 1;
  return std::nullopt;
}

// Psi for pairs whose difference has a known sign pattern.
inline std::optional<IntervalSet> analytic_psi(const MarginalCdf& upper, const MarginalCdf& lower) {
  auto whole = [](bool strict, double lo, double hi) {
    return strict ? IntervalSet({{lo, hi}}) : IntervalSet();
  };
  const auto* eu = upper.as<ExponentialModel>();
  const auto* el = lower.as<ExponentialModel>();
  if (eu && el) return whole(eu->rate() > el->rate(), 0.0, kInf);
  const auto bu = beta_exponent(upper);
  const auto bl = beta_exponent(lower);
  if (bu && bl) return whole(*bu > *bl, 0.0, 1.0);
  const auto* ou = upper.as<UniformOrderStatisticModel>();
  const auto* ol = lower.as<UniformOrderStatisticModel>();
  if (ou && ol && ou->n() == ol->n()) return whole(ou->rank() < ol->rank(), 0.0, 1.0);
  return std::nullopt;
}

}  // namespace detail

/// Open set {t : upper(t) > lower(t)} as disjoint open intervals. Exact for
/// analytic and piecewise-linear/uniform pairs; otherwise located on the
/// validation grid with boundaries refined by bisection (isolated tangencies
/// between grid points are not detected).
inline IntervalSet psi_between(const MarginalCdf& upper, const MarginalCdf& lower, double tol = kEqualityTol) {
  if (auto exact = detail::analytic_psi(upper, lower)) return *exact;
  const double lo = upper.support().lo;
  const double hi = lower.support().hi;
  if (!(lo < hi)) return {};
  const auto ku = detail::linear_knots(upper);
  const auto kl = detail::linear_knots(lower);
  if (ku && kl) return detail::psi_linear(upper, lower, *ku, *kl, lo, hi, tol);

  auto positive = [&](double t) { return cdf_gap(upper, lower, t) > tol; };
  const std::vector<double> grid = detail::validation_grid(upper, lower, lo, hi);
  std::vector<Interval> out;
  bool open = false;
  double start = lo;
  double last_zero = lo;
  double last_pos = lo;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    const bool pos = positive(t);
    if (pos && !open) {
      start = (k == 0) ? lo : detail::bisect_boundary(positive, last_zero, t);
      open = true;
    } else if (!pos && open) {
      out.push_back({start, detail::bisect_boundary(positive, t, last_pos)});
      open = false;
    }
    if (pos) last_pos = t; else last_zero = t;
  }
  if (open) out.push_back({start, hi});
  std::erase_if(out, [](const Interval& iv) { return !(iv.lo < iv.hi); });
  return IntervalSet(std::move(out));
}

struct StochasticOrderReport {
  bool ok = true;
  std::size_t index = 0;  // smallest i (1-based) with F_{i-1}(t) < F_i(t)
  double witness = 0.0;
  std::string message;
};

inline StochasticOrderReport check_stochastic_order(std::span<const MarginalCdf> margins) {
  StochasticOrderReport rep;
  auto violation = [&](std::size_t i, double t) {
    rep.ok = false;
    rep.index = i;
    rep.witness = t;
    std::ostringstream os;
    os.precision(17);
    os << "F_" << i - 1 << "(t) < F_" << i << "(t) at t = " << t;
    rep.message = os.str();
    return rep;
  };
  for (std::size_t i = 2; i <= margins.size(); ++i) {
    const MarginalCdf& up = margins[i - 2];
    const MarginalCdf& low = margins[i - 1];
    if (const auto* eu = up.as<detail::ExponentialModel>()) {
      if (const auto* el = low.as<detail::ExponentialModel>()) {
        if (eu->rate() < el->rate()) return violation(i, 1.0 / el->rate());
        continue;
      }
    }
    if (const auto* bu = up.as<detail::Beta1kModel>()) {
      if (const auto* bl = low.as<detail::Beta1kModel>()) {
        if (bu->k() < bl->k()) return violation(i, 0.5);
        continue;
      }
    }
    if (const auto* ou = up.as<detail::UniformOrderStatisticModel>()) {
      const auto* ol = low.as<detail::UniformOrderStatisticModel>();
      if (ol && ol->n() == ou->n()) {
        if (ou->rank() > ol->rank()) return violation(i, 0.5);
        continue;
      }
    }
    const auto ku = detail::linear_knots(up);
    const auto kl = detail::linear_knots(low);
    std::vector<double> pts;
    if (ku && kl) {
      pts = detail::union_abscissae(*ku, *kl);
    } else {
      pts = detail::validation_grid(up, low, -kInf, kInf);
    }
    for (double t : pts) {
      if (up.cdf(t) < low.cdf(t) - kEqualityTol) return violation(i, t);
    }
  }
  return rep;
}

/// Ordered d-tuple of continuous CDFs (the marginals of X_1 <= ... <= X_d),
/// with its order report and the sets Psi_i computed once at construction.
class MarginalVector {
 public:
  explicit MarginalVector(std::vector<MarginalCdf> margins) : margins_(std::move(margins)) {
    if (margins_.empty()) throw InvalidInput("marginal vector needs d >= 1");
    order_ = check_stochastic_order(margins_);
    psi_.resize(margins_.size() + 2);
    for (std::size_t i = 2; i <= margins_.size(); ++i) psi_[i] = psi_between(margins_[i - 2], margins_[i - 1]);
  }

  std::size_t dim() const { return margins_.size(); }
  /// 1-based access, F_i.
  const MarginalCdf& margin(std::size_t i) const { return margins_.at(i - 1); }
  const std::vector<MarginalCdf>& margins() const { return margins_; }
  /// Psi_i for 2 <= i <= d.
  const IntervalSet& psi(std::size_t i) const {
    if (i < 2 || i > dim()) throw InvalidInput("psi index must satisfy 2 <= i <= d");
    return psi_[i];
  }
  const std::vector<IntervalSet>& psi_table() const { return psi_; }
  const StochasticOrderReport& order() const { return order_; }
  bool valid() const { return order_.ok; }
  void require_valid() const {
    if (!order_.ok) throw InvalidInput("marginals are not stochastically ordered: " + order_.message);
  }

 private:
  std::vector<MarginalCdf> margins_;
  StochasticOrderReport order_;
  std::vector<IntervalSet> psi_;
};

inline StochasticOrderReport check_stochastic_order(const MarginalVector& F) { return F.order(); }

inline MarginalCdf average_cdf(const MarginalVector& F) { return MarginalCdf::average(F.margins()); }

inline IntervalSet psi_intervals(const MarginalVector& F, std::size_t i) {
  F.require_valid();
  return F.psi(i);
}

struct SigmaMeasure {
  double measure = 0.0;
  bool all_absolutely_continuous = true;
  bool in_F0 = true;
};

namespace detail {

// Lebesgue measure of lower((Psi)^c) for one consecutive pair.
inline double image_of_complement(const MarginalCdf& lower, const IntervalSet& psi) {
  std::vector<Interval> images;
  for (const Interval& c : psi.complement(-kInf, kInf)) images.push_back({lower.cdf(c.lo), lower.cdf(c.hi)});
  return union_measure(std::move(images));
}

// |Sigma| = |union_i F_i((Psi_i)^c)|; psi is indexed by the 1-based i.
inline SigmaMeasure sigma_of(std::span<const MarginalCdf> comps, std::span<const IntervalSet> psi) {
  SigmaMeasure s;
  std::vector<Interval> images;
  for (std::size_t i = 2; i <= comps.size(); ++i) {
    for (const Interval& c : psi[i].complement(-kInf, kInf)) {
      images.push_back({comps[i - 1].cdf(c.lo), comps[i - 1].cdf(c.hi)});
    }
  }
  s.measure = union_measure(std::move(images));
  s.all_absolutely_continuous =
      std::all_of(comps.begin(), comps.end(), [](const MarginalCdf& F) { return F.absolutely_continuous(); });
  s.in_F0 = s.all_absolutely_continuous && s.measure <= kEqualityTol;
  return s;
}

}  // namespace detail

inline SigmaMeasure sigma_measure(const MarginalVector& F) {
  F.require_valid();
  return detail::sigma_of(F.margins(), F.psi_table());
}

/// x sorted ascending and every open gap (x_{i-1}, x_i) inside Psi_i.
inline bool in_support_LF(const MarginalVector& F, std::span<const double> x) {
  if (x.size() != F.dim()) throw InvalidInput("point dimension does not match d");
  for (std::size_t i = 2; i <= F.dim(); ++i) {
    if (x[i - 2] > x[i - 1]) return false;
    if (!F.psi(i).contains_gap(x[i - 2], x[i - 1])) return false;
  }
  return true;
}

/// Value of the J functional. `finite` is false when divergence was detected;
/// `note` says which term diverged.
struct JValue {
  double value = 0.0;
  bool finite = true;
  std::string note;
};

namespace detail {

inline JValue j_sum(std::span<const MarginalCdf> comps, std::span<const IntervalSet> psi) {
  JValue J;
  for (std::size_t i = 2; i <= comps.size(); ++i) {
    const MarginalCdf& up = comps[i - 2];
    const MarginalCdf& low = comps[i - 1];
    const double off = image_of_complement(low, psi[i]);
    if (off > kEqualityTol) {
      J = {kInf, false, "term " + std::to_string(i) + ": F_i puts mass where F_{i-1} = F_i"};
      return J;
    }
    std::vector<double> bps = up.breakpoints();
    const auto more = low.breakpoints();
    bps.insert(bps.end(), more.begin(), more.end());
    for (const Interval& iv : psi[i]) {
      std::vector<double> pts{iv.lo, iv.hi};
      for (double b : bps) {
        if (iv.contains(b)) pts.push_back(b);
      }
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      auto integrand = [&](double t) {
        const double f = low.pdf(t);
        if (f <= 0.0) return 0.0;
        const double g = cdf_gap(up, low, t);
        return g > 0.0 ? f * std::abs(std::log(g)) : kInf;
      };
      const quad::Result r = quad::integrate_pieces(integrand, pts, {1e-10, 1e-15, 12});
      if (!r.converged || !std::isfinite(r.value) || r.value > kDivergenceThreshold) {
        J = {kInf, false, "term " + std::to_string(i) + ": integral diverges near the ends of Psi_i"};
        return J;
      }
      J.value += r.value;
    }
  }
  return J;
}

}  // namespace detail

/// J(F) = sum_{i=2}^d int f_i |log(F_{i-1} - F_i)| by adaptive tanh-sinh quadrature.
inline JValue j_functional(const MarginalVector& F) {
  F.require_valid();
  return detail::j_sum(F.margins(), F.psi_table());
}

}  // namespace maxentos
