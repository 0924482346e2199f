#pragma once

// Multidiagonals: the d CDFs on [0, 1] of the order statistics of a
// copula-distributed vector.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maxentos/cdf.hpp"
#include "maxentos/error.hpp"
#include "maxentos/interval_set.hpp"
#include "maxentos/marginals.hpp"

namespace maxentos {

/// Grid size and tolerance for the sum identity sum_i delta_i(s) = d s.
inline constexpr std::size_t kSumGrid = 1024;
inline constexpr double kSumTol = 1e-9;

class Multidiagonal {
 public:
  /// A multidiagonal given directly by its components on [0, 1].
  explicit Multidiagonal(std::vector<MarginalCdf> components) : comps_(std::move(components)) {
    if (comps_.empty()) throw InvalidInput("multidiagonal needs d >= 1");
    psi_.resize(dim() + 2);
    for (std::size_t i = 2; i <= dim(); ++i) psi_[i] = psi_between(comps_[i - 2], comps_[i - 1]);
    set_boundary_psi();
  }

  /// delta^F = F o G^{-1}, with G the average of the marginals. Psi_i^delta
  /// is the G-image of Psi_i^F.
  static Multidiagonal from_marginals(const MarginalVector& F) {
    F.require_valid();
    const MarginalCdf G = MarginalCdf::average(F.margins());
    std::vector<MarginalCdf> comps;
    for (const MarginalCdf& Fi : F.margins()) comps.push_back(MarginalCdf::composed(Fi, G));
    Multidiagonal m(std::move(comps), G, std::make_shared<const MarginalVector>(F));
    for (std::size_t i = 2; i <= m.dim(); ++i) {
      std::vector<Interval> img;
      for (const Interval& iv : F.psi(i)) {
        const Interval s{G.cdf(iv.lo), G.cdf(iv.hi)};
        if (s.lo < s.hi) img.push_back(s);
      }
      m.psi_[i] = IntervalSet(std::move(img));
    }
    m.set_boundary_psi();
    return m;
  }

  std::size_t dim() const { return comps_.size(); }
  /// 1-based component delta_(i).
  const MarginalCdf& component(std::size_t i) const { return comps_.at(i - 1); }
  const std::vector<MarginalCdf>& components() const { return comps_; }

  /// Psi_i^delta for 1 <= i <= d + 1; Psi_1 = (0, d_1) and Psi_{d+1} = (g_{d+1}, 1).
  const IntervalSet& psi(std::size_t i) const {
    if (i < 1 || i > dim() + 1) throw InvalidInput("psi index must satisfy 1 <= i <= d + 1");
    return psi_[i];
  }
  const std::vector<IntervalSet>& psi_table() const { return psi_; }

  /// delta_(i)^{-1}(u); for delta^F this is G o F_i^{-1}, otherwise the
  /// generalized inverse of the component.
  double inverse(std::size_t i, double u) const {
    if (source_) return G_->cdf(source_->margin(i).quantile(u));
    return component(i).quantile(u);
  }

  /// The marginal vector this multidiagonal was derived from, if any.
  const MarginalVector* source() const { return source_.get(); }
  /// The average CDF G when derived from marginals.
  const MarginalCdf* average() const { return G_ ? &*G_ : nullptr; }

 private:
  Multidiagonal(std::vector<MarginalCdf> comps, MarginalCdf G, std::shared_ptr<const MarginalVector> src)
      : comps_(std::move(comps)), G_(std::move(G)), source_(std::move(src)) {
    psi_.resize(dim() + 2);
  }

  void set_boundary_psi() {
    const double d1 = std::min(1.0, comps_.front().support().hi);
    const double g = std::max(0.0, comps_.back().support().lo);
    psi_[1] = d1 > 0.0 ? IntervalSet({{0.0, d1}}) : IntervalSet();
    psi_[dim() + 1] = g < 1.0 ? IntervalSet({{g, 1.0}}) : IntervalSet();
  }

  std::vector<MarginalCdf> comps_;
  std::vector<IntervalSet> psi_;
  std::optional<MarginalCdf> G_;
  std::shared_ptr<const MarginalVector> source_;
};

inline Multidiagonal multidiagonal_from_marginals(const MarginalVector& F) { return Multidiagonal::from_marginals(F); }

/// Marginal CDFs of the order statistics of d iid U[0, 1] variables.
inline Multidiagonal multidiagonal_of_iid_uniform(std::size_t d) {
  if (d < 1) throw InvalidInput("dimension must be >= 1");
  std::vector<MarginalCdf> comps;
  for (std::size_t i = 1; i <= d; ++i) {
    comps.push_back(MarginalCdf::uniform_order_statistic(static_cast<int>(d), static_cast<int>(i)));
  }
  return Multidiagonal(std::move(comps));
}

struct MultidiagonalReport {
  bool is_D = true;
  bool is_D0 = true;
  double sigma_measure = 0.0;
  double max_sum_residual = 0.0;
  std::string message;  // first violated condition
  double witness = 0.0;
};

inline MultidiagonalReport validate_multidiagonal(const Multidiagonal& delta) {
  MultidiagonalReport rep;
  const std::size_t d = delta.dim();
  auto fail = [&](const std::string& what, double t) {
    if (rep.is_D) {
      std::ostringstream os;
      os.precision(17);
      os << what << " at s = " << t;
      rep.message = os.str();
      rep.witness = t;
    }
    rep.is_D = false;
    rep.is_D0 = false;
  };

  for (std::size_t i = 1; i <= d && rep.is_D; ++i) {
    const MarginalCdf& c = delta.component(i);
    if (c.cdf(0.0) > kSumTol) fail("delta_" + std::to_string(i) + "(0) > 0", 0.0);
    else if (c.cdf(1.0) < 1.0 - kSumTol) fail("delta_" + std::to_string(i) + "(1) < 1", 1.0);
  }
  if (rep.is_D) {
    const auto order = check_stochastic_order(delta.components());
    if (!order.ok) fail("ordering violated: " + order.message, order.witness);
  }
  const double h = 1.0 / static_cast<double>(kSumGrid - 1);
  std::vector<double> prev(d, 0.0);
  for (std::size_t k = 0; k < kSumGrid; ++k) {
    const double s = static_cast<double>(k) * h;
    double sum = 0.0;
    for (std::size_t i = 1; i <= d; ++i) {
      const double v = delta.component(i).cdf(s);
      if (k > 0 && std::abs(v - prev[i - 1]) > static_cast<double>(d) * h * (1.0 + 1e-9) + kSumTol) {
        fail("delta_" + std::to_string(i) + " is not d-Lipschitz", s);
      }
      prev[i - 1] = v;
      sum += v;
    }
    const double res = std::abs(sum - static_cast<double>(d) * s);
    rep.max_sum_residual = std::max(rep.max_sum_residual, res);
    if (res > kSumTol) fail("sum identity violated", s);
  }
  const SigmaMeasure sig = detail::sigma_of(delta.components(), delta.psi_table());
  rep.sigma_measure = sig.measure;
  rep.is_D0 = rep.is_D && sig.in_F0;
  return rep;
}

/// J(delta) = sum_{i=2}^d int delta_i' |log(delta_{i-1} - delta_i)|.
inline JValue j_functional_delta(const Multidiagonal& delta) {
  return detail::j_sum(delta.components(), delta.psi_table());
}

}  // namespace maxentos
