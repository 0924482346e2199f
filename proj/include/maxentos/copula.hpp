#pragma once

// Maximum-entropy copula with given multidiagonal, the copula of the
// maximum-entropy order statistics, and the symmetrization maps between them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "maxentos/cdf.hpp"
#include "maxentos/error.hpp"
#include "maxentos/hazard.hpp"
#include "maxentos/interval_set.hpp"
#include "maxentos/marginals.hpp"
#include "maxentos/multidiag.hpp"

namespace maxentos {

/// Closed-gap tolerance on the [0, 1] scale for membership in L_delta.
inline constexpr double kGapTol = 1e-12;

inline double log_factorial(std::size_t d) { return std::lgamma(static_cast<double>(d) + 1.0); }

/// K_i, a_i, B_i, E_i of a multidiagonal, and the density c_delta.
class CopulaKernel {
 public:
  explicit CopulaKernel(Multidiagonal delta) : delta_(std::move(delta)), report_(validate_multidiagonal(delta_)) {
    if (!report_.is_D) throw InvalidInput("not a multidiagonal: " + report_.message);
    const std::size_t d = delta_.dim();
    std::vector<std::shared_ptr<const PairHazard>> hz;
    anchors_.resize(d + 1);
    for (std::size_t i = 2; i <= d; ++i) {
      hz.push_back(make_pair_hazard(delta_.component(i - 1), delta_.component(i), delta_.psi(i)));
      for (const Interval& iv : delta_.psi(i)) anchors_[i].push_back(hz.back()->primitive(iv.midpoint()));
    }
    chain_ = std::make_shared<const HazardChain>(delta_.component(1), std::move(hz));
    if (const MarginalVector* F = delta_.source(); F && report_.is_D0) {
      // delta^F is the law of G(X) for X ~ f_F, and sampling on the data
      // scale avoids inverting G inside every root solve.
      std::vector<std::shared_ptr<const PairHazard>> data;
      for (std::size_t i = 2; i <= d; ++i) data.push_back(make_pair_hazard(F->margin(i - 1), F->margin(i), F->psi(i)));
      data_chain_ = std::make_shared<const HazardChain>(F->margin(1), std::move(data));
    }
  }

  const Multidiagonal& delta() const { return delta_; }
  std::size_t dim() const { return delta_.dim(); }
  const MultidiagonalReport& report() const { return report_; }
  bool absolutely_continuous() const { return report_.is_D0; }
  /// Law of the sorted vector (U_(1), ..., U_(d)).
  const HazardChain& chain() const { return *chain_; }

  /// K_i(t) for 1 <= i <= d + 1. K_1 = -log(1 - delta_1), K_{d+1} = 0, and
  /// otherwise the integral of delta_i' / (delta_{i-1} - delta_i) from the
  /// midpoint of the Psi_i interval containing t.
  double K(std::size_t i, double t) const {
    check_index(i, 1, dim() + 1);
    if (i == dim() + 1) return 0.0;
    if (i == 1) {
      if (!delta_.psi(1).contains(t)) throw OutOfPsi(out_of_psi(1, t));
      return -std::log(delta_.component(1).sf(t));
    }
    const auto j = delta_.psi(i).find(t);
    if (!j) throw OutOfPsi(out_of_psi(i, t));
    return chain_->hazard(i).primitive(t) - anchors_[i][*j];
  }

  /// K_i'(t) for t in Psi_i.
  double K_prime(std::size_t i, double t) const {
    check_index(i, 1, dim() + 1);
    if (i == dim() + 1) return 0.0;
    if (i == 1) {
      const MarginalCdf& d1 = delta_.component(1);
      return d1.pdf(t) / d1.sf(t);
    }
    return chain_->hazard(i).rate(t);
  }

  /// log a_i(t); -inf outside Psi_i and Psi_{i+1}.
  double log_a(std::size_t i, double t) const {
    check_index(i, 1, dim());
    if (!delta_.psi(i).contains(t) || !delta_.psi(i + 1).contains(t)) return -kInf;
    const double kp = K_prime(i, t);
    if (!(kp > 0.0)) return -kInf;
    // One log-domain expression: K_i and K_{i+1} both blow up near gap closures.
    return std::log(kp) + K(i + 1, t) - K(i, t);
  }

  /// a_i(t) = K_i'(t) exp(K_{i+1}(t) - K_i(t)) on Psi_i and Psi_{i+1}, else 0.
  double a(std::size_t i, double t) const {
    const double l = log_a(i, t);
    return l == -kInf ? 0.0 : std::exp(l);
  }

  /// B_i = exp(-K_i) on Psi_i for 1 <= i <= d, and B_{d+1} = 1.
  double B(std::size_t i, double t) const {
    check_index(i, 1, dim() + 1);
    if (i == dim() + 1) return 1.0;
    return std::exp(-K(i, t));
  }

  /// E_i = (delta_i - delta_{i+1}) exp(K_{i+1}) on Psi_{i+1} for 0 <= i <= d,
  /// with delta_0 = 1 and delta_{d+1} = 0.
  double E(std::size_t i, double t) const {
    check_index(i, 0, dim());
    if (i == dim() && !delta_.psi(i + 1).contains(t)) throw OutOfPsi(out_of_psi(i + 1, t));
    const double k = K(i + 1, t);  // throws when t is outside Psi_{i+1}
    double gap;
    if (i == 0) gap = delta_.component(1).sf(t);
    else if (i == dim()) gap = delta_.component(dim()).cdf(t);
    else gap = cdf_gap(delta_.component(i), delta_.component(i + 1), t);
    return gap * std::exp(k);
  }

  /// u in L_delta: the sorted gaps (u_(i-1), u_(i)) lie in Psi_i, closed
  /// containment with tolerance kGapTol.
  bool in_L(std::span<const double> u) const {
    std::vector<double> v(u.begin(), u.end());
    std::sort(v.begin(), v.end());
    for (std::size_t i = 2; i <= dim(); ++i) {
      if (!delta_.psi(i).contains_gap(v[i - 2], v[i - 1], kGapTol)) return false;
    }
    return true;
  }

  /// log c_delta(u) = -log d! + sum_i log a_i(u_(i)) on L_delta.
  double log_density(std::span<const double> u) const {
    require_ac();
    if (u.size() != dim()) throw InvalidInput("point dimension does not match d");
    for (double x : u) {
      if (!(x >= 0.0 && x <= 1.0)) return -kInf;
    }
    if (!in_L(u)) return -kInf;
    std::vector<double> v(u.begin(), u.end());
    std::sort(v.begin(), v.end());
    double l = -log_factorial(dim());
    for (std::size_t i = 1; i <= dim(); ++i) {
      l += log_a(i, v[i - 1]);
      if (l == -kInf) return l;
    }
    return l;
  }

  double density(std::span<const double> u) const {
    const double l = log_density(u);
    return l == -kInf ? 0.0 : std::exp(l);
  }

  /// n exchangeable draws from c_delta, row-major n x d.
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const {
    require_ac();
    if (data_chain_) return data_chain_->sample(n, seed, true, delta_.average());
    return chain_->sample(n, seed, true);
  }

  void require_ac() const {
    if (!report_.is_D0) {
      throw NotAbsolutelyContinuous("multidiagonal admits no absolutely continuous copula (|Sigma| = " +
                                    std::to_string(report_.sigma_measure) + ")");
    }
  }

 private:
  static void check_index(std::size_t i, std::size_t lo, std::size_t hi) {
    if (i < lo || i > hi) throw InvalidInput("index out of range");
  }
  static std::string out_of_psi(std::size_t i, double t) {
    return "t = " + std::to_string(t) + " is outside Psi_" + std::to_string(i);
  }

  Multidiagonal delta_;
  MultidiagonalReport report_;
  std::vector<std::vector<double>> anchors_;  // primitive at interval midpoints
  std::shared_ptr<const HazardChain> chain_;
  std::shared_ptr<const HazardChain> data_chain_;
};

inline double c_delta_density(const CopulaKernel& kernel, std::span<const double> u) { return kernel.density(u); }

/// H(C_delta) = -J(delta) + log d! + (d - 1) + sum_i H(delta_i); -inf when J is infinite.
inline double copula_entropy_closed(const Multidiagonal& delta) {
  const JValue J = j_functional_delta(delta);
  if (!J.finite) return -kInf;
  const std::size_t d = delta.dim();
  double h = -J.value + log_factorial(d) + static_cast<double>(d) - 1.0;
  for (const MarginalCdf& c : delta.components()) h += c.entropy();
  return h;
}

namespace detail {

inline Multidiagonal require_F0(const MarginalVector& F) {
  F.require_valid();
  const SigmaMeasure s = sigma_measure(F);
  if (!s.all_absolutely_continuous) throw NotInF0("a marginal has no density");
  if (!s.in_F0) throw NotInF0("|Sigma^F| = " + std::to_string(s.measure) + " > 0");
  return Multidiagonal::from_marginals(F);
}

}  // namespace detail

/// delta_i'(t) below this value counts as numerically unstable support.
inline constexpr double kUnstableDerivative = 1e-12;

/// The maps C -> S_F(C) between copulas of order statistics with marginals F
/// and exchangeable copulas with multidiagonal delta^F, on densities.
class SymmetrizationMap {
 public:
  explicit SymmetrizationMap(const MarginalVector& F) : delta_(detail::require_F0(F)) {}
  explicit SymmetrizationMap(Multidiagonal delta_of_F) : delta_(std::move(delta_of_F)) {
    if (!delta_.source()) throw InvalidInput("symmetrization needs a multidiagonal derived from marginals");
  }

  const Multidiagonal& delta() const { return delta_; }
  const MarginalVector& marginals() const { return *delta_.source(); }
  std::size_t dim() const { return delta_.dim(); }

  /// u in T^F: F_1^{-1}(u_1) <= ... <= F_d^{-1}(u_d).
  bool in_T(std::span<const double> u) const {
    double prev = -kInf;
    for (std::size_t i = 1; i <= dim(); ++i) {
      const double x = marginals().margin(i).quantile(u[i - 1]);
      if (x < prev) return false;
      prev = x;
    }
    return true;
  }

  /// prod_i delta_i' o delta_i^{-1}(u_i), computed on the data scale as f_i(x_i) / g(x_i).
  double derivative_product(std::span<const double> u) const {
    const MarginalCdf& G = *delta_.average();
    double p = 1.0;
    for (std::size_t i = 1; i <= dim(); ++i) {
      const double x = marginals().margin(i).quantile(u[i - 1]);
      const double g = G.pdf(x);
      const double f = marginals().margin(i).pdf(x);
      if (!(g > 0.0) || !(f > 0.0)) return 0.0;
      p *= f / g;
    }
    return p;
  }

  /// Positive but tiny derivative product: the backward map divides by it.
  bool unstable(std::span<const double> u) const {
    const double p = derivative_product(u);
    return p > 0.0 && p < kUnstableDerivative;
  }

  /// s_F(c)(u) = (1/d!) c(delta_1(u_(1)), ..., delta_d(u_(d))) prod_i delta_i'(u_(i)).
  template <class C>
  double forward(C&& c, std::span<const double> u) const {
    std::vector<double> v(u.begin(), u.end());
    std::sort(v.begin(), v.end());
    std::vector<double> w(dim());
    double jac = 1.0;
    for (std::size_t i = 1; i <= dim(); ++i) {
      w[i - 1] = delta_.component(i).cdf(v[i - 1]);
      jac *= delta_.component(i).pdf(v[i - 1]);
    }
    if (!(jac > 0.0)) return 0.0;
    return c(std::span<const double>(w)) * jac / std::exp(log_factorial(dim()));
  }

  /// s_F^{-1}(c)(u) = d! c(delta_1^{-1}(u_1), ..., delta_d^{-1}(u_d)) / prod_i delta_i' o delta_i^{-1}(u_i)
  /// on T^F where the product is positive, else 0.
  template <class C>
  double backward(C&& c, std::span<const double> u) const {
    if (!in_T(u)) return 0.0;
    const double jac = derivative_product(u);
    if (!(jac > 0.0)) return 0.0;
    std::vector<double> v(dim());
    for (std::size_t i = 1; i <= dim(); ++i) v[i - 1] = delta_.inverse(i, u[i - 1]);
    return std::exp(log_factorial(dim())) * c(std::span<const double>(v)) / jac;
  }

 private:
  Multidiagonal delta_;
};

template <class C>
double symmetrize_density(const SymmetrizationMap& map, C&& c, std::span<const double> u) {
  return map.forward(std::forward<C>(c), u);
}

template <class C>
double unsymmetrize_density(const SymmetrizationMap& map, C&& c, std::span<const double> u) {
  return map.backward(std::forward<C>(c), u);
}

/// Copula c_F of the maximum-entropy order statistics with marginals F.
class OrderStatisticsCopula {
 public:
  explicit OrderStatisticsCopula(const MarginalVector& F) : map_(F), kernel_(map_.delta()) {}

  const CopulaKernel& kernel() const { return kernel_; }
  const SymmetrizationMap& map() const { return map_; }
  const Multidiagonal& delta() const { return map_.delta(); }
  std::size_t dim() const { return map_.dim(); }

  /// prod_{i=2}^d exp(K_i(v_{i-1}) - K_i(v_i)) / (delta_{i-1}(v_i) - u_i) with
  /// v_i = delta_i^{-1}(u_i), on T^F with v in L_delta and positive derivatives.
  double log_density(std::span<const double> u) const {
    if (u.size() != dim()) throw InvalidInput("point dimension does not match d");
    for (double x : u) {
      if (!(x > 0.0 && x < 1.0)) return -kInf;
    }
    if (!map_.in_T(u) || !(map_.derivative_product(u) > 0.0)) return -kInf;
    const MarginalVector& F = map_.marginals();
    std::vector<double> v(dim());
    for (std::size_t i = 1; i <= dim(); ++i) v[i - 1] = delta().inverse(i, u[i - 1]);
    if (!kernel_.in_L(v)) return -kInf;
    double l = 0.0;
    for (std::size_t i = 2; i <= dim(); ++i) {
      const IntervalSet& psi = delta().psi(i);
      const auto j = psi.find(v[i - 2]);
      if (!j || (!psi[*j].contains(v[i - 1]) && v[i - 1] != v[i - 2])) return -kInf;
      // delta_{i-1} o delta_i^{-1}(u_i) - u_i = F_{i-1}(x_i) - F_i(x_i).
      const double x = F.margin(i).quantile(u[i - 1]);
      const double gap = cdf_gap(F.margin(i - 1), F.margin(i), x);
      if (!(gap > 0.0)) return -kInf;
      l += kernel_.K(i, v[i - 2]) - kernel_.K(i, v[i - 1]) - std::log(gap);
    }
    return l;
  }

  double density(std::span<const double> u) const {
    const double l = log_density(u);
    return l == -kInf ? 0.0 : std::exp(l);
  }

 private:
  SymmetrizationMap map_;
  CopulaKernel kernel_;
};

inline double c_F_density(const OrderStatisticsCopula& cF, std::span<const double> u) { return cF.density(u); }

/// H(C_F) = d - 1 - J(delta^F); -inf when J is infinite.
inline double copula_F_entropy_closed(const Multidiagonal& delta_of_F) {
  const JValue J = j_functional_delta(delta_of_F);
  return J.finite ? static_cast<double>(delta_of_F.dim()) - 1.0 - J.value : -kInf;
}

}  // namespace maxentos
