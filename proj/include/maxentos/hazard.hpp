#pragma once

// Hazards l(t) = f_lower(t) / (F_upper(t) - F_lower(t)) of consecutive
// marginals and their antiderivatives on the intervals of Psi. A chain of
// such hazards describes the sorted law with density
//   f_1(x_1) prod_i l_i(x_i) exp(-(A_i(x_i) - A_i(x_{i-1}))),
// which is both the joint order-statistics density (on the data scale) and
// d! times the symmetric copula density on sorted arguments (on [0, 1]).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "maxentos/cdf.hpp"
#include "maxentos/error.hpp"
#include "maxentos/interval_set.hpp"
#include "maxentos/marginals.hpp"
#include "maxentos/quadrature.hpp"
#include "maxentos/random.hpp"

namespace maxentos {

class PairHazard {
 public:
  explicit PairHazard(IntervalSet psi) : psi_(std::move(psi)) {}
  virtual ~PairHazard() = default;

  /// l(t) for t in Psi.
  virtual double rate(double t) const = 0;
  /// An antiderivative of l on each interval of Psi. The additive constant
  /// is arbitrary and may differ between intervals.
  virtual double primitive(double t) const = 0;

  const IntervalSet& psi() const { return psi_; }

  /// int_s^t l for s, t in the same interval of Psi.
  double integrated(double s, double t) const { return primitive(t) - primitive(s); }

 private:
  IntervalSet psi_;
};

namespace detail {

// log(expm1(z)) for z > 0 without overflow.
inline double log_expm1(double z) { return z > 30.0 ? z + std::log1p(-std::exp(-z)) : std::log(std::expm1(z)); }

// Exponential pair with rates p > c on the scale s(t) = t, or the beta_1_k
// pair with exponents p > c on the scale s(t) = -log(1 - t). In both cases
// l dt = c ds / (1 - exp(-(p - c) s)).
class ExpBetaPair final : public PairHazard {
 public:
  ExpBetaPair(double p, double c, bool beta_scale, IntervalSet psi)
      : PairHazard(std::move(psi)), c_(c), delta_(p - c), beta_(beta_scale) {}

  double rate(double t) const override {
    const double s = scale(t);
    const double ds = beta_ ? 1.0 / (1.0 - t) : 1.0;
    return c_ * ds / -std::expm1(-delta_ * s);
  }
  double primitive(double t) const override { return c_ / delta_ * log_expm1(delta_ * scale(t)); }

 private:
  double scale(double t) const { return beta_ ? -std::log1p(-t) : t; }
  double c_;
  double delta_;
  bool beta_;
};

// Consecutive order statistics r - 1 < r of n iid uniforms: l = (n - r + 1) / (1 - t).
class OrderStatPair final : public PairHazard {
 public:
  OrderStatPair(double c, IntervalSet psi) : PairHazard(std::move(psi)), c_(c) {}
  double rate(double t) const override { return c_ / (1.0 - t); }
  double primitive(double t) const override { return -c_ * std::log1p(-t); }

 private:
  double c_;
};

// Antiderivative tabulated at nodes of each Psi interval (anchored at the
// interval midpoint); between nodes the increment comes from `piece`.
class TabulatedPair : public PairHazard {
 public:
  using PairHazard::PairHazard;

  double primitive(double t) const override {
    const auto j = psi().find(t);
    if (!j) return std::nan("");
    const Table& tab = tables_[*j];
    auto it = std::upper_bound(tab.x.begin(), tab.x.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - tab.x.begin()) - 1;
    if (k + 1 < tab.x.size() && tab.x[k] == t) return tab.A[k];
    // Start from whichever neighbouring node has a finite value.
    if (std::isfinite(tab.A[k])) return tab.A[k] + piece(tab.x[k], t);
    return tab.A[k + 1] - piece(t, tab.x[k + 1]);
  }

 protected:
  struct Table {
    std::vector<double> x;  // includes both interval ends
    std::vector<double> A;
  };

  // int_a^b l for a < b inside one interval, either end possibly an interval end.
  virtual double piece(double a, double b) const = 0;

  void build(const std::vector<double>& extra_nodes) {
    for (const Interval& iv : psi()) {
      Table tab;
      const double m = iv.midpoint();
      tab.x = {iv.lo, m, iv.hi};
      for (double x : extra_nodes) {
        if (iv.contains(x)) tab.x.push_back(x);
      }
      std::sort(tab.x.begin(), tab.x.end());
      tab.x.erase(std::unique(tab.x.begin(), tab.x.end()), tab.x.end());
      const std::size_t km = static_cast<std::size_t>(std::find(tab.x.begin(), tab.x.end(), m) - tab.x.begin());
      tab.A.assign(tab.x.size(), 0.0);
      for (std::size_t k = km + 1; k < tab.x.size(); ++k) tab.A[k] = tab.A[k - 1] + piece(tab.x[k - 1], tab.x[k]);
      for (std::size_t k = km; k-- > 0;) tab.A[k] = tab.A[k + 1] - piece(tab.x[k], tab.x[k + 1]);
      tables_.push_back(std::move(tab));
    }
  }

 private:
  std::vector<Table> tables_;
};

// Both CDFs linear between knots: on each segment l = slope / (alpha + beta t),
// integrated exactly.
class PiecewisePair final : public TabulatedPair {
 public:
  PiecewisePair(MarginalCdf upper, MarginalCdf lower, IntervalSet psi, const std::vector<double>& knots)
      : TabulatedPair(std::move(psi)), up_(std::move(upper)), low_(std::move(lower)) {
    build(knots);
  }

  double rate(double t) const override {
    const double f = low_.pdf(t);
    const double g = cdf_gap(up_, low_, t);
    return f > 0.0 ? (g > 0.0 ? f / g : kInf) : 0.0;
  }

 protected:
  double piece(double a, double b) const override {
    const double slope = low_.pdf(0.5 * (a + b));
    if (slope == 0.0) return 0.0;
    const double ga = cdf_gap(up_, low_, a);
    const double gb = cdf_gap(up_, low_, b);
    if (!(ga > 0.0) || !(gb > 0.0)) return kInf;
    const double r = (gb - ga) / ga;
    // (log gb - log ga) / (gb - ga), evaluated stably for gb close to ga.
    const double lr = std::abs(r) < 1e-8 ? (1.0 - 0.5 * r) / ga : std::log1p(r) / (gb - ga);
    return slope * (b - a) * lr;
  }

 private:
  MarginalCdf up_;
  MarginalCdf low_;
};

// Generic pair: cumulative adaptive quadrature between nodes that cluster
// toward the interval ends.
class QuadraturePair final : public TabulatedPair {
 public:
  QuadraturePair(MarginalCdf upper, MarginalCdf lower, IntervalSet psi)
      : TabulatedPair(std::move(psi)), up_(std::move(upper)), low_(std::move(lower)) {
    std::vector<double> nodes = up_.breakpoints();
    for (double b : low_.breakpoints()) nodes.push_back(b);
    for (const Interval& iv : this->psi()) {
      const quad::detail::IntervalMap map(iv.lo, iv.hi);
      for (int k = -24; k <= 24; ++k) {
        const double tau = 0.25 * k;
        const double e = std::exp(-2.0 * std::abs(tau));
        const double near = e / (1.0 + e);
        const double far = 1.0 / (1.0 + e);
        const auto [x, jac] = tau >= 0 ? map(far, near) : map(near, far);
        (void)jac;
        if (iv.contains(x)) nodes.push_back(x);
      }
    }
    build(nodes);
  }

  double rate(double t) const override {
    const double f = low_.pdf(t);
    const double g = cdf_gap(up_, low_, t);
    return f > 0.0 ? (g > 0.0 ? f / g : kInf) : 0.0;
  }

 protected:
  double piece(double a, double b) const override {
    const quad::Result r = quad::integrate([this](double t) { return rate(t); }, a, b, {1e-12, 1e-300, 12});
    return r.value;
  }

 private:
  MarginalCdf up_;
  MarginalCdf low_;
};

// Hazard of delta = F o G^{-1}: at s = G(x) the rate is l(x) / g(x) and the
// antiderivative is that of l at x.
class TransportedPair final : public PairHazard {
 public:
  TransportedPair(std::shared_ptr<const PairHazard> base, MarginalCdf average, IntervalSet psi)
      : PairHazard(std::move(psi)), base_(std::move(base)), G_(std::move(average)) {}

  double rate(double s) const override {
    const double x = G_.quantile(s);
    const double g = G_.pdf(x);
    return g > 0.0 ? base_->rate(x) / g : kInf;
  }
  double primitive(double s) const override { return base_->primitive(G_.quantile(s)); }
  const PairHazard& base() const { return *base_; }

 private:
  std::shared_ptr<const PairHazard> base_;
  MarginalCdf G_;
};

}  // namespace detail

/// Hazard of the pair (upper, lower) = (F_{i-1}, F_i) restricted to `psi`.
/// Closed forms are used for exponential, beta_1_k and iid-uniform order
/// statistic pairs, exact segment integrals for piecewise-linear pairs, the
/// base-scale hazard for compositions F o G^{-1} with a common G, and
/// tabulated quadrature otherwise.
inline std::shared_ptr<const PairHazard> make_pair_hazard(const MarginalCdf& upper, const MarginalCdf& lower,
                                                          IntervalSet psi) {
  using namespace detail;
  const auto* eu = upper.as<ExponentialModel>();
  const auto* el = lower.as<ExponentialModel>();
  if (eu && el && eu->rate() > el->rate()) {
    return std::make_shared<ExpBetaPair>(eu->rate(), el->rate(), false, std::move(psi));
  }
  const auto bu = beta_exponent(upper);
  const auto bl = beta_exponent(lower);
  if (bu && bl && *bu > *bl) return std::make_shared<ExpBetaPair>(*bu, *bl, true, std::move(psi));
  const auto* ou = upper.as<UniformOrderStatisticModel>();
  const auto* ol = lower.as<UniformOrderStatisticModel>();
  if (ou && ol && ou->n() == ol->n() && ol->rank() == ou->rank() + 1) {
    return std::make_shared<OrderStatPair>(ol->n() - ol->rank() + 1, std::move(psi));
  }
  const auto* cu = upper.as<ComposedModel>();
  const auto* cl = lower.as<ComposedModel>();
  if (cu && cl && cu->average().same_model(cl->average())) {
    auto base = make_pair_hazard(cu->base(), cl->base(), psi_between(cu->base(), cl->base()));
    return std::make_shared<TransportedPair>(std::move(base), cu->average(), std::move(psi));
  }
  const auto ku = linear_knots(upper);
  const auto kl = linear_knots(lower);
  if (ku && kl) return std::make_shared<PiecewisePair>(upper, lower, std::move(psi), union_abscissae(*ku, *kl));
  return std::make_shared<QuadraturePair>(upper, lower, std::move(psi));
}

/// Number of worker threads: MAXENTOS_THREADS if set and positive, else the
/// hardware concurrency.
inline unsigned worker_threads() {
  if (const char* env = std::getenv("MAXENTOS_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Rows per independently seeded block of a sample.
inline constexpr std::size_t kSampleBlock = 4096;

/// Sorted law driven by a first marginal and the hazards of consecutive pairs.
class HazardChain {
 public:
  HazardChain(MarginalCdf first, std::vector<std::shared_ptr<const PairHazard>> hazards)
      : first_(std::move(first)), hazards_(std::move(hazards)) {}

  std::size_t dim() const { return hazards_.size() + 1; }
  const MarginalCdf& first() const { return first_; }
  /// Hazard of coordinate i, 2 <= i <= d.
  const PairHazard& hazard(std::size_t i) const { return *hazards_.at(i - 2); }

  /// True iff x is sorted and, for each i, x_{i-1} lies strictly inside an
  /// interval of Psi_i that also contains x_i (or x_i = x_{i-1}).
  bool in_open_support(std::span<const double> x) const {
    for (std::size_t i = 2; i <= dim(); ++i) {
      const double s = x[i - 2];
      const double t = x[i - 1];
      if (t < s) return false;
      const IntervalSet& psi = hazard(i).psi();
      const auto j = psi.find(s);
      if (!j || !(t < psi[*j].hi)) return false;
    }
    return true;
  }

  /// log density, -inf off the support.
  double log_density(std::span<const double> x) const {
    if (x.size() != dim()) throw InvalidInput("point dimension does not match d");
    const double f1 = first_.pdf(x[0]);
    if (!(f1 > 0.0) || !in_open_support(x)) return -kInf;
    double logf = std::log(f1);
    for (std::size_t i = 2; i <= dim(); ++i) {
      const PairHazard& h = hazard(i);
      const double r = h.rate(x[i - 1]);
      if (!(r > 0.0)) return -kInf;
      logf += std::log(r) - h.integrated(x[i - 2], x[i - 1]);
    }
    return logf;
  }

  double density(std::span<const double> x) const {
    const double l = log_density(x);
    return l == -kInf ? 0.0 : std::exp(l);
  }

  /// t solving A(t) - A(s) = e inside the Psi interval of s, where e > 0.
  static double solve_conditional(const PairHazard& h, double s, double e) {
    const auto j = h.psi().find(s);
    if (!j) throw RootBracketFailure("conditioning value lies outside Psi");
    const Interval iv = h.psi()[*j];
    const double target = h.primitive(s) + e;
    auto excess = [&](double t) { return h.primitive(t) - target; };

    int budget = 200;
    double lo = s;
    double hi = iv.hi;
    if (!std::isfinite(hi)) {
      double step = std::max(1.0, std::abs(s));
      for (;;) {
        if (--budget < 0) throw RootBracketFailure("no upper bracket for the conditional quantile");
        const double t = s + step;
        if (excess(t) >= 0.0) {
          hi = t;
          break;
        }
        lo = t;
        step *= 2.0;
      }
    }
    double t = lo + 0.5 * (hi - lo);
    while (budget-- > 0) {
      const double f = excess(t);
      if (f >= 0.0) hi = t; else lo = t;
      if (f == 0.0) return t;
      const double tol = 1e-12 * std::max(1.0, std::abs(t));
      if (hi - lo <= tol) return lo + 0.5 * (hi - lo);
      const double r = h.rate(t);
      double next = t - f / r;
      if (!(r > 0.0) || !std::isfinite(next) || !(next > lo && next < hi)) {
        next = lo + 0.5 * (hi - lo);
      } else if (std::abs(next - t) <= tol) {
        return next;
      }
      if (next == t) return t;
      t = next;
    }
    throw RootBracketFailure("conditional quantile did not converge in 200 iterations");
  }

  /// One sorted draw into `row`.
  void sample_row(std::mt19937_64& rng, std::span<double> row) const {
    row[0] = first_.quantile(uniform_open01(rng));
    for (std::size_t i = 2; i <= dim(); ++i) {
      const double e = -std::log(uniform_open01(rng));
      row[i - 1] = solve_conditional(hazard(i), row[i - 2], e);
    }
  }

  /// n draws, row-major n x d. Block b of kSampleBlock rows uses stream b of
  /// `seed`, so the output does not depend on the number of threads. With
  /// `shuffle`, each row is put in uniformly random order.
  /// n rows, row-major. With `push`, every coordinate is mapped through
  /// push->cdf before the optional uniform shuffle of each row.
  std::vector<double> sample(std::size_t n, std::uint64_t seed, bool shuffle = false,
                             const MarginalCdf* push = nullptr) const {
    const std::size_t d = dim();
    std::vector<double> out(n * d);
    const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;
    auto work = [&] {
      for (std::size_t b = next++; b < blocks && !failed; b = next++) {
        try {
          std::mt19937_64 rng = make_stream(seed, b);
          const std::size_t end = std::min(n, (b + 1) * kSampleBlock);
          for (std::size_t r = b * kSampleBlock; r < end; ++r) {
            double* row = out.data() + r * d;
            sample_row(rng, std::span<double>(row, d));
            if (push) {
              for (std::size_t k = 0; k < d; ++k) row[k] = push->cdf(row[k]);
            }
            if (!shuffle) continue;
            for (std::size_t k = d; k > 1; --k) {
              const auto j = static_cast<std::size_t>(uniform_open01(rng) * static_cast<double>(k));
              std::swap(row[k - 1], row[std::min(j, k - 1)]);
            }
          }
        } catch (const std::exception& ex) {
          std::lock_guard lock(failure_mutex);
          if (!failed.exchange(true)) failure = ex.what();
        }
      }
    };
    const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(worker_threads(), std::max<std::size_t>(blocks, 1)));
    if (nt <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned k = 0; k < nt; ++k) pool.emplace_back(work);
    }
    if (failed) throw RootBracketFailure(failure);
    return out;
  }

 private:
  MarginalCdf first_;
  std::vector<std::shared_ptr<const PairHazard>> hazards_;
};

}  // namespace maxentos
