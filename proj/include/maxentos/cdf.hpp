#pragma once

// One-dimensional continuous CDFs with densities and generalized inverses.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "maxentos/error.hpp"
#include "maxentos/quadrature.hpp"

namespace maxentos {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Family {
  uniform,
  exponential,
  beta_1_k,
  piecewise_linear,
  uniform_order_statistic,  // law of the r-th smallest of n iid U(0,1)
  average,                  // (1/d) sum of components
  composed,                 // F o G^{-1}, a component of a multidiagonal
};

inline const char* to_string(Family f) {
  switch (f) {
    case Family::uniform: return "uniform";
    case Family::exponential: return "exponential";
    case Family::beta_1_k: return "beta_1_k";
    case Family::piecewise_linear: return "piecewise_linear";
    case Family::uniform_order_statistic: return "uniform_order_statistic";
    case Family::average: return "average";
    case Family::composed: return "composed";
  }
  return "unknown";
}

/// Smallest closed interval carrying all the mass: lo = inf{F > 0}, hi = sup{F < 1}.
struct Support {
  double lo;
  double hi;
};

struct Knot {
  double x;
  double F;
};

class MarginalCdf;

/// inf{s : J(s) >= t} for a non-decreasing function J, by bisection.
/// Infinite brackets are first shrunk by geometric search; returns -inf when
/// J(s) >= t for every s probed and +inf when J never reaches t.
template <class J>
  requires(!std::is_same_v<std::remove_cvref_t<J>, MarginalCdf>)
double generalized_inverse(J&& fn, double t, double lo = -kInf, double hi = kInf) {
  if (std::isnan(t)) return t;
  if (!std::isfinite(lo)) {
    double step = 1.0;
    double p = std::isfinite(hi) ? std::min(hi, 0.0) : 0.0;
    while (fn(p) >= t) {
      p -= step;
      step *= 2.0;
      if (!std::isfinite(p) || step > 1e300) return -kInf;
    }
    lo = p;
  } else if (fn(lo) >= t) {
    return lo;
  }
  if (!std::isfinite(hi)) {
    double step = 1.0;
    double p = std::max(lo + 1.0, 0.0);
    while (fn(p) < t) {
      p += step;
      step *= 2.0;
      if (!std::isfinite(p) || step > 1e300) return kInf;
    }
    hi = p;
  } else if (fn(hi) < t) {
    return kInf;
  }
  // Invariant: fn(lo) < t <= fn(hi).
  for (int it = 0; it < 2000; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) break;
    if (fn(mid) >= t) hi = mid; else lo = mid;
  }
  return hi;
}

namespace detail {

class CdfModel {
 public:
  virtual ~CdfModel() = default;
  virtual Family family() const = 0;
  virtual double cdf(double t) const = 0;
  virtual double sf(double t) const { return 1.0 - cdf(t); }
  virtual double pdf(double t) const = 0;
  /// Generalized inverse for u in (0, 1].
  virtual double quantile(double u) const = 0;
  virtual Support support() const = 0;
  virtual std::vector<double> breakpoints() const {
    std::vector<double> out;
    const Support s = support();
    if (std::isfinite(s.lo)) out.push_back(s.lo);
    if (std::isfinite(s.hi) && s.hi != s.lo) out.push_back(s.hi);
    return out;
  }
  virtual bool absolutely_continuous() const { return true; }
  virtual std::optional<double> closed_entropy() const { return std::nullopt; }
};

class UniformModel final : public CdfModel {
 public:
  UniformModel(double a, double b) : a_(a), b_(b) {
    if (!(std::isfinite(a) && std::isfinite(b) && a < b)) throw InvalidInput("uniform: need finite a < b");
  }
  Family family() const override { return Family::uniform; }
  double cdf(double t) const override { return t <= a_ ? 0.0 : t >= b_ ? 1.0 : (t - a_) / (b_ - a_); }
  double sf(double t) const override { return t <= a_ ? 1.0 : t >= b_ ? 0.0 : (b_ - t) / (b_ - a_); }
  double pdf(double t) const override { return (t >= a_ && t <= b_) ? 1.0 / (b_ - a_) : 0.0; }
  double quantile(double u) const override { return a_ + u * (b_ - a_); }
  Support support() const override { return {a_, b_}; }
  std::optional<double> closed_entropy() const override { return std::log(b_ - a_); }
  double a() const { return a_; }
  double b() const { return b_; }

 private:
  double a_, b_;
};

class ExponentialModel final : public CdfModel {
 public:
  explicit ExponentialModel(double rate) : rate_(rate) {
    if (!(std::isfinite(rate) && rate > 0.0)) throw InvalidInput("exponential: rate must be positive");
  }
  Family family() const override { return Family::exponential; }
  double cdf(double t) const override { return t <= 0.0 ? 0.0 : -std::expm1(-rate_ * t); }
  double sf(double t) const override { return t <= 0.0 ? 1.0 : std::exp(-rate_ * t); }
  double pdf(double t) const override { return t < 0.0 ? 0.0 : rate_ * std::exp(-rate_ * t); }
  double quantile(double u) const override { return u >= 1.0 ? kInf : -std::log1p(-u) / rate_; }
  Support support() const override { return {0.0, kInf}; }
  std::optional<double> closed_entropy() const override { return 1.0 - std::log(rate_); }
  double rate() const { return rate_; }

 private:
  double rate_;
};

/// Beta(1, k): density k (1 - t)^{k-1} on (0, 1).
class Beta1kModel final : public CdfModel {
 public:
  explicit Beta1kModel(int k) : k_(k) {
    if (k < 1) throw InvalidInput("beta_1_k: k must be an integer >= 1");
  }
  Family family() const override { return Family::beta_1_k; }
  double cdf(double t) const override {
    return t <= 0.0 ? 0.0 : t >= 1.0 ? 1.0 : -std::expm1(k_ * std::log1p(-t));
  }
  double sf(double t) const override { return t <= 0.0 ? 1.0 : t >= 1.0 ? 0.0 : std::exp(k_ * std::log1p(-t)); }
  double pdf(double t) const override {
    if (t < 0.0 || t > 1.0) return 0.0;
    return k_ == 1 ? 1.0 : k_ * std::pow(1.0 - t, k_ - 1);
  }
  double quantile(double u) const override { return u >= 1.0 ? 1.0 : -std::expm1(std::log1p(-u) / k_); }
  Support support() const override { return {0.0, 1.0}; }
  std::optional<double> closed_entropy() const override {
    return -std::log(static_cast<double>(k_)) + static_cast<double>(k_ - 1) / k_;
  }
  int k() const { return k_; }

 private:
  int k_;
};

class PiecewiseLinearModel final : public CdfModel {
 public:
  PiecewiseLinearModel(std::vector<Knot> knots, bool absolutely_continuous)
      : knots_(std::move(knots)), ac_(absolutely_continuous) {
    if (knots_.size() < 2) throw InvalidInput("piecewise_linear: need at least two knots");
    for (std::size_t k = 0; k < knots_.size(); ++k) {
      const Knot& kn = knots_[k];
      if (!std::isfinite(kn.x) || !(kn.F >= 0.0 && kn.F <= 1.0)) {
        throw InvalidInput("piecewise_linear: knots need finite abscissae and CDF values in [0,1]");
      }
      if (k > 0 && !(knots_[k - 1].x < kn.x)) throw InvalidInput("piecewise_linear: abscissae must increase strictly");
      if (k > 0 && knots_[k - 1].F > kn.F) throw InvalidInput("piecewise_linear: CDF values must be non-decreasing");
    }
    if (knots_.front().F != 0.0 || knots_.back().F != 1.0) {
      throw InvalidInput("piecewise_linear: first CDF value must be 0 and last must be 1");
    }
  }
  Family family() const override { return Family::piecewise_linear; }

  double cdf(double t) const override {
    if (t <= knots_.front().x) return 0.0;
    if (t >= knots_.back().x) return 1.0;
    const std::size_t k = segment(t);
    const Knot& l = knots_[k];
    const Knot& r = knots_[k + 1];
    return l.F + (r.F - l.F) * ((t - l.x) / (r.x - l.x));
  }
  double sf(double t) const override {
    if (t <= knots_.front().x) return 1.0;
    if (t >= knots_.back().x) return 0.0;
    const std::size_t k = segment(t);
    const Knot& l = knots_[k];
    const Knot& r = knots_[k + 1];
    const double sl = 1.0 - l.F;
    const double sr = 1.0 - r.F;
    return sl + (sr - sl) * ((t - l.x) / (r.x - l.x));
  }
  double pdf(double t) const override {
    if (t < knots_.front().x || t >= knots_.back().x) return 0.0;
    const std::size_t k = segment(t);
    return (knots_[k + 1].F - knots_[k].F) / (knots_[k + 1].x - knots_[k].x);
  }
  double quantile(double u) const override {
    // First knot whose value reaches u; interpolate on the segment before it.
    auto it = std::lower_bound(knots_.begin(), knots_.end(), u, [](const Knot& kn, double v) { return kn.F < v; });
    if (it == knots_.end()) return kInf;
    if (it == knots_.begin()) return it->x;
    const Knot& l = *(it - 1);
    const Knot& r = *it;
    const double frac = (u - l.F) / (r.F - l.F);
    return frac >= 1.0 ? r.x : l.x + frac * (r.x - l.x);
  }
  Support support() const override {
    double lo = knots_.front().x;
    for (const auto& kn : knots_) {
      if (kn.F == 0.0) lo = kn.x; else break;
    }
    double hi = knots_.back().x;
    for (const auto& kn : knots_) {
      if (kn.F == 1.0) { hi = kn.x; break; }
    }
    return {lo, hi};
  }
  std::vector<double> breakpoints() const override {
    std::vector<double> out;
    out.reserve(knots_.size());
    for (const auto& kn : knots_) out.push_back(kn.x);
    return out;
  }
  bool absolutely_continuous() const override { return ac_; }
  std::optional<double> closed_entropy() const override {
    if (!ac_) return -kInf;
    double h = 0.0;
    for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
      const double dF = knots_[k + 1].F - knots_[k].F;
      if (dF > 0.0) h -= dF * std::log(dF / (knots_[k + 1].x - knots_[k].x));
    }
    return h;
  }
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  // Segment index k with knots_[k].x <= t < knots_[k+1].x.
  std::size_t segment(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t, [](double v, const Knot& kn) { return v < kn.x; });
    return static_cast<std::size_t>(it - knots_.begin()) - 1;
  }

  std::vector<Knot> knots_;
  bool ac_;
};

/// CDF of the r-th smallest of n iid uniforms: sum_{k=r}^{n} C(n,k) t^k (1-t)^{n-k}.
class UniformOrderStatisticModel final : public CdfModel {
 public:
  UniformOrderStatisticModel(int n, int r) : n_(n), r_(r) {
    if (n < 1 || r < 1 || r > n) throw InvalidInput("uniform_order_statistic: need 1 <= rank <= n");
  }
  Family family() const override { return Family::uniform_order_statistic; }
  // Beta(r, n - r + 1).
  double cdf(double t) const override {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return boost::math::ibeta(a(), b(), t);
  }
  double sf(double t) const override {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    return boost::math::ibetac(a(), b(), t);
  }
  double pdf(double t) const override {
    if (t < 0.0 || t > 1.0) return 0.0;
    return boost::math::ibeta_derivative(a(), b(), t);
  }
  double quantile(double u) const override {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return boost::math::ibeta_inv(a(), b(), u);
  }
  Support support() const override { return {0.0, 1.0}; }
  std::optional<double> closed_entropy() const override {
    // Beta(a, b) entropy with integer a = r, b = n - r + 1.
    const double log_beta = std::lgamma(a()) + std::lgamma(b()) - std::lgamma(a() + b());
    using boost::math::digamma;
    return log_beta - (a() - 1) * digamma(a()) - (b() - 1) * digamma(b()) + (a() + b() - 2) * digamma(a() + b());
  }
  int n() const { return n_; }
  int rank() const { return r_; }

 private:
  double a() const { return r_; }
  double b() const { return n_ - r_ + 1; }

  int n_, r_;
};

}  // namespace detail

/// A continuous one-dimensional CDF with density, survival function and
/// generalized inverse. Cheap to copy; the underlying model is immutable and
/// shared.
class MarginalCdf {
 public:
  static MarginalCdf uniform(double a, double b) { return MarginalCdf(std::make_shared<detail::UniformModel>(a, b)); }
  static MarginalCdf exponential(double rate) { return MarginalCdf(std::make_shared<detail::ExponentialModel>(rate)); }
  static MarginalCdf beta_1_k(int k) { return MarginalCdf(std::make_shared<detail::Beta1kModel>(k)); }
  static MarginalCdf piecewise_linear(std::vector<Knot> knots, bool absolutely_continuous = true) {
    return MarginalCdf(std::make_shared<detail::PiecewiseLinearModel>(std::move(knots), absolutely_continuous));
  }
  static MarginalCdf uniform_order_statistic(int n, int rank) {
    return MarginalCdf(std::make_shared<detail::UniformOrderStatisticModel>(n, rank));
  }
  static MarginalCdf average(std::vector<MarginalCdf> components);
  static MarginalCdf composed(MarginalCdf base, MarginalCdf average);

  explicit MarginalCdf(std::shared_ptr<const detail::CdfModel> model) : model_(std::move(model)) {}

  Family family() const { return model_->family(); }
  double operator()(double t) const { return cdf(t); }
  double cdf(double t) const { return model_->cdf(t); }
  double sf(double t) const { return model_->sf(t); }
  double pdf(double t) const { return model_->pdf(t); }

  /// inf{s : F(s) >= u}, with -inf for u <= 0 and +inf for u > 1.
  double quantile(double u) const {
    if (std::isnan(u)) return u;
    if (u <= 0.0) return -kInf;
    if (u > 1.0) return kInf;
    return model_->quantile(u);
  }

  Support support() const { return model_->support(); }
  std::vector<double> breakpoints() const { return model_->breakpoints(); }
  bool absolutely_continuous() const { return model_->absolutely_continuous(); }

  /// Differential entropy -int f log f; closed form where the family has one,
  /// otherwise adaptive quadrature over the support. -inf when the law has no density.
  double entropy() const {
    if (!absolutely_continuous()) return -kInf;
    if (auto h = model_->closed_entropy()) return *h;
    return quadrature_entropy();
  }

  double quadrature_entropy() const {
    if (!absolutely_continuous()) return -kInf;
    const Support s = support();
    std::vector<double> pts{s.lo};
    for (double b : breakpoints()) {
      if (b > s.lo && b < s.hi) pts.push_back(b);
    }
    pts.push_back(s.hi);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto integrand = [this](double t) {
      const double f = pdf(t);
      return f < 1e-300 ? 0.0 : -f * std::log(f);
    };
    return quad::integrate_pieces(integrand, pts, {1e-12, 1e-15, 12}).value;
  }

  template <class Model>
  const Model* as() const {
    return dynamic_cast<const Model*>(model_.get());
  }
  const detail::CdfModel& model() const { return *model_; }
  bool same_model(const MarginalCdf& other) const { return model_ == other.model_; }

 private:
  std::shared_ptr<const detail::CdfModel> model_;
};

namespace detail {

/// G = (1/d) sum F_i.
class AverageModel final : public CdfModel {
 public:
  explicit AverageModel(std::vector<MarginalCdf> comps) : comps_(std::move(comps)) {
    if (comps_.empty()) throw InvalidInput("average of zero CDFs");
    table_.resize(kTable + 1);
    for (std::size_t k = 1; k < kTable; ++k) table_[k] = bracketed_quantile(static_cast<double>(k) / kTable);
  }
  Family family() const override { return Family::average; }
  double cdf(double t) const override { return mean([t](const MarginalCdf& F) { return F.cdf(t); }); }
  double sf(double t) const override { return mean([t](const MarginalCdf& F) { return F.sf(t); }); }
  double pdf(double t) const override { return mean([t](const MarginalCdf& F) { return F.pdf(t); }); }
  double quantile(double u) const override {
    // Density evaluations invert G at the same few points repeatedly.
    struct Entry {
      std::uint64_t owner;
      double u, x;
    };
    thread_local std::array<Entry, 8> memo{};
    thread_local std::size_t next = 0;
    for (const Entry& e : memo) {
      if (e.owner == id_ && e.u == u) return e.x;
    }
    const double x = solve(u);
    memo[next] = {id_, u, x};
    next = (next + 1) % memo.size();
    return x;
  }

 private:
  double solve(double u) const {
    if (!(u > 0.0 && u < 1.0)) return bracketed_quantile(u);
    const double pos = u * static_cast<double>(kTable);
    const std::size_t k = static_cast<std::size_t>(pos);
    if (k == 0 || k + 1 >= kTable) return bracketed_quantile(u);
    // G(table_[k]) = k / kTable <= u <= G(table_[k + 1]).
    const double lo = table_[k], hi = table_[k + 1];
    return refine(u, lo, hi, lo + (pos - static_cast<double>(k)) * (hi - lo));
  }

 public:
  Support support() const override {
    Support s{kInf, -kInf};
    for (const auto& F : comps_) {
      const Support c = F.support();
      s.lo = std::min(s.lo, c.lo);
      s.hi = std::max(s.hi, c.hi);
    }
    return s;
  }
  std::vector<double> breakpoints() const override {
    std::vector<double> out;
    for (const auto& F : comps_) {
      const auto b = F.breakpoints();
      out.insert(out.end(), b.begin(), b.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  bool absolutely_continuous() const override {
    return std::all_of(comps_.begin(), comps_.end(), [](const MarginalCdf& F) { return F.absolutely_continuous(); });
  }
  const std::vector<MarginalCdf>& components() const { return comps_; }

 private:
  static constexpr std::size_t kTable = 256;

  // The inverse of an average is bracketed by the smallest and the largest
  // component quantile.
  double bracketed_quantile(double u) const {
    double lo = kInf, hi = -kInf;
    for (const auto& F : comps_) {
      const double q = F.quantile(u);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    if (lo == hi || !(u > 0.0 && u < 1.0)) {
      return lo == hi ? lo : generalized_inverse([this](double s) { return cdf(s); }, u, lo, hi);
    }
    return refine(u, lo, hi, 0.5 * (lo + hi));
  }

  // Safeguarded Newton inside G(lo) <= u <= G(hi). Fallback steps bisect
  // geometrically when the bracket spans orders of magnitude.
  double refine(double u, double lo, double hi, double x) const {
    auto split = [](double a, double b) {
      if (a > 0.0 && b > 4.0 * a) return std::sqrt(a) * std::sqrt(b);
      if (b < 0.0 && a < 4.0 * b) return -std::sqrt(-a) * std::sqrt(-b);
      return a + 0.5 * (b - a);
    };
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int it = 0; it < 200; ++it) {
      const double fx = cdf(x) - u;
      if (fx >= 0.0) hi = x; else lo = x;
      if (fx == 0.0 || hi - lo <= 4.0 * eps * std::max(std::abs(lo), std::abs(hi))) break;
      const double p = pdf(x);
      double next = p > 0.0 ? x - fx / p : lo;
      if (!(next > lo && next < hi)) next = split(lo, hi);
      if (std::abs(next - x) <= 2.0 * eps * std::abs(x)) {
        x = next;
        break;
      }
      x = next;
    }
    if (pdf(x) > 0.0) return x;
    // Flat region: settle the left end exactly.
    return generalized_inverse([this](double s) { return cdf(s); }, u, lo, hi);
  }

  template <class Fn>
  double mean(Fn fn) const {
    double s = 0.0;
    for (const auto& F : comps_) s += fn(F);
    return s / static_cast<double>(comps_.size());
  }
  std::vector<MarginalCdf> comps_;
  std::vector<double> table_;
  std::uint64_t id_ = next_id();

  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }
};

/// delta = F o G^{-1} on [0, 1], with inverse G o F^{-1}.
class ComposedModel final : public CdfModel {
 public:
  ComposedModel(MarginalCdf base, MarginalCdf average) : base_(std::move(base)), avg_(std::move(average)) {}
  Family family() const override { return Family::composed; }
  double cdf(double s) const override {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return base_.cdf(avg_.quantile(s));
  }
  double sf(double s) const override {
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    return base_.sf(avg_.quantile(s));
  }
  double pdf(double s) const override {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double x = avg_.quantile(s);
    const double g = avg_.pdf(x);
    return g > 0.0 ? base_.pdf(x) / g : 0.0;
  }
  double quantile(double u) const override { return avg_.cdf(base_.quantile(u)); }
  Support support() const override {
    const Support b = base_.support();
    return {avg_.cdf(b.lo), avg_.cdf(b.hi)};
  }
  std::vector<double> breakpoints() const override {
    std::vector<double> out{0.0, 1.0};
    for (double b : avg_.breakpoints()) out.push_back(avg_.cdf(b));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  bool absolutely_continuous() const override {
    return base_.absolutely_continuous() && avg_.absolutely_continuous();
  }
  // Not a closed form: -int f log(f / g) on the base scale, which avoids
  // inverting G at every node.
  std::optional<double> closed_entropy() const override {
    if (!absolutely_continuous()) return -kInf;
    const Support s = base_.support();
    std::vector<double> pts{s.lo, s.hi};
    for (double b : avg_.breakpoints()) {
      if (b > s.lo && b < s.hi) pts.push_back(b);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto integrand = [this](double x) {
      const double f = base_.pdf(x);
      const double g = avg_.pdf(x);
      return (f < 1e-300 || g <= 0.0) ? 0.0 : -f * std::log(f / g);
    };
    return quad::integrate_pieces(integrand, pts, {1e-12, 1e-15, 12}).value;
  }
  const MarginalCdf& base() const { return base_; }
  const MarginalCdf& average() const { return avg_; }

 private:
  MarginalCdf base_;
  MarginalCdf avg_;
};

}  // namespace detail

inline MarginalCdf MarginalCdf::average(std::vector<MarginalCdf> components) {
  return MarginalCdf(std::make_shared<detail::AverageModel>(std::move(components)));
}

inline MarginalCdf MarginalCdf::composed(MarginalCdf base, MarginalCdf average) {
  return MarginalCdf(std::make_shared<detail::ComposedModel>(std::move(base), std::move(average)));
}

/// Generalized inverse of a CDF; identical to F.quantile(t).
inline double generalized_inverse(const MarginalCdf& F, double t) { return F.quantile(t); }

}  // namespace maxentos
