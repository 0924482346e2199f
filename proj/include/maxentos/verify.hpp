#pragma once

// Independent numerical checks: tensor quadrature and Monte-Carlo entropy
// estimators, normalization, Kolmogorov-Smirnov marginal tests and the
// cross-identities between the marginal, multidiagonal, copula and joint layers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxentos/copula.hpp"
#include "maxentos/error.hpp"
#include "maxentos/hazard.hpp"
#include "maxentos/joint.hpp"
#include "maxentos/marginals.hpp"
#include "maxentos/multidiag.hpp"
#include "maxentos/quadrature.hpp"
#include "maxentos/random.hpp"

namespace maxentos {

using DensityFn = std::function<double(std::span<const double>)>;

// ---------------------------------------------------------------------------
// Integration domains, described coordinate by coordinate.

namespace domains {

namespace detail {

inline void add_inside(std::vector<double>& pts, double lo, double hi, double x) {
  if (x > lo && x < hi && std::isfinite(x)) pts.push_back(x);
}

inline std::vector<double> finish(std::vector<double> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace detail

inline quad::IteratedDomain unit_cube(std::size_t d) {
  return {d, [](std::span<const double>) { return std::vector<double>{0.0, 1.0}; }, 1.0};
}

/// L^F on the data scale: x_1 over the support of F_1, then x_i from x_{i-1}
/// to the end of the Psi_i interval containing x_{i-1}.
inline quad::IteratedDomain joint_support(const MarginalVector& F) {
  const std::size_t d = F.dim();
  std::vector<double> bps;
  for (const MarginalCdf& m : F.margins()) {
    for (double b : m.breakpoints()) bps.push_back(b);
  }
  auto pieces = [F, bps, d](std::span<const double> prefix) {
    const std::size_t c = prefix.size();
    double lo, hi;
    if (c == 0) {
      lo = F.margin(1).support().lo;
      hi = F.margin(1).support().hi;
    } else {
      const IntervalSet& psi = F.psi(c + 1);
      const auto j = psi.find(prefix[c - 1]);
      if (!j) return std::vector<double>{};
      lo = prefix[c - 1];
      hi = std::min(psi[*j].hi, F.margin(c + 1).support().hi);
    }
    if (!(lo < hi)) return std::vector<double>{};
    std::vector<double> pts{lo, hi};
    for (double b : bps) detail::add_inside(pts, lo, hi, b);
    if (c + 2 <= d) {
      for (const Interval& iv : F.psi(c + 2)) {
        detail::add_inside(pts, lo, hi, iv.lo);
        detail::add_inside(pts, lo, hi, iv.hi);
      }
    }
    return detail::finish(std::move(pts));
  };
  return {d, pieces, 1.0};
}

/// The sorted part of L_delta in [0, 1]^d, with multiplicity d! for
/// symmetric integrands.
inline quad::IteratedDomain sorted_simplex(const Multidiagonal& delta) {
  const std::size_t d = delta.dim();
  std::vector<double> bps;
  for (const MarginalCdf& m : delta.components()) {
    for (double b : m.breakpoints()) bps.push_back(b);
  }
  auto pieces = [delta, bps, d](std::span<const double> prefix) {
    const std::size_t c = prefix.size();
    double lo = 0.0, hi = 1.0;
    if (c > 0) {
      const IntervalSet& psi = delta.psi(c + 1);
      const auto j = psi.find(prefix[c - 1]);
      if (!j) return std::vector<double>{};
      lo = prefix[c - 1];
      hi = std::min(psi[*j].hi, 1.0);
    }
    if (!(lo < hi)) return std::vector<double>{};
    std::vector<double> pts{lo, hi};
    for (double b : bps) detail::add_inside(pts, lo, hi, b);
    if (c + 2 <= d) {
      for (const Interval& iv : delta.psi(c + 2)) {
        detail::add_inside(pts, lo, hi, iv.lo);
        detail::add_inside(pts, lo, hi, iv.hi);
      }
    }
    return detail::finish(std::move(pts));
  };
  return {d, pieces, std::exp(log_factorial(d))};
}

/// Support of c_F in [0, 1]^d: u_1 free, then u_i between F_i(x_{i-1}) and
/// F_i at the end of the Psi_i interval containing x_{i-1} = F_{i-1}^{-1}(u_{i-1}).
inline quad::IteratedDomain copula_F_support(const MarginalVector& F) {
  const std::size_t d = F.dim();
  auto pieces = [F, d](std::span<const double> prefix) {
    const std::size_t c = prefix.size();
    const MarginalCdf& Fi = F.margin(c + 1);
    double lo = 0.0, hi = 1.0;
    if (c > 0) {
      const double x = F.margin(c).quantile(prefix[c - 1]);
      const IntervalSet& psi = F.psi(c + 1);
      const auto j = psi.find(x);
      if (!j) return std::vector<double>{};
      lo = Fi.cdf(x);
      hi = Fi.cdf(psi[*j].hi);
    }
    if (!(lo < hi)) return std::vector<double>{};
    std::vector<double> pts{lo, hi};
    for (double b : Fi.breakpoints()) detail::add_inside(pts, lo, hi, Fi.cdf(b));
    if (c + 2 <= d) {
      for (const Interval& iv : F.psi(c + 2)) {
        detail::add_inside(pts, lo, hi, Fi.cdf(iv.lo));
        detail::add_inside(pts, lo, hi, Fi.cdf(iv.hi));
      }
    }
    return detail::finish(std::move(pts));
  };
  return {d, pieces, 1.0};
}

}  // namespace domains

// ---------------------------------------------------------------------------
// Estimators.

inline constexpr std::size_t kMaxQuadDim = 3;

/// int f over the domain by iterated tanh-sinh with `resolution` nodes per axis.
template <class F>
double quad_integral(F&& f, const quad::IteratedDomain& dom, std::size_t resolution) {
  if (dom.dim > kMaxQuadDim) throw DimensionTooLarge("tensor quadrature is limited to d <= 3");
  return quad::integrate_iterated(f, dom, resolution);
}

/// -int f log f over the domain, with f log f = 0 where f < 1e-300.
template <class F>
double quad_entropy(F&& f, const quad::IteratedDomain& dom, std::size_t resolution) {
  return quad_integral(
      [&f](std::span<const double> x) {
        const double v = f(x);
        return v < 1e-300 ? 0.0 : -v * std::log(v);
      },
      dom, resolution);
}

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Mean of the values with its jackknife standard error.
inline McEstimate jackknife_mean(const std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n == 0) throw EmptySample("no samples");
  const double sum = std::accumulate(y.begin(), y.end(), 0.0);
  const double mean = sum / static_cast<double>(n);
  if (n == 1) return {mean, kInf, 1};
  // Leave-one-out means (sum - y_k) / (n - 1) average back to the mean.
  double ss = 0.0;
  for (double v : y) {
    const double loo = (sum - v) / static_cast<double>(n - 1);
    ss += (loo - mean) * (loo - mean);
  }
  return {mean, std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n)), n};
}

/// -(1/n) sum_k log f(X_k) over the rows of a row-major sample.
template <class LogF>
McEstimate mc_entropy_of_sample(const std::vector<double>& rows, std::size_t d, LogF&& log_f) {
  const std::size_t n = d == 0 ? 0 : rows.size() / d;
  if (n == 0) throw EmptySample("mc_entropy needs n >= 1");
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double l = log_f(std::span<const double>(rows.data() + k * d, d));
    if (!std::isfinite(l)) throw Degenerate("sampled point has zero or infinite density");
    y[k] = -l;
  }
  return jackknife_mean(y);
}

inline McEstimate mc_entropy(const MaxEntModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw EmptySample("mc_entropy needs n >= 1");
  if (model.degeneracy().verdict != Verdict::ok) throw Degenerate(model.degeneracy().message);
  const auto rows = model.sample(n, seed);
  return mc_entropy_of_sample(rows, model.dim(), [&](std::span<const double> x) { return model.log_density(x); });
}

inline McEstimate mc_entropy(const CopulaKernel& kernel, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw EmptySample("mc_entropy needs n >= 1");
  const auto rows = kernel.sample(n, seed);
  return mc_entropy_of_sample(rows, kernel.dim(), [&](std::span<const double> u) { return kernel.log_density(u); });
}

/// sup_t |F_n(t) - F(t)| for the empirical CDF F_n of the samples.
inline double ks_distance(std::vector<double> samples, const MarginalCdf& F) {
  if (samples.empty()) throw EmptySample("ks_distance needs at least one sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double D = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double f = F.cdf(samples[k]);
    D = std::max({D, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  return D;
}

/// Critical value of the one-sample KS distance at level 0.01.
inline double ks_critical_001(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

/// Monte-Carlo normalization check of a density on the sorted support of a
/// hazard chain. Uniform points u are pushed through the chain's
/// inverse-transform map T; the Jacobian of T is triangular, and its diagonal
/// is estimated by central differences, so f(T(u)) |det DT(u)| has mean
/// int f and equals 1 pointwise when f is the density of the chain.
template <class F>
McEstimate mc_normalization(const HazardChain& chain, F&& density_sorted, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw EmptySample("mc_normalization needs n >= 1");
  const std::size_t d = chain.dim();
  std::mt19937_64 rng = make_stream(seed, 0x6e6f726dULL);
  std::vector<double> y(n), x(d);
  for (std::size_t k = 0; k < n; ++k) {
    double jac = 1.0;
    const double u = uniform_open01(rng);
    const double hu = 1e-6 * std::min(u, 1.0 - u);
    x[0] = chain.first().quantile(u);
    jac *= (chain.first().quantile(u + hu) - chain.first().quantile(u - hu)) / (2.0 * hu);
    for (std::size_t i = 2; i <= d; ++i) {
      const double v = uniform_open01(rng);
      const double e = -std::log1p(-v);
      const double he = 1e-5 * std::min(1.0, e);
      const PairHazard& h = chain.hazard(i);
      x[i - 1] = HazardChain::solve_conditional(h, x[i - 2], e);
      const double dxde = (HazardChain::solve_conditional(h, x[i - 2], e + he) -
                           HazardChain::solve_conditional(h, x[i - 2], e - he)) /
                          (2.0 * he);
      jac *= dxde / (1.0 - v);
    }
    y[k] = density_sorted(std::span<const double>(x)) * jac;
  }
  return jackknife_mean(y);
}

// ---------------------------------------------------------------------------
// Report.

struct Check {
  std::string name;
  double expected = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

struct McSettings {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> ks_seeds;
  std::map<std::string, double> std_error;
};

struct VerificationReport {
  std::vector<Check> checks;
  McSettings mc;
  std::string verdict;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }

  const Check* find(const std::string& name) const {
    for (const Check& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  /// Records |observed - expected| <= tolerance.
  Check& add(std::string name, double expected, double observed, double tolerance, std::string note = {}) {
    const bool same_inf = std::isinf(expected) && expected == observed;
    const bool ok = same_inf || std::abs(observed - expected) <= tolerance;
    checks.push_back({std::move(name), expected, observed, tolerance, ok, std::move(note)});
    return checks.back();
  }

  Check& add_flag(std::string name, bool ok, std::string note = {}) {
    checks.push_back({std::move(name), 1.0, ok ? 1.0 : 0.0, 0.0, ok, std::move(note)});
    return checks.back();
  }

  nlohmann::json to_json() const {
    auto num = [](double v) -> nlohmann::json {
      if (std::isnan(v)) return "nan";
      if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
      return v;
    };
    nlohmann::json j;
    j["verdict"] = verdict;
    j["all_passed"] = all_passed();
    j["checks"] = nlohmann::json::array();
    for (const Check& c : checks) {
      j["checks"].push_back({{"name", c.name},
                             {"expected", num(c.expected)},
                             {"observed", num(c.observed)},
                             {"tolerance", num(c.tolerance)},
                             {"passed", c.passed},
                             {"note", c.note}});
    }
    nlohmann::json se = nlohmann::json::object();
    for (const auto& [k, v] : mc.std_error) se[k] = num(v);
    j["mc_settings"] = {{"n", mc.n}, {"seed", mc.seed}, {"ks_seeds", mc.ks_seeds}, {"std_error", se}};
    return j;
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(10);
    os << "verdict: " << verdict << "\n";
    for (const Check& c : checks) {
      os << (c.passed ? "PASS " : "FAIL ") << c.name << ": expected " << c.expected << ", observed " << c.observed
         << ", tolerance " << c.tolerance;
      if (!c.note.empty()) os << " (" << c.note << ")";
      os << "\n";
    }
    os << "mc: n = " << mc.n << ", seed = " << mc.seed << "\n";
    for (const auto& [k, v] : mc.std_error) os << "  stderr " << k << " = " << v << "\n";
    os << (all_passed() ? "all checks passed" : "some checks FAILED") << "\n";
    return os.str();
  }
};

struct Budget {
  std::size_t mc_n = 200000;
  std::size_t quad_resolution_2d = 512;  // nodes per axis
  std::size_t quad_resolution_3d = 64;
  std::size_t ks_n = 10000;
  std::vector<std::uint64_t> ks_seeds{0, 1, 2};
  std::size_t spot_points = 100;
  std::uint64_t seed = 0;

  std::size_t resolution(std::size_t d) const { return d <= 2 ? quad_resolution_2d : quad_resolution_3d; }
};

namespace detail {

inline double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// Column i (0-based) of a row-major sample.
inline std::vector<double> column(const std::vector<double>& rows, std::size_t d, std::size_t i) {
  std::vector<double> c(rows.size() / d);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = rows[k * d + i];
  return c;
}

inline void marginal_ks_checks(VerificationReport& rep, const std::function<std::vector<double>(std::uint64_t)>& draw,
                               const std::vector<MarginalCdf>& margins, const Budget& b, const std::string& prefix) {
  const std::size_t d = margins.size();
  std::vector<std::vector<double>> D(d);
  for (std::uint64_t s : b.ks_seeds) {
    const auto rows = draw(s);
    for (std::size_t i = 0; i < d; ++i) D[i].push_back(ks_distance(column(rows, d, i), margins[i]));
  }
  const double crit = ks_critical_001(b.ks_n);
  for (std::size_t i = 0; i < d; ++i) {
    std::sort(D[i].begin(), D[i].end());
    const std::size_t passing = static_cast<std::size_t>(std::count_if(D[i].begin(), D[i].end(), [&](double x) { return x < crit; }));
    // Majority statistic: the distance of the median run.
    const double med = D[i][D[i].size() / 2];
    auto& c = rep.add(prefix + std::to_string(i + 1), 0.0, med, crit,
                      std::to_string(passing) + " of " + std::to_string(D[i].size()) + " runs below 1.63/sqrt(n)");
    c.passed = 2 * passing > D[i].size();
  }
}

}  // namespace detail

/// Runs every cross-check that applies to F; failures are report entries.
inline VerificationReport run_full_verification(const MarginalVector& F, const Budget& b = {}) {
  VerificationReport rep;
  rep.mc.n = b.mc_n;
  rep.mc.seed = b.seed;
  rep.mc.ks_seeds = b.ks_seeds;
  const std::size_t d = F.dim();

  const auto& order = F.order();
  rep.add_flag("stochastic_order", order.ok, order.message);
  if (!order.ok) {
    rep.verdict = "invalid";
    return rep;
  }

  const SigmaMeasure sig = sigma_measure(F);
  rep.add("sigma_measure", 0.0, sig.measure, kEqualityTol);

  const Multidiagonal delta = Multidiagonal::from_marginals(F);
  const MultidiagonalReport mrep = validate_multidiagonal(delta);
  rep.add("multidiagonal_sum_identity", 0.0, mrep.max_sum_residual, kSumTol, mrep.message);

  double inv_err = 0.0;
  for (std::size_t i = 1; i <= d; ++i) {
    const MarginalCdf& c = delta.component(i);
    for (int k = 1; k < 100; ++k) {
      const double u = k / 100.0;
      const double generic = generalized_inverse([&c](double s) { return c.cdf(s); }, u, 0.0, 1.0);
      inv_err = std::max(inv_err, std::abs(generic - delta.inverse(i, u)));
    }
  }
  rep.add("multidiagonal_inverse_identity", 0.0, inv_err, 1e-9);

  if (d >= 2) {
    double worst = 0.0;
    for (const MarginalCdf& c : delta.components()) worst = std::max(worst, std::abs(c.entropy()));
    const double bound = static_cast<double>(d) * std::log(static_cast<double>(d));
    auto& c = rep.add("multidiagonal_entropy_bound", 0.0, worst, bound, "max_i |H(delta_i)| <= d log d");
    c.passed = worst <= bound;
  }

  const DegeneracyReport& deg = detect_degenerate(F);
  rep.verdict = to_string(deg.verdict);
  const JValue Jd = j_functional_delta(delta);
  if (!deg.J.finite || !Jd.finite) {
    rep.add("j_transport", deg.J.value, Jd.value, 1e-6, "infinite values must agree");
  } else {
    rep.add("j_transport", deg.J.value, Jd.value, 1e-6);
  }
  rep.add_flag("non_degenerate", deg.verdict == Verdict::ok, deg.message);
  if (!deg.in_F0) {
    rep.add_flag("density_checks", true, "skipped: no absolutely continuous order-statistics law");
    return rep;
  }

  const MaxEntModel model(F);
  const OrderStatisticsCopula cF(F);
  const CopulaKernel& kernel = cF.kernel();
  const std::size_t res = b.resolution(d);
  std::mt19937_64 rng = make_stream(b.seed, 0x73706f74ULL);

  // c_delta: normalization, symmetry, B E identity, multidiagonal recovery.
  auto cdelta = [&kernel](std::span<const double> u) { return kernel.density(u); };
  if (d <= kMaxQuadDim) {
    const double mass = quad_integral(cdelta, domains::sorted_simplex(delta), res);
    rep.add("c_delta_normalization", 1.0, mass, 1e-6, "tensor quadrature");
  } else {
    const double dfact = std::exp(log_factorial(d));
    const McEstimate m = mc_normalization(kernel.chain(), [&](std::span<const double> v) { return dfact * cdelta(v); },
                                          std::min<std::size_t>(b.mc_n, 20000), b.seed);
    rep.mc.std_error["c_delta_normalization"] = m.std_error;
    rep.add("c_delta_normalization", 1.0, m.estimate, 2e-3, "Monte Carlo");
  }

  {
    double worst = 0.0;
    std::vector<double> u(d), p(d);
    for (std::size_t k = 0; k < 20; ++k) {
      for (double& x : u) x = uniform_open01(rng);
      p = u;
      for (std::size_t r = d; r > 1; --r) {
        std::swap(p[r - 1], p[static_cast<std::size_t>(uniform_open01(rng) * static_cast<double>(r))]);
      }
      worst = std::max(worst, std::abs(kernel.density(u) - kernel.density(p)));
    }
    rep.add("c_delta_symmetry", 0.0, worst, 0.0);
  }

  {
    double worst = 0.0;
    for (std::size_t i = 2; i <= d; ++i) {
      for (const Interval& iv : delta.psi(i)) {
        for (int k = 1; k <= 20; ++k) {
          const double t = iv.lo + (iv.hi - iv.lo) * (k - 0.5) / 20.0;
          if (!delta.psi(i).contains(t)) continue;
          const double lhs = kernel.B(i, t) * kernel.E(i - 1, t);
          const double rhs = cdf_gap(delta.component(i - 1), delta.component(i), t);
          worst = std::max(worst, std::abs(lhs - rhs));
        }
      }
    }
    rep.add("B_E_identity", 0.0, worst, 1e-6);
  }

  {
    const std::size_t n = std::min<std::size_t>(b.mc_n, 20000);
    const auto rows = kernel.sample(n, b.seed);
    double worst_z = 0.0;
    for (std::size_t i = 1; i <= d; ++i) {
      const double r = delta.inverse(i, 0.5);
      std::size_t hits = 0;
      std::vector<double> row(d);
      for (std::size_t k = 0; k < n; ++k) {
        std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>(k * d), d, row.begin());
        std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(i - 1), row.end());
        if (row[i - 1] <= r) ++hits;
      }
      const double p = delta.component(i).cdf(r);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
      worst_z = std::max(worst_z, std::abs(static_cast<double>(hits) / static_cast<double>(n) - p) / se);
    }
    rep.add("multidiagonal_recovery", 0.0, worst_z, 3.0, "max |z| of P(U_(i) <= median of delta_i)");
  }

  // Joint density: normalization, entropies, copula consistency.
  auto fF = [&model](std::span<const double> x) { return model.density(x); };
  if (d <= kMaxQuadDim) {
    rep.add("joint_normalization_quadrature", 1.0, quad_integral(fF, domains::joint_support(F), res), 1e-4);
  }
  {
    const McEstimate m = mc_normalization(model.chain(), fF, std::min<std::size_t>(b.mc_n, 20000), b.seed);
    rep.mc.std_error["joint_normalization_mc"] = m.std_error;
    rep.add("joint_normalization_mc", 1.0, m.estimate, 1e-4, "inverse-transform Jacobian");
  }

  const double H_closed = joint_entropy_closed(model);
  double sumH = 0.0;
  for (double h : deg.marginal_entropy) sumH += h;
  rep.add("entropy_decomposition", H_closed, sumH + copula_F_entropy_closed(delta), 1e-6,
          "H(F_F) = sum H(F_i) + H(C_F)");

  if (deg.verdict == Verdict::ok) {
    if (d <= kMaxQuadDim) {
      rep.add("entropy_closed_vs_quadrature", H_closed, quad_entropy(fF, domains::joint_support(F), res), 1e-3);
    }
    const McEstimate m = mc_entropy(model, b.mc_n, b.seed);
    rep.mc.std_error["joint_entropy"] = m.std_error;
    rep.add("entropy_closed_vs_mc", H_closed, m.estimate, std::max(1e-3, 3.0 * m.std_error));
  }

  {
    double sum_hd = 0.0;
    for (const MarginalCdf& c : delta.components()) sum_hd += c.entropy();
    const double expected = log_factorial(d) + sum_hd;
    auto cF_fn = [&cF](std::span<const double> u) { return cF.density(u); };
    auto sym = [&](std::span<const double> u) { return cF.map().forward(cF_fn, u); };
    if (d <= 2) {
      const double hc = quad_entropy([&](std::span<const double> u) { return cF.density(u); },
                                     domains::copula_F_support(F), res);
      const double hs = quad_entropy(sym, domains::sorted_simplex(delta), res);
      rep.add("entropy_shift", expected, hs - hc, 1e-3, "quadrature");
    } else {
      const auto xs = model.sample(b.mc_n, b.seed + 1);
      std::vector<double> us(xs.size());
      for (std::size_t k = 0; k < xs.size(); ++k) us[k] = F.margin(k % d + 1).cdf(xs[k]);
      const McEstimate hc = mc_entropy_of_sample(us, d, [&](std::span<const double> u) { return cF.log_density(u); });
      const McEstimate hs = mc_entropy(kernel, b.mc_n, b.seed + 2);
      const double se = std::hypot(hc.std_error, hs.std_error);
      rep.mc.std_error["entropy_shift"] = se;
      rep.add("entropy_shift", expected, hs.estimate - hc.estimate, std::max(1e-3, 3.0 * se), "Monte Carlo");
    }
  }

  {
    const auto xs = model.sample(b.spot_points, b.seed + 3);
    double worst_joint = 0.0, worst_back = 0.0, worst_fwd = 0.0;
    std::size_t unstable = 0;
    std::vector<double> u(d), v(d);
    auto cdelta_fn = [&kernel](std::span<const double> w) { return kernel.density(w); };
    for (std::size_t k = 0; k < b.spot_points; ++k) {
      std::span<const double> x(xs.data() + k * d, d);
      double prod = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        u[i] = F.margin(i + 1).cdf(x[i]);
        v[i] = delta.inverse(i + 1, u[i]);
        prod *= F.margin(i + 1).pdf(x[i]);
      }
      if (cF.map().unstable(u)) {
        ++unstable;
        continue;
      }
      const double c = cF.density(u);
      worst_joint = std::max(worst_joint, detail::rel_diff(model.density(x), c * prod));
      worst_back = std::max(worst_back, detail::rel_diff(c, cF.map().backward(cdelta_fn, u)));
      worst_fwd = std::max(worst_fwd, detail::rel_diff(kernel.density(v), cF.map().forward([&cF](std::span<const double> w) { return cF.density(w); }, v)));
    }
    rep.add("density_copula_consistency", 0.0, worst_joint, 1e-8, "f_F = c_F(F(x)) prod f_i");
    rep.add("unsymmetrized_c_delta_is_c_F", 0.0, worst_back, 1e-8);
    rep.add("symmetrized_c_F_is_c_delta", 0.0, worst_fwd, 1e-8);
    rep.add_flag("unstable_support_points", true, std::to_string(unstable) + " unstable-support points skipped");
  }

  if (deg.verdict == Verdict::ok) {
    detail::marginal_ks_checks(
        rep, [&](std::uint64_t s) { return model.sample(b.ks_n, s); }, F.margins(), b, "marginal_ks_");
  }
  return rep;
}


/// Checks for a multidiagonal given directly: validity, the copula layer and
/// the sampler of c_delta.
inline VerificationReport run_multidiagonal_verification(const Multidiagonal& delta, const Budget& b = {}) {
  VerificationReport rep;
  rep.mc.n = b.mc_n;
  rep.mc.seed = b.seed;
  rep.mc.ks_seeds = b.ks_seeds;
  const std::size_t d = delta.dim();

  const MultidiagonalReport mrep = validate_multidiagonal(delta);
  rep.add_flag("is_multidiagonal", mrep.is_D, mrep.message);
  rep.add("multidiagonal_sum_identity", 0.0, mrep.max_sum_residual, kSumTol);
  rep.add("sigma_measure", 0.0, mrep.sigma_measure, kEqualityTol);
  if (!mrep.is_D0) {
    rep.verdict = mrep.is_D ? "not_D0" : "invalid";
    return rep;
  }
  const JValue J = j_functional_delta(delta);
  rep.verdict = J.finite ? "ok" : "j_infinite";
  rep.add_flag("j_finite", J.finite, J.note);

  const CopulaKernel kernel(delta);
  const std::size_t res = b.resolution(d);
  auto c = [&kernel](std::span<const double> u) { return kernel.density(u); };
  const double H_closed = copula_entropy_closed(delta);
  if (d <= kMaxQuadDim) {
    rep.add("c_delta_normalization", 1.0, quad_integral(c, domains::sorted_simplex(delta), res), 1e-6, "tensor quadrature");
    if (J.finite) {
      rep.add("entropy_closed_vs_quadrature", H_closed, quad_entropy(c, domains::sorted_simplex(delta), res), 1e-3);
    }
  } else {
    const double dfact = std::exp(log_factorial(d));
    const McEstimate m = mc_normalization(kernel.chain(), [&](std::span<const double> v) { return dfact * c(v); },
                                          std::min<std::size_t>(b.mc_n, 20000), b.seed);
    rep.mc.std_error["c_delta_normalization"] = m.std_error;
    rep.add("c_delta_normalization", 1.0, m.estimate, 2e-3, "Monte Carlo");
  }
  if (J.finite) {
    const McEstimate m = mc_entropy(kernel, b.mc_n, b.seed);
    rep.mc.std_error["copula_entropy"] = m.std_error;
    rep.add("entropy_closed_vs_mc", H_closed, m.estimate, std::max(1e-3, 3.0 * m.std_error));
  }

  double worst = 0.0;
  for (std::size_t i = 2; i <= d; ++i) {
    for (const Interval& iv : delta.psi(i)) {
      for (int k = 1; k <= 20; ++k) {
        const double t = iv.lo + (iv.hi - iv.lo) * (k - 0.5) / 20.0;
        if (!delta.psi(i).contains(t)) continue;
        const double rhs = cdf_gap(delta.component(i - 1), delta.component(i), t);
        worst = std::max(worst, std::abs(kernel.B(i, t) * kernel.E(i - 1, t) - rhs));
      }
    }
  }
  rep.add("B_E_identity", 0.0, worst, 1e-6);

  // Sorted samples of c_delta have the components of delta as marginals.
  std::vector<MarginalCdf> comps = delta.components();
  detail::marginal_ks_checks(
      rep,
      [&](std::uint64_t s) {
        auto rows = kernel.sample(b.ks_n, s);
        for (std::size_t k = 0; k < b.ks_n; ++k) std::sort(rows.begin() + k * d, rows.begin() + (k + 1) * d);
        return rows;
      },
      comps, b, "order_statistic_ks_");
  return rep;
}

}  // namespace maxentos
