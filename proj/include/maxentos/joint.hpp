#pragma once

// Maximum-entropy joint law of order statistics with given marginals.

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
#include "maxentos/marginals.hpp"

namespace maxentos {

enum class Verdict { ok, marginal_entropy_minus_inf, j_infinite, not_F0 };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::ok: return "ok";
    case Verdict::marginal_entropy_minus_inf: return "marginal_entropy_minus_inf";
    case Verdict::j_infinite: return "j_infinite";
    case Verdict::not_F0: return "not_F0";
  }
  return "?";
}

struct DegeneracyReport {
  Verdict verdict = Verdict::ok;
  std::size_t index = 0;  // marginal with H = -inf, when that is the verdict
  bool in_F0 = true;      // a density f_F exists
  double sigma = 0.0;
  JValue J;
  std::vector<double> marginal_entropy;
  std::string message;
};

/// Which condition for a finite-entropy density fails, checked in the order:
/// a marginal without density, a marginal with entropy -inf, J(F) = +inf,
/// |Sigma^F| > 0. With verdict j_infinite and in_F0 the density still exists
/// but has entropy -inf.
inline DegeneracyReport detect_degenerate(const MarginalVector& F) {
  F.require_valid();
  DegeneracyReport rep;
  const SigmaMeasure sig = sigma_measure(F);
  rep.sigma = sig.measure;
  rep.in_F0 = sig.in_F0;
  if (!sig.all_absolutely_continuous) {
    rep.verdict = Verdict::not_F0;
    rep.in_F0 = false;
    rep.message = "a marginal is not absolutely continuous";
    rep.J = {kInf, false, "not computed"};
    return rep;
  }
  for (std::size_t i = 1; i <= F.dim(); ++i) {
    const double h = F.margin(i).entropy();
    rep.marginal_entropy.push_back(h);
    if (!std::isfinite(h) && rep.verdict == Verdict::ok) {
      rep.verdict = Verdict::marginal_entropy_minus_inf;
      rep.index = i;
      rep.message = "H(F_" + std::to_string(i) + ") = -inf";
    }
  }
  rep.J = j_functional(F);
  if (rep.verdict != Verdict::ok) return rep;
  if (!rep.J.finite) {
    rep.verdict = Verdict::j_infinite;
    rep.message = "J(F) = +inf (" + rep.J.note + ")";
  } else if (!rep.in_F0) {
    rep.verdict = Verdict::not_F0;
    rep.message = "|Sigma^F| = " + std::to_string(rep.sigma) + " > 0";
  }
  return rep;
}

class MaxEntModel {
 public:
  explicit MaxEntModel(MarginalVector F) : F_(std::move(F)), report_(detect_degenerate(F_)) {
    if (!report_.in_F0) return;
    std::vector<std::shared_ptr<const PairHazard>> hz;
    for (std::size_t i = 2; i <= F_.dim(); ++i) {
      hz.push_back(make_pair_hazard(F_.margin(i - 1), F_.margin(i), F_.psi(i)));
    }
    chain_ = std::make_shared<const HazardChain>(F_.margin(1), std::move(hz));
  }

  const MarginalVector& marginals() const { return F_; }
  std::size_t dim() const { return F_.dim(); }
  const DegeneracyReport& degeneracy() const { return report_; }
  bool in_F0() const { return report_.in_F0; }

  /// l_i(t) = f_i(t) / (F_{i-1}(t) - F_i(t)); +inf when the gap is 0 and f_i(t) > 0.
  double hazard(std::size_t i, double t) const {
    if (i < 2 || i > dim()) throw InvalidInput("hazard index must satisfy 2 <= i <= d");
    const double f = F_.margin(i).pdf(t);
    if (!(f > 0.0)) return 0.0;
    const double g = cdf_gap(F_.margin(i - 1), F_.margin(i), t);
    return g > 0.0 ? f / g : kInf;
  }

  /// Lambda_i(s, t) = int_s^t l_i for s, t in one interval of Psi_i.
  double integrated_hazard(std::size_t i, double s, double t) const {
    require_density();
    const IntervalSet& psi = F_.psi(i);
    const auto j = psi.find(s);
    if (!j || !psi[*j].contains(t)) throw OutOfPsi("s and t must lie in one interval of Psi_" + std::to_string(i));
    return chain_->hazard(i).integrated(s, t);
  }

  /// log f_F(x); -inf off L^F (including x_{i-1} on a boundary of Psi_i).
  double log_density(std::span<const double> x) const {
    require_density();
    return chain_->log_density(x);
  }
  double density(std::span<const double> x) const {
    require_density();
    return chain_->density(x);
  }

  /// n sorted draws, row-major n x d. Refuses laws with entropy -inf unless
  /// `allow_infinite_entropy` is set.
  std::vector<double> sample(std::size_t n, std::uint64_t seed, bool allow_infinite_entropy = false) const {
    require_density();
    if (report_.verdict != Verdict::ok && !allow_infinite_entropy) {
      throw Degenerate("maximum entropy is -inf (" + report_.message + ")");
    }
    return chain_->sample(n, seed);
  }

  const HazardChain& chain() const {
    require_density();
    return *chain_;
  }

 private:
  void require_density() const {
    if (!report_.in_F0) throw Degenerate("no absolutely continuous order-statistics law: " + report_.message);
  }

  MarginalVector F_;
  DegeneracyReport report_;
  std::shared_ptr<const HazardChain> chain_;
};

inline double f_F_density(const MaxEntModel& model, std::span<const double> x) { return model.density(x); }

/// H(F_F) = d - 1 + sum_i H(F_i) - J(F); -inf when a marginal entropy is -inf or J = +inf.
inline double joint_entropy_closed(const MaxEntModel& model) {
  const DegeneracyReport& r = model.degeneracy();
  if (r.verdict != Verdict::ok) return -kInf;
  double h = static_cast<double>(model.dim()) - 1.0 - r.J.value;
  for (double hi : r.marginal_entropy) h += hi;
  return h;
}

}  // namespace maxentos
