// maxentos: maximum-entropy order statistics from the command line.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maxentos/maxentos.hpp"

namespace {

using namespace maxentos;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;
constexpr double kMaxGridPoints = 1e7;

struct RunConfig {
  std::string command;
  std::string input;
  std::string output;
  std::uint64_t seed = 0;
  std::size_t n = 10000;
  bool n_given = false;
  std::size_t grid = 256;
  bool multidiagonal = false;
  bool allow_infinite_entropy = false;
  std::vector<double> lower, upper;
  std::string threads;

  json to_json() const {
    return {{"command", command},
            {"input", input},
            {"output", output},
            {"seed", seed},
            {"n", n},
            {"grid", grid},
            {"multidiagonal", multidiagonal},
            {"allow_infinite_entropy", allow_infinite_entropy},
            {"lower", lower},
            {"upper", upper},
            {"threads", threads.empty() ? json("default") : json(threads)}};
  }
};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return g17(v);
}

// Text commands echo the configuration on stdout; CSV commands on stderr.
void echo(const RunConfig& cfg, std::ostream& os) { os << "config: " << cfg.to_json().dump() << "\n"; }

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ParseError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string header(std::size_t d, const char* prefix) {
  std::string h;
  for (std::size_t i = 1; i <= d; ++i) h += (i > 1 ? "," : "") + std::string(prefix) + std::to_string(i);
  return h;
}

// ---------------------------------------------------------------------------

int validate_margins(const RunConfig&, const MarginalVector& F) {
  const auto& order = F.order();
  std::cout << "dimension: " << F.dim() << "\n";
  std::cout << "stochastic_order: " << (order.ok ? "ok" : "violated") << "\n";
  if (!order.ok) {
    std::cout << "violation: " << order.message << " (index " << order.index << ", witness t = " << g17(order.witness)
              << ")\n";
    return kDomainFailure;
  }
  const DegeneracyReport r = detect_degenerate(F);
  std::cout << "sigma_measure: " << g17(r.sigma) << "\n";
  std::cout << "in_F0: " << (r.in_F0 ? "yes" : "no") << "\n";
  std::cout << "J: " << fmt(r.J.value) << (r.J.finite ? "" : " (infinite: " + r.J.note + ")") << "\n";
  std::cout << "verdict: " << to_string(r.verdict) << "\n";
  if (r.verdict != Verdict::ok) {
    std::cout << "max_entropy: -inf\n";
    std::cout << "reason: " << r.message << "\n";
    return kDomainFailure;
  }
  return kOk;
}

int validate_delta(const RunConfig&, const Multidiagonal& delta) {
  const MultidiagonalReport r = validate_multidiagonal(delta);
  std::cout << "dimension: " << delta.dim() << "\n";
  std::cout << "multidiagonal: " << (r.is_D ? "ok" : "invalid") << "\n";
  if (!r.is_D) std::cout << "violation: " << r.message << "\n";
  std::cout << "sum_identity_residual: " << g17(r.max_sum_residual) << "\n";
  std::cout << "sigma_measure: " << g17(r.sigma_measure) << "\n";
  std::cout << "absolutely_continuous_copula: " << (r.is_D0 ? "yes" : "no") << "\n";
  if (!r.is_D) return kDomainFailure;
  const JValue J = j_functional_delta(delta);
  std::cout << "J: " << fmt(J.value) << (J.finite ? "" : " (infinite: " + J.note + ")") << "\n";
  if (!r.is_D0 || !J.finite) {
    std::cout << "max_entropy: -inf\n";
    return kDomainFailure;
  }
  return kOk;
}

int entropy_margins(const RunConfig&, const MarginalVector& F) {
  F.require_valid();
  const DegeneracyReport r = detect_degenerate(F);
  double sumH = 0.0;
  for (double h : r.marginal_entropy) sumH += h;
  std::cout << "verdict: " << to_string(r.verdict) << "\n";
  std::cout << "sum_H_marginals: " << fmt(sumH) << "\n";
  std::cout << "J_F: " << fmt(r.J.value) << "\n";
  if (r.verdict != Verdict::ok) {
    std::cout << "H_F: -inf\n";
    std::cout << "reason: " << r.message << "\n";
    return kDomainFailure;
  }
  const MaxEntModel model(F);
  const Multidiagonal delta = Multidiagonal::from_marginals(F);
  const JValue Jd = j_functional_delta(delta);
  const double H = joint_entropy_closed(model);
  const double Hc = copula_F_entropy_closed(delta);
  std::cout << "J_delta: " << fmt(Jd.value) << "\n";
  std::cout << "H_F: " << fmt(H) << "\n";
  std::cout << "H_C_F: " << fmt(Hc) << "\n";
  std::cout << "residual_J_transport: " << g17(std::abs(r.J.value - Jd.value)) << "\n";
  std::cout << "residual_decomposition: " << g17(std::abs(H - (sumH + Hc))) << "\n";
  return kOk;
}

int entropy_delta(const RunConfig& cfg, const Multidiagonal& delta) {
  const MultidiagonalReport r = validate_multidiagonal(delta);
  if (!r.is_D) {
    std::cout << "multidiagonal: invalid\nviolation: " << r.message << "\n";
    return kDomainFailure;
  }
  (void)cfg;
  const JValue J = j_functional_delta(delta);
  double sumH = 0.0;
  for (const MarginalCdf& c : delta.components()) sumH += c.entropy();
  std::cout << "sum_H_delta: " << fmt(sumH) << "\n";
  std::cout << "J_delta: " << fmt(J.value) << "\n";
  if (!r.is_D0 || !J.finite) {
    std::cout << "H_C_delta: -inf\n";
    return kDomainFailure;
  }
  std::cout << "H_C_delta: " << fmt(copula_entropy_closed(delta)) << "\n";
  return kOk;
}

void write_rows(std::ostream& os, const std::vector<double>& rows, std::size_t d, const char* prefix) {
  os << header(d, prefix) << "\n";
  std::string line;
  for (std::size_t k = 0; k < rows.size() / d; ++k) {
    line.clear();
    for (std::size_t i = 0; i < d; ++i) {
      if (i) line += ',';
      line += g17(rows[k * d + i]);
    }
    os << line << "\n";
  }
}

int sample(const RunConfig& cfg, const std::string& spec_text, const std::vector<MarginalCdf>& margins) {
  if (cfg.n < 1) throw ParseError("--n must be >= 1");
  std::vector<double> rows;
  std::size_t d = margins.size();
  if (cfg.multidiagonal) {
    const CopulaKernel kernel{Multidiagonal(margins)};
    rows = kernel.sample(cfg.n, cfg.seed);
  } else {
    const MaxEntModel model{MarginalVector(margins)};
    model.marginals().require_valid();
    rows = model.sample(cfg.n, cfg.seed, cfg.allow_infinite_entropy);
  }
  Output out(cfg.output);
  write_rows(out.stream(), rows, d, cfg.multidiagonal ? "u" : "x");
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, io::fnv1a(spec_text));
  const json meta = {{"seed", cfg.seed}, {"n", cfg.n}, {"dimension", d}, {"spec_hash_fnv1a64", hash},
                     {"config", cfg.to_json()}};
  if (cfg.output.empty()) {
    std::cerr << "meta: " << meta.dump() << "\n";
  } else {
    std::ofstream m(cfg.output + ".meta.json");
    m << meta.dump(2) << "\n";
  }
  return kOk;
}

// Per-coordinate box: user bounds, else the support with infinite ends
// replaced by the 0.001 / 0.999 quantiles.
std::vector<std::pair<double, double>> grid_box(const RunConfig& cfg, const std::vector<MarginalCdf>& margins) {
  const std::size_t d = margins.size();
  auto pick = [&](const std::vector<double>& v, std::size_t i) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    if (v.size() == 1) return v[0];
    if (v.size() != d) throw ParseError("--lower/--upper take one value or one per coordinate");
    return v[i];
  };
  std::vector<std::pair<double, double>> box(d);
  for (std::size_t i = 0; i < d; ++i) {
    const Support s = cfg.multidiagonal ? Support{0.0, 1.0} : margins[i].support();
    double lo = std::isfinite(s.lo) ? s.lo : margins[i].quantile(0.001);
    double hi = std::isfinite(s.hi) ? s.hi : margins[i].quantile(0.999);
    if (auto v = pick(cfg.lower, i)) lo = *v;
    if (auto v = pick(cfg.upper, i)) hi = *v;
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw ParseError("empty or unbounded grid box");
    box[i] = {lo, hi};
  }
  return box;
}

int density(const RunConfig& cfg, const std::vector<MarginalCdf>& margins) {
  const std::size_t d = margins.size();
  if (cfg.grid < 1) throw ParseError("--grid must be >= 1");
  if (std::pow(static_cast<double>(cfg.grid), static_cast<double>(d)) > kMaxGridPoints) {
    throw ParseError("grid^d exceeds 1e7 points");
  }
  std::optional<MaxEntModel> model;
  std::optional<CopulaKernel> kernel;
  if (cfg.multidiagonal) {
    kernel.emplace(Multidiagonal(margins));
    kernel->require_ac();
  } else {
    model.emplace(MarginalVector(margins));
    model->marginals().require_valid();
    if (!model->in_F0()) throw Degenerate(model->degeneracy().message);
  }
  const auto box = grid_box(cfg, margins);
  Output out(cfg.output);
  std::ostream& os = out.stream();
  os << header(d, cfg.multidiagonal ? "u" : "x") << ",density\n";
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  std::string line;
  while (true) {
    line.clear();
    for (std::size_t i = 0; i < d; ++i) {
      const auto [lo, hi] = box[i];
      x[i] = cfg.grid == 1 ? lo : lo + static_cast<double>(idx[i]) * (hi - lo) / static_cast<double>(cfg.grid - 1);
      line += g17(x[i]) + ",";
    }
    const double v = cfg.multidiagonal ? kernel->density(x) : model->density(x);
    os << line << g17(v) << "\n";
    // Last coordinate varies fastest.
    std::size_t i = d;
    while (i > 0 && ++idx[i - 1] == cfg.grid) idx[--i] = 0;
    if (i == 0) break;
  }
  return kOk;
}

int verify(const RunConfig& cfg, const std::vector<MarginalCdf>& margins) {
  Budget b;
  b.seed = cfg.seed;
  if (cfg.n_given) b.mc_n = cfg.n;
  const VerificationReport rep = cfg.multidiagonal ? run_multidiagonal_verification(Multidiagonal(margins), b)
                                                   : run_full_verification(MarginalVector(margins), b);
  std::cout << rep.to_text();
  if (!cfg.output.empty()) {
    json j = rep.to_json();
    j["config"] = cfg.to_json();
    Output out(cfg.output);
    out.stream() << j.dump(2) << "\n";
  }
  return rep.all_passed() ? kOk : kDomainFailure;
}

int run(const RunConfig& cfg) {
  const std::string text = io::read_file(cfg.input);
  const std::vector<MarginalCdf> margins = io::parse_margins(text);
  const bool csv = cfg.command == "sample" || cfg.command == "density";
  echo(cfg, (csv && cfg.output.empty()) ? std::cerr : std::cout);
  if (cfg.multidiagonal) {
    for (std::size_t i = 0; i < margins.size(); ++i) {
      const Support s = margins[i].support();
      if (s.lo < 0.0 || s.hi > 1.0) throw ParseError("multidiagonal components must live on [0, 1]");
    }
  }
  if (cfg.command == "validate") {
    return cfg.multidiagonal ? validate_delta(cfg, Multidiagonal(margins)) : validate_margins(cfg, MarginalVector(margins));
  }
  if (cfg.command == "entropy") {
    return cfg.multidiagonal ? entropy_delta(cfg, Multidiagonal(margins)) : entropy_margins(cfg, MarginalVector(margins));
  }
  if (cfg.command == "sample") return sample(cfg, text, margins);
  if (cfg.command == "density") return density(cfg, margins);
  return verify(cfg, margins);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum-entropy joint laws of order statistics with given marginals"};
  app.require_subcommand(1, 1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input,-i", cfg.input, "JSON marginal specification")->required()->check(CLI::ExistingFile);
    sub->add_option("--output,-o", cfg.output, "output file (default: stdout)");
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--n", cfg.n, "sample count")->capture_default_str();
    sub->add_option("--grid", cfg.grid, "grid points per axis")->capture_default_str();
    sub->add_option("--lower", cfg.lower, "grid lower bound(s)")->delimiter(',');
    sub->add_option("--upper", cfg.upper, "grid upper bound(s)")->delimiter(',');
    sub->add_flag("--multidiagonal", cfg.multidiagonal, "input is a multidiagonal on [0, 1]");
    sub->add_flag("--allow-infinite-entropy", cfg.allow_infinite_entropy, "sample laws with entropy -inf");
  };
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"validate", "check stochastic order, F0 membership and J"},
      {"entropy", "closed-form entropies and consistency residuals"},
      {"sample", "draw sorted samples as CSV"},
      {"density", "density on a regular grid as CSV"},
      {"verify", "run the numerical verification report"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  cfg.n_given = app.get_subcommands().front()->count("--n") > 0;
  if (const char* t = std::getenv("MAXENTOS_THREADS")) cfg.threads = t;

  try {
    return run(cfg);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
}
