#pragma once

// JSON marginal specifications:
//   {"margins": [{"family": "exponential", "rate": 2.0},
//                {"family": "uniform", "a": 0.0, "b": 1.0},
//                {"family": "beta_1_k", "k": 2},
//                {"family": "piecewise_linear", "knots": [[0, 0], [1, 1]], "absolutely_continuous": true},
//                {"family": "uniform_order_statistic", "n": 3, "rank": 1}]}
// A multidiagonal uses the same schema with components on [0, 1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxentos/cdf.hpp"
#include "maxentos/error.hpp"
#include "maxentos/multidiag.hpp"

namespace maxentos {

/// Malformed specification text: bad JSON, unknown family, missing or
/// ill-typed fields, or parameters a family rejects.
class ParseError : public Error {
 public:
  using Error::Error;
};

namespace io {

/// Number of knots used when a composed component is written out.
inline constexpr std::size_t kExportKnots = 1025;

namespace detail {

inline double number(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ParseError(where + ": missing numeric field \"" + key + "\"");
  return j.at(key).get<double>();
}

inline int integer(const nlohmann::json& j, const char* key, const std::string& where) {
  const double v = number(j, key, where);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ParseError(where + ": field \"" + key + "\" must be an integer");
  return static_cast<int>(v);
}

}  // namespace detail

inline MarginalCdf margin_from_json(const nlohmann::json& j, const std::string& where = "margin") {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  if (!j.contains("family") || !j.at("family").is_string()) throw ParseError(where + ": missing string field \"family\"");
  const std::string fam = j.at("family").get<std::string>();
  try {
    if (fam == "uniform") return MarginalCdf::uniform(detail::number(j, "a", where), detail::number(j, "b", where));
    if (fam == "exponential") return MarginalCdf::exponential(detail::number(j, "rate", where));
    if (fam == "beta_1_k") return MarginalCdf::beta_1_k(detail::integer(j, "k", where));
    if (fam == "uniform_order_statistic") {
      return MarginalCdf::uniform_order_statistic(detail::integer(j, "n", where), detail::integer(j, "rank", where));
    }
    if (fam == "piecewise_linear") {
      if (!j.contains("knots") || !j.at("knots").is_array()) throw ParseError(where + ": missing array field \"knots\"");
      std::vector<Knot> knots;
      for (const auto& k : j.at("knots")) {
        if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
          throw ParseError(where + ": each knot must be [x, F]");
        }
        knots.push_back({k[0].get<double>(), k[1].get<double>()});
      }
      bool ac = true;
      if (j.contains("absolutely_continuous")) {
        if (!j.at("absolutely_continuous").is_boolean()) throw ParseError(where + ": absolutely_continuous must be boolean");
        ac = j.at("absolutely_continuous").get<bool>();
      }
      return MarginalCdf::piecewise_linear(std::move(knots), ac);
    }
  } catch (const InvalidInput& e) {
    throw ParseError(where + ": " + e.what());
  }
  throw ParseError(where + ": unknown family \"" + fam + "\"");
}

inline std::vector<MarginalCdf> margins_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("margins") || !j.at("margins").is_array()) {
    throw ParseError("specification must be an object with a \"margins\" array");
  }
  std::vector<MarginalCdf> out;
  for (std::size_t i = 0; i < j.at("margins").size(); ++i) {
    out.push_back(margin_from_json(j.at("margins")[i], "margins[" + std::to_string(i) + "]"));
  }
  if (out.empty()) throw ParseError("\"margins\" must not be empty");
  return out;
}

inline std::vector<MarginalCdf> parse_margins(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return margins_from_json(j);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::vector<MarginalCdf> load_margins(const std::string& path) { return parse_margins(read_file(path)); }

/// Components must lie in [0, 1]; validity as a multidiagonal is checked separately.
inline Multidiagonal load_multidiagonal(const std::string& path) {
  auto comps = load_margins(path);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const Support s = comps[i].support();
    if (s.lo < 0.0 || s.hi > 1.0) {
      throw ParseError("margins[" + std::to_string(i) + "]: multidiagonal components must live on [0, 1]");
    }
  }
  return Multidiagonal(std::move(comps));
}

/// Native families serialize exactly; other CDFs (averages, compositions) are
/// written as piecewise-linear interpolants on kExportKnots points of their support.
inline nlohmann::json margin_to_json(const MarginalCdf& F) {
  using namespace maxentos::detail;
  if (const auto* m = F.as<UniformModel>()) return {{"family", "uniform"}, {"a", m->a()}, {"b", m->b()}};
  if (const auto* m = F.as<ExponentialModel>()) return {{"family", "exponential"}, {"rate", m->rate()}};
  if (const auto* m = F.as<Beta1kModel>()) return {{"family", "beta_1_k"}, {"k", m->k()}};
  if (const auto* m = F.as<UniformOrderStatisticModel>()) {
    return {{"family", "uniform_order_statistic"}, {"n", m->n()}, {"rank", m->rank()}};
  }
  nlohmann::json knots = nlohmann::json::array();
  if (const auto* m = F.as<PiecewiseLinearModel>()) {
    for (const Knot& k : m->knots()) knots.push_back({k.x, k.F});
    return {{"family", "piecewise_linear"}, {"knots", knots}, {"absolutely_continuous", F.absolutely_continuous()}};
  }
  const Support s = F.support();
  if (!std::isfinite(s.lo) || !std::isfinite(s.hi)) throw InvalidInput("cannot tabulate a CDF with unbounded support");
  double prev = 0.0;
  for (std::size_t k = 0; k < kExportKnots; ++k) {
    const double x = k + 1 == kExportKnots ? s.hi : s.lo + (s.hi - s.lo) * static_cast<double>(k) / (kExportKnots - 1);
    // Rounding in composed CDFs must not break monotonicity of the knots.
    prev = k == 0 ? 0.0 : (k + 1 == kExportKnots ? 1.0 : std::clamp(F.cdf(x), prev, 1.0));
    knots.push_back({x, prev});
  }
  return {{"family", "piecewise_linear"}, {"knots", knots}, {"absolutely_continuous", F.absolutely_continuous()}};
}

inline nlohmann::json margins_to_json(const std::vector<MarginalCdf>& margins) {
  nlohmann::json arr = nlohmann::json::array();
  for (const MarginalCdf& F : margins) arr.push_back(margin_to_json(F));
  return {{"margins", arr}};
}

inline nlohmann::json multidiagonal_to_json(const Multidiagonal& delta) { return margins_to_json(delta.components()); }

/// 64-bit FNV-1a of a byte string.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace io
}  // namespace maxentos
