#include "roelab/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <string>

#include <json.hpp>

#include "roelab/common.hpp"

namespace roelab {

namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& key, const char* expected) {
  throw ValidationError("config key '" + key + "' must be " + expected);
}

double as_number(const json& doc, const std::string& key) {
  if (!doc.at(key).is_number()) bad_key(key, "a number");
  return doc.at(key).get<double>();
}

std::uint64_t as_count(const json& doc, const std::string& key) {
  if (!doc.at(key).is_number_unsigned()) bad_key(key, "a nonnegative integer");
  return doc.at(key).get<std::uint64_t>();
}

void reject_unknown(const json& doc, const std::set<std::string>& known, const char* where) {
  for (const auto& item : doc.items())
    if (!known.contains(item.key()))
      throw ValidationError("unknown " + std::string(where) + " key '" + item.key() + "'");
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ValidationError("config file '" + path + "' is not valid JSON: " + err.what());
  }
  if (!doc.is_object()) throw ValidationError("config root must be a JSON object");
  reject_unknown(doc,
                 {"family", "moduli", "measure", "p_values", "n_grid", "ghost_radii",
                  "ball_radius", "cheeger_tau", "cheeger_exact_threshold", "tolerance", "seed",
                  "threads", "out_dir", "lift"},
                 "config");

  RunConfig config;
  config.family = family_from_string(doc.at("family").get<std::string>());
  if (!doc.at("moduli").is_array() || doc.at("moduli").empty())
    throw ValidationError("config key 'moduli' must be a nonempty array");
  for (const auto& m : doc.at("moduli")) {
    if (!m.is_number_unsigned()) bad_key("moduli", "an array of positive integers");
    config.moduli.push_back(m.get<std::uint32_t>());
  }

  if (doc.contains("measure")) {
    const json& measure = doc.at("measure");
    reject_unknown(measure, {"laziness", "weights"}, "measure");
    if (measure.contains("laziness")) config.measure.laziness = as_number(measure, "laziness");
    if (measure.contains("weights"))
      for (const auto& w : measure.at("weights"))
        config.measure.generator_weights.push_back(w.get<double>());
  }

  if (doc.contains("p_values")) {
    config.p_values.clear();
    for (const auto& p : doc.at("p_values")) config.p_values.push_back(p.get<double>());
  }
  if (doc.contains("n_grid")) {
    config.n_grid.clear();
    for (const auto& n : doc.at("n_grid")) {
      if (!n.is_number_integer()) bad_key("n_grid", "an array of integers");
      config.n_grid.push_back(n.get<int>());
    }
  }
  if (doc.contains("ghost_radii")) {
    config.ghost_radii.clear();
    for (const auto& r : doc.at("ghost_radii")) {
      if (!r.is_number_integer()) bad_key("ghost_radii", "an array of integers");
      config.ghost_radii.push_back(r.get<int>());
    }
  }
  if (doc.contains("ball_radius")) config.ball_radius = as_count(doc, "ball_radius");
  if (doc.contains("cheeger_tau")) config.cheeger_tau = as_number(doc, "cheeger_tau");
  if (doc.contains("cheeger_exact_threshold"))
    config.cheeger_exact_threshold = as_count(doc, "cheeger_exact_threshold");
  if (doc.contains("tolerance")) config.tolerance = as_number(doc, "tolerance");
  if (doc.contains("seed")) config.seed = as_count(doc, "seed");
  if (doc.contains("threads")) {
    if (!doc.at("threads").is_number_integer()) bad_key("threads", "an integer");
    config.threads = doc.at("threads").get<int>();
  }
  if (doc.contains("out_dir")) config.out_dir = doc.at("out_dir").get<std::string>();

  if (doc.contains("lift")) {
    const json& lift = doc.at("lift");
    reject_unknown(lift, {"window", "trials", "entries", "fraction"}, "lift");
    if (lift.contains("window")) config.lift.window = lift.at("window").get<int>();
    if (lift.contains("trials")) config.lift.trials = lift.at("trials").get<int>();
    if (lift.contains("entries")) config.lift.entries = lift.at("entries").get<std::size_t>();
    if (lift.contains("fraction")) config.lift.fraction = lift.at("fraction").get<double>();
  }
  return config;
}

void apply_env_overrides(RunConfig& config) {
  if (const char* out = std::getenv("ROELAB_OUT"); out != nullptr && *out != '\0')
    config.out_dir = out;
  if (const char* threads = std::getenv("ROELAB_THREADS"); threads != nullptr && *threads != '\0') {
    char* end = nullptr;
    const long value = std::strtol(threads, &end, 10);
    if (end == threads || *end != '\0')
      throw ValidationError("ROELAB_THREADS must be an integer");
    config.threads = int(value);
  }
}

void RunConfig::validate() const {
  chain().validate();  // family-specific modulus constraints
  if (p_values.empty()) throw ValidationError("config needs at least one p value");
  for (const double p : p_values)
    if (!(p > 1.0) || std::isinf(p) || std::isnan(p))
      throw ValidationError("p values must lie in (1, infinity)");
  if (n_grid.empty()) throw ValidationError("config needs a nonempty n grid");
  for (const int n : n_grid)
    if (n < 0) throw ValidationError("walk length must be nonnegative");
  for (const int r : ghost_radii)
    if (r < 0) throw ValidationError("ghost radii must be nonnegative");
  if (!(measure.laziness >= 0.0) || measure.laziness >= 1.0)
    throw ValidationError("laziness must lie in [0, 1)");
  if (!(cheeger_tau > 0.0)) throw ValidationError("cheeger threshold must be positive");
  if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  if (threads < 1) throw ValidationError("threads must be at least 1");
  if (out_dir.empty())
    throw ValidationError("output directory is required (set out_dir, --out, or ROELAB_OUT)");
  if (lift.window < 0) throw ValidationError("lift window must be nonnegative");
  if (lift.trials < 1) throw ValidationError("lift trials must be at least 1");
  if (lift.entries == 0) throw ValidationError("lift entries must be positive");
  if (!(lift.fraction > 0.0) || lift.fraction > 1.0)
    throw ValidationError("fraction must lie in (0, 1]");
}

QuotientChain RunConfig::chain() const {
  QuotientChain chain;
  chain.family = family;
  chain.moduli = moduli;
  chain.laziness_hint = measure.laziness;
  return chain;
}

}  // namespace roelab
