#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "roelab/common.hpp"
#include "roelab/config.hpp"
#include "roelab/lifting.hpp"
#include "roelab/walks.hpp"

namespace roelab {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\r\n") == std::string::npos) return raw;
  std::string quoted = "\"";
  for (const char c : raw) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

void csv_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
}

void write_file(const fs::path& dir, const std::string& name, const std::string& content) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + (dir / name).string() + "'");
  out << content;
  if (!out) throw ValidationError("failed while writing '" + (dir / name).string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

NormBudget budget_for(const RunConfig& config) {
  NormBudget budget;
  budget.seed = config.seed;
  return budget;
}

// counter-based stream splitter: every randomized trial gets its own seed
// derived from the single config seed, independent of execution order
std::uint64_t split_seed(std::uint64_t base, std::uint64_t counter) {
  std::uint64_t z = base + (counter + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void build_stage(const RunConfig& config, const fs::path& out) {
  const BoxPtr box = assemble_box_space(config.chain(), int(config.moduli.size()));

  std::string levels_csv;
  csv_row(levels_csv, {"level", "modulus", "order", "diameter", "generators"});
  for (int i = 1; i <= box->levels(); ++i) {
    const CayleyGraph& g = box->component(i);
    csv_row(levels_csv, {std::to_string(i), std::to_string(g.modulus()),
                         std::to_string(g.order()), std::to_string(g.diameter()),
                         std::to_string(g.generator_count())});
  }
  write_file(out, "build.csv", levels_csv);

  std::string geometry_csv;
  csv_row(geometry_csv, {"R", "N_R"});
  for (const int r : config.ghost_radii)
    csv_row(geometry_csv, {std::to_string(r), std::to_string(bounded_geometry_profile(*box, r))});
  write_file(out, "geometry.csv", geometry_csv);

  std::cout << "assembled box space: " << box->levels() << " components, " << box->size()
            << " points, diameter " << box->diameter() << "\n";
}

void expander_stage(const RunConfig& config, const fs::path& out) {
  const BoxPtr box = assemble_box_space(config.chain(), int(config.moduli.size()));
  const ExpanderReport report =
      is_expander_family(box, config.cheeger_tau, config.cheeger_exact_threshold);

  std::string csv;
  csv_row(csv, {"level", "modulus", "order", "rho", "exact", "h", "cheeger_lower",
                "cheeger_upper", "lambda"});
  ordered_json doc;
  doc["schema"] = "roelab.expander/1";
  doc["threshold"] = report.threshold;
  doc["expander"] = report.expander;
  doc["levels"] = ordered_json::array();
  for (const LevelExpansion& lvl : report.levels) {
    const double rho = spectral_gap(box->component_ptr(lvl.level),
                                    config.measure.instantiate(box->component(lvl.level)),
                                    budget_for(config));
    csv_row(csv, {std::to_string(lvl.level), std::to_string(lvl.modulus),
                  std::to_string(lvl.order), fmt(rho), lvl.exact ? "1" : "0",
                  lvl.exact ? fmt(lvl.h.value()) : std::string(), fmt(lvl.bounds.lower),
                  fmt(lvl.bounds.upper), fmt(lvl.bounds.lambda)});
    ordered_json entry;
    entry["level"] = lvl.level;
    entry["modulus"] = lvl.modulus;
    entry["order"] = lvl.order;
    entry["rho"] = rho;
    entry["exact"] = lvl.exact;
    if (lvl.exact) entry["h"] = {{"num", lvl.h.num}, {"den", lvl.h.den}};
    entry["cheeger"] = {{"lower", lvl.bounds.lower},
                        {"upper", lvl.bounds.upper},
                        {"lambda", lvl.bounds.lambda}};
    doc["levels"].push_back(entry);
  }
  write_file(out, "expander.csv", csv);
  write_file(out, "expander.json", doc.dump(2) + "\n");
  std::cout << "expander verdict at threshold " << report.threshold << ": "
            << (report.expander ? "expander family" : "not certified") << "\n";
}

void kazhdan_stage(const RunConfig& config, const fs::path& out) {
  const BoxPtr box = assemble_box_space(config.chain(), int(config.moduli.size()));
  const std::vector<KazhdanRow> rows =
      kazhdan_table(box, config.measure, config.n_grid, config.p_values, budget_for(config));
  std::string csv;
  csv_row(csv, {"level", "N", "n", "p", "lower", "upper", "interp_bound", "rho"});
  for (const KazhdanRow& row : rows)
    csv_row(csv, {std::to_string(row.level), std::to_string(row.order), std::to_string(row.n),
                  fmt(row.p), fmt(row.lower), fmt(row.upper), fmt(row.interp_bound),
                  fmt(row.rho)});
  write_file(out, "kazhdan.csv", csv);
  std::cout << "kazhdan table: " << rows.size() << " rows\n";
}

void ghost_stage(const RunConfig& config, const fs::path& out) {
  const BoxPtr box = assemble_box_space(config.chain(), int(config.moduli.size()));
  const BlockOperator ghost = ghost_projection(box);
  std::string csv;
  csv_row(csv, {"p", "R", "level", "eps", "eps_upper"});
  for (const double p : config.p_values) {
    const GhostProfile profile = ghost_profile(ghost, config.ghost_radii, p, budget_for(config));
    for (const GhostEntry& entry : profile.entries)
      csv_row(csv, {fmt(p), std::to_string(entry.R), std::to_string(entry.level), fmt(entry.eps),
                    fmt(entry.eps_upper)});
  }
  write_file(out, "ghost.csv", csv);
  std::cout << "ghost profiles: " << config.p_values.size() << " p values, "
            << config.ghost_radii.size() << " radii\n";
}

void lift_stage(const RunConfig& config, const fs::path& out) {
  if (config.moduli.size() < 2)
    throw ValidationError("lift needs at least two moduli to form a cover");
  const QuotientChain chain = config.chain();
  const int S = config.lift.window;

  ordered_json doc;
  doc["schema"] = "roelab.lift/1";
  doc["window"] = S;
  doc["trials"] = config.lift.trials;
  doc["covers"] = ordered_json::array();

  std::uint64_t counter = 0;
  for (int level = 1; level < int(config.moduli.size()); ++level) {
    const CoverPtr cover = quotient_cover(chain, level + 1, level);
    const SpacePtr base = as_space(cover->target);

    int multiplicativity_pass = 0;
    int trace_exact = 0;
    int reconstruction_exact = 0;
    for (int t = 0; t < config.lift.trials; ++t) {
      const int prop_b = S > 0 ? t % (S + 1) : 0;
      const int prop_a = S - prop_b;
      const BlockOperator A =
          random_operator(base, prop_a, config.lift.entries, split_seed(config.seed, counter++));
      const BlockOperator B =
          random_operator(base, prop_b, config.lift.entries, split_seed(config.seed, counter++));
      if (lift_multiplicativity_check(A, B, cover, S, config.tolerance)) ++multiplicativity_pass;

      const BlockOperator T =
          random_operator(base, S, config.lift.entries, split_seed(config.seed, counter++));
      const EquivariantOperator lifted = lift_operator(T, cover, S);
      verify_equivariance(lifted);  // InvariantViolation -> exit 3
      if (transversal_trace(lifted) == trace(T)) ++trace_exact;

      std::ostringstream original, rebuilt;
      write_operator(original, lifted.op);
      write_operator(rebuilt, reconstruct(untwist(lifted)).op);
      if (original.str() == rebuilt.str()) ++reconstruction_exact;
    }

    // norm intervals survive the deck-indexed relabeling
    const BlockOperator probe =
        random_operator(base, S, config.lift.entries, split_seed(config.seed, counter++));
    const UntwistedFamily family = untwist(lift_operator(probe, cover, S));
    const NormEstimate direct = pnorm_estimate(reconstruct(family).op, 2.0, budget_for(config));
    const NormEstimate folded = pnorm_estimate(family.realized(), 2.0, budget_for(config));
    const double realized_gap = std::max(std::abs(direct.lower - folded.lower),
                                         std::abs(direct.upper - folded.upper));

    ordered_json entry;
    entry["source_modulus"] = config.moduli[std::size_t(level)];
    entry["target_modulus"] = config.moduli[std::size_t(level - 1)];
    entry["deck_order"] = cover->deck_order();
    entry["radius"] = cover->radius;
    entry["multiplicativity_pass"] = multiplicativity_pass;
    entry["trace_exact"] = trace_exact;
    entry["reconstruction_exact"] = reconstruction_exact;
    entry["realized_norm_gap"] = realized_gap;
    doc["covers"].push_back(entry);
    std::cout << "cover " << config.moduli[std::size_t(level)] << " over "
              << config.moduli[std::size_t(level - 1)] << ": " << multiplicativity_pass << "/"
              << config.lift.trials << " multiplicative, " << trace_exact << "/"
              << config.lift.trials << " trace-exact\n";
  }
  write_file(out, "lift.json", doc.dump(2) + "\n");
}

void obstruction_stage(const RunConfig& config, const fs::path& out) {
  const BoxPtr box = assemble_box_space(config.chain(), int(config.moduli.size()));
  const ObstructionData data =
      obstruction_data(box, config.measure, config.n_grid, config.p_values.front(),
                       config.ball_radius, budget_for(config));
  write_file(out, "obstruction.json", obstruction_to_json(data));
  std::cout << "obstruction bundle: " << data.moduli.size() << " levels, n up to "
            << *std::max_element(data.n_grid.begin(), data.n_grid.end())
            << ", ghost-lift inequality "
            << (ghost_lift_inequality(data, config.lift.fraction) ? "holds" : "fails") << "\n";
}

struct RateFit {
  int level = 0;
  std::uint64_t order = 0;
  double p = 2.0;
  double slope = 0.0;
  double rho = 0.0;
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  // parses the artifact tables this tool writes: plain fields, CRLF rows
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream cells(line);
    while (std::getline(cells, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

void report_stage(const RunConfig& config, const fs::path& out) {
  bool found_anything = false;
  std::string summary;

  const fs::path obstruction_path = out / "obstruction.json";
  if (fs::exists(obstruction_path)) {
    found_anything = true;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(obstruction_path));
    } catch (const nlohmann::json::parse_error& err) {
      throw ValidationError("corrupt obstruction.json: " + std::string(err.what()));
    }
    const auto traces = doc.at("trace_vector").get<std::vector<double>>();
    const auto lift_lower = doc.at("lift_norm").at("lower").get<std::vector<double>>();
    const auto n_grid = doc.at("parameters").at("n").get<std::vector<int>>();
    const auto upper = doc.at("approx_error").at("upper").get<std::vector<std::vector<double>>>();
    if (traces.empty() || lift_lower.empty() || lift_lower.size() != n_grid.size() ||
        upper.empty())
      throw ValidationError("corrupt obstruction.json: incomplete bundle");

    bool constant = true;
    for (const double t : traces) constant = constant && std::abs(t - traces.front()) <= 1e-9;
    const double factor = lift_lower.back() > 0.0 ? lift_lower.front() / lift_lower.back()
                                                  : std::numeric_limits<double>::infinity();
    char factor_text[32];
    std::snprintf(factor_text, sizeof factor_text, "%.3g", factor);
    char trace_text[32];
    std::snprintf(trace_text, sizeof trace_text, "%.3g", traces.front());
    if (constant)
      summary += "traces constant at " + std::string(trace_text) + "; lifted norms decayed by factor " +
                 factor_text + " over n range " + std::to_string(n_grid.front()) + ".." +
                 std::to_string(n_grid.back()) + "\n";
    else
      summary += "traces vary across levels; lifted norms decayed by factor " +
                 std::string(factor_text) + " over n range " + std::to_string(n_grid.front()) +
                 ".." + std::to_string(n_grid.back()) + "\n";

    std::string decay_csv;
    csv_row(decay_csv, {"n", "lift_norm_lower", "approx_error_upper_max"});
    for (std::size_t j = 0; j < n_grid.size(); ++j) {
      double eps = 0.0;
      for (const auto& level_row : upper) eps = std::max(eps, level_row.at(j));
      csv_row(decay_csv, {std::to_string(n_grid[j]), fmt(lift_lower[j]), fmt(eps)});
    }
    write_file(out, "report_decay.csv", decay_csv);

    std::string ghost_csv;
    csv_row(ghost_csv, {"level", "order", "trace", "ghost_value"});
    const auto orders = doc.at("orders").get<std::vector<std::uint64_t>>();
    const auto ghosts = doc.at("ghost_values").get<std::vector<double>>();
    for (std::size_t i = 0; i < traces.size(); ++i)
      csv_row(ghost_csv, {std::to_string(i + 1), std::to_string(orders.at(i)), fmt(traces[i]),
                          fmt(ghosts.at(i))});
    write_file(out, "report_ghost.csv", ghost_csv);
  }

  const fs::path kazhdan_path = out / "kazhdan.csv";
  if (fs::exists(kazhdan_path)) {
    found_anything = true;
    const auto rows = parse_csv(read_file(kazhdan_path));
    if (rows.size() < 2 || rows.front().size() != 8)
      throw ValidationError("corrupt kazhdan.csv: expected 8 columns");
    // least-squares slope of log(upper) against n, per (level, p)
    struct Accum {
      std::uint64_t order = 0;
      double rho = 0.0;
      std::vector<double> ns, logs;
    };
    std::map<std::pair<int, double>, Accum> groups;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& row = rows[i];
      if (row.size() != 8) throw ValidationError("corrupt kazhdan.csv: ragged row");
      const int level = std::stoi(row[0]);
      const double p = std::stod(row[3]);
      const double upper_value = std::stod(row[5]);
      Accum& acc = groups[{level, p}];
      acc.order = std::stoull(row[1]);
      acc.rho = std::stod(row[7]);
      if (upper_value > 0.0) {
        acc.ns.push_back(std::stod(row[2]));
        acc.logs.push_back(std::log(upper_value));
      }
    }
    std::string rates_csv;
    csv_row(rates_csv, {"level", "N", "p", "slope", "fitted_rho", "rho", "relative_error"});
    for (const auto& [key, acc] : groups) {
      if (acc.ns.size() < 2) continue;
      const double count = double(acc.ns.size());
      double mean_n = 0.0, mean_log = 0.0;
      for (std::size_t i = 0; i < acc.ns.size(); ++i) {
        mean_n += acc.ns[i];
        mean_log += acc.logs[i];
      }
      mean_n /= count;
      mean_log /= count;
      double cov = 0.0, var = 0.0;
      for (std::size_t i = 0; i < acc.ns.size(); ++i) {
        cov += (acc.ns[i] - mean_n) * (acc.logs[i] - mean_log);
        var += (acc.ns[i] - mean_n) * (acc.ns[i] - mean_n);
      }
      const double slope = cov / var;
      const double rel = std::abs(slope - std::log(acc.rho)) / std::abs(std::log(acc.rho));
      csv_row(rates_csv, {std::to_string(key.first), std::to_string(acc.order), fmt(key.second),
                          fmt(slope), fmt(std::exp(slope)), fmt(acc.rho), fmt(rel)});
      char line[160];
      std::snprintf(line, sizeof line, "level %d p=%g decay rate fit %.6f vs spectral %.6f\n",
                    key.first, key.second, std::exp(slope), acc.rho);
      summary += line;
    }
    write_file(out, "report_rates.csv", rates_csv);
  }

  if (!found_anything)
    throw ValidationError("run directory '" + out.string() + "' has no artifacts to report on");
  write_file(out, "report.txt", summary);
  std::cout << summary;
}

}  // namespace

const std::vector<std::string>& pipeline_subcommands() {
  static const std::vector<std::string> names = {"build",  "expander",    "kazhdan", "ghost",
                                                 "lift",   "obstruction", "report"};
  return names;
}

int run_pipeline(const std::string& subcommand, const RunConfig& config) {
  config.validate();
  Eigen::setNbThreads(config.threads);
  const fs::path out = config.out_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ValidationError("cannot create output directory '" + out.string() + "'");

  if (subcommand == "build") build_stage(config, out);
  else if (subcommand == "expander") expander_stage(config, out);
  else if (subcommand == "kazhdan") kazhdan_stage(config, out);
  else if (subcommand == "ghost") ghost_stage(config, out);
  else if (subcommand == "lift") lift_stage(config, out);
  else if (subcommand == "obstruction") obstruction_stage(config, out);
  else if (subcommand == "report") report_stage(config, out);
  else throw ValidationError("unknown subcommand '" + subcommand + "'");
  return 0;
}

}  // namespace roelab
