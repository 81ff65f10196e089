#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

// End-to-end checks of the command line binary: every invocation goes through
// a real process so exit codes, artifact bytes, and environment handling are
// exercised exactly as a user would hit them.

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const fs::path log = fs::temp_directory_path() / ("roelab_cli_log_" + std::to_string(counter++));
  std::string command = env_prefix + ROELAB_CLI_PATH " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  result.output = buf.str();
  fs::remove(log);
  return result;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("roelab_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  out << body;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string kSmokeConfig = R"({
  "family": "cyclic",
  "moduli": [8, 16],
  "measure": {"laziness": 0.5},
  "p_values": [2.0],
  "n_grid": [1, 2, 4, 8],
  "ghost_radii": [0, 1],
  "ball_radius": 12,
  "cheeger_tau": 0.05,
  "seed": 24141,
  "lift": {"window": 1, "trials": 5, "entries": 20}
})";

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
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

}  // namespace

TEST_CASE("build stage writes level and geometry tables") {
  const fs::path dir = fresh_dir("build");
  const fs::path config = write_config(dir, "run.json", kSmokeConfig);
  const fs::path out = dir / "out";

  const RunResult r = run_cli("build --config " + config.string() + " --out " + out.string());
  CHECK(r.exit_code == 0);

  const std::string levels = slurp(out / "build.csv");
  CHECK(levels.find("\r\n") != std::string::npos);  // RFC 4180 line endings
  const auto level_rows = parse_csv(levels);
  REQUIRE(level_rows.size() == 3);
  CHECK(level_rows[0] ==
        std::vector<std::string>{"level", "modulus", "order", "diameter", "generators"});
  CHECK(level_rows[1][1] == "8");
  CHECK(level_rows[2][1] == "16");

  const auto geometry_rows = parse_csv(slurp(out / "geometry.csv"));
  REQUIRE(geometry_rows.size() == 3);
  CHECK(geometry_rows[1] == std::vector<std::string>{"0", "1"});  // R=0 ball is a point
}

TEST_CASE("validation failures exit with code 2") {
  const fs::path dir = fresh_dir("invalid");
  const fs::path out = dir / "out";

  SUBCASE("degenerate family parameters") {
    const fs::path config =
        write_config(dir, "bad.json", R"({"family": "sl2", "moduli": [4, 8]})");
    const RunResult r = run_cli("build --config " + config.string() + " --out " + out.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error:") != std::string::npos);
  }
  SUBCASE("unknown configuration key") {
    const fs::path config = write_config(
        dir, "bad.json", R"({"family": "cyclic", "moduli": [8], "typo_key": 1})");
    const RunResult r = run_cli("build --config " + config.string() + " --out " + out.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("typo_key") != std::string::npos);
  }
  SUBCASE("missing required --config flag") {
    const RunResult r = run_cli("build");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("nonexistent config file") {
    const RunResult r =
        run_cli("build --config " + (dir / "absent.json").string() + " --out " + out.string());
    CHECK(r.exit_code == 2);
  }
  SUBCASE("unknown subcommand is a parse error") {
    const RunResult r = run_cli("frobnicate --config x.json");
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("kazhdan stage emits the decay table deterministically") {
  const fs::path dir = fresh_dir("kazhdan");
  const fs::path config = write_config(dir, "run.json", kSmokeConfig);
  const fs::path out1 = dir / "out1";
  const fs::path out2 = dir / "out2";

  CHECK(run_cli("kazhdan --config " + config.string() + " --out " + out1.string()).exit_code == 0);
  CHECK(run_cli("kazhdan --config " + config.string() + " --out " + out2.string()).exit_code == 0);

  const std::string table = slurp(out1 / "kazhdan.csv");
  CHECK(table == slurp(out2 / "kazhdan.csv"));  // same config + seed, same bytes

  const auto rows = parse_csv(table);
  REQUIRE(rows.size() == 9);  // header + 2 levels x 4 walk lengths
  CHECK(rows[0] == std::vector<std::string>{"level", "N", "n", "p", "lower", "upper",
                                            "interp_bound", "rho"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 8);
    CHECK(std::stod(rows[i][4]) <= std::stod(rows[i][5]));  // lower <= upper
  }
}

TEST_CASE("ghost stage reports the single point law") {
  const fs::path dir = fresh_dir("ghost");
  const fs::path config = write_config(dir, "run.json", kSmokeConfig);
  const fs::path out = dir / "out";

  CHECK(run_cli("ghost --config " + config.string() + " --out " + out.string()).exit_code == 0);
  const auto rows = parse_csv(slurp(out / "ghost.csv"));
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0] == std::vector<std::string>{"p", "R", "level", "eps", "eps_upper"});

  // p=2, R=0, level 1 on the 8-point component: a single column of the
  // averaging projection has norm 1/sqrt(8)
  bool found = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][0] == "2" && rows[i][1] == "0" && rows[i][2] == "1") {
      CHECK(std::stod(rows[i][3]) == doctest::Approx(1.0 / std::sqrt(8.0)).epsilon(1e-10));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("lift stage certifies the functor laws on random operators") {
  const fs::path dir = fresh_dir("lift");
  const fs::path config = write_config(dir, "run.json", kSmokeConfig);
  const fs::path out = dir / "out";

  CHECK(run_cli("lift --config " + config.string() + " --out " + out.string()).exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(slurp(out / "lift.json"));
  CHECK(doc.at("schema") == "roelab.lift/1");
  CHECK(doc.at("trials") == 5);
  REQUIRE(doc.at("covers").size() == 1);
  const auto& cover = doc.at("covers").front();
  CHECK(cover.at("source_modulus") == 16);
  CHECK(cover.at("target_modulus") == 8);
  CHECK(cover.at("deck_order") == 2);
  CHECK(cover.at("multiplicativity_pass") == 5);
  CHECK(cover.at("trace_exact") == 5);
  CHECK(cover.at("reconstruction_exact") == 5);
  CHECK(cover.at("realized_norm_gap").get<double>() < 1e-10);
}

TEST_CASE("obstruction stage serializes the full bundle") {
  const fs::path dir = fresh_dir("obstruction");
  const fs::path config = write_config(dir, "run.json", kSmokeConfig);
  const fs::path out = dir / "out";

  CHECK(run_cli("obstruction --config " + config.string() + " --out " + out.string()).exit_code ==
        0);
  const nlohmann::json doc = nlohmann::json::parse(slurp(out / "obstruction.json"));
  CHECK(doc.at("schema") == "roelab.obstruction/1");
  CHECK(doc.at("levels") == nlohmann::json({8, 16}));
  CHECK(doc.at("trace_vector") == nlohmann::json({1.0, 1.0}));
  CHECK(doc.at("parameters").at("ball_radius") == 12);
  CHECK(doc.at("approx_error").at("upper").size() == 2);
  CHECK(doc.at("lift_norm").at("lower").size() == 4);
}

TEST_CASE("report stage summarizes prior runs") {
  const fs::path dir = fresh_dir("report");
  const fs::path config = write_config(dir, "run.json", kSmokeConfig);
  const fs::path out = dir / "out";

  SUBCASE("empty run directory is a validation error") {
    const RunResult r = run_cli("report --config " + config.string() + " --out " + out.string());
    CHECK(r.exit_code == 2);
  }

  SUBCASE("after kazhdan and obstruction runs") {
    REQUIRE(run_cli("kazhdan --config " + config.string() + " --out " + out.string()).exit_code ==
            0);
    REQUIRE(
        run_cli("obstruction --config " + config.string() + " --out " + out.string()).exit_code ==
        0);
    const RunResult r = run_cli("report --config " + config.string() + " --out " + out.string());
    CHECK(r.exit_code == 0);

    const std::string summary = slurp(out / "report.txt");
    CHECK(summary.find("traces constant at 1") != std::string::npos);
    CHECK(summary.find("decay rate fit") != std::string::npos);

    // the log-linear fit of the decay table must recover the spectral rate
    const auto rates = parse_csv(slurp(out / "report_rates.csv"));
    REQUIRE(rates.size() == 3);  // header + one fit per level
    CHECK(rates[0] == std::vector<std::string>{"level", "N", "p", "slope", "fitted_rho", "rho",
                                               "relative_error"});
    for (std::size_t i = 1; i < rates.size(); ++i)
      CHECK(std::stod(rates[i][6]) < 0.01);

    const auto decay = parse_csv(slurp(out / "report_decay.csv"));
    REQUIRE(decay.size() == 5);  // header + one row per walk length
    CHECK(std::stod(decay[4][2]) < std::stod(decay[1][2]));  // errors shrink along n

    const auto ghosts = parse_csv(slurp(out / "report_ghost.csv"));
    REQUIRE(ghosts.size() == 3);
    CHECK(std::stod(ghosts[1][3]) == doctest::Approx(1.0 / std::sqrt(8.0)).epsilon(1e-10));
    CHECK(std::stod(ghosts[2][3]) == doctest::Approx(1.0 / std::sqrt(16.0)).epsilon(1e-10));
  }
}

TEST_CASE("environment overrides yield to explicit flags") {
  const fs::path dir = fresh_dir("env");
  const fs::path config = write_config(dir, "run.json", kSmokeConfig);
  const fs::path env_out = dir / "from_env";
  const fs::path flag_out = dir / "from_flag";

  SUBCASE("ROELAB_OUT supplies the output directory") {
    const RunResult r = run_cli("build --config " + config.string(),
                                "ROELAB_OUT=" + env_out.string() + " ");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(env_out / "build.csv"));
  }
  SUBCASE("--out wins over ROELAB_OUT") {
    const RunResult r =
        run_cli("build --config " + config.string() + " --out " + flag_out.string(),
                "ROELAB_OUT=" + env_out.string() + " ");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(flag_out / "build.csv"));
    CHECK(!fs::exists(env_out / "build.csv"));
  }
  SUBCASE("malformed ROELAB_THREADS is rejected") {
    const RunResult r = run_cli("build --config " + config.string() + " --out " +
                                    (dir / "threads_out").string(),
                                "ROELAB_THREADS=soon ");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("ROELAB_THREADS") != std::string::npos);
  }
}

TEST_CASE("expander stage certifies the family") {
  const fs::path dir = fresh_dir("expander");
  const fs::path config = write_config(dir, "run.json", kSmokeConfig);
  const fs::path out = dir / "out";

  CHECK(run_cli("expander --config " + config.string() + " --out " + out.string()).exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(slurp(out / "expander.json"));
  CHECK(doc.at("schema") == "roelab.expander/1");
  CHECK(doc.at("levels").size() == 2);
  for (const auto& level : doc.at("levels")) {
    CHECK(level.at("cheeger").at("lower").get<double>() <=
          level.at("cheeger").at("upper").get<double>());
    CHECK(level.at("rho").get<double>() < 1.0);
  }
  const auto rows = parse_csv(slurp(out / "expander.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].size() == 9);
}
