#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ltor/io.hpp"
#include "ltor/scenario.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = LTOR_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const fs::path kWork = fs::temp_directory_path() / "ltor_cli_test";

}  // namespace

TEST_CASE("help exits cleanly; usage errors exit 2") {
  CHECK(run("--help") == 0);
  CHECK(run("optimize --help") == 0);
  CHECK(run("definitely-not-a-command") == 2);
  CHECK(run("optimize") == 2);                                  // missing required option
  CHECK(run("optimize --scenario /nonexistent/path.cfg") == 2); // missing file
  CHECK(run("plot-data --scenario /nope --solution /nope") == 2);
}

TEST_CASE("scenario presets are written and readable") {
  fs::create_directories(kWork);
  const fs::path cfg = kWork / "leo.cfg";
  REQUIRE(run("scenario-preset --name leo_1n --out " + cfg.string()) == 0);
  const ltor::KeyValueFile kv = ltor::KeyValueFile::load(cfg);
  CHECK(kv.get("name") == "leo_1n");
  CHECK(kv.get_double("tmax_n") == 1.0);
  CHECK(run("scenario-preset --name bogus --out " + (kWork / "x.cfg").string()) == 2);
}

TEST_CASE("mini pipeline at 50 N: optimize, dataset, search, evaluate, plot-data") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);

  // 50 N scenario: t_start == t_target, so optimize is a single solve.
  const fs::path cfg = kWork / "fast.cfg";
  REQUIRE(run("scenario-preset --name leo_1n --out " + cfg.string()) == 0);
  {
    ltor::KeyValueFile kv = ltor::KeyValueFile::load(cfg);
    kv.set("name", "leo_50n_cli");
    kv.set_double("tmax_n", 50.0);
    kv.save(cfg);
  }

  const fs::path opt_dir = kWork / "opt";
  REQUIRE(run("optimize --scenario " + cfg.string() + " --out " + opt_dir.string() +
              " --t-start 50 --seed 7 --quiet") == 0);
  REQUIRE(fs::exists(opt_dir / "solution.tsv"));
  REQUIRE(fs::exists(opt_dir / "continuation.tsv"));

  SUBCASE("solution file has the documented trajectory dump columns") {
    const ltor::Table sol = ltor::Table::load(opt_dir / "solution.tsv");
    const std::vector<std::string> expected = {
        "t_days", "m_kg",   "p_km",   "ex",     "ey",     "hx",     "hy",    "L_rad",
        "x_km",   "y_km",   "z_km",   "vx_kms", "vy_kms", "vz_kms", "alpha_deg",
        "beta_deg", "u",    "lam_p",  "lam_ex", "lam_ey", "lam_hx", "lam_hy", "lam_L", "lam_m"};
    CHECK(sol.columns == expected);
    REQUIRE_FALSE(sol.rows.empty());
    const int cu = sol.column_index("u");
    for (const auto& row : sol.rows) CHECK(row[cu] == 1.0);  // full throttle on minimum time
  }

  SUBCASE("solution file carries the scenario hash and rejects other scenarios") {
    const ltor::Table sol = ltor::Table::load(opt_dir / "solution.tsv");
    CHECK(sol.meta.get("scenario_hash") ==
          ltor::SpacecraftScenario::load(cfg).config_hash_hex());
    // A different scenario must be refused.
    const fs::path other = kWork / "other.cfg";
    REQUIRE(run("scenario-preset --name gto_1n --out " + other.string()) == 0);
    CHECK(run("plot-data --scenario " + other.string() + " --solution " +
              (opt_dir / "solution.tsv").string() + " --out " + (kWork / "x.tsv").string()) == 2);
  }

  SUBCASE("resume on a finished run is a no-op success") {
    CHECK(run("optimize --scenario " + cfg.string() + " --out " + opt_dir.string() +
              " --t-start 50 --seed 7 --resume --quiet") == 0);
  }

  const fs::path data_dir = kWork / "data";
  REQUIRE(run("gen-dataset --scenario " + cfg.string() + " --solution " +
              (opt_dir / "solution.tsv").string() + " --n-train 4 --n-val 1 --n-test 1 --points 30" +
              " --seed 5 --out " + data_dir.string()) == 0);
  REQUIRE(fs::exists(data_dir / "train.tsv"));
  REQUIRE(fs::exists(data_dir / "manifest.json"));

  SUBCASE("dataset regeneration with the same seed is byte-identical") {
    const fs::path data2 = kWork / "data2";
    REQUIRE(run("gen-dataset --scenario " + cfg.string() + " --solution " +
                (opt_dir / "solution.tsv").string() + " --n-train 4 --n-val 1 --n-test 1 --points 30" +
                " --seed 5 --out " + data2.string()) == 0);
    for (const char* f : {"train.tsv", "val.tsv", "test.tsv", "manifest.json"})
      CHECK(slurp(data_dir / f) == slurp(data2 / f));
  }

  const fs::path search_dir = kWork / "search";
  REQUIRE(run("search --dataset " + data_dir.string() + " --iters 2 --seed 3 --workers 2" +
              " --max-epochs 60 --out " + search_dir.string()) == 0);
  REQUIRE(fs::exists(search_dir / "results.tsv"));
  REQUIRE(fs::exists(search_dir / "winner.json"));

  const fs::path eval_dir = kWork / "eval";
  REQUIRE(run("evaluate --scenario " + cfg.string() + " --solution " +
              (opt_dir / "solution.tsv").string() + " --model " + (search_dir / "winner.json").string() +
              " --case inside_a --runs 2 --seed 1 --out " + eval_dir.string()) == 0);
  REQUIRE(fs::exists(eval_dir / "report.tsv"));
  REQUIRE(fs::exists(eval_dir / "runs.tsv"));

  SUBCASE("report has the Table-3 shape") {
    const ltor::Table report = ltor::Table::load(eval_dir / "report.tsv");
    CHECK(report.column_index("dv_ms") >= 0);
    CHECK(report.column_index("a_f_km") >= 0);
    CHECK(report.column_index("e_f") >= 0);
    CHECK(report.column_index("i_f_deg") >= 0);
    CHECK(report.column_index("mape_opt") >= 0);
    REQUIRE(report.rows.size() == 1);
    const ltor::Table runs = ltor::Table::load(eval_dir / "runs.tsv");
    CHECK(runs.rows.size() == 2);
  }

  SUBCASE("evaluate is deterministic for a fixed seed") {
    const fs::path eval2 = kWork / "eval2";
    REQUIRE(run("evaluate --scenario " + cfg.string() + " --solution " +
                (opt_dir / "solution.tsv").string() + " --model " +
                (search_dir / "winner.json").string() + " --case inside_a --runs 2 --seed 1 --out " +
                eval2.string()) == 0);
    CHECK(slurp(eval_dir / "report.tsv") == slurp(eval2 / "report.tsv"));
    CHECK(slurp(eval_dir / "runs.tsv") == slurp(eval2 / "runs.tsv"));
  }

  const fs::path angles = kWork / "angles.tsv";
  REQUIRE(run("plot-data --scenario " + cfg.string() + " --solution " +
              (opt_dir / "solution.tsv").string() + " --out " + angles.string() + " --nodes 500 --model " +
              (search_dir / "winner.json").string()) == 0);
  const ltor::Table t = ltor::Table::load(angles);
  CHECK(t.rows.size() == 500);
  CHECK(t.column_index("alpha_pred_deg") >= 0);
  const int cl = t.column_index("L_mod360_deg");
  for (const auto& row : t.rows) {
    CHECK(row[cl] >= 0.0);
    CHECK(row[cl] < 360.0);
  }
}
