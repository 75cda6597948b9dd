// Command-line front end for the low-thrust orbit-raising toolchain:
// optimize -> gen-dataset -> search -> evaluate, plus plot-data extraction.
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "ltor/dataset.hpp"
#include "ltor/eval.hpp"
#include "ltor/homotopy.hpp"
#include "ltor/io.hpp"
#include "ltor/nn/model_io.hpp"
#include "ltor/plotdata.hpp"
#include "ltor/scenario.hpp"
#include "ltor/search.hpp"
#include "ltor/solution_io.hpp"

namespace fs = std::filesystem;
using namespace ltor;

namespace {

SpacecraftScenario load_scenario_checked(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("scenario file not found: " + path);
  return SpacecraftScenario::load(path);
}

TransferSolution reload_checked(const std::string& path, const SpacecraftScenario& scenario) {
  if (!fs::exists(path)) throw std::runtime_error("solution file not found: " + path);
  return reload_solution(load_solution_header(path), scenario);
}

int cmd_optimize(const std::string& scenario_path, const std::string& out_dir, double t_start,
                 double ratio, std::uint64_t seed, bool resume, int threads, bool quiet) {
  const SpacecraftScenario scenario = load_scenario_checked(scenario_path);
  fs::create_directories(out_dir);

  HomotopySchedule schedule;
  schedule.t_start_n = t_start;
  schedule.t_target_n = scenario.tmax_n;
  schedule.reduction_ratio = ratio;

  HomotopyOptions opts;
  opts.seed = seed;
  opts.checkpoint = fs::path(out_dir) / "continuation.tsv";
  opts.resume = resume;
  opts.verbose = !quiet;
  opts.shooting.jacobian_threads = threads;

  const HomotopyResult result = run_homotopy(scenario, schedule, opts);
  if (!result.ok()) {
    std::fprintf(stderr, "optimize: homotopy failed (%s)\n",
                 result.status == HomotopyStatus::start_not_found ? "no converged start"
                                                                  : "continuation stalled");
    return 1;
  }
  save_solution(fs::path(out_dir) / "solution.tsv", result.solution, scenario, seed);
  const UnitSystem units = scenario.units();
  std::printf("optimize: %s converged, tf = %.4f days, revolutions = %d, residual = %.3g\n",
              scenario.name.c_str(), units.days_from_canonical(result.solution.tf),
              result.solution.revolutions, result.solution.residual_norm);
  return 0;
}

int cmd_gen_dataset(const std::string& scenario_path, const std::string& solution_path,
                    const std::string& out_dir, DatasetConfig config, int threads) {
  const SpacecraftScenario scenario = load_scenario_checked(scenario_path);
  const TransferSolution nominal = reload_checked(solution_path, scenario);
  const FamilyResult family = generate_dataset(nominal, scenario, config, out_dir, threads);
  std::printf("gen-dataset: %zu trajectories (%d attempts failed) -> %s\n", family.members.size(),
              family.n_failed, out_dir.c_str());
  return 0;
}

int cmd_search(const std::string& dataset_dir, const std::string& out_dir, SearchOptions opts,
               const std::string& output_convention) {
  if (!fs::exists(fs::path(dataset_dir) / "manifest.json"))
    throw std::runtime_error("dataset directory has no manifest.json: " + dataset_dir);
  opts.output = nn::output_convention_from_string(output_convention);
  const DatasetBundle bundle = load_dataset(dataset_dir);

  const SearchOutcome outcome = run_search(bundle.train, bundle.val, bundle.norm, opts);
  if (!outcome.ok()) {
    std::fprintf(stderr, "search: every candidate failed to train\n");
    return 1;
  }
  // Test metrics are computed only for the selected winner.
  const TestMetrics test = evaluate_model(outcome.winner_model, bundle.test);
  save_search_results(out_dir, outcome, test, bundle.scenario_hash, opts.seed);
  std::printf("search: winner iteration %d (%d layers x %d %s, %s, F=%s)\n", outcome.winner_iteration,
              outcome.winner_config.n_layer, outcome.winner_config.n_neuron,
              nn::to_string(outcome.winner_config.activation),
              nn::to_string(outcome.winner_config.optimizer), to_string(outcome.winner_config.form));
  std::printf("search: test MAPE_alpha = %.4g%%, MAPE_beta = %.4g%%\n", test.mape_alpha, test.mape_beta);
  return 0;
}

int cmd_evaluate(const std::string& scenario_path, const std::string& solution_path,
                 const std::string& model_path, const std::string& case_name, const std::string& out_dir,
                 CampaignOptions opts, bool dump_controls) {
  const SpacecraftScenario scenario = load_scenario_checked(scenario_path);
  const TransferSolution nominal = reload_checked(solution_path, scenario);
  if (!fs::exists(model_path)) throw std::runtime_error("model file not found: " + model_path);
  nlohmann::json meta;
  const nn::Network<float> model = nn::load_model<float>(model_path, &meta);
  if (meta.contains("scenario_hash") &&
      meta["scenario_hash"].get<std::string>() != scenario.config_hash_hex())
    throw std::runtime_error("model was trained for a different scenario (config hash mismatch)");

  std::vector<CaseKind> kinds;
  if (case_name == "all")
    kinds = {CaseKind::inside_a, CaseKind::outside_a, CaseKind::uncertainty, CaseKind::perturbation};
  else
    kinds = {case_from_string(case_name)};

  fs::create_directories(out_dir);
  opts.drive.record_controls = dump_controls;
  std::vector<CampaignReport> reports;
  const UnitSystem units = scenario.units();
  for (const CaseKind kind : kinds) {
    const CampaignReport report =
        run_campaign(model, scenario, nominal, GeneralizationCase::make(kind), opts);
    std::printf("evaluate[%s]: mean dv = %.4f m/s, a_f = %.3f km, e_f = %.6f, i_f = %.6f deg, "
                "failed %d/%d\n",
                to_string(report.kind), report.mean_dv_ms, report.mean_a_f_km, report.mean_e_f,
                report.mean_i_f_deg, report.n_failed, report.n_runs);
    if (dump_controls) {
      for (const auto& run : report.runs) {
        if (run.record.control_trace.empty()) continue;
        Table t;
        t.meta.set("artifact", "driven_controls");
        t.meta.set("case", to_string(report.kind));
        t.meta.set_int("run", run.run);
        t.columns = {"t_days", "alpha_deg", "beta_deg"};
        for (const auto& c : run.record.control_trace)
          t.rows.push_back({units.days_from_canonical(c[0]), c[1], c[2]});
        t.save(fs::path(out_dir) / ("controls_" + std::string(to_string(report.kind)) + "_" +
                                    std::to_string(run.run) + ".tsv"));
      }
    }
    reports.push_back(std::move(report));
  }
  save_reports(out_dir, reports, scenario, opts.seed);
  return 0;
}

int cmd_plot_data(const std::string& scenario_path, const std::string& solution_path,
                  const std::string& out_path, const std::string& model_path, int nodes) {
  const SpacecraftScenario scenario = load_scenario_checked(scenario_path);
  const TransferSolution sol = reload_checked(solution_path, scenario);
  if (model_path.empty()) {
    write_control_angle_table(out_path, sol, scenario, nullptr, nodes);
  } else {
    const nn::Network<float> model = nn::load_model<float>(model_path);
    write_control_angle_table(out_path, sol, scenario, &model, nodes);
  }
  std::printf("plot-data: wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-optimal low-thrust orbit raising: indirect optimization, dataset generation,\n"
               "neural-controller search and closed-loop evaluation"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out", solution_path, model_path, dataset_dir;
  double t_start = 50.0, ratio = 0.8;
  std::uint64_t seed = 0;
  bool resume = false, quiet = false;
  int threads = 2;

  auto* optimize =
      app.add_subcommand("optimize", "Solve the nominal minimum-time transfer by thrust homotopy");
  optimize->add_option("--scenario", scenario_path, "scenario file")->required();
  optimize->add_option("--out", out_dir, "output directory");
  optimize->add_option("--t-start", t_start, "homotopy starting thrust, N");
  optimize->add_option("--ratio", ratio, "thrust reduction ratio per step");
  optimize->add_option("--seed", seed, "random seed");
  optimize->add_option("--threads", threads, "Jacobian threads");
  optimize->add_flag("--resume", resume, "resume from the continuation checkpoint");
  optimize->add_flag("--quiet", quiet, "suppress progress output");

  DatasetConfig dcfg;
  auto* gen = app.add_subcommand("gen-dataset", "Optimize a departure family and assemble datasets");
  gen->add_option("--scenario", scenario_path, "scenario file")->required();
  gen->add_option("--solution", solution_path, "nominal solution file")->required();
  gen->add_option("--n-train", dcfg.n_train, "training trajectories");
  gen->add_option("--n-val", dcfg.n_val, "validation trajectories");
  gen->add_option("--n-test", dcfg.n_test, "test trajectories");
  gen->add_option("--points", dcfg.points_per_traj, "points per trajectory");
  gen->add_option("--seed", dcfg.seed, "random seed");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--threads", threads, "parallel member solves");

  SearchOptions sopts;
  std::string output_convention = "direct-angles";
  auto* search = app.add_subcommand("search", "Random hyper-parameter search with validation selection");
  search->add_option("--dataset", dataset_dir, "dataset directory")->required();
  search->add_option("--iters", sopts.n_iter, "search iterations");
  search->add_option("--seed", sopts.seed, "random seed");
  search->add_option("--workers", sopts.workers, "parallel candidate trainings");
  search->add_option("--max-epochs", sopts.max_epochs, "per-candidate epoch cap");
  search->add_option("--patience", sopts.patience, "early-stopping patience, epochs");
  search->add_option("--output-convention", output_convention, "direct-angles | trig-encoded");
  search->add_option("--out", out_dir, "output directory")->required();

  CampaignOptions copts;
  std::string case_name = "all";
  bool dump_controls = false;
  auto* evaluate = app.add_subcommand("evaluate", "Closed-loop NN-driven campaigns and optimality");
  evaluate->add_option("--scenario", scenario_path, "scenario file")->required();
  evaluate->add_option("--solution", solution_path, "nominal solution file")->required();
  evaluate->add_option("--model", model_path, "model file")->required();
  evaluate->add_option("--case", case_name, "inside_a | outside_a | uncertainty | perturbation | all");
  evaluate->add_option("--runs", copts.n_runs, "runs per case");
  evaluate->add_option("--seed", copts.seed, "random seed");
  evaluate->add_option("--threads", copts.threads, "parallel drives");
  evaluate->add_option("--optimality-runs", copts.optimality_runs,
                       "re-optimize the first N runs of inside/outside cases");
  evaluate->add_flag("--dump-controls", dump_controls, "write per-run control histories");
  evaluate->add_option("--out", out_dir, "output directory")->required();

  int plot_nodes = 20000;
  std::string plot_out = "angles.tsv";
  auto* plot = app.add_subcommand("plot-data", "Extract figure-ready control-angle columns");
  plot->add_option("--scenario", scenario_path, "scenario file")->required();
  plot->add_option("--solution", solution_path, "solution file")->required();
  plot->add_option("--out", plot_out, "output file");
  plot->add_option("--model", model_path, "optional model for predicted angles");
  plot->add_option("--nodes", plot_nodes, "number of output nodes");

  std::string preset_name = "leo_1n", preset_out;
  auto* preset = app.add_subcommand("scenario-preset", "Write one of the built-in scenario files");
  preset->add_option("--name", preset_name, "leo_1n | leo_02n | gto_1n | gto_02n")->required();
  preset->add_option("--out", preset_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (optimize->parsed())
      return cmd_optimize(scenario_path, out_dir, t_start, ratio, seed, resume, threads, quiet);
    if (gen->parsed()) return cmd_gen_dataset(scenario_path, solution_path, out_dir, dcfg, threads);
    if (search->parsed()) return cmd_search(dataset_dir, out_dir, sopts, output_convention);
    if (evaluate->parsed())
      return cmd_evaluate(scenario_path, solution_path, model_path, case_name, out_dir, copts,
                          dump_controls);
    if (plot->parsed()) return cmd_plot_data(scenario_path, solution_path, plot_out, model_path, plot_nodes);
    if (preset->parsed()) {
      preset_scenario(preset_name).save(preset_out);
      std::printf("wrote %s\n", preset_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
