// isaclab: scenario runner, oracle solver, and scenario validator.
// Exit codes: 0 ok, 2 infeasible instance, 3 malformed input.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "isaclab/io.hpp"
#include "isaclab/optimizer.hpp"
#include "isaclab/pipelines.hpp"
#include "isaclab/scenario.hpp"

namespace {

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            const CLI::Option* seed_opt, std::uint64_t seed,
            const CLI::Option* trials_opt, int trials,
            const CLI::Option* threads_opt, unsigned threads) {
  const std::string bytes = isaclab::read_text_file(scenario_path);
  isaclab::Scenario sc = isaclab::load_scenario(bytes);
  if (seed_opt->count()) sc.seed = seed;
  if (trials_opt->count()) {
    if (trials < 1) throw isaclab::SchemaError("schema: --trials: must be at least 1");
    sc.trials = trials;
  }
  if (threads_opt->count()) sc.threads = threads;

  std::filesystem::create_directories(out_dir);
  const isaclab::Manifest man = isaclab::run_experiment(sc, bytes, out_dir);
  std::printf("pipeline %s -> %s\n", man.pipeline.c_str(), out_dir.c_str());
  for (const auto& out : man.outputs)
    std::printf("  %s (%d rows)\n", out.file.c_str(), out.rows);
  for (const auto& msg : man.messages) std::printf("  note: %s\n", msg.c_str());
  if (man.infeasible) {
    std::fprintf(stderr, "infeasible grid points; see manifest\n");
    return 2;
  }
  return 0;
}

int cmd_oracle(const std::string& instance_path) {
  const isaclab::OracleInstance inst =
      isaclab::load_oracle_instance(isaclab::read_text_file(instance_path));

  isaclab::SurrogateContext ctx;
  ctx.n = static_cast<int>(inst.channel_gains.size());
  ctx.m = inst.n_symbols;
  ctx.clutter = inst.clutter_power;
  ctx.noise_var = inst.sigma_z;

  std::vector<isaclab::ClassSpec> classes;
  for (const auto& c : inst.classes)
    classes.push_back(isaclab::make_class(c, inst.ber_th, 1.0, inst.sigma_z));

  const isaclab::SubcarrierPlan plan = isaclab::exhaustive_oracle(
      inst.chain, inst.channel_gains, classes, inst.r_min, inst.p_ave, ctx);

  nlohmann::ordered_json j;
  j["chain"] = isaclab::chain_name(inst.chain);
  j["objective"] = plan.objective;
  j["sinr"] = isaclab::surrogate_sinr(inst.chain, plan, classes, ctx);
  auto names = nlohmann::ordered_json::array();
  double sum_power = 0.0;
  double sum_rate = 0.0;
  for (std::size_t n = 0; n < plan.assignment.size(); ++n) {
    names.push_back(classes[static_cast<std::size_t>(plan.assignment[n])].id);
    sum_power += plan.kappa[n];
    sum_rate += classes[static_cast<std::size_t>(plan.assignment[n])].moments.rate_bits;
  }
  j["assignment"] = names;
  j["kappa"] = plan.kappa;
  j["mean_power"] = sum_power / static_cast<double>(plan.assignment.size());
  j["mean_rate"] = sum_rate / static_cast<double>(plan.assignment.size());
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

int cmd_validate(const std::string& scenario_path) {
  const isaclab::Scenario sc =
      isaclab::load_scenario(isaclab::read_text_file(scenario_path));
  std::printf("ok: pipeline=%s n=%d m=%d classes=%zu grid=%zu trials=%d\n",
              sc.pipeline.c_str(), sc.ofdm.n_subcarriers, sc.ofdm.n_symbols,
              sc.classes.size(), sc.sweep_grid.size(), sc.trials);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OFDM integrated sensing and communication workbench"};
  app.require_subcommand(1);

  std::string scenario_path, instance_path, validate_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int trials = 0;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "Run a scenario pipeline");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory (default: out)");
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  auto* trials_opt = run->add_option("--trials", trials, "Override the trial count");
  auto* threads_opt =
      run->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* oracle = app.add_subcommand("oracle", "Solve one instance exhaustively");
  oracle->add_option("instance", instance_path, "Instance JSON file")->required();

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed())
      return cmd_run(scenario_path, out_dir, seed_opt, seed, trials_opt, trials,
                     threads_opt, threads);
    if (oracle->parsed()) return cmd_oracle(instance_path);
    if (validate->parsed()) return cmd_validate(validate_path);
  } catch (const isaclab::SchemaError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  } catch (const isaclab::InfeasibleError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
