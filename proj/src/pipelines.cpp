#include "isaclab/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "isaclab/delay_estimation.hpp"
#include "isaclab/optimizer.hpp"
#include "isaclab/sensing.hpp"

namespace isaclab {

namespace {

std::string db_str(double linear) {
  return format_double(10.0 * std::log10(linear));
}

SurrogateContext ctx_for(const Scenario& sc) {
  SurrogateContext ctx;
  ctx.n = sc.ofdm.n_subcarriers;
  ctx.m = sc.ofdm.n_symbols;
  ctx.sigma_q_sq = sc.sigma_q_sq;
  ctx.clutter = sc.clutter_power;
  ctx.noise_var = sc.scene.noise_var;
  return ctx;
}

std::vector<ClassSpec> classes_for(const Scenario& sc, double gain_sq) {
  std::vector<ClassSpec> out;
  for (const auto& c : sc.classes)
    out.push_back(make_class(c, sc.ber_th, gain_sq, sc.scene.noise_var));
  return out;
}

void require_sweep(const Scenario& sc, SweepVariable v) {
  if (sc.sweep_variable != v)
    throw SchemaError(std::string("schema: scenario.sweep.variable: pipeline '") +
                      sc.pipeline + "' needs '" + sweep_variable_name(v) + "'");
}

void require_flat(const Scenario& sc) {
  if (!sc.flat_gains)
    throw SchemaError("schema: scenario.channel_gains: pipeline '" + sc.pipeline +
                      "' needs a flat channel");
}

void require_targets(const Scenario& sc) {
  if (sc.scene.targets.empty())
    throw SchemaError("schema: scenario.scene.targets: pipeline '" + sc.pipeline +
                      "' needs at least one target");
}

// Largest-remainder split of n subcarriers across the class fractions.
std::vector<int> block_counts(std::span<const double> fractions, int n) {
  const std::size_t j = fractions.size();
  std::vector<int> counts(j);
  std::vector<std::pair<double, std::size_t>> rem(j);
  int used = 0;
  for (std::size_t i = 0; i < j; ++i) {
    const double exact = fractions[i] * n;
    counts[i] = static_cast<int>(std::floor(exact + 1e-12));
    used += counts[i];
    rem[i] = {exact - counts[i], i};
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int k = 0; k < n - used; ++k) ++counts[rem[static_cast<std::size_t>(k)].second];
  return counts;
}

std::vector<ConstellationSpec> map_from_counts(const Scenario& sc,
                                               std::span<const int> counts) {
  std::vector<ConstellationSpec> c_map;
  c_map.reserve(static_cast<std::size_t>(sc.ofdm.n_subcarriers));
  for (std::size_t j = 0; j < counts.size(); ++j)
    for (int k = 0; k < counts[j]; ++k) c_map.push_back(sc.classes[j]);
  return c_map;
}

std::size_t focal_index(const SensingScene& scene) {
  std::size_t q = 0;
  for (std::size_t i = 1; i < scene.targets.size(); ++i)
    if (scene.targets[i].sigma_alpha_sq > scene.targets[q].sigma_alpha_sq) q = i;
  return q;
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void note_infeasible(Manifest& man, const std::string& where, const Error& e) {
  man.infeasible = true;
  man.messages.push_back(where + ": " + e.what());
}

std::vector<std::string> mixture_columns(const Scenario& sc, bool with_objective_first) {
  std::vector<std::string> cols = {"r_min", "chain"};
  if (with_objective_first)
    cols.insert(cols.end(), {"objective", "sinr", "sinr_db", "support"});
  else
    cols.insert(cols.end(), {"sinr", "sinr_db", "objective", "support"});
  for (std::size_t j = 0; j < sc.classes.size(); ++j)
    cols.push_back("eta_" + std::to_string(j) + "_" + sc.classes[j].id);
  for (std::size_t j = 0; j < sc.classes.size(); ++j)
    cols.push_back("p_" + std::to_string(j) + "_" + sc.classes[j].id);
  return cols;
}

void run_flat_solve_pipeline(const Scenario& sc, const std::string& out_dir,
                             Manifest& man, const std::string& csv_name,
                             bool objective_first) {
  require_sweep(sc, SweepVariable::r_min);
  require_flat(sc);
  const SurrogateContext ctx = ctx_for(sc);
  const auto classes = classes_for(sc, sc.channel_gains[0]);
  CsvWriter csv(join_path(out_dir, csv_name), mixture_columns(sc, objective_first));
  for (double r_min : sc.sweep_grid) {
    for (Chain chain : sc.chains) {
      try {
        const MixturePlan plan =
            flat_fading_solve(chain, classes, r_min, sc.ofdm.p_ave, ctx);
        const double sinr = surrogate_sinr(chain, plan, classes, ctx);
        std::vector<std::string> cells = {format_double(r_min), chain_name(chain)};
        if (objective_first)
          cells.insert(cells.end(), {format_double(plan.objective),
                                     format_double(sinr), db_str(sinr),
                                     format_int(support_size(plan))});
        else
          cells.insert(cells.end(), {format_double(sinr), db_str(sinr),
                                     format_double(plan.objective),
                                     format_int(support_size(plan))});
        for (double e : plan.eta) cells.push_back(format_double(e));
        for (double p : plan.p_per_class) cells.push_back(format_double(p));
        csv.row(cells);
      } catch (const InfeasibleError& e) {
        note_infeasible(man, csv_name + " r_min=" + format_double(r_min) +
                                 " chain=" + chain_name(chain),
                        e);
      }
    }
  }
  man.outputs.push_back({csv_name, csv.finish()});
}

void run_subcarrier_plan(const Scenario& sc, const std::string& out_dir,
                         Manifest& man) {
  require_sweep(sc, SweepVariable::r_min);
  const SurrogateContext ctx = ctx_for(sc);
  // gamma_min drives the per-subcarrier floors; the flat p_min field is
  // irrelevant here, so build the classes at reference gain 1.
  const auto classes = classes_for(sc, 1.0);
  const std::string csv_name = "subcarrier_plan.csv";
  CsvWriter csv(join_path(out_dir, csv_name),
                {"r_min", "chain", "subcarrier", "channel_gain", "class",
                 "rate_bits", "kappa", "kappa_db"});
  for (double r_min : sc.sweep_grid) {
    for (Chain chain : sc.chains) {
      try {
        DualConfig dual;
        const SubcarrierPlan plan = bilevel_solve(chain, sc.channel_gains, classes,
                                                  r_min, sc.ofdm.p_ave, ctx, dual);
        for (int n = 0; n < sc.ofdm.n_subcarriers; ++n) {
          const auto j = static_cast<std::size_t>(plan.assignment[static_cast<std::size_t>(n)]);
          csv.row({format_double(r_min), chain_name(chain), format_int(n),
                   format_double(sc.channel_gains[static_cast<std::size_t>(n)]),
                   classes[j].id, format_int(classes[j].moments.rate_bits),
                   format_double(plan.kappa[static_cast<std::size_t>(n)]),
                   db_str(plan.kappa[static_cast<std::size_t>(n)])});
        }
        man.messages.push_back(
            "subcarrier_plan r_min=" + format_double(r_min) + " chain=" +
            chain_name(chain) + " objective=" + format_double(plan.objective) +
            " converged=" + (plan.converged ? "1" : "0"));
      } catch (const InfeasibleError& e) {
        note_infeasible(man, csv_name + " r_min=" + format_double(r_min) +
                                 " chain=" + chain_name(chain),
                        e);
      }
    }
  }
  man.outputs.push_back({csv_name, csv.finish()});
}

void run_rmse_vs_snr(const Scenario& sc, const std::string& out_dir, Manifest& man) {
  require_sweep(sc, SweepVariable::snr);
  require_targets(sc);
  RmseBenchmarkConfig cfg;
  cfg.ofdm = sc.ofdm;
  for (const auto& t : sc.scene.targets) cfg.taus.push_back(t.tau);
  cfg.sigma_alpha_sq = sc.scene.targets[focal_index(sc.scene)].sigma_alpha_sq;
  cfg.snr_db_grid = sc.sweep_grid;
  cfg.chains = sc.chains;
  if (sc.mixes.empty()) {
    std::vector<int> counts(sc.classes.size(), 0);
    counts[0] = sc.ofdm.n_subcarriers;
    cfg.mixes.push_back({sc.classes[0].id, map_from_counts(sc, counts)});
  } else {
    for (const auto& mix : sc.mixes)
      cfg.mixes.push_back(
          {mix.id, map_from_counts(sc, block_counts(mix.fractions,
                                                    sc.ofdm.n_subcarriers))});
  }
  cfg.p = uniform_power(sc.ofdm.n_subcarriers, sc.ofdm.p_ave);
  cfg.trials = sc.trials;
  cfg.seed = sc.seed;
  cfg.threads = sc.threads;

  const std::string csv_name = "rmse_vs_snr.csv";
  CsvWriter csv(join_path(out_dir, csv_name),
                {"snr_db", "chain", "mix_id", "rmse_samples", "rmse_meters",
                 "trials"});
  for (const RmseRow& row : rmse_benchmark(cfg))
    csv.row({format_double(row.snr_db), chain_name(row.chain), row.mix_id,
             format_double(row.rmse_samples), format_double(row.rmse_meters),
             format_int(row.trials)});
  man.outputs.push_back({csv_name, csv.finish()});
}

void run_coherent_gain(const Scenario& sc, const std::string& out_dir,
                       Manifest& man) {
  require_sweep(sc, SweepVariable::m_symbols);
  require_targets(sc);
  std::vector<int> counts;
  if (sc.mixes.empty()) {
    counts.assign(sc.classes.size(), 0);
    counts[0] = sc.ofdm.n_subcarriers;
  } else {
    counts = block_counts(sc.mixes[0].fractions, sc.ofdm.n_subcarriers);
  }
  const auto c_map = map_from_counts(sc, counts);
  const PowerAllocation p = uniform_power(sc.ofdm.n_subcarriers, sc.ofdm.p_ave);

  const std::string csv_name = "coherent_gain.csv";
  CsvWriter csv(join_path(out_dir, csv_name),
                {"m_symbols", "floor", "floor_db", "stderr", "trials"});
  for (double mg : sc.sweep_grid) {
    const int m = static_cast<int>(mg);
    const FloorEstimate est = mc_mf_sidelobe_floor(c_map, p, sc.scene, m, sc.trials,
                                                   sc.seed, sc.threads);
    csv.row({format_int(m), format_double(est.mean), db_str(est.mean),
             format_double(est.stderr_), format_int(est.trials)});
  }
  man.outputs.push_back({csv_name, csv.finish()});
}

void run_qpsk_fraction_sweep(const Scenario& sc, const std::string& out_dir,
                             Manifest& man) {
  require_sweep(sc, SweepVariable::qpsk_fraction);
  require_targets(sc);
  if (sc.classes.size() < 2)
    throw SchemaError(
        "schema: scenario.classes: qpsk_fraction_sweep needs two classes "
        "(the swept one first)");
  const std::size_t q = focal_index(sc.scene);
  const PowerAllocation p = uniform_power(sc.ofdm.n_subcarriers, sc.ofdm.p_ave);

  const std::string csv_name = "qpsk_fraction_sweep.csv";
  CsvWriter csv(join_path(out_dir, csv_name),
                {"fraction", "chain", "sinr", "sinr_db", "throughput_bits"});
  for (double f : sc.sweep_grid) {
    const int n0 = static_cast<int>(std::llround(f * sc.ofdm.n_subcarriers));
    std::vector<int> counts(sc.classes.size(), 0);
    counts[0] = n0;
    counts[1] = sc.ofdm.n_subcarriers - n0;
    const auto c_map = map_from_counts(sc, counts);

    SensingLawInputs in;
    in.p = p;
    for (const auto& c : c_map) {
      const Moments mom = moments(c);
      in.mu4.push_back(mom.mu4);
      in.nu_minus2.push_back(mom.nu_minus2);
    }
    in.scene = sc.scene;
    in.m = sc.ofdm.n_symbols;

    // throughput: bits per subcarrier use scaled by the uncoded symbol
    // success probability at the receive SNR
    double throughput = 0.0;
    for (int n = 0; n < sc.ofdm.n_subcarriers; ++n) {
      const auto& c = c_map[static_cast<std::size_t>(n)];
      const double gain = sc.channel_gains[static_cast<std::size_t>(n)];
      double bit_err = 0.0;
      if (sc.scene.noise_var > 0.0)
        bit_err = ber(c, sc.ofdm.p_ave * gain / sc.scene.noise_var);
      throughput += c.bits_per_symbol * (1.0 - bit_err);
    }
    throughput /= sc.ofdm.n_subcarriers;

    for (Chain chain : sc.chains) {
      const double sinr = chain == Chain::MF ? sinr_mf(in, q) : snr_rf(in, q);
      csv.row({format_double(f), chain_name(chain), format_double(sinr),
               db_str(sinr), format_double(throughput)});
    }
  }
  man.outputs.push_back({csv_name, csv.finish()});
}

}  // namespace

Manifest run_experiment(const Scenario& sc, const std::string& scenario_bytes,
                        const std::string& out_dir) {
  Manifest man;
  man.pipeline = sc.pipeline;
  man.config_hash = hex64(fnv1a64(scenario_bytes));
  man.seed = sc.seed;
  man.trials = sc.trials;
  man.threads = sc.threads;

  if (sc.pipeline == "mixture_sweep")
    run_flat_solve_pipeline(sc, out_dir, man, "mixture_sweep.csv", true);
  else if (sc.pipeline == "tradeoff_curve")
    run_flat_solve_pipeline(sc, out_dir, man, "tradeoff_curve.csv", false);
  else if (sc.pipeline == "subcarrier_plan")
    run_subcarrier_plan(sc, out_dir, man);
  else if (sc.pipeline == "rmse_vs_snr")
    run_rmse_vs_snr(sc, out_dir, man);
  else if (sc.pipeline == "coherent_gain")
    run_coherent_gain(sc, out_dir, man);
  else if (sc.pipeline == "qpsk_fraction_sweep")
    run_qpsk_fraction_sweep(sc, out_dir, man);
  else
    throw SchemaError("schema: unknown pipeline '" + sc.pipeline + "'");

  write_manifest(join_path(out_dir, "manifest.json"), man);
  return man;
}

}  // namespace isaclab
