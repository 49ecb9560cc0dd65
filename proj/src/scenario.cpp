#include "isaclab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace isaclab {

namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schema: invalid JSON: ") + e.what());
  }
}

const json& member(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw SchemaError("schema: " + path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError("schema: " + path + ": missing field '" + key + "'");
  return *it;
}

const json* optional_member(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw SchemaError("schema: " + path + ": expected an object");
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& path) {
  if (!j.is_object()) return;
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw SchemaError("schema: " + path + ": unknown field '" + it.key() + "'");
  }
}

double as_num(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError("schema: " + path + ": expected a number");
  return j.get<double>();
}

long long as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer())
    throw SchemaError("schema: " + path + ": expected an integer");
  return j.get<long long>();
}

std::string as_str(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError("schema: " + path + ": expected a string");
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError("schema: " + path + ": expected an array");
  return j;
}

std::vector<double> num_array(const json& j, const std::string& path) {
  std::vector<double> v;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i)
    v.push_back(as_num(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

OfdmConfig parse_ofdm(const json& j, const std::string& path) {
  OfdmConfig cfg;
  reject_unknown(j,
                 {"n_subcarriers", "n_symbols", "subcarrier_spacing_hz",
                  "sample_interval_s", "carrier_hz", "p_ave"},
                 path);
  if (const json* f = optional_member(j, "n_subcarriers", path))
    cfg.n_subcarriers = static_cast<int>(as_int(*f, path + ".n_subcarriers"));
  if (const json* f = optional_member(j, "n_symbols", path))
    cfg.n_symbols = static_cast<int>(as_int(*f, path + ".n_symbols"));
  if (const json* f = optional_member(j, "subcarrier_spacing_hz", path))
    cfg.subcarrier_spacing_hz = as_num(*f, path + ".subcarrier_spacing_hz");
  if (const json* f = optional_member(j, "sample_interval_s", path))
    cfg.sample_interval_s = as_num(*f, path + ".sample_interval_s");
  if (const json* f = optional_member(j, "carrier_hz", path))
    cfg.carrier_hz = as_num(*f, path + ".carrier_hz");
  if (const json* f = optional_member(j, "p_ave", path))
    cfg.p_ave = as_num(*f, path + ".p_ave");
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw SchemaError("schema: " + path + ": " + e.what());
  }
  return cfg;
}

SensingScene parse_scene(const json& j, const std::string& path, int n) {
  SensingScene scene;
  reject_unknown(j, {"targets", "noise_var"}, path);
  const json& targets = member(j, "targets", path);
  for (std::size_t i = 0; i < as_array(targets, path + ".targets").size(); ++i) {
    const std::string tpath = path + ".targets[" + std::to_string(i) + "]";
    const json& t = targets[i];
    reject_unknown(t, {"sigma_alpha_sq", "tau"}, tpath);
    Target tgt;
    tgt.sigma_alpha_sq = as_num(member(t, "sigma_alpha_sq", tpath),
                                tpath + ".sigma_alpha_sq");
    tgt.tau = as_num(member(t, "tau", tpath), tpath + ".tau");
    scene.targets.push_back(tgt);
  }
  scene.noise_var = as_num(member(j, "noise_var", path), path + ".noise_var");
  try {
    scene.validate(n);
  } catch (const Error& e) {
    throw SchemaError("schema: " + path + ": " + e.what());
  }
  return scene;
}

ConstellationSpec parse_class(const json& j, const std::string& path) {
  try {
    if (j.is_string()) return builtin_constellation(j.get<std::string>());
    if (j.is_object()) {
      if (const json* name = optional_member(j, "constellation", path))
        return builtin_constellation(as_str(*name, path + ".constellation"));
      return load_constellation_json(j.dump());
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError("schema: " + path + ": " + e.what());
  }
  throw SchemaError("schema: " + path + ": expected a constellation id or object");
}

std::vector<Chain> parse_chains(const json& j, const std::string& path) {
  const std::string s = as_str(j, path);
  if (s == "mf") return {Chain::MF};
  if (s == "rf") return {Chain::RF};
  if (s == "both") return {Chain::MF, Chain::RF};
  throw SchemaError("schema: " + path + ": expected \"mf\", \"rf\" or \"both\"");
}

SweepVariable parse_sweep_variable(const json& j, const std::string& path) {
  const std::string s = as_str(j, path);
  if (s == "r_min") return SweepVariable::r_min;
  if (s == "snr") return SweepVariable::snr;
  if (s == "qpsk_fraction") return SweepVariable::qpsk_fraction;
  if (s == "m_symbols") return SweepVariable::m_symbols;
  throw SchemaError("schema: " + path +
                    ": expected one of r_min, snr, qpsk_fraction, m_symbols");
}

}  // namespace

const char* sweep_variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::r_min: return "r_min";
    case SweepVariable::snr: return "snr";
    case SweepVariable::qpsk_fraction: return "qpsk_fraction";
    case SweepVariable::m_symbols: return "m_symbols";
  }
  return "?";
}

Scenario load_scenario(const std::string& json_text) {
  const json j = parse_json(json_text);
  const std::string root = "scenario";
  reject_unknown(j,
                 {"pipeline", "ofdm", "scene", "classes", "channel_gains", "chain",
                  "r_min", "ber_th", "clutter_power", "sigma_q_sq", "sweep",
                  "mixes", "trials", "seed", "threads"},
                 root);

  Scenario sc;
  sc.pipeline = as_str(member(j, "pipeline", root), root + ".pipeline");
  static const std::set<std::string> kPipelines = {
      "mixture_sweep",  "subcarrier_plan", "rmse_vs_snr",
      "tradeoff_curve", "coherent_gain",   "qpsk_fraction_sweep"};
  if (!kPipelines.count(sc.pipeline))
    throw SchemaError("schema: scenario.pipeline: unknown pipeline '" +
                      sc.pipeline + "'");

  if (const json* f = optional_member(j, "ofdm", root))
    sc.ofdm = parse_ofdm(*f, root + ".ofdm");
  sc.scene = parse_scene(member(j, "scene", root), root + ".scene",
                         sc.ofdm.n_subcarriers);

  const json& classes = as_array(member(j, "classes", root), root + ".classes");
  if (classes.empty())
    throw SchemaError("schema: scenario.classes: must not be empty");
  for (std::size_t i = 0; i < classes.size(); ++i)
    sc.classes.push_back(
        parse_class(classes[i], root + ".classes[" + std::to_string(i) + "]"));

  if (const json* f = optional_member(j, "channel_gains", root)) {
    const std::string path = root + ".channel_gains";
    if (f->is_string()) {
      if (f->get<std::string>() != "flat")
        throw SchemaError("schema: " + path + ": expected \"flat\" or an array");
      sc.channel_gains.assign(static_cast<std::size_t>(sc.ofdm.n_subcarriers), 1.0);
      sc.flat_gains = true;
    } else {
      sc.channel_gains = num_array(*f, path);
      if (sc.channel_gains.size() != static_cast<std::size_t>(sc.ofdm.n_subcarriers))
        throw SchemaError("schema: " + path + ": expected " +
                          std::to_string(sc.ofdm.n_subcarriers) + " gains");
      for (double g : sc.channel_gains)
        if (!(g > 0.0))
          throw SchemaError("schema: " + path + ": gains must be positive");
      sc.flat_gains =
          std::all_of(sc.channel_gains.begin(), sc.channel_gains.end(),
                      [&](double g) { return g == sc.channel_gains[0]; });
    }
  } else {
    sc.channel_gains.assign(static_cast<std::size_t>(sc.ofdm.n_subcarriers), 1.0);
  }

  sc.chains = {Chain::MF, Chain::RF};
  if (const json* f = optional_member(j, "chain", root))
    sc.chains = parse_chains(*f, root + ".chain");

  if (const json* f = optional_member(j, "r_min", root))
    sc.r_min = as_num(*f, root + ".r_min");
  if (const json* f = optional_member(j, "ber_th", root)) {
    sc.ber_th = as_num(*f, root + ".ber_th");
    if (!(sc.ber_th > 0.0 && sc.ber_th < 0.5))
      throw SchemaError("schema: scenario.ber_th: must lie in (0, 0.5)");
  }
  if (const json* f = optional_member(j, "clutter_power", root)) {
    sc.clutter_power = as_num(*f, root + ".clutter_power");
    if (!(sc.clutter_power >= 0.0))
      throw SchemaError("schema: scenario.clutter_power: must be nonnegative");
  }
  if (const json* f = optional_member(j, "sigma_q_sq", root)) {
    sc.sigma_q_sq = as_num(*f, root + ".sigma_q_sq");
    if (!(sc.sigma_q_sq > 0.0))
      throw SchemaError("schema: scenario.sigma_q_sq: must be positive");
  }

  const json& sweep = member(j, "sweep", root);
  reject_unknown(sweep, {"variable", "grid"}, root + ".sweep");
  sc.sweep_variable = parse_sweep_variable(member(sweep, "variable", root + ".sweep"),
                                           root + ".sweep.variable");
  sc.sweep_grid = num_array(member(sweep, "grid", root + ".sweep"),
                            root + ".sweep.grid");
  if (sc.sweep_grid.empty())
    throw SchemaError("schema: scenario.sweep.grid: must not be empty");
  if (sc.sweep_variable == SweepVariable::m_symbols)
    for (double g : sc.sweep_grid)
      if (!(g >= 1.0) || g != std::floor(g))
        throw SchemaError(
            "schema: scenario.sweep.grid: m_symbols entries must be positive "
            "integers");
  if (sc.sweep_variable == SweepVariable::qpsk_fraction)
    for (double g : sc.sweep_grid)
      if (!(g >= 0.0 && g <= 1.0))
        throw SchemaError(
            "schema: scenario.sweep.grid: fractions must lie in [0, 1]");

  if (const json* f = optional_member(j, "mixes", root)) {
    const json& arr = as_array(*f, root + ".mixes");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = root + ".mixes[" + std::to_string(i) + "]";
      reject_unknown(arr[i], {"id", "fractions"}, path);
      MixDef mix;
      mix.id = as_str(member(arr[i], "id", path), path + ".id");
      mix.fractions = num_array(member(arr[i], "fractions", path),
                                path + ".fractions");
      if (mix.fractions.size() != sc.classes.size())
        throw SchemaError("schema: " + path + ".fractions: expected " +
                          std::to_string(sc.classes.size()) + " entries");
      double sum = 0.0;
      for (double frac : mix.fractions) {
        if (!(frac >= 0.0))
          throw SchemaError("schema: " + path + ".fractions: must be nonnegative");
        sum += frac;
      }
      if (std::fabs(sum - 1.0) > 1e-9)
        throw SchemaError("schema: " + path + ".fractions: must sum to 1");
      sc.mixes.push_back(std::move(mix));
    }
  }

  if (const json* f = optional_member(j, "trials", root)) {
    sc.trials = static_cast<int>(as_int(*f, root + ".trials"));
    if (sc.trials < 1)
      throw SchemaError("schema: scenario.trials: must be at least 1");
  }
  if (const json* f = optional_member(j, "seed", root))
    sc.seed = static_cast<std::uint64_t>(as_int(*f, root + ".seed"));
  if (const json* f = optional_member(j, "threads", root)) {
    const long long t = as_int(*f, root + ".threads");
    if (t < 0) throw SchemaError("schema: scenario.threads: must be nonnegative");
    sc.threads = static_cast<unsigned>(t);
  }
  return sc;
}

OracleInstance load_oracle_instance(const std::string& json_text) {
  const json j = parse_json(json_text);
  const std::string root = "instance";
  reject_unknown(j,
                 {"chain", "classes", "channel_gains", "r_min", "p_ave", "ber_th",
                  "clutter_power", "sigma_z", "n_symbols"},
                 root);
  OracleInstance inst;
  const std::string chain = as_str(member(j, "chain", root), root + ".chain");
  if (chain == "mf")
    inst.chain = Chain::MF;
  else if (chain == "rf")
    inst.chain = Chain::RF;
  else
    throw SchemaError("schema: instance.chain: expected \"mf\" or \"rf\"");

  const json& classes = as_array(member(j, "classes", root), root + ".classes");
  if (classes.empty())
    throw SchemaError("schema: instance.classes: must not be empty");
  for (std::size_t i = 0; i < classes.size(); ++i)
    inst.classes.push_back(
        parse_class(classes[i], root + ".classes[" + std::to_string(i) + "]"));

  inst.channel_gains =
      num_array(member(j, "channel_gains", root), root + ".channel_gains");
  if (inst.channel_gains.size() < 2)
    throw SchemaError("schema: instance.channel_gains: need at least 2 gains");
  for (double g : inst.channel_gains)
    if (!(g > 0.0))
      throw SchemaError("schema: instance.channel_gains: gains must be positive");

  inst.r_min = as_num(member(j, "r_min", root), root + ".r_min");
  inst.p_ave = as_num(member(j, "p_ave", root), root + ".p_ave");
  if (!(inst.p_ave > 0.0))
    throw SchemaError("schema: instance.p_ave: must be positive");
  if (const json* f = optional_member(j, "ber_th", root)) {
    inst.ber_th = as_num(*f, root + ".ber_th");
    if (!(inst.ber_th > 0.0 && inst.ber_th < 0.5))
      throw SchemaError("schema: instance.ber_th: must lie in (0, 0.5)");
  }
  if (const json* f = optional_member(j, "clutter_power", root))
    inst.clutter_power = as_num(*f, root + ".clutter_power");
  if (const json* f = optional_member(j, "sigma_z", root)) {
    inst.sigma_z = as_num(*f, root + ".sigma_z");
    if (!(inst.sigma_z > 0.0))
      throw SchemaError("schema: instance.sigma_z: must be positive");
  }
  if (const json* f = optional_member(j, "n_symbols", root)) {
    inst.n_symbols = static_cast<int>(as_int(*f, root + ".n_symbols"));
    if (inst.n_symbols < 1)
      throw SchemaError("schema: instance.n_symbols: must be at least 1");
  }
  return inst;
}

OfdmConfig ofdm_config_from_json(const std::string& json_text) {
  return parse_ofdm(parse_json(json_text), "ofdm");
}

SensingScene sensing_scene_from_json(const std::string& json_text, int n_subcarriers) {
  return parse_scene(parse_json(json_text), "scene", n_subcarriers);
}

}  // namespace isaclab
