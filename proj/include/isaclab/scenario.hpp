#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isaclab/constellation.hpp"
#include "isaclab/ofdm.hpp"
#include "isaclab/types.hpp"

namespace isaclab {

enum class SweepVariable { r_min, snr, qpsk_fraction, m_symbols };

const char* sweep_variable_name(SweepVariable v);

// Named constellation mixture: fractions over the scenario's class list,
// realized as contiguous subcarrier blocks.
struct MixDef {
  std::string id;
  std::vector<double> fractions;
};

struct Scenario {
  std::string pipeline;
  OfdmConfig ofdm;
  SensingScene scene;
  std::vector<ConstellationSpec> classes;
  std::vector<double> channel_gains;  // length N; expanded when given as "flat"
  bool flat_gains = true;
  std::vector<Chain> chains;  // parsed from "mf" | "rf" | "both"
  double r_min = 3.5;
  double ber_th = 1e-4;
  double clutter_power = 1.0;  // off-focus reflection power entering the surrogates
  double sigma_q_sq = 1.0;     // focal reflection power
  SweepVariable sweep_variable = SweepVariable::r_min;
  std::vector<double> sweep_grid;
  std::vector<MixDef> mixes;
  int trials = 100;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

// Parses and fully validates; failures raise SchemaError naming the
// offending field.
Scenario load_scenario(const std::string& json_text);

// Single optimization instance for the oracle subcommand:
// {chain, classes, channel_gains, r_min, p_ave, ber_th, clutter_power,
//  sigma_z, n_symbols?}. Class entries are builtin ids or inline
// constellation objects.
struct OracleInstance {
  Chain chain = Chain::MF;
  std::vector<ConstellationSpec> classes;
  std::vector<double> channel_gains;
  double r_min = 0.0;
  double p_ave = 1.0;
  double ber_th = 1e-4;
  double clutter_power = 1.0;
  double sigma_z = 1.0;
  int n_symbols = 16;
};

OracleInstance load_oracle_instance(const std::string& json_text);

// Standalone loaders for the signal-toolkit JSON forms.
OfdmConfig ofdm_config_from_json(const std::string& json_text);
SensingScene sensing_scene_from_json(const std::string& json_text, int n_subcarriers);

}  // namespace isaclab
