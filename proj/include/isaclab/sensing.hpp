#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "isaclab/constellation.hpp"
#include "isaclab/ofdm.hpp"
#include "isaclab/types.hpp"

namespace isaclab {

// Filter output versus delay bin.
struct RangeProfile {
  cvec bins;
  Chain chain = Chain::MF;
  int m_integrated = 1;
};

// Everything the closed-form sensing laws consume. mu4 and nu_minus2 are
// per-subcarrier so mixed alphabets are supported.
struct SensingLawInputs {
  PowerAllocation p;
  std::vector<double> mu4;
  std::vector<double> nu_minus2;
  SensingScene scene;
  int m = 1;

  void validate() const;
};

// bins = unitary IDFT of sqrt(N) * Y .* conj(X); bins[k] equals the cyclic
// autocorrelation r_k for y = x.
RangeProfile matched_filter(const cvec& y_spec, const cvec& x_spec);

// bins = unitary IDFT of Y .* conj(X) ./ (|X|^2 + epsilon); epsilon = 0 is
// exact division and is safe for alphabets that exclude the origin.
RangeProfile reciprocal_filter(const cvec& y_spec, const cvec& x_spec,
                               double epsilon = 0.0);

// Complex mean across symbol profiles of the same chain and length.
RangeProfile coherent_integrate(std::span<const RangeProfile> profiles);

struct AcfPowerEstimate {
  std::vector<double> mean;     // E|r_bar_k|^2 per lag
  std::vector<double> stderr_;  // standard error per lag
  int trials = 0;
};

// Monte-Carlo estimate of E|r_bar_k|^2: symbols drawn per trial, M-symbol
// averaged autocorrelation through the actual modulate path. Deterministic
// for a fixed seed regardless of thread count.
AcfPowerEstimate empirical_acf_power(const std::vector<ConstellationSpec>& c_map,
                                     const PowerAllocation& p, int m, int trials,
                                     std::uint64_t seed, unsigned threads = 1);

// sum P_n^2 (mu4_n - 1) + (sum P_n)^2.
double expected_r0_sq(const PowerAllocation& p, std::span<const double> mu4);
double expected_r0_sq(const PowerAllocation& p, double mu4);

// Expected sidelobe level averaged over lags 1..N-1:
// (1/(N-1)) ( sum [(N-1) mu4_n + 1] P_n^2 - (sum P_n)^2 ).
double closed_form_esl(const PowerAllocation& p, std::span<const double> mu4);
double closed_form_esl(const PowerAllocation& p, double mu4);

// Post-integration SINR at the true delay of target q for the matched
// filter: desired sigma_q^2 E|r_bar_0|^2 against clutter scaled by the
// lag-averaged sidelobe law plus thermal noise.
double sinr_mf(const SensingLawInputs& in, std::size_t q);

// Reciprocal-filter SNR: sigma_q^2 M N^2 / (sigma_z^2 sum nu_n / P_n).
double snr_rf(const SensingLawInputs& in, std::size_t q);

// One Monte-Carlo trial reduced to the quantities the SINR estimator needs:
// the integrated profile value at the true delay bin and the known desired
// component (alpha_q r_bar_0 for MF, alpha_q sqrt(N) for RF).
struct SensingTrialStat {
  cdouble profile_at_tau;
  cdouble desired;
};

struct SinrEstimate {
  double sinr = 0.0;
  double desired_power = 0.0;
  double residual_power = 0.0;
  int trials = 0;
};

// mean |desired|^2 / mean |profile_at_tau - desired|^2 across trials;
// +inf when the residual underflows (noise-free scenes).
SinrEstimate measured_sinr(std::span<const SensingTrialStat> trials);

// Full-pipeline Monte-Carlo SINR at target q's (integer) delay bin.
SinrEstimate mc_sinr(Chain chain, const std::vector<ConstellationSpec>& c_map,
                     const PowerAllocation& p, const SensingScene& scene, int m,
                     std::size_t q, int trials, std::uint64_t seed,
                     unsigned threads = 1);

struct FloorEstimate {
  double mean = 0.0;     // average |bin|^2 over off-peak lags and trials
  double stderr_ = 0.0;
  int trials = 0;
};

// Average off-peak MF bin power with deterministic unit-magnitude
// reflection coefficients (isolates the 1/M coherent-integration law from
// reflection fading).
FloorEstimate mc_mf_sidelobe_floor(const std::vector<ConstellationSpec>& c_map,
                                   const PowerAllocation& p, const SensingScene& scene,
                                   int m, int trials, std::uint64_t seed,
                                   unsigned threads = 1);

// Per-bin variance of the reciprocal filter output for a no-target scene;
// the law is (sigma_z^2 / (M N)) sum nu_n / P_n.
FloorEstimate mc_rf_noise_bin_variance(const std::vector<ConstellationSpec>& c_map,
                                       const PowerAllocation& p, double noise_var,
                                       int m, int trials, std::uint64_t seed,
                                       unsigned threads = 1);

}  // namespace isaclab
