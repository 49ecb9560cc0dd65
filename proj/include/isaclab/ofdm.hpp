#pragma once

#include <span>
#include <string>
#include <vector>

#include "isaclab/constellation.hpp"
#include "isaclab/fft.hpp"
#include "isaclab/rng.hpp"
#include "isaclab/types.hpp"

namespace isaclab {

struct OfdmConfig {
  int n_subcarriers = 64;
  int n_symbols = 16;
  double subcarrier_spacing_hz = 312500.0;
  double sample_interval_s = 5e-8;
  double carrier_hz = 2.45e9;  // metadata only
  double p_ave = 1.0;

  void validate() const;
};

// Per-subcarrier transmit power with a fixed mean budget.
struct PowerAllocation {
  std::vector<double> p;
  double p_ave = 0.0;
};

// Builds the allocation and computes p_ave = mean(p). Rejects negative
// entries.
PowerAllocation make_power_allocation(std::vector<double> p);
PowerAllocation uniform_power(int n, double p_ave);
// Enforces p_n >= 0 and |mean(p) - p_ave| <= 1e-9 * p_ave.
void validate(const PowerAllocation& p);

// M x N data symbols (row-major) plus the constellation id realized on each
// subcarrier.
struct SymbolGrid {
  int n = 0;
  int m = 0;
  cvec s;  // s[sym * n + sub]
  std::vector<std::string> constellation_map;

  std::span<const cdouble> row(int sym) const {
    return std::span<const cdouble>(s).subspan(static_cast<std::size_t>(sym) * n, n);
  }
};

// Draws i.i.d. symbols: subcarrier n uses c_map[n].
SymbolGrid make_grid(const std::vector<ConstellationSpec>& c_map, int m, RngStream& rng);

struct Target {
  double sigma_alpha_sq = 1.0;  // reflection coefficient variance
  double tau = 0.0;             // delay in samples, fractional allowed
};

struct SensingScene {
  std::vector<Target> targets;
  double noise_var = 0.0;  // sigma_z^2

  void validate(int n_subcarriers) const;
};

// x[t] = (1/sqrt(N)) sum_n sqrt(P_n) s_n exp(+j 2 pi t n / N).
cvec modulate(std::span<const cdouble> grid_row, const PowerAllocation& p);

// Reflection coefficients alpha_q ~ CN(0, sigma_alpha_sq), one per target.
// Held fixed across the M symbols of a coherent processing interval and
// redrawn per Monte-Carlo trial by the callers.
cvec draw_reflections(const SensingScene& scene, RngStream& rng);

// y = sum_q alpha_q * delay(x, tau_q) + z. A target at delay tau peaks at
// profile index tau: integer tau is the cyclic shift y[t] = x[(t - tau) mod N],
// fractional tau the frequency-domain ramp exp(-j 2 pi n tau / N).
cvec apply_channel(const cvec& x, const SensingScene& scene,
                   std::span<const cdouble> alphas, RngStream& rng);
// Convenience overload drawing fresh reflections for this call.
cvec apply_channel(const cvec& x, const SensingScene& scene, RngStream& rng);

// floor(2 d / (c T_s)): two-way propagation delay in whole samples.
int delay_from_range(double range_m, double c_mps, double sample_interval_s);

}  // namespace isaclab
