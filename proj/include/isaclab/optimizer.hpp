#pragma once

#include <span>
#include <string>
#include <vector>

#include "isaclab/constellation.hpp"
#include "isaclab/ofdm.hpp"
#include "isaclab/types.hpp"

namespace isaclab {

// Scenario constants entering the sensing surrogates. The clutter and noise
// scales multiply different parts of the cost, so they must be explicit even
// though common positive factors never move the argmin for a fixed M.
struct SurrogateContext {
  int n = 64;                // subcarriers
  int m = 16;                // coherently integrated symbols
  double sigma_q_sq = 1.0;   // focal reflection power
  double clutter = 1.0;      // summed off-focus reflection power
  double noise_var = 1.0;    // receiver noise power per subcarrier
  void validate() const;
};

struct ClassSpec {
  std::string id;
  Moments moments;
  // Linear SNR floor that meets the BER target; per-subcarrier power floors
  // follow as gamma_min * noise_var / |H_n|^2.
  double gamma_min = 0.0;
  double p_min = 0.0;  // flat-channel power floor
};

ClassSpec make_class(const ConstellationSpec& c, double ber_th, double gain_sq,
                     double noise_var);

// Quadratic cost coefficient of one subcarrier's power in the matched-filter
// surrogate: clutter * ((1/M)(mu4 - 1) + N/(N-1)).
double mf_cost_coeff(const Moments& m, const SurrogateContext& ctx);
// Mixture-level coefficient c_j = N * mf_cost_coeff.
double mf_mixture_coeff(const Moments& m, const SurrogateContext& ctx);

// P_n = N P_ave / (b_n sum(1/b_i)), b_n = (1/M)(mu4_n - 1) + N/(N-1).
// Minimizes sum b_n P_n^2 under the average-power budget; higher fourth
// moment means strictly less power.
PowerAllocation mf_power_rule(std::span<const double> mu4, int m, double p_ave);

// P_n = N P_ave sqrt(nu_n) / sum sqrt(nu_i). Minimizes sum nu_n / P_n.
PowerAllocation rf_power_rule(std::span<const double> nu_minus2, double p_ave);

struct MixturePlan {
  std::vector<double> eta;          // simplex weights, length J
  std::vector<double> p_per_class;  // P_j = theta_j / eta_j (0 off-support)
  std::vector<double> theta;        // power shares, sum = p_ave
  double objective = 0.0;  // MF: sum c_j theta^2/eta; RF: sum nu_j eta^2/theta
  double r_min = 0.0;
  double p_ave = 0.0;
};

int support_size(const MixturePlan& plan, double tol = 1e-8);

// Joint constellation-mixture and power-share solver on a flat channel.
// Enumerates supports of size 1..3 (the optimum never needs more), solves
// each reduced convex program to tolerance 1e-10, returns the best. Ties
// prefer the smaller support. Throws on infeasible (r_min above every class
// rate, or power floors incompatible with the budget).
MixturePlan flat_fading_solve(Chain chain, std::span<const ClassSpec> classes,
                              double r_min, double p_ave,
                              const SurrogateContext& ctx, double p_max = 0.0);

// Reduced cost of one subcarrier at power price psi: min over kappa in
// [p_min, p_max] of a_j kappa^2 - psi kappa. Clamped-quadratic closed form.
double reduced_cost_phi(double a_j, double p_min_nj, double p_max, double psi);
// Reciprocal-filter analogue: min over kappa of nu_j / kappa - psi kappa.
// psi < 0 puts the stationary point at sqrt(nu_j / -psi); psi >= 0 drives
// kappa to p_max.
double reduced_cost_phi_rf(double nu_j, double p_min_nj, double p_max, double psi);
// The minimizing kappa of the corresponding reduced cost.
double reduced_cost_argmin(double a_j, double p_min_nj, double p_max, double psi);
double reduced_cost_argmin_rf(double nu_j, double p_min_nj, double p_max, double psi);

struct DualIterate {
  int iter = 0;
  double psi = 0.0;
  double lambda = 0.0;
  double dual_value = 0.0;
  double power_gap = 0.0;  // N p_ave - sum kappa
  double rate_gap = 0.0;   // r_min - mean rate (positive = violated)
};

struct DualConfig {
  int max_iters = 10000;
  double power_tol = 1e-4;  // relative to N * p_ave
  double rate_tol = 1e-4;
  double compl_tol = 1e-3;
  double psi_step = 0.0;     // 0 selects an automatic scale
  double lambda_step = 0.0;  // 0 selects an automatic scale
  double p_max = 0.0;        // 0 selects 1e3 * p_ave
  bool track_history = false;
};

struct SubcarrierPlan {
  std::vector<int> assignment;  // class index per subcarrier
  std::vector<double> kappa;    // power per subcarrier, mean = p_ave
  // MF: sum_n a_j kappa_n^2; RF: sum_n nu_j / kappa_n. The MF value equals
  // the mixture objective of the matching MixturePlan; the RF value is N
  // times it.
  double objective = 0.0;
  double psi = 0.0;
  double lambda = 0.0;
  bool converged = true;  // dual loop reached its tolerances
  std::vector<DualIterate> history;
  int n_classes = 0;
  int chi(int n, int j) const { return assignment[static_cast<std::size_t>(n)] == j; }
  double kappa_nj(int n, int j) const {
    return chi(n, j) ? kappa[static_cast<std::size_t>(n)] : 0.0;
  }
};

// Frequency-selective joint assignment and power control by dual ascent:
// per-subcarrier argmin over classes of phi_nj(psi) - (lambda/N) R_j, the
// clamped power update, then projected subgradient steps on (psi, lambda)
// with an O(1/sqrt(t)) schedule. Every iterate is repaired to a feasible
// primal (greedy rate swaps, then an exact budget-constrained power solve)
// and the best repaired primal is returned. converged=false flags a dual
// loop that hit the iteration cap before its tolerances.
SubcarrierPlan bilevel_solve(Chain chain, std::span<const double> channel_gains,
                             std::span<const ClassSpec> classes, double r_min,
                             double p_ave, const SurrogateContext& ctx,
                             const DualConfig& cfg = {});

// Global optimum by enumerating all J^N assignments (J^N <= 1e6) that meet
// the rate constraint and solving each separable power subproblem exactly.
SubcarrierPlan exhaustive_oracle(Chain chain, std::span<const double> channel_gains,
                                 std::span<const ClassSpec> classes, double r_min,
                                 double p_ave, const SurrogateContext& ctx,
                                 double p_max = 0.0);

// True iff subcarriers with identical (class, gain) receive equal power,
// ignoring subcarriers pinned at their power floor.
bool equal_power_within_blocks(const SubcarrierPlan& plan,
                               std::span<const double> channel_gains,
                               std::span<const ClassSpec> classes,
                               const SurrogateContext& ctx, double tol = 1e-4);
// True iff subcarriers with identical (mu4, nu) moments receive equal power.
bool equal_power_within_blocks(const PowerAllocation& p, std::span<const double> mu4,
                               std::span<const double> nu_minus2, double tol = 1e-4);

// Sensing surrogate value of a plan, as an SINR (MF keeps the coherent peak
// approximated by its mean (sum P)^2; RF is exact).
double surrogate_sinr(Chain chain, const MixturePlan& plan,
                      std::span<const ClassSpec> classes, const SurrogateContext& ctx);
double surrogate_sinr(Chain chain, const SubcarrierPlan& plan,
                      std::span<const ClassSpec> classes, const SurrogateContext& ctx);

}  // namespace isaclab
