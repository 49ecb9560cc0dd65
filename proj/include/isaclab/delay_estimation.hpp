#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "isaclab/constellation.hpp"
#include "isaclab/ofdm.hpp"
#include "isaclab/sensing.hpp"
#include "isaclab/types.hpp"

namespace isaclab {

struct PencilConfig {
  int pencil_k = 0;           // 0 selects floor(N/2)
  double svd_rank_tol = 1e-10;  // relative; negative selects the median-sigma
                                // heuristic used for noisy sequences
};

struct DelayEstimate {
  std::vector<double> taus;  // in samples, each in [0, N), sorted ascending
  cvec eigenvalues;          // ordered consistently with taus
  int effective_order = 0;
  bool rank_deficient = false;
};

// E1[i][j] = e[i+j], E2[i][j] = e[i+j+1]; both (N-K) x K. e[N-1] is unused
// by E1 by construction.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> build_hankel_pair(const cvec& e, int k);

// Matrix Pencil estimator on a frequency-domain sequence e[n] (matched- or
// reciprocal-filter spectrum): rank-Q truncated SVD of E1, eigenvalues of
// Sigma^-1 U^H E2 V, and tau = (-N / 2 pi) arg(lambda) mod N. Eigenvalues
// are used through their argument only; no radial projection.
DelayEstimate matrix_pencil(const cvec& e, int q, const PencilConfig& cfg = {});

// Indices of the q_count largest non-adjacent (cyclically) magnitude bins,
// strongest first.
std::vector<int> peak_pick(const RangeProfile& profile, int q_count);

// Minimum-cost pairing between estimated and true delays on the delay
// circle; returns the total squared circular error, charging (n/2)^2 per
// missing estimate.
double paired_sq_error(std::span<const double> estimated,
                       std::span<const double> truth, int n);

struct RmseMix {
  std::string id;
  std::vector<ConstellationSpec> c_map;  // length N
};

struct RmseBenchmarkConfig {
  OfdmConfig ofdm;
  std::vector<double> taus;        // true delays, fractional allowed
  double sigma_alpha_sq = 1.0;
  std::vector<double> snr_db_grid; // per-subcarrier receive SNR:
                                   // sigma_alpha_sq * p_ave / noise_var
  std::vector<Chain> chains;
  std::vector<RmseMix> mixes;
  PowerAllocation p;
  int trials = 100;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct RmseRow {
  double snr_db = 0.0;
  Chain chain = Chain::MF;
  std::string mix_id;
  double rmse_samples = 0.0;
  double rmse_meters = 0.0;
  int trials = 0;
};

// Monte-Carlo delay RMSE versus SNR: full transmit/channel/filter pipeline,
// M-symbol averaged spectrum into the pencil, minimum-cost circular pairing
// against ground truth. rmse_meters uses c * T_s / 2 per sample.
std::vector<RmseRow> rmse_benchmark(const RmseBenchmarkConfig& cfg);

}  // namespace isaclab
