#include "isaclab/delay_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "isaclab/parallel.hpp"
#include "isaclab/rng.hpp"
#include "isaclab/summation.hpp"

namespace isaclab {

namespace {

double wrap_tau(double tau, int n) {
  double t = std::fmod(tau, static_cast<double>(n));
  if (t < 0.0) t += static_cast<double>(n);
  // fmod can round back up to n for tiny negative inputs
  if (t >= static_cast<double>(n)) t = 0.0;
  return t;
}

double circ_dist(double a, double b, int n) {
  double d = std::fabs(a - b);
  d = std::fmod(d, static_cast<double>(n));
  return std::min(d, static_cast<double>(n) - d);
}

}  // namespace

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> build_hankel_pair(const cvec& e, int k) {
  const int n = static_cast<int>(e.size());
  if (n < 2) throw Error("build_hankel_pair: sequence needs at least 2 samples");
  if (k < 1 || k > n - 1)
    throw Error("build_hankel_pair: pencil parameter K must be in [1, N-1]");
  const int rows = n - k;
  Eigen::MatrixXcd e1(rows, k);
  Eigen::MatrixXcd e2(rows, k);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < k; ++j) {
      e1(i, j) = e[static_cast<std::size_t>(i + j)];
      e2(i, j) = e[static_cast<std::size_t>(i + j + 1)];
    }
  }
  return {std::move(e1), std::move(e2)};
}

DelayEstimate matrix_pencil(const cvec& e, int q, const PencilConfig& cfg) {
  const int n = static_cast<int>(e.size());
  if (n < 4) throw Error("matrix_pencil: sequence needs at least 4 samples");
  const int k = cfg.pencil_k > 0 ? cfg.pencil_k : n / 2;
  if (k < 1 || k > n - 1)
    throw Error("matrix_pencil: pencil parameter K must be in [1, N-1]");
  const int rows = n - k;
  const int max_order = std::min(k, rows);
  if (q < 1) throw Error("matrix_pencil: model order must be positive");
  if (q >= max_order)
    throw Error("matrix_pencil: model order must be below min(K, N-K)");

  auto [e1, e2] = build_hankel_pair(e, k);

  // Jacobi is exact enough for the small pencils the benchmarks use; the
  // divide-and-conquer SVD only pays off on larger blocks.
  Eigen::VectorXd sigma;
  Eigen::MatrixXcd u;
  Eigen::MatrixXcd v;
  if (std::min(rows, k) <= 128) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(e1, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues();
    u = svd.matrixU();
    v = svd.matrixV();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(e1, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues();
    u = svd.matrixU();
    v = svd.matrixV();
  }

  const double s0 = sigma.size() > 0 ? sigma(0) : 0.0;
  if (!(s0 > 0.0)) throw Error("matrix_pencil: zero sequence");

  double abs_tol;
  if (cfg.svd_rank_tol >= 0.0) {
    abs_tol = cfg.svd_rank_tol * s0;
  } else {
    // Noise floor sits near the median singular value; anything an order of
    // magnitude above it counts as signal.
    std::vector<double> sv(sigma.data(), sigma.data() + sigma.size());
    std::nth_element(sv.begin(), sv.begin() + sv.size() / 2, sv.end());
    const double median = sv[sv.size() / 2];
    abs_tol = std::max(10.0 * median, 1e-10 * s0);
  }

  int eff = 0;
  for (Eigen::Index i = 0; i < sigma.size() && i < q; ++i)
    if (sigma(i) >= abs_tol) ++eff;
  DelayEstimate out;
  out.rank_deficient = eff < q;
  if (eff < 1) eff = 1;
  out.effective_order = eff;

  Eigen::MatrixXcd uq = u.leftCols(eff);
  Eigen::MatrixXcd vq = v.leftCols(eff);
  Eigen::VectorXd sq = sigma.head(eff);
  Eigen::MatrixXcd a = sq.cwiseInverse().asDiagonal().toDenseMatrix().cast<cdouble>() *
                       (uq.adjoint() * e2 * vq);

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a);
  if (es.info() != Eigen::Success)
    throw Error("matrix_pencil: eigensolver failed to converge");

  std::vector<std::pair<double, cdouble>> items;
  items.reserve(static_cast<std::size_t>(eff));
  const double scale = -static_cast<double>(n) / (2.0 * std::numbers::pi);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cdouble lam = es.eigenvalues()(i);
    items.emplace_back(wrap_tau(scale * std::arg(lam), n), lam);
  }
  std::sort(items.begin(), items.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [tau, lam] : items) {
    out.taus.push_back(tau);
    out.eigenvalues.push_back(lam);
  }
  return out;
}

std::vector<int> peak_pick(const RangeProfile& profile, int q_count) {
  const int n = static_cast<int>(profile.bins.size());
  if (n < 1) throw Error("peak_pick: empty profile");
  if (q_count < 1 || q_count > n)
    throw Error("peak_pick: peak count must be in [1, N]");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = std::abs(profile.bins[static_cast<std::size_t>(a)]);
    const double mb = std::abs(profile.bins[static_cast<std::size_t>(b)]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::vector<int> picks;
  for (int idx : order) {
    if (static_cast<int>(picks.size()) == q_count) break;
    const int left = (idx + n - 1) % n;
    const int right = (idx + 1) % n;
    if (taken[static_cast<std::size_t>(left)] || taken[static_cast<std::size_t>(right)] ||
        taken[static_cast<std::size_t>(idx)])
      continue;
    taken[static_cast<std::size_t>(idx)] = 1;
    picks.push_back(idx);
  }
  if (static_cast<int>(picks.size()) < q_count)
    throw Error("peak_pick: not enough non-adjacent peaks");
  return picks;
}

double paired_sq_error(std::span<const double> estimated,
                       std::span<const double> truth, int n) {
  if (n < 1) throw Error("paired_sq_error: invalid modulus");
  const std::size_t s = std::max(estimated.size(), truth.size());
  if (s == 0) return 0.0;
  if (s > 8) throw Error("paired_sq_error: too many targets for exact pairing");
  const double missing = 0.5 * static_cast<double>(n);
  // Pad the shorter side with sentinels; a sentinel pairing charges the
  // worst-case half-circle error.
  constexpr double kSentinel = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> est(estimated.begin(), estimated.end());
  std::vector<double> tru(truth.begin(), truth.end());
  est.resize(s, kSentinel);
  tru.resize(s, kSentinel);

  std::vector<int> perm(s);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      const double a = est[static_cast<std::size_t>(perm[i])];
      const double b = tru[i];
      if (std::isnan(a) || std::isnan(b)) {
        cost += missing * missing;
      } else {
        const double d = circ_dist(a, b, n);
        cost += d * d;
      }
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

// One coherent processing interval entirely in the frequency domain: the
// unitary DFT keeps white noise white, so the time-domain round trip is
// redundant here.
cvec trial_spectrum(const RmseBenchmarkConfig& cfg, Chain chain, const RmseMix& mix,
                    double noise_var, RngStream& rng) {
  const int n = cfg.ofdm.n_subcarriers;
  const int m = cfg.ofdm.n_symbols;
  const std::size_t q = cfg.taus.size();

  // Deterministic amplitudes with uniform phase keep every trial informative;
  // Rayleigh draws would mix fade-outs into the RMSE.
  cvec alphas(q);
  const double amp = std::sqrt(cfg.sigma_alpha_sq);
  for (std::size_t t = 0; t < q; ++t) {
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    alphas[t] = amp * cdouble(std::cos(phi), std::sin(phi));
  }

  cvec acc(static_cast<std::size_t>(n), cdouble(0.0, 0.0));
  cvec x(static_cast<std::size_t>(n));
  cvec y(static_cast<std::size_t>(n));
  const double root_n = std::sqrt(static_cast<double>(n));
  for (int sym = 0; sym < m; ++sym) {
    for (int sc = 0; sc < n; ++sc) {
      const auto& pts = mix.c_map[static_cast<std::size_t>(sc)].points;
      const cdouble s = pts[rng.uniform_int(pts.size())];
      x[static_cast<std::size_t>(sc)] =
          std::sqrt(cfg.p.p[static_cast<std::size_t>(sc)]) * s;
    }
    for (int sc = 0; sc < n; ++sc) {
      cdouble h(0.0, 0.0);
      for (std::size_t t = 0; t < q; ++t) {
        const double ang = -2.0 * std::numbers::pi * sc * cfg.taus[t] / n;
        h += alphas[t] * cdouble(std::cos(ang), std::sin(ang));
      }
      y[static_cast<std::size_t>(sc)] =
          h * x[static_cast<std::size_t>(sc)] + rng.cnormal(noise_var);
    }
    for (int sc = 0; sc < n; ++sc) {
      const std::size_t i = static_cast<std::size_t>(sc);
      if (chain == Chain::MF) {
        acc[i] += root_n * y[i] * std::conj(x[i]);
      } else {
        const double den = std::norm(x[i]);
        if (den <= 0.0) throw Error("rmse_benchmark: zero transmit symbol");
        acc[i] += y[i] * std::conj(x[i]) / den;
      }
    }
  }
  for (auto& v : acc) v /= static_cast<double>(m);
  return acc;
}

}  // namespace

std::vector<RmseRow> rmse_benchmark(const RmseBenchmarkConfig& cfg) {
  cfg.ofdm.validate();
  const int n = cfg.ofdm.n_subcarriers;
  validate(cfg.p);
  if (static_cast<int>(cfg.p.p.size()) != n)
    throw Error("rmse_benchmark: power vector must cover all subcarriers");
  if (cfg.taus.empty()) throw Error("rmse_benchmark: no targets");
  for (double t : cfg.taus)
    if (!(t >= 0.0) || t >= static_cast<double>(n))
      throw Error("rmse_benchmark: delays must lie in [0, N)");
  if (static_cast<int>(cfg.taus.size()) >= n / 2)
    throw Error("rmse_benchmark: too many targets for the default pencil");
  if (cfg.trials < 1) throw Error("rmse_benchmark: trials must be positive");
  if (cfg.snr_db_grid.empty()) throw Error("rmse_benchmark: empty SNR grid");
  if (cfg.chains.empty()) throw Error("rmse_benchmark: no chains selected");
  if (cfg.mixes.empty()) throw Error("rmse_benchmark: no mixes");
  for (const auto& mix : cfg.mixes) {
    if (static_cast<int>(mix.c_map.size()) != n)
      throw Error("rmse_benchmark: mix '" + mix.id + "' must map all subcarriers");
    for (const auto& c : mix.c_map)
      if (c.points.empty()) throw Error("rmse_benchmark: empty constellation");
  }
  if (!(cfg.sigma_alpha_sq > 0.0))
    throw Error("rmse_benchmark: reflection power must be positive");

  const unsigned threads = resolve_threads(cfg.threads);
  const int q = static_cast<int>(cfg.taus.size());
  const double meters_per_sample =
      kSpeedOfLight * cfg.ofdm.sample_interval_s / 2.0;

  PencilConfig pencil;
  pencil.svd_rank_tol = -1.0;  // noisy input: median heuristic

  std::vector<RmseRow> rows;
  std::uint64_t combo = 0;
  for (double snr_db : cfg.snr_db_grid) {
    const double noise_var =
        cfg.sigma_alpha_sq * cfg.p.p_ave / std::pow(10.0, snr_db / 10.0);
    for (Chain chain : cfg.chains) {
      for (const auto& mix : cfg.mixes) {
        std::vector<double> sq_err(static_cast<std::size_t>(cfg.trials), 0.0);
        const std::uint64_t stream_base =
            combo * static_cast<std::uint64_t>(cfg.trials);
        parallel_for(static_cast<std::size_t>(cfg.trials), threads,
                     [&](std::size_t trial) {
                       RngStream rng(cfg.seed, stream_base + trial);
                       const cvec e = trial_spectrum(cfg, chain, mix, noise_var, rng);
                       const DelayEstimate est = matrix_pencil(e, q, pencil);
                       sq_err[trial] = paired_sq_error(est.taus, cfg.taus, n);
                     });
        const double total = pairwise_sum(sq_err);
        RmseRow row;
        row.snr_db = snr_db;
        row.chain = chain;
        row.mix_id = mix.id;
        row.rmse_samples = std::sqrt(total / (static_cast<double>(cfg.trials) * q));
        row.rmse_meters = row.rmse_samples * meters_per_sample;
        row.trials = cfg.trials;
        rows.push_back(std::move(row));
        ++combo;
      }
    }
  }
  return rows;
}

}  // namespace isaclab
