#include "isaclab/sensing.hpp"

#include <cmath>
#include <limits>

#include "isaclab/parallel.hpp"
#include "isaclab/summation.hpp"

namespace isaclab {

namespace {

void check_law_sizes(const SensingLawInputs& in) {
  const std::size_t n = in.p.p.size();
  if (n < 2) throw Error("sensing law: need N >= 2");
  if (in.mu4.size() != n || in.nu_minus2.size() != n)
    throw Error("sensing law: moment vectors must match the allocation length");
  for (double v : in.mu4)
    if (v < 1.0 - 1e-12) throw Error("sensing law: mu4 must be >= 1");
  for (double v : in.nu_minus2)
    if (v < 1.0 - 1e-12) throw Error("sensing law: nu_minus2 must be >= 1");
  if (in.m < 1) throw Error("sensing law: m must be >= 1");
}

// Column statistics over a trials x n row-major table, pairwise-summed so
// results do not depend on the work distribution.
void column_mean_stderr(const std::vector<double>& table, int trials, std::size_t n,
                        std::vector<double>& mean, std::vector<double>& se) {
  mean.assign(n, 0.0);
  se.assign(n, 0.0);
  std::vector<double> col(static_cast<std::size_t>(trials));
  for (std::size_t k = 0; k < n; ++k) {
    for (int t = 0; t < trials; ++t)
      col[static_cast<std::size_t>(t)] = table[static_cast<std::size_t>(t) * n + k];
    const MeanStderr ms = mean_stderr(col);
    mean[k] = ms.mean;
    se[k] = ms.stderr_;
  }
}

}  // namespace

void SensingLawInputs::validate() const { check_law_sizes(*this); }

RangeProfile matched_filter(const cvec& y_spec, const cvec& x_spec) {
  if (y_spec.size() != x_spec.size() || y_spec.empty())
    throw Error("matched_filter: spectra must have equal nonzero length");
  const double root_n = std::sqrt(static_cast<double>(x_spec.size()));
  cvec prod(y_spec.size());
  for (std::size_t i = 0; i < prod.size(); ++i)
    prod[i] = root_n * y_spec[i] * std::conj(x_spec[i]);
  RangeProfile out;
  out.bins = idft(prod);
  out.chain = Chain::MF;
  out.m_integrated = 1;
  return out;
}

RangeProfile reciprocal_filter(const cvec& y_spec, const cvec& x_spec, double epsilon) {
  if (y_spec.size() != x_spec.size() || y_spec.empty())
    throw Error("reciprocal_filter: spectra must have equal nonzero length");
  if (epsilon < 0.0) throw Error("reciprocal_filter: epsilon must be >= 0");
  cvec quot(y_spec.size());
  for (std::size_t i = 0; i < quot.size(); ++i) {
    const double denom = std::norm(x_spec[i]) + epsilon;
    if (denom <= 0.0)
      throw Error("reciprocal_filter: zero reference bin with epsilon = 0");
    quot[i] = y_spec[i] * std::conj(x_spec[i]) / denom;
  }
  RangeProfile out;
  out.bins = idft(quot);
  out.chain = Chain::RF;
  out.m_integrated = 1;
  return out;
}

RangeProfile coherent_integrate(std::span<const RangeProfile> profiles) {
  if (profiles.empty()) throw Error("coherent_integrate: empty profile list");
  const std::size_t n = profiles[0].bins.size();
  RangeProfile out;
  out.bins.assign(n, cdouble{0.0, 0.0});
  out.chain = profiles[0].chain;
  out.m_integrated = 0;
  for (const auto& prof : profiles) {
    if (prof.chain != out.chain)
      throw Error("coherent_integrate: mixed receiver chains");
    if (prof.bins.size() != n)
      throw Error("coherent_integrate: mixed profile lengths");
    for (std::size_t i = 0; i < n; ++i) out.bins[i] += prof.bins[i];
    out.m_integrated += prof.m_integrated;
  }
  const double inv = 1.0 / static_cast<double>(profiles.size());
  for (auto& b : out.bins) b *= inv;
  return out;
}

AcfPowerEstimate empirical_acf_power(const std::vector<ConstellationSpec>& c_map,
                                     const PowerAllocation& p, int m, int trials,
                                     std::uint64_t seed, unsigned threads) {
  const std::size_t n = p.p.size();
  if (c_map.size() != n) throw Error("empirical_acf_power: map/allocation mismatch");
  if (trials < 1) throw Error("empirical_acf_power: trials must be >= 1");
  if (m < 1) throw Error("empirical_acf_power: m must be >= 1");

  std::vector<double> table(static_cast<std::size_t>(trials) * n);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t trial) {
    RngStream rng(seed, trial);
    cvec row(n), acc(n, cdouble{0.0, 0.0}), v(n);
    for (int sym = 0; sym < m; ++sym) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& pts = c_map[i].points;
        row[i] = pts[rng.uniform_int(pts.size())];
      }
      // Autocorrelation through the actual transmit path:
      // r_k = sum_n |X_n|^2 exp(+j 2 pi k n / N) with X = dft(modulate(row)).
      const cvec x = modulate(row, p);
      const cvec spec = dft(x);
      for (std::size_t i = 0; i < n; ++i) v[i] = cdouble{std::norm(spec[i]), 0.0};
      detail::fft_backward_inplace(v);
      for (std::size_t i = 0; i < n; ++i) acc[i] += v[i];
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k)
      table[trial * n + k] = std::norm(acc[k] * inv_m);
  });

  AcfPowerEstimate est;
  est.trials = trials;
  column_mean_stderr(table, trials, n, est.mean, est.stderr_);
  return est;
}

double expected_r0_sq(const PowerAllocation& p, std::span<const double> mu4) {
  if (mu4.size() != p.p.size()) throw Error("expected_r0_sq: size mismatch");
  double fourth = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < mu4.size(); ++i) {
    fourth += p.p[i] * p.p[i] * (mu4[i] - 1.0);
    s1 += p.p[i];
  }
  return fourth + s1 * s1;
}

double expected_r0_sq(const PowerAllocation& p, double mu4) {
  std::vector<double> v(p.p.size(), mu4);
  return expected_r0_sq(p, v);
}

double closed_form_esl(const PowerAllocation& p, std::span<const double> mu4) {
  const std::size_t n = p.p.size();
  if (n < 2) throw Error("closed_form_esl: need N >= 2");
  if (mu4.size() != n) throw Error("closed_form_esl: size mismatch");
  double acc = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += ((static_cast<double>(n) - 1.0) * mu4[i] + 1.0) * p.p[i] * p.p[i];
    s1 += p.p[i];
  }
  return (acc - s1 * s1) / (static_cast<double>(n) - 1.0);
}

double closed_form_esl(const PowerAllocation& p, double mu4) {
  std::vector<double> v(p.p.size(), mu4);
  return closed_form_esl(p, v);
}

double sinr_mf(const SensingLawInputs& in, std::size_t q) {
  check_law_sizes(in);
  if (q >= in.scene.targets.size()) throw Error("sinr_mf: target index out of range");
  const double n = static_cast<double>(in.p.p.size());
  const double m = static_cast<double>(in.m);
  double fourth = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < in.p.p.size(); ++i) {
    const double pw = in.p.p[i];
    fourth += pw * pw * (in.mu4[i] - 1.0);
    s1 += pw;
    s2 += pw * pw;
  }
  const double r0_sq = fourth / m + s1 * s1;
  const double sidelobe_sum = (n - 1.0) / m * fourth + n * s2 - s1 * s1;
  double clutter = 0.0;
  for (std::size_t i = 0; i < in.scene.targets.size(); ++i)
    if (i != q) clutter += in.scene.targets[i].sigma_alpha_sq;
  const double denom =
      clutter / (n - 1.0) * sidelobe_sum + in.scene.noise_var / m * s1;
  const double num = in.scene.targets[q].sigma_alpha_sq * r0_sq;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return num / denom;
}

double snr_rf(const SensingLawInputs& in, std::size_t q) {
  check_law_sizes(in);
  if (q >= in.scene.targets.size()) throw Error("snr_rf: target index out of range");
  const double n = static_cast<double>(in.p.p.size());
  double nu_over_p = 0.0;
  for (std::size_t i = 0; i < in.p.p.size(); ++i) {
    if (!(in.p.p[i] > 0.0))
      throw Error("snr_rf: zero subcarrier power (infinite noise amplification)");
    nu_over_p += in.nu_minus2[i] / in.p.p[i];
  }
  const double denom = in.scene.noise_var * nu_over_p;
  const double num =
      in.scene.targets[q].sigma_alpha_sq * static_cast<double>(in.m) * n * n;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return num / denom;
}

SinrEstimate measured_sinr(std::span<const SensingTrialStat> trials) {
  if (trials.empty()) throw Error("measured_sinr: no trials");
  std::vector<double> des(trials.size()), res(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    des[i] = std::norm(trials[i].desired);
    res[i] = std::norm(trials[i].profile_at_tau - trials[i].desired);
  }
  SinrEstimate est;
  est.trials = static_cast<int>(trials.size());
  est.desired_power = pairwise_sum(des) / static_cast<double>(trials.size());
  est.residual_power = pairwise_sum(res) / static_cast<double>(trials.size());
  if (est.residual_power <= est.desired_power * 1e-12)
    est.sinr = std::numeric_limits<double>::infinity();
  else
    est.sinr = est.desired_power / est.residual_power;
  return est;
}

namespace {

struct TrialContext {
  const std::vector<ConstellationSpec>& c_map;
  const PowerAllocation& p;
  const SensingScene& scene;
  int m;
};

// One coherent processing interval: draws symbols and noise, applies the
// channel with the provided reflections, integrates M per-symbol profiles.
RangeProfile run_cpi(Chain chain, const TrialContext& ctx,
                     std::span<const cdouble> alphas, RngStream& rng,
                     double* r0_bar_out) {
  const std::size_t n = ctx.p.p.size();
  cvec row(n);
  std::vector<RangeProfile> profs;
  profs.reserve(static_cast<std::size_t>(ctx.m));
  double r0 = 0.0;
  for (int sym = 0; sym < ctx.m; ++sym) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pts = ctx.c_map[i].points;
      row[i] = pts[rng.uniform_int(pts.size())];
    }
    const cvec x = modulate(row, ctx.p);
    const cvec x_spec = dft(x);
    const cvec y = apply_channel(x, ctx.scene, alphas, rng);
    const cvec y_spec = dft(y);
    profs.push_back(chain == Chain::MF ? matched_filter(y_spec, x_spec)
                                       : reciprocal_filter(y_spec, x_spec));
    for (const auto& v : x_spec) r0 += std::norm(v);
  }
  if (r0_bar_out != nullptr) *r0_bar_out = r0 / static_cast<double>(ctx.m);
  return coherent_integrate(profs);
}

}  // namespace

SinrEstimate mc_sinr(Chain chain, const std::vector<ConstellationSpec>& c_map,
                     const PowerAllocation& p, const SensingScene& scene, int m,
                     std::size_t q, int trials, std::uint64_t seed,
                     unsigned threads) {
  const std::size_t n = p.p.size();
  if (c_map.size() != n) throw Error("mc_sinr: map/allocation mismatch");
  if (q >= scene.targets.size()) throw Error("mc_sinr: target index out of range");
  const double tau = scene.targets[q].tau;
  if (tau != std::floor(tau))
    throw Error("mc_sinr: restricted to integer delays; use delay_estimation "
                "benchmarks for fractional taus");
  const auto bin = static_cast<std::size_t>(std::llround(tau)) % n;

  std::vector<SensingTrialStat> stats(static_cast<std::size_t>(trials));
  const TrialContext ctx{c_map, p, scene, m};
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t trial) {
    RngStream rng(seed, trial);
    const cvec alphas = draw_reflections(scene, rng);
    double r0_bar = 0.0;
    const RangeProfile prof = run_cpi(chain, ctx, alphas, rng, &r0_bar);
    stats[trial].profile_at_tau = prof.bins[bin];
    stats[trial].desired = chain == Chain::MF
                               ? alphas[q] * r0_bar
                               : alphas[q] * std::sqrt(static_cast<double>(n));
  });
  return measured_sinr(stats);
}

FloorEstimate mc_mf_sidelobe_floor(const std::vector<ConstellationSpec>& c_map,
                                   const PowerAllocation& p, const SensingScene& scene,
                                   int m, int trials, std::uint64_t seed,
                                   unsigned threads) {
  const std::size_t n = p.p.size();
  if (c_map.size() != n) throw Error("mc_mf_sidelobe_floor: map/allocation mismatch");
  std::vector<bool> peak(n, false);
  cvec alphas(scene.targets.size());
  for (std::size_t qi = 0; qi < scene.targets.size(); ++qi) {
    const double tau = scene.targets[qi].tau;
    if (tau != std::floor(tau))
      throw Error("mc_mf_sidelobe_floor: integer delays only");
    peak[static_cast<std::size_t>(std::llround(tau)) % n] = true;
    alphas[qi] = std::sqrt(scene.targets[qi].sigma_alpha_sq);
  }

  std::vector<double> per_trial(static_cast<std::size_t>(trials));
  const TrialContext ctx{c_map, p, scene, m};
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t trial) {
    RngStream rng(seed, trial);
    const RangeProfile prof = run_cpi(Chain::MF, ctx, alphas, rng, nullptr);
    double acc = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (!peak[k]) {
        acc += std::norm(prof.bins[k]);
        ++count;
      }
    per_trial[trial] = acc / std::max(count, 1);
  });

  const MeanStderr ms = mean_stderr(per_trial);
  return FloorEstimate{ms.mean, ms.stderr_, trials};
}

FloorEstimate mc_rf_noise_bin_variance(const std::vector<ConstellationSpec>& c_map,
                                       const PowerAllocation& p, double noise_var,
                                       int m, int trials, std::uint64_t seed,
                                       unsigned threads) {
  const std::size_t n = p.p.size();
  if (c_map.size() != n)
    throw Error("mc_rf_noise_bin_variance: map/allocation mismatch");
  SensingScene scene;
  scene.noise_var = noise_var;

  std::vector<double> per_trial(static_cast<std::size_t>(trials));
  const TrialContext ctx{c_map, p, scene, m};
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t trial) {
    RngStream rng(seed, trial);
    const RangeProfile prof = run_cpi(Chain::RF, ctx, {}, rng, nullptr);
    double acc = 0.0;
    for (const auto& b : prof.bins) acc += std::norm(b);
    per_trial[trial] = acc / static_cast<double>(n);
  });

  const MeanStderr ms = mean_stderr(per_trial);
  return FloorEstimate{ms.mean, ms.stderr_, trials};
}

}  // namespace isaclab
