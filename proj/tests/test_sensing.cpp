#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "doctest.h"
#include "isaclab/fft.hpp"
#include "isaclab/ofdm.hpp"
#include "isaclab/sensing.hpp"

using namespace isaclab;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Cyclic autocorrelation r_k = sum_t x[t] conj(x[(t - k) mod N]), the
// time-domain mirror of what the matched filter computes spectrally.
cvec cyclic_acf(const cvec& x) {
  const std::size_t n = x.size();
  cvec r(n, cdouble{0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < n; ++t) r[k] += x[t] * std::conj(x[(t + n - k) % n]);
  return r;
}

std::vector<ConstellationSpec> repeat_map(const ConstellationSpec& c, std::size_t n) {
  return std::vector<ConstellationSpec>(n, c);
}

SensingLawInputs law_inputs(const PowerAllocation& p, double mu4, double nu,
                            const SensingScene& scene, int m) {
  SensingLawInputs in;
  in.p = p;
  in.mu4.assign(p.p.size(), mu4);
  in.nu_minus2.assign(p.p.size(), nu);
  in.scene = scene;
  in.m = m;
  return in;
}

}  // namespace

TEST_CASE("matched filter of y = x is the cyclic autocorrelation") {
  RngStream rng(31);
  const std::size_t n = 16;
  cvec x(n);
  for (auto& v : x) v = rng.cnormal(1.0);
  const cvec spec = dft(x);
  const RangeProfile prof = matched_filter(spec, spec);
  REQUIRE(prof.bins.size() == n);
  CHECK(prof.chain == Chain::MF);
  const cvec r = cyclic_acf(x);
  for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(prof.bins[k] - r[k]) < 1e-10);
}

TEST_CASE("constant-modulus alphabet gives a clean matched-filter peak") {
  // Unit-modulus spectrum: peak N*P at the target delay, zero sidelobes.
  const std::size_t n = 16;
  const auto qpsk = make_qpsk();
  RngStream rng(32);
  const auto grid = make_grid(repeat_map(qpsk, n), 1, rng);
  const auto p = uniform_power(static_cast<int>(n), 2.0);
  const cvec x = modulate(grid.row(0), p);
  SensingScene scene;
  scene.targets = {{1.0, 5.0}};
  RngStream ch(0);
  const cvec y = apply_channel(x, scene, cvec{cdouble{1.0, 0.0}}, ch);
  const RangeProfile prof = matched_filter(dft(y), dft(x));
  for (std::size_t k = 0; k < n; ++k) {
    if (k == 5)
      CHECK(std::abs(prof.bins[k] - cdouble{32.0, 0.0}) < 1e-9);  // N * P
    else
      CHECK(std::abs(prof.bins[k]) < 1e-9);
  }
}

TEST_CASE("reciprocal filter puts a sqrt(N) peak at the delay for any alphabet") {
  const std::size_t n = 16;
  const auto qam16 = make_qam16();
  RngStream rng(33);
  const auto grid = make_grid(repeat_map(qam16, n), 1, rng);
  const auto p = uniform_power(static_cast<int>(n), 1.7);
  const cvec x = modulate(grid.row(0), p);
  SensingScene scene;
  scene.targets = {{1.0, 11.0}};
  RngStream ch(0);
  const cvec y = apply_channel(x, scene, cvec{cdouble{1.0, 0.0}}, ch);
  const RangeProfile prof = reciprocal_filter(dft(y), dft(x));
  CHECK(prof.chain == Chain::RF);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == 11)
      CHECK(std::abs(prof.bins[k] - cdouble{4.0, 0.0}) < 1e-9);  // sqrt(N)
    else
      CHECK(std::abs(prof.bins[k]) < 1e-9);
  }
}

TEST_CASE("fractional delay spreads the peak to the Dirichlet level") {
  const std::size_t n = 64;
  const auto qpsk = make_qpsk();
  RngStream rng(34);
  const auto grid = make_grid(repeat_map(qpsk, n), 1, rng);
  const auto p = uniform_power(static_cast<int>(n), 1.0);
  const cvec x = modulate(grid.row(0), p);
  const double tau = 20.5;
  SensingScene scene;
  scene.targets = {{1.0, tau}};
  RngStream ch(0);
  const cvec y = apply_channel(x, scene, cvec{cdouble{1.0, 0.0}}, ch);

  // Half-bin offset attenuates the nearest bins to |D_N(1/2)| where
  // D_N(u) = sum_n exp(j 2 pi n u / N); |D_N(1/2)| = 1 / sin(pi / (2N)).
  const double dirichlet = 1.0 / std::sin(kPi / (2.0 * static_cast<double>(n)));

  const RangeProfile mf = matched_filter(dft(y), dft(x));
  CHECK(std::abs(mf.bins[20]) == doctest::Approx(dirichlet).epsilon(1e-9));
  CHECK(std::abs(mf.bins[21]) == doctest::Approx(dirichlet).epsilon(1e-9));
  CHECK(dirichlet == doctest::Approx(2.0 / kPi * static_cast<double>(n)).epsilon(1e-3));

  const RangeProfile rf = reciprocal_filter(dft(y), dft(x));
  const double rf_peak = dirichlet / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(rf.bins[20]) == doctest::Approx(rf_peak).epsilon(1e-9));
  CHECK(std::abs(rf.bins[21]) == doctest::Approx(rf_peak).epsilon(1e-9));
}

TEST_CASE("frozen two-subcarrier law values") {
  const auto p = make_power_allocation({1.0, 1.0});
  CHECK(expected_r0_sq(p, 1.32) == doctest::Approx(4.64).epsilon(1e-12));
  CHECK(closed_form_esl(p, 1.32) == doctest::Approx(0.64).epsilon(1e-12));
  // QPSK: no excess kurtosis, no sidelobes.
  CHECK(expected_r0_sq(p, 1.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(closed_form_esl(p, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("law helpers match independent evaluation on random allocations") {
  RngStream rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 8;
    std::vector<double> pw(n), mu4(n);
    for (std::size_t i = 0; i < n; ++i) {
      pw[i] = 0.2 + 2.0 * rng.uniform();
      mu4[i] = 1.0 + 0.5 * rng.uniform();
    }
    const auto p = make_power_allocation(pw);
    double fourth = 0.0, s1 = 0.0, s2 = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      fourth += pw[i] * pw[i] * (mu4[i] - 1.0);
      s1 += pw[i];
      s2 += pw[i] * pw[i];
      weighted += ((static_cast<double>(n) - 1.0) * mu4[i] + 1.0) * pw[i] * pw[i];
    }
    CHECK(expected_r0_sq(p, mu4) ==
          doctest::Approx(fourth + s1 * s1).epsilon(1e-12));
    CHECK(closed_form_esl(p, mu4) ==
          doctest::Approx((weighted - s1 * s1) / (static_cast<double>(n) - 1.0))
              .epsilon(1e-12));
    // The lag-summed sidelobe identity underlying the SINR law.
    const double sidelobe_sum = (static_cast<double>(n) - 1.0) * fourth +
                                static_cast<double>(n) * s2 - s1 * s1;
    CHECK(closed_form_esl(p, mu4) * (static_cast<double>(n) - 1.0) ==
          doctest::Approx(sidelobe_sum).epsilon(1e-12));
  }
}

TEST_CASE("sinr_mf and snr_rf implement their formulas") {
  const auto p = make_power_allocation({1.0, 2.0, 0.5, 0.5});
  SensingScene scene;
  scene.targets = {{2.0, 0.0}, {0.7, 2.0}};
  scene.noise_var = 0.3;
  const int m = 4;
  auto in = law_inputs(p, 1.32, 17.0 / 9.0, scene, m);

  const double n = 4.0;
  double fourth = 0.0, s1 = 0.0, s2 = 0.0;
  for (double pw : p.p) {
    fourth += pw * pw * 0.32;
    s1 += pw;
    s2 += pw * pw;
  }
  const double r0_sq = fourth / m + s1 * s1;
  const double slsum = (n - 1.0) / m * fourth + n * s2 - s1 * s1;
  const double want_q0 =
      2.0 * r0_sq / (0.7 / (n - 1.0) * slsum + 0.3 / m * s1);
  CHECK(sinr_mf(in, 0) == doctest::Approx(want_q0).epsilon(1e-12));
  const double want_q1 =
      0.7 * r0_sq / (2.0 / (n - 1.0) * slsum + 0.3 / m * s1);
  CHECK(sinr_mf(in, 1) == doctest::Approx(want_q1).epsilon(1e-12));

  double nu_over_p = 0.0;
  for (double pw : p.p) nu_over_p += (17.0 / 9.0) / pw;
  CHECK(snr_rf(in, 0) ==
        doctest::Approx(2.0 * m * n * n / (0.3 * nu_over_p)).epsilon(1e-12));

  // Single target, no noise: infinite MF SINR.
  SensingScene clean;
  clean.targets = {{1.0, 0.0}};
  auto in2 = law_inputs(p, 1.32, 17.0 / 9.0, clean, m);
  CHECK(std::isinf(sinr_mf(in2, 0)));
}

TEST_CASE("sensing law input validation") {
  const auto p = make_power_allocation({1.0, 1.0});
  SensingScene scene;
  scene.targets = {{1.0, 0.0}};
  auto in = law_inputs(p, 1.32, 2.0, scene, 1);
  in.mu4.pop_back();
  CHECK_THROWS_AS(in.validate(), Error);
  in = law_inputs(p, 0.5, 2.0, scene, 1);
  CHECK_THROWS_AS(in.validate(), Error);
  in = law_inputs(p, 1.32, 2.0, scene, 0);
  CHECK_THROWS_AS(in.validate(), Error);
  in = law_inputs(p, 1.32, 2.0, scene, 1);
  CHECK_THROWS_AS(sinr_mf(in, 1), Error);  // target index out of range
  // RF with a dark subcarrier amplifies noise without bound.
  auto dark = make_power_allocation({2.0, 0.0});
  auto in3 = law_inputs(dark, 1.32, 2.0, scene, 1);
  CHECK_THROWS_AS(snr_rf(in3, 0), Error);
}

TEST_CASE("empirical ACF power matches the closed-form laws") {
  const std::size_t n = 8;
  const auto qpsk = make_qpsk();
  const auto qam16 = make_qam16();
  std::vector<ConstellationSpec> c_map;
  std::vector<double> mu4;
  for (std::size_t i = 0; i < n; ++i) {
    c_map.push_back(i % 2 == 0 ? qam16 : qpsk);
    mu4.push_back(i % 2 == 0 ? 1.32 : 1.0);
  }
  std::vector<double> pw = {1.0, 0.5, 2.0, 1.5, 0.8, 1.2, 0.6, 0.4};
  const auto p = make_power_allocation(pw);
  const int m = 4;
  const auto est = empirical_acf_power(c_map, p, m, 4000, 99, 0);
  REQUIRE(est.mean.size() == n);

  double fourth = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fourth += pw[i] * pw[i] * (mu4[i] - 1.0);
    s1 += pw[i];
    s2 += pw[i] * pw[i];
  }
  const double r0_law = fourth / m + s1 * s1;
  CHECK(std::fabs(est.mean[0] - r0_law) < 3.0 * est.stderr_[0]);

  const double slsum_law = (static_cast<double>(n) - 1.0) / m * fourth +
                           static_cast<double>(n) * s2 - s1 * s1;
  double side = 0.0, se = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    side += est.mean[k];
    se += est.stderr_[k] * est.stderr_[k];
  }
  // Lags within a trial are correlated; bound the error with the summed
  // variance times a safety factor.
  CHECK(std::fabs(side - slsum_law) < 5.0 * std::sqrt(se) * std::sqrt(n - 1.0));
}

TEST_CASE("empirical ACF power is deterministic across thread counts") {
  const std::size_t n = 8;
  const auto c_map = repeat_map(make_qam16(), n);
  const auto p = uniform_power(static_cast<int>(n), 1.0);
  const auto a = empirical_acf_power(c_map, p, 2, 64, 7, 1);
  const auto b = empirical_acf_power(c_map, p, 2, 64, 7, 4);
  for (std::size_t k = 0; k < n; ++k) {
    CHECK(a.mean[k] == b.mean[k]);
    CHECK(a.stderr_[k] == b.stderr_[k]);
  }
}

TEST_CASE("Monte-Carlo SINR tracks the matched-filter law") {
  const std::size_t n = 8;
  const auto c_map = repeat_map(make_qam16(), n);
  const auto p = uniform_power(static_cast<int>(n), 1.0);
  SensingScene scene;
  scene.targets = {{1.0, 3.0}, {0.5, 6.0}};
  scene.noise_var = 0.2;
  const int m = 4;
  const auto est = mc_sinr(Chain::MF, c_map, p, scene, m, 0, 4000, 5, 0);
  auto in = law_inputs(p, 1.32, 17.0 / 9.0, scene, m);
  const double law = sinr_mf(in, 0);
  CHECK(est.sinr / law > 0.85);
  CHECK(est.sinr / law < 1.18);
}

TEST_CASE("Monte-Carlo SNR tracks the reciprocal-filter law") {
  const std::size_t n = 8;
  const auto c_map = repeat_map(make_qam16(), n);
  const auto p = uniform_power(static_cast<int>(n), 1.0);
  SensingScene scene;
  scene.targets = {{1.0, 3.0}};
  scene.noise_var = 0.5;
  const int m = 4;
  const auto est = mc_sinr(Chain::RF, c_map, p, scene, m, 0, 4000, 6, 0);
  auto in = law_inputs(p, 1.32, 17.0 / 9.0, scene, m);
  const double law = snr_rf(in, 0);
  CHECK(est.sinr / law > 0.85);
  CHECK(est.sinr / law < 1.18);
}

TEST_CASE("mc_sinr refuses fractional delays") {
  const std::size_t n = 8;
  const auto c_map = repeat_map(make_qpsk(), n);
  const auto p = uniform_power(static_cast<int>(n), 1.0);
  SensingScene scene;
  scene.targets = {{1.0, 2.5}};
  CHECK_THROWS_AS(mc_sinr(Chain::MF, c_map, p, scene, 1, 0, 8, 1, 0), Error);
}

TEST_CASE("MF sidelobe floor follows the lag-averaged law and 1/M") {
  const std::size_t n = 8;
  const auto c_map = repeat_map(make_qam16(), n);
  const auto p = uniform_power(static_cast<int>(n), 1.0);
  SensingScene scene;
  scene.targets = {{1.0, 2.0}};
  scene.noise_var = 0.0;

  // Equal power: floor law reduces to N P^2 (mu4 - 1) / M.
  auto law = [&](int m) {
    return static_cast<double>(n) * 0.32 / static_cast<double>(m);
  };
  const auto f2 = mc_mf_sidelobe_floor(c_map, p, scene, 2, 1500, 17, 0);
  CHECK(std::fabs(f2.mean - law(2)) < 3.0 * f2.stderr_);
  const auto f20 = mc_mf_sidelobe_floor(c_map, p, scene, 20, 1500, 18, 0);
  CHECK(std::fabs(f20.mean - law(20)) < 3.0 * f20.stderr_);
  // Tenfold integration, tenfold floor drop.
  CHECK(f2.mean / f20.mean == doctest::Approx(10.0).epsilon(0.15));
}

TEST_CASE("RF noise-bin variance follows sigma_z^2 sum(nu/P) / (M N)") {
  const std::size_t n = 8;
  const auto c_map = repeat_map(make_qam16(), n);
  std::vector<double> pw = {0.5, 1.0, 2.0, 1.5, 0.5, 1.0, 0.5, 1.0};
  const auto p = make_power_allocation(pw);
  const double noise_var = 0.5;
  const int m = 4;
  double nu_over_p = 0.0;
  for (double v : pw) nu_over_p += (17.0 / 9.0) / v;
  const double law = noise_var * nu_over_p /
                     (static_cast<double>(m) * static_cast<double>(n));
  const auto est = mc_rf_noise_bin_variance(c_map, p, noise_var, m, 3000, 23, 0);
  CHECK(std::fabs(est.mean - law) < 3.0 * est.stderr_);
}

TEST_CASE("coherent_integrate averages and rejects mismatches") {
  RangeProfile a, b;
  a.bins = {cdouble{2.0, 0.0}, cdouble{0.0, 2.0}};
  a.chain = Chain::MF;
  a.m_integrated = 1;
  b.bins = {cdouble{4.0, 0.0}, cdouble{0.0, -2.0}};
  b.chain = Chain::MF;
  b.m_integrated = 1;
  std::vector<RangeProfile> profs = {a, b};
  const auto out = coherent_integrate(profs);
  CHECK(std::abs(out.bins[0] - cdouble{3.0, 0.0}) < 1e-15);
  CHECK(std::abs(out.bins[1]) < 1e-15);
  CHECK(out.m_integrated == 2);

  profs[1].chain = Chain::RF;
  CHECK_THROWS_AS(coherent_integrate(profs), Error);
  profs[1].chain = Chain::MF;
  profs[1].bins.push_back(cdouble{0.0, 0.0});
  CHECK_THROWS_AS(coherent_integrate(profs), Error);
  CHECK_THROWS_AS(coherent_integrate(std::span<const RangeProfile>{}), Error);
}

TEST_CASE("measured_sinr on hand-built statistics") {
  std::vector<SensingTrialStat> stats(2);
  stats[0].desired = cdouble{2.0, 0.0};
  stats[0].profile_at_tau = cdouble{2.0, 1.0};  // residual power 1
  stats[1].desired = cdouble{0.0, 2.0};
  stats[1].profile_at_tau = cdouble{1.0, 2.0};  // residual power 1
  const auto est = measured_sinr(stats);
  CHECK(est.desired_power == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(est.residual_power == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(est.sinr == doctest::Approx(4.0).epsilon(1e-15));

  stats[0].profile_at_tau = stats[0].desired;
  stats[1].profile_at_tau = stats[1].desired;
  CHECK(std::isinf(measured_sinr(stats).sinr));
}

TEST_CASE("filter input validation") {
  const cvec a(4, cdouble{1.0, 0.0});
  const cvec b(5, cdouble{1.0, 0.0});
  CHECK_THROWS_AS(matched_filter(a, b), Error);
  CHECK_THROWS_AS(reciprocal_filter(a, b), Error);
  cvec with_zero = a;
  with_zero[2] = cdouble{0.0, 0.0};
  CHECK_THROWS_AS(reciprocal_filter(a, with_zero, 0.0), Error);
  const auto ok = reciprocal_filter(a, with_zero, 1e-3);  // epsilon heals it
  CHECK(ok.bins.size() == 4);
  CHECK_THROWS_AS(reciprocal_filter(a, a, -1.0), Error);
}
