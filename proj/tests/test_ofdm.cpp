#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include "doctest.h"
#include "isaclab/fft.hpp"
#include "isaclab/ofdm.hpp"

using namespace isaclab;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

cvec random_signal(std::size_t n, RngStream& rng) {
  cvec x(n);
  for (auto& v : x) v = rng.cnormal(1.0);
  return x;
}

// O(N^2) unitary DFT, the reference for the FFT wrapper.
cvec naive_dft(const cvec& x, int sign) {
  const std::size_t n = x.size();
  cvec out(n, cdouble{0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < n; ++t) {
      const double ph = sign * kTwoPi * static_cast<double>(k * t) /
                        static_cast<double>(n);
      out[k] += x[t] * cdouble{std::cos(ph), std::sin(ph)};
    }
  for (auto& v : out) v /= std::sqrt(static_cast<double>(n));
  return out;
}

double max_abs_diff(const cvec& a, const cvec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("dft matches the N^2 definition, power-of-two and not") {
  RngStream rng(11);
  for (std::size_t n : {4u, 8u, 12u, 15u, 16u, 64u}) {
    const cvec x = random_signal(n, rng);
    CHECK(max_abs_diff(dft(x), naive_dft(x, -1)) < 1e-12);
    CHECK(max_abs_diff(idft(x), naive_dft(x, +1)) < 1e-12);
  }
}

TEST_CASE("dft is unitary: round trip and norm preservation") {
  RngStream rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const cvec x = random_signal(64, rng);
    const cvec back = idft(dft(x));
    CHECK(max_abs_diff(back, x) < 1e-12);
    double px = 0.0, pX = 0.0;
    const cvec X = dft(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      px += std::norm(x[i]);
      pX += std::norm(X[i]);
    }
    CHECK(pX == doctest::Approx(px).epsilon(1e-12));
  }
}

TEST_CASE("modulate matches its formula on a small case") {
  RngStream rng(13);
  const std::size_t n = 8;
  const cvec row = random_signal(n, rng);
  std::vector<double> pw = {0.5, 1.0, 2.0, 0.25, 3.0, 1.5, 0.75, 1.0};
  const auto p = make_power_allocation(pw);
  const cvec x = modulate(row, p);
  for (std::size_t t = 0; t < n; ++t) {
    cdouble want{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
      const double ph = kTwoPi * static_cast<double>(t * k) / static_cast<double>(n);
      want += std::sqrt(pw[k]) * row[k] * cdouble{std::cos(ph), std::sin(ph)};
    }
    want /= std::sqrt(static_cast<double>(n));
    CHECK(std::abs(x[t] - want) < 1e-12);
  }
}

TEST_CASE("Parseval: time-domain power equals allocated spectral power") {
  RngStream rng(14);
  const auto qpsk = make_qpsk();
  const auto qam16 = make_qam16();
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 16;
    std::vector<ConstellationSpec> c_map;
    for (int i = 0; i < n; ++i) c_map.push_back(i % 2 == 0 ? qpsk : qam16);
    const auto grid = make_grid(c_map, 1, rng);
    std::vector<double> pw(n);
    for (auto& v : pw) v = 0.1 + 2.0 * rng.uniform();
    const auto p = make_power_allocation(pw);
    const cvec x = modulate(grid.row(0), p);
    double time_power = 0.0, spec_power = 0.0;
    for (int t = 0; t < n; ++t) time_power += std::norm(x[static_cast<std::size_t>(t)]);
    for (int k = 0; k < n; ++k)
      spec_power += pw[static_cast<std::size_t>(k)] *
                    std::norm(grid.s[static_cast<std::size_t>(k)]);
    CHECK(time_power == doctest::Approx(spec_power).epsilon(1e-9));
  }
}

TEST_CASE("integer delay is the cyclic shift y[t] = x[(t - tau) mod N]") {
  RngStream rng(15);
  const std::size_t n = 16;
  const cvec x = random_signal(n, rng);
  for (double tau : {0.0, 1.0, 5.0, 15.0}) {
    SensingScene scene;
    scene.targets = {{1.0, tau}};
    scene.noise_var = 0.0;
    const cvec alphas = {cdouble{1.0, 0.0}};
    RngStream noise_rng(0);
    const cvec y = apply_channel(x, scene, alphas, noise_rng);
    const auto shift = static_cast<std::size_t>(tau);
    for (std::size_t t = 0; t < n; ++t)
      CHECK(std::abs(y[t] - x[(t + n - shift) % n]) < 1e-15);
  }
}

TEST_CASE("integer delay equals the frequency-domain ramp") {
  // The two implementation paths (time shift vs spectral ramp) must agree.
  RngStream rng(16);
  const std::size_t n = 32;
  const cvec x = random_signal(n, rng);
  const double tau = 7.0;
  SensingScene scene;
  scene.targets = {{1.0, tau}};
  const cvec alphas = {cdouble{0.8, -0.3}};
  RngStream r1(0), r2(0);
  const cvec y_shift = apply_channel(x, scene, alphas, r1);

  const cvec spec = dft(x);
  cvec ramped(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ph = -kTwoPi * static_cast<double>(k) * tau / static_cast<double>(n);
    ramped[k] = alphas[0] * spec[k] * cdouble{std::cos(ph), std::sin(ph)};
  }
  const cvec y_ramp = idft(ramped);
  CHECK(max_abs_diff(y_shift, y_ramp) < 1e-12);
}

TEST_CASE("fractional delay matches the DFT-matrix oracle") {
  RngStream rng(17);
  const std::size_t n = 16;
  const cvec x = random_signal(n, rng);
  const double tau = 2.5;
  SensingScene scene;
  scene.targets = {{1.0, tau}};
  const cvec alphas = {cdouble{1.0, 0.0}};
  RngStream noise_rng(0);
  const cvec y = apply_channel(x, scene, alphas, noise_rng);

  const cvec spec = naive_dft(x, -1);
  cvec want(n, cdouble{0.0, 0.0});
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      const double ph = kTwoPi * (static_cast<double>(t * k) -
                                  static_cast<double>(k) * tau) /
                        static_cast<double>(n);
      want[t] += spec[k] * cdouble{std::cos(ph), std::sin(ph)};
    }
    want[t] /= std::sqrt(static_cast<double>(n));
  }
  CHECK(max_abs_diff(y, want) < 1e-9);
}

TEST_CASE("fractional shifts compose additively") {
  RngStream rng(18);
  const std::size_t n = 16;
  const cvec x = random_signal(n, rng);
  const cvec alphas = {cdouble{1.0, 0.0}};
  RngStream r(0);
  auto shift_by = [&](const cvec& in, double tau) {
    SensingScene scene;
    scene.targets = {{1.0, tau}};
    return apply_channel(in, scene, alphas, r);
  };
  const cvec once = shift_by(shift_by(x, 1.3), 2.9);
  const cvec direct = shift_by(x, 4.2);
  CHECK(max_abs_diff(once, direct) < 1e-10);
}

TEST_CASE("multi-target channel superposes single-target channels") {
  RngStream rng(19);
  const std::size_t n = 16;
  const cvec x = random_signal(n, rng);
  SensingScene both;
  both.targets = {{1.0, 3.0}, {2.0, 11.0}};
  const cvec alphas = {cdouble{0.7, 0.1}, cdouble{-0.2, 0.5}};
  RngStream r(0);
  const cvec y = apply_channel(x, both, alphas, r);
  cvec want(n, cdouble{0.0, 0.0});
  for (std::size_t q = 0; q < 2; ++q) {
    SensingScene one;
    one.targets = {both.targets[q]};
    const cvec a = {alphas[q]};
    RngStream rr(0);
    const cvec yq = apply_channel(x, one, a, rr);
    for (std::size_t t = 0; t < n; ++t) want[t] += yq[t];
  }
  CHECK(max_abs_diff(y, want) < 1e-12);
}

TEST_CASE("apply_channel adds noise of the configured variance") {
  RngStream rng(20);
  const std::size_t n = 64;
  const cvec x(n, cdouble{0.0, 0.0});
  SensingScene scene;
  scene.noise_var = 2.5;
  double acc = 0.0;
  const int trials = 2000;
  for (int i = 0; i < trials; ++i) {
    const cvec y = apply_channel(x, scene, {}, rng);
    for (const auto& v : y) acc += std::norm(v);
  }
  const double mean = acc / static_cast<double>(trials * n);
  // 3 sigma of the chi-squared mean estimate
  const double sigma = 2.5 / std::sqrt(static_cast<double>(trials * n));
  CHECK(std::fabs(mean - 2.5) < 3.0 * sigma);
}

TEST_CASE("draw_reflections is seeded and has the right variance") {
  SensingScene scene;
  scene.targets = {{4.0, 0.0}, {1.0, 3.0}};
  RngStream a(9), b(9);
  const cvec r1 = draw_reflections(scene, a);
  const cvec r2 = draw_reflections(scene, b);
  REQUIRE(r1.size() == 2);
  CHECK(r1[0] == r2[0]);
  CHECK(r1[1] == r2[1]);

  RngStream rng(10);
  double acc = 0.0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i)
    acc += std::norm(draw_reflections(scene, rng)[0]);
  const double mean = acc / trials;
  CHECK(std::fabs(mean - 4.0) < 3.0 * 4.0 / std::sqrt(static_cast<double>(trials)));
}

TEST_CASE("make_grid draws from the per-subcarrier alphabets") {
  const auto qpsk = make_qpsk();
  const auto qam16 = make_qam16();
  std::vector<ConstellationSpec> c_map;
  for (int i = 0; i < 8; ++i) c_map.push_back(i < 4 ? qpsk : qam16);
  RngStream rng(21);
  const auto g = make_grid(c_map, 50, rng);
  REQUIRE(g.n == 8);
  REQUIRE(g.m == 50);
  REQUIRE(g.s.size() == 400);
  REQUIRE(g.constellation_map.size() == 8);
  CHECK(g.constellation_map[0] == "qpsk");
  CHECK(g.constellation_map[7] == "qam16");
  auto member = [](const ConstellationSpec& c, cdouble v) {
    for (const auto& p : c.points)
      if (std::abs(p - v) < 1e-15) return true;
    return false;
  };
  for (int sym = 0; sym < g.m; ++sym)
    for (int sub = 0; sub < g.n; ++sub) {
      const cdouble v = g.s[static_cast<std::size_t>(sym) * 8 + sub];
      CHECK(member(sub < 4 ? qpsk : qam16, v));
    }
}

TEST_CASE("power allocation construction and validation") {
  const auto p = make_power_allocation({1.0, 2.0, 3.0});
  CHECK(p.p_ave == doctest::Approx(2.0).epsilon(1e-15));
  validate(p);

  const auto u = uniform_power(10, 0.5);
  REQUIRE(u.p.size() == 10);
  for (double v : u.p) CHECK(v == 0.5);
  CHECK(u.p_ave == 0.5);

  CHECK_THROWS_AS(make_power_allocation({1.0, -0.1}), Error);
  PowerAllocation bad;
  bad.p = {1.0, 1.0};
  bad.p_ave = 2.0;  // mean is 1.0
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("config and scene validation") {
  OfdmConfig cfg;
  cfg.validate();
  cfg.n_subcarriers = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = OfdmConfig{};
  cfg.n_symbols = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = OfdmConfig{};
  cfg.p_ave = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  SensingScene scene;
  scene.targets = {{1.0, 63.999}};
  scene.validate(64);
  scene.targets = {{1.0, 64.0}};
  CHECK_THROWS_AS(scene.validate(64), Error);
  scene.targets = {{1.0, -0.5}};
  CHECK_THROWS_AS(scene.validate(64), Error);
  scene.targets = {{0.0, 1.0}};
  CHECK_THROWS_AS(scene.validate(64), Error);
  scene.targets = {{1.0, 1.0}};
  scene.noise_var = -1.0;
  CHECK_THROWS_AS(scene.validate(64), Error);
}

TEST_CASE("apply_channel rejects mismatched reflections") {
  RngStream rng(22);
  const cvec x = random_signal(8, rng);
  SensingScene scene;
  scene.targets = {{1.0, 2.0}};
  CHECK_THROWS_AS(apply_channel(x, scene, {}, rng), Error);
}

TEST_CASE("delay_from_range floors the two-way sample delay") {
  CHECK(delay_from_range(132.6, kSpeedOfLight, 5e-8) == 17);
  CHECK(delay_from_range(0.0, kSpeedOfLight, 5e-8) == 0);
  // 10 samples exactly: d = 10 c T_s / 2
  CHECK(delay_from_range(5.0 * kSpeedOfLight * 5e-8, kSpeedOfLight, 5e-8) == 10);
  CHECK_THROWS_AS(delay_from_range(-1.0, kSpeedOfLight, 5e-8), Error);
  CHECK_THROWS_AS(delay_from_range(1.0, 0.0, 5e-8), Error);
}
