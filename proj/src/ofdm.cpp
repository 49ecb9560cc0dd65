#include "isaclab/ofdm.hpp"

#include <cmath>

namespace isaclab {

void OfdmConfig::validate() const {
  if (n_subcarriers < 2) throw Error("ofdm config: n_subcarriers must be >= 2");
  if (n_symbols < 1) throw Error("ofdm config: n_symbols must be >= 1");
  if (!(subcarrier_spacing_hz > 0.0)) throw Error("ofdm config: subcarrier spacing must be > 0");
  if (!(sample_interval_s > 0.0)) throw Error("ofdm config: sample interval must be > 0");
  if (!(p_ave > 0.0)) throw Error("ofdm config: p_ave must be > 0");
}

PowerAllocation make_power_allocation(std::vector<double> p) {
  if (p.empty()) throw Error("power allocation: empty vector");
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw Error("power allocation: negative entry");
    sum += v;
  }
  PowerAllocation a;
  a.p = std::move(p);
  a.p_ave = sum / static_cast<double>(a.p.size());
  return a;
}

PowerAllocation uniform_power(int n, double p_ave) {
  if (n < 1) throw Error("power allocation: n must be >= 1");
  if (p_ave < 0.0) throw Error("power allocation: p_ave must be >= 0");
  PowerAllocation a;
  a.p.assign(static_cast<std::size_t>(n), p_ave);
  a.p_ave = p_ave;
  return a;
}

void validate(const PowerAllocation& a) {
  if (a.p.empty()) throw Error("power allocation: empty vector");
  double sum = 0.0;
  for (double v : a.p) {
    if (v < 0.0) throw Error("power allocation: negative entry");
    sum += v;
  }
  const double mean = sum / static_cast<double>(a.p.size());
  const double scale = std::max(std::abs(a.p_ave), 1e-300);
  if (std::abs(mean - a.p_ave) > 1e-9 * scale)
    throw Error("power allocation: mean(p) does not match p_ave");
}

SymbolGrid make_grid(const std::vector<ConstellationSpec>& c_map, int m, RngStream& rng) {
  if (c_map.empty()) throw Error("make_grid: empty constellation map");
  if (m < 1) throw Error("make_grid: m must be >= 1");
  SymbolGrid g;
  g.n = static_cast<int>(c_map.size());
  g.m = m;
  g.s.resize(static_cast<std::size_t>(g.n) * m);
  g.constellation_map.reserve(c_map.size());
  for (const auto& c : c_map) g.constellation_map.push_back(c.id);
  for (int sym = 0; sym < m; ++sym)
    for (int sub = 0; sub < g.n; ++sub) {
      const auto& pts = c_map[static_cast<std::size_t>(sub)].points;
      g.s[static_cast<std::size_t>(sym) * g.n + sub] = pts[rng.uniform_int(pts.size())];
    }
  return g;
}

void SensingScene::validate(int n_subcarriers) const {
  for (const auto& t : targets) {
    if (!(t.sigma_alpha_sq > 0.0)) throw Error("scene: sigma_alpha_sq must be > 0");
    if (t.tau < 0.0 || t.tau >= static_cast<double>(n_subcarriers))
      throw Error("scene: tau must lie in [0, N)");
  }
  if (noise_var < 0.0) throw Error("scene: noise_var must be >= 0");
}

cvec modulate(std::span<const cdouble> grid_row, const PowerAllocation& p) {
  if (grid_row.size() != p.p.size())
    throw Error("modulate: symbol row and power allocation size mismatch");
  cvec spec(grid_row.size());
  for (std::size_t n = 0; n < spec.size(); ++n)
    spec[n] = std::sqrt(p.p[n]) * grid_row[n];
  return idft(spec);
}

cvec draw_reflections(const SensingScene& scene, RngStream& rng) {
  cvec alphas;
  alphas.reserve(scene.targets.size());
  for (const auto& t : scene.targets) alphas.push_back(rng.cnormal(t.sigma_alpha_sq));
  return alphas;
}

namespace {

bool integer_delay(double tau) { return tau == std::floor(tau); }

}  // namespace

cvec apply_channel(const cvec& x, const SensingScene& scene,
                   std::span<const cdouble> alphas, RngStream& rng) {
  const std::size_t n = x.size();
  if (n == 0) throw Error("apply_channel: empty signal");
  if (alphas.size() != scene.targets.size())
    throw Error("apply_channel: one reflection coefficient per target required");

  bool all_integer = true;
  for (const auto& t : scene.targets) all_integer = all_integer && integer_delay(t.tau);

  cvec y(n, cdouble{0.0, 0.0});
  if (all_integer) {
    for (std::size_t q = 0; q < scene.targets.size(); ++q) {
      const auto shift =
          static_cast<std::size_t>(std::llround(scene.targets[q].tau)) % n;
      for (std::size_t t = 0; t < n; ++t)
        y[t] += alphas[q] * x[(t + n - shift) % n];
    }
  } else {
    const cvec spec = dft(x);
    const double two_pi = 2.0 * std::acos(-1.0);
    cvec acc(n, cdouble{0.0, 0.0});
    for (std::size_t q = 0; q < scene.targets.size(); ++q) {
      const double tau = scene.targets[q].tau;
      for (std::size_t k = 0; k < n; ++k) {
        const double phase = -two_pi * static_cast<double>(k) * tau / static_cast<double>(n);
        acc[k] += alphas[q] * spec[k] * cdouble{std::cos(phase), std::sin(phase)};
      }
    }
    y = idft(acc);
  }

  if (scene.noise_var > 0.0)
    for (auto& v : y) v += rng.cnormal(scene.noise_var);
  return y;
}

cvec apply_channel(const cvec& x, const SensingScene& scene, RngStream& rng) {
  const cvec alphas = draw_reflections(scene, rng);
  return apply_channel(x, scene, alphas, rng);
}

int delay_from_range(double range_m, double c_mps, double sample_interval_s) {
  if (range_m < 0.0) throw Error("delay_from_range: range must be >= 0");
  if (!(c_mps > 0.0) || !(sample_interval_s > 0.0))
    throw Error("delay_from_range: propagation speed and sample interval must be > 0");
  return static_cast<int>(std::floor(2.0 * range_m / (c_mps * sample_interval_s)));
}

}  // namespace isaclab
