#include "isaclab/constellation.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace isaclab {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

int log2_exact(std::size_t n) {
  int b = 0;
  while ((std::size_t{1} << b) < n) ++b;
  return b;
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

BerModel BerModel::none() { return BerModel{}; }

BerModel BerModel::qpsk() {
  BerModel m;
  m.kind_ = Kind::closed_form_qpsk;
  m.order_ = 4;
  return m;
}

BerModel BerModel::square_qam(int order) {
  if (order < 4) throw Error("ber: QAM order must be >= 4");
  const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  if (root * root != order || !is_power_of_two(static_cast<std::size_t>(order)))
    throw Error("ber: order " + std::to_string(order) +
                " is not a square QAM size; use a table BER model");
  BerModel m;
  m.kind_ = Kind::closed_form_square_qam;
  m.order_ = order;
  return m;
}

BerModel BerModel::table(std::vector<double> snr_db, std::vector<double> ber) {
  if (snr_db.size() != ber.size() || snr_db.size() < 2)
    throw Error("ber table: need >= 2 (snr_db, ber) samples of equal length");
  for (std::size_t i = 0; i < snr_db.size(); ++i) {
    if (!(ber[i] > 0.0 && ber[i] <= 0.5))
      throw Error("ber table: values must lie in (0, 0.5]");
    if (i > 0 && !(snr_db[i] > snr_db[i - 1]))
      throw Error("ber table: snr_db must be strictly increasing");
    if (i > 0 && !(ber[i] < ber[i - 1]))
      throw Error("ber table: ber must be strictly decreasing");
  }
  BerModel m;
  m.kind_ = Kind::table;
  m.tab_snr_db_ = std::move(snr_db);
  m.tab_log_ber_.resize(ber.size());
  std::transform(ber.begin(), ber.end(), m.tab_log_ber_.begin(),
                 [](double b) { return std::log(b); });
  return m;
}

double BerModel::ber(double snr) const {
  if (snr < 0.0) throw Error("ber: snr must be >= 0");
  switch (kind_) {
    case Kind::closed_form_qpsk:
      return q_function(std::sqrt(snr));
    case Kind::closed_form_square_qam: {
      const double m = static_cast<double>(order_);
      const double b = std::log2(m);
      return (4.0 / b) * (1.0 - 1.0 / std::sqrt(m)) *
             q_function(std::sqrt(3.0 * snr / (m - 1.0)));
    }
    case Kind::table: {
      const double x = 10.0 * std::log10(std::max(snr, 1e-300));
      const auto& xs = tab_snr_db_;
      const auto& ys = tab_log_ber_;
      std::size_t hi = 1;
      while (hi < xs.size() - 1 && xs[hi] < x) ++hi;
      const std::size_t lo = hi - 1;
      const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);  // extrapolates at edges
      return std::min(0.5, std::exp(ys[lo] + t * (ys[hi] - ys[lo])));
    }
    case Kind::none:
      throw Error("ber: constellation has no BER model; supply a table");
  }
  throw Error("ber: unreachable");
}

double BerModel::min_snr_for_ber(double target) const {
  if (kind_ == Kind::none)
    throw Error("min_snr_for_ber: constellation has no BER model");
  if (!(target > 0.0 && target < ber(0.0)))
    throw Error("min_snr_for_ber: target must lie in (0, ber(0))");
  double lo = 0.0, hi = 0.0;
  if (kind_ == Kind::table) {
    // Refuse to extrapolate an inverse outside the sampled range.
    const double snr_lo = std::pow(10.0, tab_snr_db_.front() / 10.0);
    const double snr_hi = std::pow(10.0, tab_snr_db_.back() / 10.0);
    if (target < std::exp(tab_log_ber_.back()))
      throw Error("min_snr_for_ber: target below the sampled BER table range");
    if (target >= std::exp(tab_log_ber_.front())) {
      lo = 0.0;
      hi = snr_lo;
    } else {
      lo = snr_lo;
      hi = snr_hi;
    }
  } else {
    hi = 1.0;
    while (ber(hi) > target) {
      hi *= 2.0;
      if (hi > 1e15) throw Error("min_snr_for_ber: bracketing failed");
    }
    lo = hi / 2.0 < 1.0 ? 0.0 : hi / 2.0;
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ber(mid) <= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;  // ber(hi) <= target by construction
}

ConstellationSpec normalize(const cvec& raw_points, const std::string& id) {
  const std::size_t k = raw_points.size();
  if (!is_power_of_two(k) || k < 4)
    throw Error("normalize: alphabet size must be a power of two >= 4, got " +
                std::to_string(k));
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < k; ++i) {
    bool dup = false;
    for (std::size_t j = 0; j < i && !dup; ++j) dup = raw_points[i] == raw_points[j];
    if (!dup) ++distinct;
  }
  if (distinct < 4)
    throw Error("normalize: need >= 4 distinct points, got " + std::to_string(distinct));

  cdouble mean{0.0, 0.0};
  for (const auto& c : raw_points) mean += c;
  mean /= static_cast<double>(k);

  double power = 0.0;
  for (const auto& c : raw_points) power += std::norm(c - mean);
  power /= static_cast<double>(k);
  if (!(power > 0.0)) throw Error("normalize: degenerate alphabet (zero energy)");

  const double scale = 1.0 / std::sqrt(power);
  ConstellationSpec spec;
  spec.id = id;
  spec.points.reserve(k);
  for (const auto& c : raw_points) spec.points.push_back((c - mean) * scale);
  for (const auto& c : spec.points)
    if (std::norm(c) < 1e-18)
      throw Error("normalize: a point maps to the origin (inverse moment undefined)");
  spec.bits_per_symbol = log2_exact(k);
  return spec;
}

Moments moments(const ConstellationSpec& c) {
  const std::size_t k = c.points.size();
  if (k == 0) throw Error("moments: empty constellation");
  double sum4 = 0.0, sum_inv = 0.0;
  for (const auto& p : c.points) {
    const double m2 = std::norm(p);
    sum4 += m2 * m2;
    sum_inv += 1.0 / m2;
  }
  Moments m;
  m.mu4 = sum4 / static_cast<double>(k);
  m.nu_minus2 = sum_inv / static_cast<double>(k);
  m.rate_bits = c.bits_per_symbol;
  return m;
}

double ber(const ConstellationSpec& c, double snr) { return c.ber_model.ber(snr); }

double min_snr_for_ber(const ConstellationSpec& c, double ber_th) {
  return c.ber_model.min_snr_for_ber(ber_th);
}

double min_power(const ConstellationSpec& c, double channel_gain_sq,
                 double noise_psd_bw, double ber_th) {
  if (!(channel_gain_sq > 0.0))
    throw Error("min_power: zero channel gain makes the subcarrier infeasible; "
                "exclude it or assign the lowest-order constellation explicitly");
  if (!(noise_psd_bw > 0.0)) throw Error("min_power: noise_psd_bw must be > 0");
  return min_snr_for_ber(c, ber_th) * noise_psd_bw / channel_gain_sq;
}

cvec draw_symbols(const ConstellationSpec& c, std::size_t count, RngStream& rng) {
  if (c.points.empty()) throw Error("draw_symbols: empty constellation");
  cvec out;
  out.reserve(count);
  const std::uint64_t k = c.points.size();
  for (std::size_t i = 0; i < count; ++i) out.push_back(c.points[rng.uniform_int(k)]);
  return out;
}

ConstellationSpec make_qpsk() {
  // Axis-aligned representation: unit modulus exact in binary floating point,
  // so mu4 and nu_minus2 come out as exactly 1.
  cvec raw{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
  ConstellationSpec spec = normalize(raw, "qpsk");
  spec.ber_model = BerModel::qpsk();
  return spec;
}

namespace {

ConstellationSpec make_square_qam(int root, const std::string& id) {
  cvec raw;
  raw.reserve(static_cast<std::size_t>(root) * root);
  for (int i = 0; i < root; ++i)
    for (int q = 0; q < root; ++q)
      raw.push_back({static_cast<double>(2 * i - root + 1),
                     static_cast<double>(2 * q - root + 1)});
  ConstellationSpec spec = normalize(raw, id);
  spec.ber_model = BerModel::square_qam(root * root);
  return spec;
}

}  // namespace

ConstellationSpec make_qam16() { return make_square_qam(4, "qam16"); }
ConstellationSpec make_qam64() { return make_square_qam(8, "qam64"); }

ConstellationSpec make_apsk32() {
  // Three concentric rings of 4, 12, and 16 points; outer radii 2.84x and
  // 5.27x the inner radius.
  const double pi = std::acos(-1.0);
  cvec raw;
  raw.reserve(32);
  for (int k = 0; k < 4; ++k) {
    const double a = pi / 4.0 + k * pi / 2.0;
    raw.push_back({std::cos(a), std::sin(a)});
  }
  for (int k = 0; k < 12; ++k) {
    const double a = pi / 12.0 + k * pi / 6.0;
    raw.push_back({2.84 * std::cos(a), 2.84 * std::sin(a)});
  }
  for (int k = 0; k < 16; ++k) {
    const double a = k * pi / 8.0;
    raw.push_back({5.27 * std::cos(a), 5.27 * std::sin(a)});
  }
  ConstellationSpec spec = normalize(raw, "apsk32");
  spec.ber_model = BerModel::table(
      std::vector<double>(detail::apsk32_ber_snr_db().begin(),
                          detail::apsk32_ber_snr_db().end()),
      std::vector<double>(detail::apsk32_ber_values().begin(),
                          detail::apsk32_ber_values().end()));
  return spec;
}

ConstellationSpec builtin_constellation(const std::string& id) {
  if (id == "qpsk") return make_qpsk();
  if (id == "qam16") return make_qam16();
  if (id == "qam64") return make_qam64();
  if (id == "apsk32") return make_apsk32();
  throw Error("unknown constellation id '" + id +
              "' (built-ins: qpsk, qam16, qam64, apsk32)");
}

ConstellationSpec load_constellation_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("constellation json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("points") || !j["points"].is_array())
    throw Error("constellation json: expected object with a 'points' array");
  cvec raw;
  for (const auto& p : j["points"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw Error("constellation json: each point must be [re, im]");
    raw.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  const std::string id = j.value("id", std::string("custom"));
  ConstellationSpec spec = normalize(raw, id);
  if (j.contains("ber_table")) {
    const auto& t = j["ber_table"];
    if (!t.is_object() || !t.contains("snr_db") || !t.contains("ber"))
      throw Error("constellation json: ber_table needs 'snr_db' and 'ber' arrays");
    spec.ber_model = BerModel::table(t["snr_db"].get<std::vector<double>>(),
                                     t["ber"].get<std::vector<double>>());
  }
  return spec;
}

}  // namespace isaclab
