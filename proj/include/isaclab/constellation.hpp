#pragma once

#include <optional>
#include <span>
#include <string>

#include "isaclab/rng.hpp"
#include "isaclab/types.hpp"

namespace isaclab {

// Symbol alphabet statistics that drive the sensing laws: kurtosis
// mu4 = E|s|^4 and inverse second moment nu_minus2 = E[1/|s|^2], both for a
// zero-mean unit-power alphabet with equiprobable symbols.
struct Moments {
  double mu4 = 1.0;
  double nu_minus2 = 1.0;
  int rate_bits = 0;
};

// Uncoded-BER model over per-subcarrier SNR gamma (linear).
class BerModel {
 public:
  enum class Kind { none, closed_form_qpsk, closed_form_square_qam, table };

  static BerModel none();
  static BerModel qpsk();
  static BerModel square_qam(int order);  // order in {4, 16, 64, 256, ...}
  // Monotone sampled curve: snr_db strictly increasing, ber strictly
  // decreasing within (0, 0.5]. Interpolation is linear in
  // (snr_db, log ber), which preserves monotonicity.
  static BerModel table(std::vector<double> snr_db, std::vector<double> ber);

  Kind kind() const { return kind_; }
  double ber(double snr) const;
  // Bisection inverse: smallest gamma with ber(gamma) <= target, relative
  // tolerance 1e-10. Table mode refuses targets outside the sampled range.
  double min_snr_for_ber(double target) const;

 private:
  Kind kind_ = Kind::none;
  int order_ = 0;
  std::vector<double> tab_snr_db_, tab_log_ber_;
};

struct ConstellationSpec {
  std::string id;
  cvec points;          // zero-mean, unit average power
  int bits_per_symbol = 0;
  BerModel ber_model = BerModel::none();
};

// Gaussian right tail Q(x) via erfc; relative error < 1e-12 over the SNR
// range used here.
double q_function(double x);

// Shifts to zero mean and scales to unit average power. Rejects alphabets
// with fewer than 4 distinct points, non-power-of-two sizes, or any point
// that normalization maps to the origin.
ConstellationSpec normalize(const cvec& raw_points, const std::string& id = "custom");

Moments moments(const ConstellationSpec& c);

double ber(const ConstellationSpec& c, double snr);
double min_snr_for_ber(const ConstellationSpec& c, double ber_th);

// Minimum per-subcarrier transmit power meeting ber_th through a channel
// with power gain |H|^2 = channel_gain_sq and noise level N0 * delta_f.
double min_power(const ConstellationSpec& c, double channel_gain_sq,
                 double noise_psd_bw, double ber_th);

cvec draw_symbols(const ConstellationSpec& c, std::size_t count, RngStream& rng);

// Built-in alphabets.
ConstellationSpec make_qpsk();
ConstellationSpec make_qam16();
ConstellationSpec make_qam64();
ConstellationSpec make_apsk32();  // 4+12+16 rings, radius ratios 2.84 / 5.27
// Lookup by id ("qpsk" | "qam16" | "qam64" | "apsk32"); error otherwise.
ConstellationSpec builtin_constellation(const std::string& id);

// JSON form: {"id": str, "points": [[re, im], ...],
//             "ber_table": {"snr_db": [...], "ber": [...]}?}
ConstellationSpec load_constellation_json(const std::string& json_text);

namespace detail {
// Embedded Monte-Carlo AWGN BER curve for the 32APSK alphabet (generated by
// tools/gen_ber_table; see data/ber_apsk32.json).
std::span<const double> apsk32_ber_snr_db();
std::span<const double> apsk32_ber_values();
}  // namespace detail

}  // namespace isaclab
