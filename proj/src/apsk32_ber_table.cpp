// GENERATED FILE - do not edit. Produced by:
//   gen_ber_table --id apsk32 --seed 20260821
// Monte-Carlo AWGN bit error rates, quasi-Gray labels, ML detection.
#include "isaclab/constellation.hpp"

namespace isaclab::detail {

namespace {
const double kSnrDb[] = {
    0.00,
    1.00,
    2.00,
    3.00,
    4.00,
    5.00,
    6.00,
    7.00,
    8.00,
    9.00,
    10.00,
    11.00,
    12.00,
    13.00,
    14.00,
    15.00,
    16.00,
    17.00,
    18.00,
    19.00,
    20.00,
    21.00,
    22.00,
    23.00,
    24.00,
};
const double kBer[] = {
    3.594789e-01,
    3.443823e-01,
    3.168646e-01,
    3.020763e-01,
    2.739473e-01,
    2.557545e-01,
    2.330323e-01,
    2.020192e-01,
    1.825234e-01,
    1.569243e-01,
    1.355473e-01,
    1.091058e-01,
    8.597528e-02,
    6.902502e-02,
    4.823636e-02,
    3.332917e-02,
    2.054284e-02,
    1.235601e-02,
    6.634057e-03,
    3.373606e-03,
    1.508572e-03,
    5.680511e-04,
    1.737227e-04,
    4.393333e-05,
    8.733333e-06,
};
}  // namespace

std::span<const double> apsk32_ber_snr_db() { return kSnrDb; }
std::span<const double> apsk32_ber_values() { return kBer; }

}  // namespace isaclab::detail
