#pragma once

#include "isaclab/types.hpp"

namespace isaclab {

// Unitary N-point DFT, any N >= 1:
//   X[n] = (1/sqrt(N)) sum_t x[t] exp(-j 2 pi n t / N).
cvec dft(const cvec& x);

// Unitary inverse:
//   x[t] = (1/sqrt(N)) sum_n X[n] exp(+j 2 pi t n / N).
cvec idft(const cvec& x);

namespace detail {
// Unnormalized in-place transforms (FFTW sign convention): forward uses
// exp(-j...), backward exp(+j...). Thread-safe; plans are cached per size.
void fft_forward_inplace(cvec& v);
void fft_backward_inplace(cvec& v);
}  // namespace detail

}  // namespace isaclab
