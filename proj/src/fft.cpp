#include "isaclab/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace isaclab {
namespace {

// Plan creation is not thread-safe in FFTW; execution through
// fftw_execute_dft on caller-owned arrays is. Plans are created with
// FFTW_UNALIGNED so they can execute on any std::vector storage.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache c;
    return c;
  }

  void execute(cvec& v, int sign) {
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto key = std::make_pair(v.size(), sign);
      auto it = plans_.find(key);
      if (it == plans_.end()) {
        cvec dummy(v.size());
        auto* d = reinterpret_cast<fftw_complex*>(dummy.data());
        plan = fftw_plan_dft_1d(static_cast<int>(v.size()), d, d, sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) throw Error("fft: plan creation failed");
        plans_.emplace(key, plan);
      } else {
        plan = it->second;
      }
    }
    auto* p = reinterpret_cast<fftw_complex*>(v.data());
    fftw_execute_dft(plan, p, p);
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

}  // namespace

namespace detail {

void fft_forward_inplace(cvec& v) {
  if (v.empty()) throw Error("fft: empty input");
  PlanCache::instance().execute(v, FFTW_FORWARD);
}

void fft_backward_inplace(cvec& v) {
  if (v.empty()) throw Error("fft: empty input");
  PlanCache::instance().execute(v, FFTW_BACKWARD);
}

}  // namespace detail

cvec dft(const cvec& x) {
  cvec v = x;
  detail::fft_forward_inplace(v);
  const double s = 1.0 / std::sqrt(static_cast<double>(v.size()));
  for (auto& z : v) z *= s;
  return v;
}

cvec idft(const cvec& x) {
  cvec v = x;
  detail::fft_backward_inplace(v);
  const double s = 1.0 / std::sqrt(static_cast<double>(v.size()));
  for (auto& z : v) z *= s;
  return v;
}

}  // namespace isaclab
