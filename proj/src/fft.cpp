#include "vcd/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "vcd/error.hpp"

namespace vcd::fft {

void* aligned_alloc_bytes(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

void aligned_free(void* p) noexcept { fftw_free(p); }

int next_fast_size(int n) {
  require(n > 0, ErrorKind::Sizing, "transform size must be positive");
  for (int candidate = n;; ++candidate) {
    int r = candidate;
    for (int f : {2, 3, 5}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return candidate;
  }
}

namespace {

enum class PlanKind { RealForward, RealInverse, ComplexForward };

// FFTW's planner is not thread-safe; execution of an existing plan on new
// arrays is. Plans live for the life of the process.
class PlanCache {
 public:
  fftw_plan get(PlanKind kind, int width, int height) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(kind, width, height);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const std::size_t n = static_cast<std::size_t>(width) * height;
    const std::size_t nc = static_cast<std::size_t>(half_width(width)) * height;
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::RealForward: {
        auto* in = fftw_alloc_real(n);
        auto* out = fftw_alloc_complex(nc);
        plan = fftw_plan_dft_r2c_2d(height, width, in, out, FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case PlanKind::RealInverse: {
        auto* in = fftw_alloc_complex(nc);
        auto* out = fftw_alloc_real(n);
        plan = fftw_plan_dft_c2r_2d(height, width, in, out, FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case PlanKind::ComplexForward: {
        auto* in = fftw_alloc_complex(n);
        auto* out = fftw_alloc_complex(n);
        plan = fftw_plan_dft_2d(height, width, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
        break;
      }
    }
    require(plan != nullptr, ErrorKind::Sizing, "failed to plan transform");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<PlanKind, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void forward_real(const double* in, std::complex<double>* out, int width, int height) {
  fftw_plan plan = cache().get(PlanKind::RealForward, width, height);
  // r2c plans never write their input.
  fftw_execute_dft_r2c(plan, const_cast<double*>(in), as_fftw(out));
}

void inverse_real(std::complex<double>* in, double* out, int width, int height) {
  fftw_plan plan = cache().get(PlanKind::RealInverse, width, height);
  fftw_execute_dft_c2r(plan, as_fftw(in), out);
}

void forward_complex(std::complex<double>* in, std::complex<double>* out, int width, int height) {
  fftw_plan plan = cache().get(PlanKind::ComplexForward, width, height);
  fftw_execute_dft(plan, as_fftw(in), as_fftw(out));
}

}  // namespace vcd::fft
