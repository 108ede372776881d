#include "superdiff/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <vector>

namespace sdiff {
namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

RealFFT::RealFFT(int dim, std::size_t n) : dim_(dim), n_(n) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("RealFFT supports 1 to 3 dimensions");
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("RealFFT needs an even number of points per axis");
    real_size_ = 1;
    for (int a = 0; a < dim; ++a) real_size_ *= n;
    complex_size_ = real_size_ / n * (n / 2 + 1);
    std::vector<int> dims(static_cast<std::size_t>(dim), static_cast<int>(n));

    std::lock_guard lock(planner_mutex());
    real_ = fftw_alloc_real(real_size_);
    spectral_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(complex_size_));
    if (!real_ || !spectral_) throw std::bad_alloc();
    auto* c = reinterpret_cast<fftw_complex*>(spectral_);
    plan_forward_ = fftw_plan_dft_r2c(dim, dims.data(), real_, c, FFTW_ESTIMATE);
    plan_backward_ = fftw_plan_dft_c2r(dim, dims.data(), c, real_, FFTW_ESTIMATE);
    if (!plan_forward_ || !plan_backward_) throw std::runtime_error("FFTW planning failed");
}

RealFFT::~RealFFT() {
    std::lock_guard lock(planner_mutex());
    if (plan_forward_) fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    if (plan_backward_) fftw_destroy_plan(static_cast<fftw_plan>(plan_backward_));
    fftw_free(real_);
    fftw_free(spectral_);
}

void RealFFT::forward() { fftw_execute(static_cast<fftw_plan>(plan_forward_)); }
void RealFFT::backward() { fftw_execute(static_cast<fftw_plan>(plan_backward_)); }

}  // namespace sdiff
