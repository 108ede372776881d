/// RAII wrapper around FFTW real-to-complex transforms on d-dimensional
/// periodic cubes with n points per axis.
#pragma once

#include <complex>
#include <cstddef>

namespace sdiff {

class RealFFT {
public:
    RealFFT(int dim, std::size_t n);
    ~RealFFT();
    RealFFT(const RealFFT&) = delete;
    RealFFT& operator=(const RealFFT&) = delete;

    int dim() const { return dim_; }
    std::size_t n() const { return n_; }
    std::size_t real_size() const { return real_size_; }
    std::size_t complex_size() const { return complex_size_; }
    /// Length of the last (halved) axis in the spectral layout.
    std::size_t half() const { return n_ / 2 + 1; }

    double* real() { return real_; }
    std::complex<double>* spectral() { return spectral_; }

    /// real() -> spectral(), unnormalised.
    void forward();
    /// spectral() -> real(), unnormalised; spectral() is overwritten.
    void backward();

    /// Signed frequency index of position `i` along a full axis.
    long signed_index(std::size_t i) const {
        return i <= n_ / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n_);
    }

private:
    int dim_;
    std::size_t n_;
    std::size_t real_size_;
    std::size_t complex_size_;
    double* real_ = nullptr;
    std::complex<double>* spectral_ = nullptr;
    void* plan_forward_ = nullptr;
    void* plan_backward_ = nullptr;
};

}  // namespace sdiff
