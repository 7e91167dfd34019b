#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace canonflow {

using cplx = std::complex<double>;

/// Owns an FFTW plan pair for one transform length. The forward transform
/// uses the e^{-2 pi i jk/n} convention; neither direction normalizes.
/// Planning is serialized internally; execution on distinct instances is
/// thread-safe.
class FourierTransform {
 public:
  explicit FourierTransform(std::size_t n);
  ~FourierTransform();
  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;
  FourierTransform(FourierTransform&&) noexcept;
  FourierTransform& operator=(FourierTransform&&) noexcept;

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<const cplx> in, std::span<cplx> out);
  void backward(std::span<const cplx> in, std::span<cplx> out);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

/// Angular wavenumbers of the discrete transform on a periodic window of
/// length n*dx, in FFT order. The Nyquist entry is +pi/dx.
std::vector<double> wavenumbers(std::size_t n, double dx);

/// order-th spectral derivative of periodic samples. Odd orders zero the
/// Nyquist mode so that -i d/dx stays Hermitian.
std::vector<cplx> spectral_derivative(std::span<const cplx> values, double dx, int order);

}  // namespace canonflow
