#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "cnm/types.hpp"

namespace cnm {

using Complex = std::complex<double>;

/// Precomputed tables for an exact length-n discrete Fourier transform.
///
/// Power-of-two lengths run an iterative radix-2 transform. Every other
/// length goes through Bluestein's chirp-z reformulation on a power-of-two
/// grid, so the transform is the true length-n DFT (no zero padding of the
/// signal itself). Methods are const and allocate their own scratch, so one
/// plan can be shared between threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const noexcept { return n_; }

  /// X_k = sum_j x_j exp(-2 pi i jk / n), in place.
  void forward(std::span<Complex> data) const;
  /// Inverse of forward, including the 1/n normalisation.
  void inverse(std::span<Complex> data) const;

  std::vector<Complex> forward_real(VectorRef x) const;

 private:
  void radix2(std::span<Complex> data, bool invert) const;
  void bluestein(std::span<Complex> data) const;

  std::size_t n_;
  bool pow2_;
  std::vector<Complex> twiddle_;      // exp(-2 pi i j / n), j < n/2 (radix-2 only)
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> chirp_;        // exp(-i pi j^2 / n), j < n (Bluestein only)
  std::vector<Complex> chirp_spectrum_;
  std::unique_ptr<FftPlan> inner_;
};

/// Cyclic convolution r (*) x, i.e. circ(r) * x with circ(r)[i][j] = r[(i - j) mod d].
Vector circ_multiply(VectorRef r, VectorRef x, const FftPlan& plan);

/// Real part of inverse(spectrum); throws NumericalError when the discarded
/// imaginary part exceeds `tol`.
Vector inverse_real(std::vector<Complex> spectrum, const FftPlan& plan, double tol);

}  // namespace cnm
