#include "cnm/fft.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "cnm/error.hpp"

namespace cnm {

namespace {

Complex unit_root(std::size_t num, std::size_t den) {
  // exp(-2 pi i num / den) evaluated directly, no recurrence drift.
  const double angle = -2.0 * M_PI * static_cast<double>(num) / static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(std::has_single_bit(n)) {
  if (n == 0) throw InvalidArgument("FftPlan: length must be >= 1");
  if (pow2_) {
    twiddle_.resize(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) twiddle_[j] = unit_root(j, n);
    const int bits = std::countr_zero(n);
    bitrev_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t r = 0;
      for (int b = 0; b < bits; ++b)
        if (j & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      bitrev_[j] = r;
    }
    return;
  }

  // j^2 mod 2n keeps the chirp angle small and exact for large j.
  chirp_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t sq = (j * j) % (2 * n);
    const double angle = -M_PI * static_cast<double>(sq) / static_cast<double>(n);
    chirp_[j] = {std::cos(angle), std::sin(angle)};
  }
  const std::size_t m = std::bit_ceil(2 * n - 1);
  inner_ = std::make_unique<FftPlan>(m);
  chirp_spectrum_.assign(m, Complex{});
  chirp_spectrum_[0] = std::conj(chirp_[0]);
  for (std::size_t j = 1; j < n; ++j) {
    chirp_spectrum_[j] = std::conj(chirp_[j]);
    chirp_spectrum_[m - j] = std::conj(chirp_[j]);
  }
  inner_->forward(chirp_spectrum_);
}

FftPlan::~FftPlan() = default;

void FftPlan::forward(std::span<Complex> data) const {
  if (data.size() != n_)
    throw InvalidArgument("FftPlan: expected length " + std::to_string(n_) + ", got " +
                          std::to_string(data.size()));
  if (n_ == 1) return;
  if (pow2_) {
    radix2(data, false);
  } else {
    bluestein(data);
  }
}

void FftPlan::inverse(std::span<Complex> data) const {
  if (data.size() != n_)
    throw InvalidArgument("FftPlan: expected length " + std::to_string(n_) + ", got " +
                          std::to_string(data.size()));
  const double norm = 1.0 / static_cast<double>(n_);
  if (pow2_) {
    if (n_ > 1) radix2(data, true);
    for (auto& v : data) v *= norm;
    return;
  }
  // inverse(x) = conj(forward(conj(x))) / n
  for (auto& v : data) v = std::conj(v);
  forward(data);
  for (auto& v : data) v = std::conj(v) * norm;
}

std::vector<Complex> FftPlan::forward_real(VectorRef x) const {
  std::vector<Complex> out(static_cast<std::size_t>(x.size()));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = x(static_cast<Index>(j));
  forward(out);
  return out;
}

void FftPlan::radix2(std::span<Complex> data, bool invert) const {
  const std::size_t n = n_;
  for (std::size_t j = 0; j < n; ++j)
    if (j < bitrev_[j]) std::swap(data[j], data[bitrev_[j]]);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        Complex w = twiddle_[j * stride];
        if (invert) w = std::conj(w);
        const Complex u = data[start + j];
        const Complex v = data[start + j + half] * w;
        data[start + j] = u + v;
        data[start + j + half] = u - v;
      }
    }
  }
}

void FftPlan::bluestein(std::span<Complex> data) const {
  const std::size_t m = inner_->size();
  std::vector<Complex> a(m, Complex{});
  for (std::size_t j = 0; j < n_; ++j) a[j] = data[j] * chirp_[j];
  inner_->forward(a);
  for (std::size_t j = 0; j < m; ++j) a[j] *= chirp_spectrum_[j];
  inner_->inverse(a);
  for (std::size_t j = 0; j < n_; ++j) data[j] = a[j] * chirp_[j];
}

Vector inverse_real(std::vector<Complex> spectrum, const FftPlan& plan, double tol) {
  plan.inverse(spectrum);
  Vector out(static_cast<Index>(spectrum.size()));
  double residue = 0.0;
  for (std::size_t j = 0; j < spectrum.size(); ++j) {
    out(static_cast<Index>(j)) = spectrum[j].real();
    residue = std::max(residue, std::abs(spectrum[j].imag()));
  }
  if (residue > tol)
    throw NumericalError("inverse FFT left an imaginary residue of " + std::to_string(residue) +
                         " (tolerance " + std::to_string(tol) + ")");
  return out;
}

Vector circ_multiply(VectorRef r, VectorRef x, const FftPlan& plan) {
  const auto n = static_cast<Index>(plan.size());
  if (r.size() != n || x.size() != n)
    throw InvalidArgument("circ_multiply: vectors must have the plan length " +
                          std::to_string(n));
  auto spec = plan.forward_real(x);
  const auto rs = plan.forward_real(r);
  for (std::size_t j = 0; j < spec.size(); ++j) spec[j] *= rs[j];
  // Rounding in the transform scales with both operands.
  const double tol = 1e-9 * std::max(1.0, r.norm()) * x.norm();
  return inverse_real(std::move(spec), plan, tol);
}

}  // namespace cnm
