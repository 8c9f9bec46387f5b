// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#pragma once

#include "lowres/common.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace lowres {

enum class FftDirection { Forward, Inverse };

namespace detail {

// FFTW planning is not thread-safe; execution of an existing plan on new arrays is.
class FftPlanCache {
  public:
    static FftPlanCache &instance()
    {
        static FftPlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t n, FftDirection dir)
    {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto key = std::make_pair(n, dir == FftDirection::Forward ? 0 : 1);
        auto it = plans_.find(key);
        if (it != plans_.end())
            return it->second;
        std::vector<cplx> scratch(n);
        auto *p = reinterpret_cast<fftw_complex *>(scratch.data());
        const int sign = dir == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr)
            throw DomainError("FFTW failed to create a plan of size " + std::to_string(n));
        plans_.emplace(key, plan);
        return plan;
    }

  private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

} // namespace detail

// Unnormalised in-place DFT: forward uses exp(-j2pi kn/N), inverse exp(+j2pi kn/N) without 1/N.
inline void fft_inplace(std::span<cplx> x, FftDirection dir)
{
    if (x.empty())
        throw InvalidArgument("fft: empty input");
    fftw_plan plan = detail::FftPlanCache::instance().get(x.size(), dir);
    auto *p = reinterpret_cast<fftw_complex *>(x.data());
    fftw_execute_dft(plan, p, p);
}

inline std::vector<cplx> fft(std::vector<cplx> x)
{
    fft_inplace(x, FftDirection::Forward);
    return x;
}

// Inverse DFT including the 1/N factor.
inline std::vector<cplx> ifft(std::vector<cplx> x)
{
    fft_inplace(x, FftDirection::Inverse);
    const double s = 1.0 / static_cast<double>(x.size());
    for (auto &v : x)
        v *= s;
    return x;
}

// Signed frequency of DFT bin k for length n at rate fs.
inline double bin_frequency(std::size_t k, std::size_t n, double fs)
{
    const auto kk = static_cast<long>(k);
    const auto nn = static_cast<long>(n);
    const long signed_k = kk < (nn + 1) / 2 ? kk : kk - nn;
    return static_cast<double>(signed_k) * fs / static_cast<double>(n);
}

template <class T>
std::vector<T> fftshift(const std::vector<T> &x)
{
    std::vector<T> out(x.size());
    const std::size_t h = x.size() / 2;
    for (std::size_t i = 0; i < x.size(); ++i)
        out[(i + h) % x.size()] = x[i];
    return out;
}

enum class Window { Rectangular, Hann, Hamming, Kaiser };

inline std::vector<double> make_window(std::size_t n, Window w, bool periodic = false, double kaiser_beta = 8.0)
{
    std::vector<double> out(n, 1.0);
    if (n <= 1)
        return out;
    const double denom = periodic ? static_cast<double>(n) : static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / denom;
        switch (w) {
        case Window::Rectangular:
            break;
        case Window::Hann:
            out[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * x);
            break;
        case Window::Hamming:
            out[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * x);
            break;
        case Window::Kaiser: {
            const double r = 2.0 * x - 1.0;
            out[i] = std::cyl_bessel_i(0.0, kaiser_beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                     std::cyl_bessel_i(0.0, kaiser_beta);
            break;
        }
        }
    }
    return out;
}

// Linear-phase windowed-sinc lowpass. cutoff_norm is the cutoff over the sample rate
// (0 < cutoff_norm < 0.5). Taps are normalised to unit DC gain.
inline std::vector<double> design_lowpass(double cutoff_norm, std::size_t taps, Window w = Window::Hamming,
                                          double kaiser_beta = 8.0)
{
    if (!(cutoff_norm > 0.0 && cutoff_norm < 0.5))
        throw InvalidArgument("lowpass cutoff must lie strictly between 0 and half the sample rate");
    if (taps < 3 || taps % 2 == 0)
        throw InvalidArgument("lowpass length must be odd and at least 3");
    const auto win = make_window(taps, w, false, kaiser_beta);
    std::vector<double> h(taps);
    const double mid = 0.5 * static_cast<double>(taps - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < taps; ++i) {
        const double t = static_cast<double>(i) - mid;
        const double x = 2.0 * cutoff_norm * t;
        const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        h[i] = 2.0 * cutoff_norm * sinc * win[i];
        sum += h[i];
    }
    for (auto &v : h)
        v /= sum;
    return h;
}

// Frequency response of a centred odd-length FIR (delay removed); real for symmetric taps.
inline cplx fir_response(std::span<const double> taps, double f_norm)
{
    const double mid = 0.5 * static_cast<double>(taps.size() - 1);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        const double t = static_cast<double>(i) - mid;
        acc += taps[i] * std::polar(1.0, -2.0 * std::numbers::pi * f_norm * t);
    }
    return acc;
}

// Convolution with an odd-length FIR, aligned so output[i] corresponds to input[i]
// (group delay removed). Samples outside the input are taken as zero.
inline std::vector<cplx> filter_centered(std::span<const cplx> x, std::span<const double> taps)
{
    if (taps.empty() || taps.size() % 2 == 0)
        throw InvalidArgument("filter_centered: need an odd number of taps");
    const long n = static_cast<long>(x.size());
    const long half = static_cast<long>(taps.size() / 2);
    std::vector<cplx> y(x.size());
    for (long i = 0; i < n; ++i) {
        const long j_lo = std::max(0L, i - half);
        const long j_hi = std::min(n - 1, i + half);
        double re = 0.0, im = 0.0;
        for (long j = j_lo; j <= j_hi; ++j) {
            const double h = taps[static_cast<std::size_t>(i - j + half)];
            re += h * x[static_cast<std::size_t>(j)].real();
            im += h * x[static_cast<std::size_t>(j)].imag();
        }
        y[static_cast<std::size_t>(i)] = {re, im};
    }
    return y;
}

inline ComplexSampleBlock fir_lowpass(const ComplexSampleBlock &block, double cutoff_hz, std::size_t taps = 129)
{
    block.validate();
    const double fs = block.sample_rate_hz;
    if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * fs))
        throw InvalidArgument("fir_lowpass: cutoff must lie in (0, fs/2)");
    const auto h = design_lowpass(cutoff_hz / fs, taps);
    return {filter_centered(block.samples, h), fs};
}

struct Psd {
    std::vector<double> freqs_hz;  // ascending, centred on 0
    std::vector<double> psd;       // power per Hz
    double df_hz = 0.0;
};

// Welch estimate with a Hann window and 50 % overlap, two-sided, density scaling so that the
// PSD summed over bins times df equals the mean power of the input.
inline Psd welch_psd(std::span<const cplx> x, double fs, std::size_t nperseg)
{
    if (nperseg < 8)
        throw InvalidArgument("welch_psd: segment length too small");
    if (x.size() < 4 * nperseg)
        throw InvalidArgument("welch_psd: input must hold at least four segments");
    const auto win = make_window(nperseg, Window::Hann, true);
    double wpow = 0.0;
    for (double w : win)
        wpow += w * w;
    const std::size_t hop = nperseg / 2;
    const std::size_t n_seg = (x.size() - nperseg) / hop + 1;
    std::vector<double> acc(nperseg, 0.0);
    std::vector<cplx> buf(nperseg);
    for (std::size_t s = 0; s < n_seg; ++s) {
        const std::size_t off = s * hop;
        for (std::size_t i = 0; i < nperseg; ++i)
            buf[i] = x[off + i] * win[i];
        fft_inplace(buf, FftDirection::Forward);
        for (std::size_t i = 0; i < nperseg; ++i)
            acc[i] += std::norm(buf[i]);
    }
    Psd out;
    out.df_hz = fs / static_cast<double>(nperseg);
    const double scale = 1.0 / (static_cast<double>(n_seg) * fs * wpow);
    std::vector<double> f(nperseg), p(nperseg);
    for (std::size_t i = 0; i < nperseg; ++i) {
        f[i] = bin_frequency(i, nperseg, fs);
        p[i] = acc[i] * scale;
    }
    // Rotate so frequencies ascend.
    const std::size_t first_negative = (nperseg + 1) / 2;
    out.freqs_hz.reserve(nperseg);
    out.psd.reserve(nperseg);
    for (std::size_t i = 0; i < nperseg; ++i) {
        const std::size_t k = (first_negative + i) % nperseg;
        out.freqs_hz.push_back(f[k]);
        out.psd.push_back(p[k]);
    }
    return out;
}

// Integral of the PSD over [f_lo, f_hi), with fractional weighting of edge bins.
inline double integrate_psd(const Psd &psd, double f_lo, double f_hi)
{
    double total = 0.0;
    const double half = 0.5 * psd.df_hz;
    for (std::size_t i = 0; i < psd.freqs_hz.size(); ++i) {
        const double lo = std::max(f_lo, psd.freqs_hz[i] - half);
        const double hi = std::min(f_hi, psd.freqs_hz[i] + half);
        if (hi > lo)
            total += psd.psd[i] * (hi - lo);
    }
    return total;
}

} // namespace lowres
