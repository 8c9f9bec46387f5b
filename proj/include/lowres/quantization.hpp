// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#pragma once

#include "lowres/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <span>

namespace lowres {

namespace detail {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// P(a < Y < b) for standard normal Y, evaluated on the tail side to avoid cancellation.
inline double normal_mass(double a, double b)
{
    const double r = 1.0 / std::numbers::sqrt2;
    if (a >= 0.0)
        return 0.5 * (std::erfc(a * r) - std::erfc(b * r));
    if (b <= 0.0)
        return 0.5 * (std::erfc(-b * r) - std::erfc(-a * r));
    return 1.0 - 0.5 * std::erfc(-a * r) - 0.5 * std::erfc(b * r);
}

} // namespace detail

// Midrise uniform quantizer for one real component with 2^n levels at (k + 1/2) * step,
// k = -2^(n-1) ... 2^(n-1) - 1. Values beyond the outer levels saturate. A value exactly on a
// decision boundary goes to the level above it.
inline double quantize_scalar(double x, double step, int n_bits)
{
    const double half_levels = std::ldexp(1.0, n_bits - 1);
    double k = std::floor(x / step);
    k = std::clamp(k, -half_levels, half_levels - 1.0);
    return (k + 0.5) * step;
}

// Exact mean squared error E[(Y - Q(Y))^2] for Y ~ N(0,1), summed cell by cell.
inline double gaussian_quantizer_mse(double step, int n_bits)
{
    if (!(step > 0.0))
        throw InvalidArgument("quantizer step must be positive");
    if (n_bits < 1 || n_bits > kMaxBits)
        throw InvalidArgument("n_bits out of range");
    const long half = 1L << (n_bits - 1);
    const double inf = std::numeric_limits<double>::infinity();
    double mse = 0.0;
    for (long k = -half; k < half; ++k) {
        const double c = (static_cast<double>(k) + 0.5) * step;
        const double a = (k == -half) ? -inf : static_cast<double>(k) * step;
        const double b = (k == half - 1) ? inf : static_cast<double>(k + 1) * step;
        const double p = detail::normal_mass(a, b);
        const double pa = std::isinf(a) ? 0.0 : detail::normal_pdf(a);
        const double pb = std::isinf(b) ? 0.0 : detail::normal_pdf(b);
        const double apa = std::isinf(a) ? 0.0 : a * pa;
        const double bpb = std::isinf(b) ? 0.0 : b * pb;
        mse += (1.0 + c * c) * p - 2.0 * c * (pa - pb) + apa - bpb;
    }
    return mse;
}

namespace detail {

struct OptimalPoint {
    double step = 0.0;
    double mse = 0.0;
};

inline OptimalPoint search_optimal_step(int n_bits)
{
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = std::log(1e-7), hi = std::log(4.0);
    auto f = [&](double ld) { return gaussian_quantizer_mse(std::exp(ld), n_bits); };
    double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > 1e-11) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = f(x2);
        }
    }
    const double step = std::exp(0.5 * (lo + hi));
    return {step, gaussian_quantizer_mse(step, n_bits)};
}

inline const OptimalPoint &optimal_point(int n_bits)
{
    if (n_bits < 1 || n_bits > kMaxBits)
        throw InvalidArgument("n_bits must be between 1 and 16, got " + std::to_string(n_bits));
    static std::array<std::once_flag, kMaxBits + 1> flags;
    static std::array<OptimalPoint, kMaxBits + 1> cache;
    std::call_once(flags[n_bits], [n_bits] { cache[n_bits] = search_optimal_step(n_bits); });
    return cache[n_bits];
}

} // namespace detail

// Step minimising the MSE for a unit-variance real Gaussian input.
inline double optimal_step(int n_bits) { return detail::optimal_point(n_bits).step; }

inline double alpha_of(Resolution r)
{
    if (r.is_infinite())
        return 0.0;
    return detail::optimal_point(r.n_bits()).mse;
}

inline double alpha_of(int n_bits) { return alpha_of(Resolution::bits(n_bits)); }

struct QuantizerSpec {
    Resolution resolution;
    double step = 0.0;  // per unit-variance real component
    double alpha = 0.0;

    static QuantizerSpec optimal(Resolution r)
    {
        if (r.is_infinite())
            return {r, 0.0, 0.0};
        return {r, optimal_step(r.n_bits()), alpha_of(r)};
    }

    static QuantizerSpec with_alpha(Resolution r, double alpha)
    {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw InvalidArgument("alpha must lie in [0, 1]");
        if (r.is_infinite() != (alpha == 0.0))
            throw InvalidArgument("alpha must be zero exactly for infinite resolution");
        QuantizerSpec s = optimal(r);
        s.alpha = alpha;
        return s;
    }

    // Step applied to a real component of a unit-power complex sample.
    double component_step() const { return step / std::numbers::sqrt2; }
};

inline void quantize_inplace(std::span<cplx> x, const QuantizerSpec &spec)
{
    for (const auto &s : x)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw InvalidInput("cannot quantize a non-finite sample");
    if (spec.resolution.is_infinite())
        return;
    const int n = spec.resolution.n_bits();
    const double d = spec.component_step();
    for (auto &s : x)
        s = {quantize_scalar(s.real(), d, n), quantize_scalar(s.imag(), d, n)};
}

inline ComplexSampleBlock quantize(const ComplexSampleBlock &block, const QuantizerSpec &spec)
{
    ComplexSampleBlock out = block;
    quantize_inplace(out.samples, spec);
    return out;
}

inline double measure_alpha(std::span<const cplx> input, std::span<const cplx> output)
{
    if (input.size() != output.size())
        throw InvalidArgument("measure_alpha: length mismatch");
    if (input.size() < 1000)
        throw InvalidArgument("measure_alpha: need at least 1000 samples");
    double cross = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        cross += (output[i] * std::conj(input[i])).real();
        energy += std::norm(input[i]);
    }
    if (energy == 0.0)
        throw DegenerateInput("measure_alpha: zero-energy input");
    return 1.0 - cross / energy;
}

inline double measure_alpha(const ComplexSampleBlock &input, const ComplexSampleBlock &output)
{
    return measure_alpha(std::span<const cplx>(input.samples), std::span<const cplx>(output.samples));
}

} // namespace lowres
