// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#pragma once

#include "lowres/common.hpp"

#include <algorithm>
#include <span>

namespace lowres {

// Stand-in for an unbounded per-stream SNR.
inline constexpr double kGammaPrimeCap = 1e12;

struct LinkQuality {
    double gamma_prime = 0.0;  // per-stream SNR after beamforming, linear
    double bf_gain = 1.0;      // receive beamforming gain G_k, linear
    double psi = 0.0;          // intra-cell interference ratio, SIR = 1/psi

    void validate() const
    {
        if (!(gamma_prime >= 0.0))
            throw InvalidArgument("gamma_prime must be nonnegative");
        if (!(bf_gain >= 1.0))
            throw InvalidArgument("bf_gain must be at least 1");
        if (!(psi >= 0.0))
            throw InvalidArgument("psi must be nonnegative");
    }

    double capped_gamma() const { return std::min(gamma_prime, kGammaPrimeCap); }
};

namespace detail {

inline void check_alpha(double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw InvalidArgument("alpha must lie in [0, 1]");
}

inline void check_gain(double g)
{
    if (!(g >= 1.0))
        throw InvalidArgument("beamforming gain must be at least 1");
}

} // namespace detail

inline double sinr_beamformed(std::span<const double> gammas, std::size_t k)
{
    if (gammas.empty())
        throw InvalidArgument("sinr_beamformed: empty stream list");
    if (k >= gammas.size())
        throw InvalidArgument("sinr_beamformed: stream index out of range");
    double others = 0.0;
    for (std::size_t j = 0; j < gammas.size(); ++j) {
        if (!(gammas[j] >= 0.0))
            throw InvalidArgument("sinr_beamformed: negative stream SNR");
        if (j != k)
            others += std::min(gammas[j], kGammaPrimeCap);
    }
    return std::min(gammas[k], kGammaPrimeCap) / (1.0 + others);
}

inline double sinr_orthogonal_quantized(double gamma_bf, double alpha, double g)
{
    if (!(gamma_bf >= 0.0))
        throw InvalidArgument("gamma_bf must be nonnegative");
    detail::check_alpha(alpha);
    detail::check_gain(g);
    if (alpha == 0.0)
        return gamma_bf;
    const double x = std::min(gamma_bf, kGammaPrimeCap);
    return (1.0 - alpha) * x / (1.0 + (alpha / g) * x);
}

inline double sinr_saturation(double alpha, double g)
{
    detail::check_alpha(alpha);
    detail::check_gain(g);
    if (alpha == 0.0)
        throw UnboundedResult("sinr_saturation: unbounded at infinite resolution");
    return g * (1.0 - alpha) / alpha;
}

inline double sinr_sdma_quantized(const LinkQuality &q, double alpha)
{
    q.validate();
    detail::check_alpha(alpha);
    const double x = q.capped_gamma();
    const double a = alpha, p = q.psi, g = q.bf_gain;
    return (1.0 - a) * x / (1.0 + (1.0 - a) * p * x + (p + 1.0) * (a / g) * x);
}

inline double sdma_beta(const LinkQuality &q, double alpha)
{
    q.validate();
    detail::check_alpha(alpha);
    const double x = q.capped_gamma();
    const double a = alpha, p = q.psi, g = q.bf_gain;
    return (1.0 + (p + 1.0) * x / g) / (1.0 + (1.0 - a) * p * x + a * (p + 1.0) * x / g);
}

// Per-stream-G form: streams j != k may see a different receive gain G_j.
inline double sinr_quantized_general(std::span<const double> gammas, std::span<const double> gains,
                                     std::size_t k, double alpha)
{
    if (gammas.empty() || gammas.size() != gains.size())
        throw InvalidArgument("sinr_quantized_general: stream lists must be nonempty and equal length");
    if (k >= gammas.size())
        throw InvalidArgument("sinr_quantized_general: stream index out of range");
    detail::check_alpha(alpha);
    double others = 0.0, scaled = 0.0;
    for (std::size_t j = 0; j < gammas.size(); ++j) {
        if (!(gammas[j] >= 0.0))
            throw InvalidArgument("sinr_quantized_general: negative stream SNR");
        detail::check_gain(gains[j]);
        const double x = std::min(gammas[j], kGammaPrimeCap);
        scaled += x / gains[j];
        if (j != k)
            others += x;
    }
    const double xk = std::min(gammas[k], kGammaPrimeCap);
    return (1.0 - alpha) * xk / (1.0 + (1.0 - alpha) * others + alpha * scaled);
}

inline double quantization_noise_variance(std::span<const double> signal_energies, double noise_var, double icv,
                                          double alpha)
{
    detail::check_alpha(alpha);
    if (!(noise_var >= 0.0) || !(icv >= 0.0))
        throw InvalidArgument("noise and interference variances must be nonnegative");
    double total = noise_var + icv;
    for (double e : signal_energies) {
        if (!(e >= 0.0))
            throw InvalidArgument("signal energies must be nonnegative");
        total += e;
    }
    return alpha * (1.0 - alpha) * total;
}

} // namespace lowres
