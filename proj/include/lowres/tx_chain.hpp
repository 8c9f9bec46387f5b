// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#pragma once

#include "lowres/common.hpp"
#include "lowres/dsp.hpp"
#include "lowres/ofdm_link.hpp"
#include "lowres/quantization.hpp"
#include "lowres/rng.hpp"

#include <map>
#include <optional>
#include <vector>

namespace lowres {

struct DacChainConfig {
    std::size_t interp_m = 2;
    Resolution n_bits = Resolution::infinite();
    std::size_t zoh_oversample = 8;
    int lpf_order = 1;
    double lpf_fc_hz = 400e6;
    double chip_rate_hz = 491.52e6;
    std::size_t interp_taps = 129;
    double interp_kaiser_beta = 8.0;

    double dac_fs_hz() const { return static_cast<double>(interp_m) * chip_rate_hz; }
    double analog_rate_hz() const { return static_cast<double>(zoh_oversample) * dac_fs_hz(); }

    void validate() const
    {
        if (interp_m < 1)
            throw InvalidArgument("interp_m must be at least 1");
        if (zoh_oversample < 4)
            throw InvalidArgument("zoh_oversample must be at least 4");
        if (lpf_order < 0)
            throw InvalidArgument("lpf_order must be nonnegative");
        if (!(lpf_fc_hz > 0.0))
            throw InvalidArgument("lpf_fc_hz must be positive");
        if (!(chip_rate_hz > 0.0))
            throw InvalidArgument("chip_rate_hz must be positive");
        if (interp_taps < 3 || interp_taps % 2 == 0)
            throw InvalidArgument("interp_taps must be odd and at least 3");
    }
};

struct ChannelPlan {
    double ch_bw_hz = 400e6;
    double meas_bw_hz = 396e6;
    int n_adjacent = 2;

    void validate() const
    {
        if (!(ch_bw_hz > 0.0) || !(meas_bw_hz > 0.0))
            throw InvalidArgument("channel bandwidths must be positive");
        if (meas_bw_hz > ch_bw_hz)
            throw InvalidArgument("measurement bandwidth exceeds the channel bandwidth");
        if (n_adjacent < 2)
            throw InvalidArgument("n_adjacent must be at least 2");
    }
};

struct SpectrumReport {
    std::vector<double> freqs_hz;
    std::vector<double> psd_dbm_per_hz;  // unit sample power is taken as 0 dBm
    double df_hz = 0.0;
    std::map<int, double> aclr_db;
    std::optional<double> evm_pct;
};

// 3GPP transmit EVM limits in percent, used as sweep thresholds.
struct EvmThresholds {
    double qpsk = 17.5;
    double qam16 = 12.5;
    double qam64 = 8.0;
    double qam256 = 3.5;
};

// Zero-stuff by m and apply a Kaiser-window anti-image lowpass at the chip-rate Nyquist edge.
inline std::vector<cplx> interpolate(std::span<const cplx> x, const DacChainConfig &cfg)
{
    const std::size_t m = cfg.interp_m;
    if (m == 1)
        return {x.begin(), x.end()};
    std::vector<cplx> up(x.size() * m);
    for (std::size_t i = 0; i < x.size(); ++i)
        up[i * m] = x[i];
    auto h = design_lowpass(0.5 / static_cast<double>(m), cfg.interp_taps, Window::Kaiser, cfg.interp_kaiser_beta);
    for (auto &v : h)
        v *= static_cast<double>(m);
    return filter_centered(up, h);
}

inline ComplexSampleBlock dac_convert(const ComplexSampleBlock &baseband, const DacChainConfig &cfg)
{
    cfg.validate();
    baseband.validate();
    if (std::abs(baseband.sample_rate_hz - cfg.chip_rate_hz) > 1e-6 * cfg.chip_rate_hz)
        throw InvalidArgument("dac_convert: baseband must be at the chip rate");
    auto u = interpolate(baseband.samples, cfg);
    quantize_inplace(u, QuantizerSpec::optimal(cfg.n_bits));
    ComplexSampleBlock out;
    out.sample_rate_hz = cfg.analog_rate_hz();
    out.samples.resize(u.size() * cfg.zoh_oversample);
    for (std::size_t i = 0; i < u.size(); ++i)
        std::fill_n(out.samples.begin() + static_cast<long>(i * cfg.zoh_oversample), cfg.zoh_oversample, u[i]);
    return out;
}

inline cplx butterworth_response(int order, double fc_hz, double f_hz)
{
    if (order < 0)
        throw InvalidArgument("butterworth order must be nonnegative");
    if (order == 0)
        return 1.0;
    if (!(fc_hz > 0.0))
        throw InvalidArgument("butterworth cutoff must be positive");
    return 1.0 / std::sqrt(1.0 + std::pow(std::abs(f_hz) / fc_hz, 2.0 * order));
}

inline ComplexSampleBlock apply_butterworth(const ComplexSampleBlock &block, int order, double fc_hz)
{
    if (order == 0)
        return block;
    ComplexSampleBlock out = block;
    fft_inplace(out.samples, FftDirection::Forward);
    const std::size_t n = out.samples.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k)
        out.samples[k] *= butterworth_response(order, fc_hz, bin_frequency(k, n, block.sample_rate_hz)) * inv_n;
    fft_inplace(out.samples, FftDirection::Inverse);
    return out;
}

inline ComplexSampleBlock transmit_chain(const ComplexSampleBlock &baseband, const DacChainConfig &cfg)
{
    return apply_butterworth(dac_convert(baseband, cfg), cfg.lpf_order, cfg.lpf_fc_hz);
}

inline SpectrumReport estimate_psd(const ComplexSampleBlock &block, std::size_t nperseg = 8192)
{
    block.validate();
    const Psd p = welch_psd(block.samples, block.sample_rate_hz, nperseg);
    SpectrumReport r;
    r.freqs_hz = p.freqs_hz;
    r.df_hz = p.df_hz;
    r.psd_dbm_per_hz.reserve(p.psd.size());
    for (double v : p.psd)
        r.psd_dbm_per_hz.push_back(10.0 * std::log10(v));
    return r;
}

namespace detail {

inline Psd linear_psd(const SpectrumReport &report)
{
    if (report.freqs_hz.size() != report.psd_dbm_per_hz.size() || report.freqs_hz.empty())
        throw InvalidArgument("spectrum report has inconsistent arrays");
    Psd p;
    p.freqs_hz = report.freqs_hz;
    p.df_hz = report.df_hz;
    p.psd.reserve(report.psd_dbm_per_hz.size());
    for (double v : report.psd_dbm_per_hz)
        p.psd.push_back(std::pow(10.0, 0.1 * v));
    return p;
}

} // namespace detail

inline double integrated_power(const SpectrumReport &report, double f_lo, double f_hi)
{
    return integrate_psd(detail::linear_psd(report), f_lo, f_hi);
}

inline double measure_aclr(const SpectrumReport &report, const ChannelPlan &plan, int adjacent_index)
{
    plan.validate();
    if (adjacent_index == 0 || std::abs(adjacent_index) > plan.n_adjacent)
        throw InvalidArgument("adjacent channel index must be nonzero and within the plan");
    const Psd p = detail::linear_psd(report);
    const double centre = adjacent_index * plan.ch_bw_hz;
    const double half = 0.5 * plan.meas_bw_hz;
    const double span_lo = p.freqs_hz.front() - 0.5 * p.df_hz;
    const double span_hi = p.freqs_hz.back() + 0.5 * p.df_hz;
    if (centre - half < span_lo || centre + half > span_hi)
        throw InvalidArgument("PSD does not cover the adjacent channel");
    const double p_in = integrate_psd(p, -half, half);
    const double p_adj = integrate_psd(p, centre - half, centre + half);
    return 10.0 * std::log10(p_in / p_adj);
}

// Frame used for spectrum and EVM measurements: a unit-power OFDM signal at the chip rate.
struct TxFrame {
    OfdmNumerology numerology;
    ResourceGrid grid;
    ComplexSampleBlock baseband;
};

inline TxFrame make_tx_frame(const OfdmNumerology &num, std::size_t n_symbols, Modulation mod, std::uint64_t seed)
{
    Rng rng = make_rng(seed, 11);
    TxFrame f{num, random_grid(num, n_symbols, mod, rng), {}};
    f.baseband = ofdm_modulate(f.grid, num);
    return f;
}

inline SpectrumReport measure_spectrum(const TxFrame &frame, const DacChainConfig &cfg, const ChannelPlan &plan,
                                       std::size_t nperseg = 8192)
{
    SpectrumReport r = estimate_psd(transmit_chain(frame.baseband, cfg), nperseg);
    for (int i = 1; i <= plan.n_adjacent; ++i) {
        r.aclr_db[i] = measure_aclr(r, plan, i);
        r.aclr_db[-i] = measure_aclr(r, plan, -i);
    }
    return r;
}

// Ideal resampling of the analog-rate signal back to the chip rate: brick-wall at +/- chip/2.
inline std::vector<cplx> resample_to_chip_rate(const ComplexSampleBlock &analog, const DacChainConfig &cfg)
{
    const std::size_t factor = cfg.interp_m * cfg.zoh_oversample;
    if (analog.samples.size() % factor != 0)
        throw InvalidArgument("analog block length is not a multiple of the oversampling factor");
    const std::size_t n_out = analog.samples.size() / factor;
    std::vector<cplx> spec = analog.samples;
    fft_inplace(spec, FftDirection::Forward);
    const std::size_t n_in = spec.size();
    std::vector<cplx> out(n_out);
    const long half = static_cast<long>(n_out / 2);
    for (long k = -half; k < static_cast<long>(n_out) - half; ++k) {
        const std::size_t src = static_cast<std::size_t>((k + static_cast<long>(n_in)) % static_cast<long>(n_in));
        const std::size_t dst = static_cast<std::size_t>((k + static_cast<long>(n_out)) % static_cast<long>(n_out));
        out[dst] = spec[src];
    }
    fft_inplace(out, FftDirection::Inverse);
    const double s = 1.0 / static_cast<double>(n_in);
    for (auto &v : out)
        v *= s;
    return out;
}

// Linear response of the chain at baseband frequency f: interpolation filter, sample-and-hold
// (including its half-sample delay) and the analog lowpass.
inline cplx chain_response(const DacChainConfig &cfg, double f_hz)
{
    cplx h = 1.0;
    if (cfg.interp_m > 1) {
        auto taps = design_lowpass(0.5 / static_cast<double>(cfg.interp_m), cfg.interp_taps, Window::Kaiser,
                                   cfg.interp_kaiser_beta);
        h = fir_response(taps, f_hz / cfg.dac_fs_hz());
    }
    cplx zoh = 0.0;
    const double l = static_cast<double>(cfg.zoh_oversample);
    for (std::size_t r = 0; r < cfg.zoh_oversample; ++r)
        zoh += std::polar(1.0, -2.0 * std::numbers::pi * f_hz * static_cast<double>(r) / cfg.analog_rate_hz());
    h *= zoh / l;
    return h * butterworth_response(cfg.lpf_order, cfg.lpf_fc_hz, f_hz);
}

// Per-RE error of the DAC chain before RF impairments, relative to the ideal symbols. Symbols at
// the frame edges are excluded because the filters see truncated input there.
struct EvmErrors {
    std::vector<cplx> error;
    double symbol_energy = 0.0;
};

inline EvmErrors dac_chain_errors(const TxFrame &frame, const DacChainConfig &cfg)
{
    const auto &num = frame.numerology;
    if (frame.grid.n_symbols < 3)
        throw InvalidArgument("EVM frame needs at least three symbols");
    const auto analog = transmit_chain(frame.baseband, cfg);
    const auto chip = resample_to_chip_rate(analog, cfg);
    const ResourceGrid z = ofdm_demodulate(chip, num, frame.grid.n_symbols, num.cp_length / 2);
    std::vector<cplx> h(z.n_subcarriers);
    for (std::size_t f = 0; f < z.n_subcarriers; ++f)
        h[f] = chain_response(cfg, static_cast<double>(num.signed_index(f)) * num.scs_hz);
    EvmErrors e;
    double energy = 0.0;
    for (std::size_t t = 1; t + 1 < z.n_symbols; ++t)
        for (std::size_t f = 0; f < z.n_subcarriers; ++f) {
            const cplx ref = frame.grid.at(t, f);
            e.error.push_back(z.at(t, f) / h[f] - ref);
            energy += std::norm(ref);
        }
    e.symbol_energy = energy / static_cast<double>(e.error.size());
    return e;
}

// EVM in percent for each RF impairment level. The same Gaussian draws are scaled for every
// level, so the curve is smooth in sigma_rf_sq.
inline std::vector<double> evm_curve(const EvmErrors &e, const std::vector<double> &sigma_rf_sq, std::uint64_t seed)
{
    Rng rng = make_rng(seed, 12);
    const auto w = complex_gaussian_vector(e.error.size(), 1.0, rng);
    std::vector<double> out;
    for (double s2 : sigma_rf_sq) {
        if (!(s2 >= 0.0))
            throw InvalidArgument("sigma_rf_sq must be nonnegative");
        const double s = std::sqrt(s2);
        double acc = 0.0;
        for (std::size_t i = 0; i < e.error.size(); ++i)
            acc += std::norm(e.error[i] + s * w[i]);
        out.push_back(100.0 * std::sqrt(acc / static_cast<double>(e.error.size()) / e.symbol_energy));
    }
    return out;
}

struct EvmOptions {
    OfdmNumerology numerology = [] {
        OfdmNumerology n;
        n.used_prbs = 275;
        return n;
    }();
    std::size_t n_symbols = 14;
    std::uint64_t seed = 1;
};

inline double measure_evm(const DacChainConfig &cfg, double sigma_rf_sq, Modulation mod, const EvmOptions &opt = {})
{
    cfg.validate();
    if (std::abs(opt.numerology.chip_rate_hz() - cfg.chip_rate_hz) > 1e-6 * cfg.chip_rate_hz)
        throw InvalidArgument("numerology chip rate does not match the DAC chain");
    const TxFrame frame = make_tx_frame(opt.numerology, opt.n_symbols, mod, opt.seed);
    return evm_curve(dac_chain_errors(frame, cfg), {sigma_rf_sq}, opt.seed).front();
}

inline double evm_prediction(double alpha, double sigma_rf_sq, double sigma_v_sq, double sig_power)
{
    if (!(sig_power > 0.0))
        throw InvalidArgument("evm_prediction: signal power must be positive");
    if (!(alpha >= 0.0) || !(sigma_rf_sq >= 0.0) || !(sigma_v_sq >= 0.0))
        throw InvalidArgument("evm_prediction: inputs must be nonnegative");
    return 100.0 * std::sqrt(alpha * alpha + (sigma_rf_sq + sigma_v_sq) / sig_power);
}

// Quantization noise power landing inside the occupied band: the white DAC noise alpha(1-alpha)
// spread over dac_fs, of which occupied_bw / dac_fs survives.
inline double inband_quantization_noise(double alpha, double occupied_bw_hz, double dac_fs_hz)
{
    return alpha * (1.0 - alpha) * occupied_bw_hz / dac_fs_hz;
}

} // namespace lowres
