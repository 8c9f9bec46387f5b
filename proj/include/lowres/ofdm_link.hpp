// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#pragma once

#include "lowres/common.hpp"
#include "lowres/dsp.hpp"
#include "lowres/quantization.hpp"
#include "lowres/rng.hpp"
#include "lowres/sinr_model.hpp"

#include <optional>
#include <random>
#include <span>
#include <vector>

namespace lowres {

struct OfdmNumerology {
    std::size_t fft_size = 4096;
    double scs_hz = 120e3;
    std::size_t sc_per_prb = 12;
    std::size_t max_prbs = 275;
    std::size_t used_prbs = 274;
    std::size_t cp_length = 288;  // chips

    double chip_rate_hz() const { return static_cast<double>(fft_size) * scs_hz; }
    std::size_t n_used_sc() const { return used_prbs * sc_per_prb; }
    double occupied_bw_hz() const { return static_cast<double>(n_used_sc()) * scs_hz; }
    double cp_fraction() const { return static_cast<double>(cp_length) / static_cast<double>(fft_size); }
    std::size_t symbol_length() const { return fft_size + cp_length; }

    void validate() const
    {
        if (fft_size < 16)
            throw InvalidArgument("fft_size must be at least 16");
        if (!(scs_hz > 0.0))
            throw InvalidArgument("subcarrier spacing must be positive");
        if (sc_per_prb < 1 || used_prbs < 1)
            throw InvalidArgument("PRB allocation must be nonempty");
        if (used_prbs > max_prbs)
            throw InvalidArgument("used_prbs exceeds max_prbs");
        if (n_used_sc() > fft_size)
            throw InvalidArgument("occupied subcarriers exceed the FFT size");
        if (cp_length >= fft_size)
            throw InvalidArgument("cyclic prefix must be shorter than the FFT");
    }

    // FFT bin of used subcarrier i, subcarriers centred on DC: -nsc/2 ... nsc/2 - 1.
    std::size_t bin_of(std::size_t i) const
    {
        const long k = static_cast<long>(i) - static_cast<long>(n_used_sc() / 2);
        const long n = static_cast<long>(fft_size);
        return static_cast<std::size_t>((k % n + n) % n);
    }

    long signed_index(std::size_t i) const { return static_cast<long>(i) - static_cast<long>(n_used_sc() / 2); }
};

inline double osr_gain_db(std::size_t n_fft, std::size_t n_sc)
{
    if (n_sc == 0 || n_sc > n_fft)
        throw InvalidArgument("osr_gain_db: need 0 < n_sc <= n_fft");
    return 10.0 * std::log10(static_cast<double>(n_fft) / static_cast<double>(n_sc));
}

enum class Modulation { QPSK, QAM16, QAM64, QAM256 };

inline std::vector<cplx> constellation(Modulation m)
{
    int side = 2;
    switch (m) {
    case Modulation::QPSK: side = 2; break;
    case Modulation::QAM16: side = 4; break;
    case Modulation::QAM64: side = 8; break;
    case Modulation::QAM256: side = 16; break;
    }
    std::vector<cplx> pts;
    double energy = 0.0;
    for (int i = 0; i < side; ++i)
        for (int q = 0; q < side; ++q) {
            const cplx p(2.0 * i - side + 1, 2.0 * q - side + 1);
            pts.push_back(p);
            energy += std::norm(p);
        }
    const double s = 1.0 / std::sqrt(energy / static_cast<double>(pts.size()));
    for (auto &p : pts)
        p *= s;
    return pts;
}

struct ResourceGrid {
    Modulation modulation = Modulation::QPSK;
    std::size_t n_symbols = 0;
    std::size_t n_subcarriers = 0;  // used subcarriers only; the rest of the band is zero
    std::vector<cplx> re;           // symbol-major

    cplx &at(std::size_t t, std::size_t f) { return re[t * n_subcarriers + f]; }
    const cplx &at(std::size_t t, std::size_t f) const { return re[t * n_subcarriers + f]; }
};

inline ResourceGrid random_grid(const OfdmNumerology &num, std::size_t n_symbols, Modulation mod, Rng &rng)
{
    num.validate();
    if (n_symbols < 1)
        throw InvalidArgument("grid needs at least one symbol");
    const auto pts = constellation(mod);
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    ResourceGrid g{mod, n_symbols, num.n_used_sc(), {}};
    g.re.resize(n_symbols * g.n_subcarriers);
    for (auto &v : g.re)
        v = pts[pick(rng)];
    return g;
}

// Per-sample scale making the time-domain signal unit power for unit-energy symbols.
inline double ofdm_scale(const OfdmNumerology &num)
{
    const double n = static_cast<double>(num.fft_size);
    return std::sqrt(n) * std::sqrt(n / static_cast<double>(num.n_used_sc()));
}

inline ComplexSampleBlock ofdm_modulate(const ResourceGrid &grid, const OfdmNumerology &num,
                                        Resolution n_dac = Resolution::infinite())
{
    num.validate();
    if (grid.n_subcarriers != num.n_used_sc() || grid.re.size() != grid.n_symbols * grid.n_subcarriers ||
        grid.n_symbols == 0)
        throw InvalidArgument("ofdm_modulate: grid does not match the numerology");
    const std::size_t n = num.fft_size, cp = num.cp_length;
    const double scale = ofdm_scale(num);
    ComplexSampleBlock out;
    out.sample_rate_hz = num.chip_rate_hz();
    out.samples.resize(grid.n_symbols * num.symbol_length());
    std::vector<cplx> buf(n);
    for (std::size_t t = 0; t < grid.n_symbols; ++t) {
        std::fill(buf.begin(), buf.end(), cplx{});
        for (std::size_t f = 0; f < grid.n_subcarriers; ++f)
            buf[num.bin_of(f)] = grid.at(t, f);
        buf = ifft(std::move(buf));
        cplx *sym = out.samples.data() + t * num.symbol_length();
        for (std::size_t i = 0; i < n; ++i)
            sym[cp + i] = buf[i] * scale;
        for (std::size_t i = 0; i < cp; ++i)
            sym[i] = sym[n + i];
    }
    quantize_inplace(out.samples, QuantizerSpec::optimal(n_dac));
    return out;
}

// FFT of each symbol window. The window starts `advance` chips before the end of the cyclic
// prefix; the resulting linear phase is removed. Output is scaled to invert ofdm_modulate.
inline ResourceGrid ofdm_demodulate(std::span<const cplx> samples, const OfdmNumerology &num, std::size_t n_symbols,
                                    std::size_t advance = 0)
{
    num.validate();
    if (advance > num.cp_length)
        throw InvalidArgument("ofdm_demodulate: window advance exceeds the cyclic prefix");
    if (samples.size() < n_symbols * num.symbol_length())
        throw InvalidArgument("ofdm_demodulate: not enough samples");
    const std::size_t n = num.fft_size;
    const double scale = 1.0 / ofdm_scale(num);
    ResourceGrid g{Modulation::QPSK, n_symbols, num.n_used_sc(), {}};
    g.re.resize(n_symbols * g.n_subcarriers);
    std::vector<cplx> buf(n);
    for (std::size_t t = 0; t < n_symbols; ++t) {
        const cplx *start = samples.data() + t * num.symbol_length() + num.cp_length - advance;
        std::copy(start, start + n, buf.begin());
        fft_inplace(buf, FftDirection::Forward);
        for (std::size_t f = 0; f < g.n_subcarriers; ++f) {
            const double k = static_cast<double>(num.signed_index(f));
            const cplx rot = std::polar(1.0, 2.0 * std::numbers::pi * k * static_cast<double>(advance) /
                                                 static_cast<double>(n));
            g.at(t, f) = buf[num.bin_of(f)] * rot * scale;
        }
    }
    return g;
}

inline ComplexSampleBlock agc_normalize(const ComplexSampleBlock &block)
{
    block.validate();
    const double p = mean_power(block.samples);
    if (!(p > 0.0))
        throw DegenerateInput("agc_normalize: all-zero input");
    ComplexSampleBlock out = block;
    const double g = 1.0 / std::sqrt(p);
    for (auto &s : out.samples)
        s *= g;
    return out;
}

struct LinkTrialConfig {
    double snr_db = 10.0;  // signal power over thermal noise across the full chip-rate band
    Resolution n_adc = Resolution::infinite();
    Resolution n_dac = Resolution::infinite();
    OfdmNumerology numerology{};
    std::size_t n_symbols = 22;
    std::size_t n_pilot_symbols = 2;
    std::size_t fir_taps = 129;
    std::size_t window_advance = 144;
    std::uint64_t seed = 1;
    std::optional<double> sir_db;     // SDMA trials; +inf means no interference
    std::optional<double> gamma0_db;  // SDMA trials: noise floor, replaces snr_db
    std::optional<double> alpha_override;

    void validate() const
    {
        numerology.validate();
        if (n_symbols < 1)
            throw InvalidArgument("n_symbols must be at least 1");
        if (n_pilot_symbols < 1 || n_pilot_symbols >= n_symbols)
            throw InvalidArgument("need at least one pilot symbol and one data symbol");
        if (window_advance > numerology.cp_length)
            throw InvalidArgument("window advance exceeds the cyclic prefix");
        if (!std::isfinite(snr_db))
            throw InvalidArgument("snr_db must be finite");
        if (sir_db && std::isnan(*sir_db))
            throw InvalidArgument("sir_db must be a number");
    }

    double alpha_adc() const { return alpha_override ? *alpha_override : alpha_of(n_adc); }
};

struct LinkTrialResult {
    double post_eq_db = 0.0;
    double predicted_db = 0.0;
};

inline double predicted_post_eq_snr_db(double snr_db, double alpha, const OfdmNumerology &num)
{
    const double osr = static_cast<double>(num.fft_size) / static_cast<double>(num.n_used_sc());
    return linear_to_db(sinr_orthogonal_quantized(db_to_linear(snr_db) * osr, alpha, osr));
}

inline double predicted_post_eq_sinr_db(double gamma0_db, double sir_db, double alpha, const OfdmNumerology &num)
{
    const double osr = static_cast<double>(num.fft_size) / static_cast<double>(num.n_used_sc());
    const double psi = std::isinf(sir_db) ? 0.0 : db_to_linear(-sir_db);
    return linear_to_db(sinr_sdma_quantized({db_to_linear(gamma0_db) * osr, osr, psi}, alpha));
}

namespace detail {

inline LinkTrialResult run_trial(const LinkTrialConfig &cfg, bool sdma)
{
    cfg.validate();
    const auto &num = cfg.numerology;
    Rng grid_rng = make_rng(cfg.seed, 1);
    Rng interf_rng = make_rng(cfg.seed, 2);
    Rng noise_rng = make_rng(cfg.seed, 3);
    Rng phase_rng = make_rng(cfg.seed, 4);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    const ResourceGrid grid = random_grid(num, cfg.n_symbols, Modulation::QPSK, grid_rng);
    ComplexSampleBlock rx = ofdm_modulate(grid, num, cfg.n_dac);
    // Flat channel with an unknown carrier phase.
    const cplx rot = std::polar(1.0, phase(phase_rng));
    for (auto &s : rx.samples)
        s *= rot;

    double snr_db = cfg.snr_db;
    double sir_db = std::numeric_limits<double>::infinity();
    if (sdma) {
        if (cfg.gamma0_db)
            snr_db = *cfg.gamma0_db;
        if (cfg.sir_db)
            sir_db = *cfg.sir_db;
    }
    if (sdma && !std::isinf(sir_db)) {
        const ResourceGrid other = random_grid(num, cfg.n_symbols, Modulation::QPSK, interf_rng);
        const ComplexSampleBlock ix = ofdm_modulate(other, num, cfg.n_dac);
        const cplx irot = std::polar(std::sqrt(db_to_linear(-sir_db)), phase(phase_rng));
        for (std::size_t i = 0; i < rx.samples.size(); ++i)
            rx.samples[i] += irot * ix.samples[i];
    }

    ComplexGaussian noise(db_to_linear(-snr_db));
    for (auto &s : rx.samples)
        s += noise(noise_rng);

    rx = agc_normalize(rx);
    quantize_inplace(rx.samples, QuantizerSpec::optimal(cfg.n_adc));

    const double cutoff_norm = 0.5 * num.occupied_bw_hz() / num.chip_rate_hz();
    const auto taps = design_lowpass(cutoff_norm, cfg.fir_taps);
    const auto filtered = filter_centered(rx.samples, taps);
    ResourceGrid z = ofdm_demodulate(filtered, num, cfg.n_symbols, cfg.window_advance);

    // Known filter response per subcarrier, then one common complex gain fitted on the pilots.
    std::vector<cplx> h(z.n_subcarriers);
    for (std::size_t f = 0; f < z.n_subcarriers; ++f)
        h[f] = fir_response(taps, static_cast<double>(num.signed_index(f)) / static_cast<double>(num.fft_size));
    for (std::size_t t = 0; t < z.n_symbols; ++t)
        for (std::size_t f = 0; f < z.n_subcarriers; ++f)
            z.at(t, f) /= h[f];
    cplx num_g = 0.0;
    double den_g = 0.0;
    for (std::size_t t = 0; t < cfg.n_pilot_symbols; ++t)
        for (std::size_t f = 0; f < z.n_subcarriers; ++f) {
            num_g += z.at(t, f) * std::conj(grid.at(t, f));
            den_g += std::norm(grid.at(t, f));
        }
    const cplx g = num_g / den_g;
    double sig = 0.0, err = 0.0;
    for (std::size_t t = cfg.n_pilot_symbols; t < z.n_symbols; ++t)
        for (std::size_t f = 0; f < z.n_subcarriers; ++f) {
            const cplx ref = grid.at(t, f);
            sig += std::norm(ref);
            err += std::norm(z.at(t, f) / g - ref);
        }

    LinkTrialResult r;
    r.post_eq_db = linear_to_db(sig / err);
    r.predicted_db = sdma ? predicted_post_eq_sinr_db(snr_db, sir_db, cfg.alpha_adc(), num)
                          : predicted_post_eq_snr_db(snr_db, cfg.alpha_adc(), num);
    return r;
}

} // namespace detail

inline LinkTrialResult run_link_trial(const LinkTrialConfig &cfg) { return detail::run_trial(cfg, false); }

inline LinkTrialResult run_sdma_link_trial(const LinkTrialConfig &cfg) { return detail::run_trial(cfg, true); }

} // namespace lowres
