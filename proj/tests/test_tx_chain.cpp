// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#include <catch_amalgamated.hpp>

#include "lowres/tx_chain.hpp"

using namespace lowres;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

OfdmNumerology full_band()
{
    OfdmNumerology n;
    n.used_prbs = 275;
    return n;
}

const TxFrame &aclr_frame()
{
    static const TxFrame f = make_tx_frame(full_band(), 12, Modulation::QPSK, 1);
    return f;
}

double aclr(Resolution bits, int order, int ch)
{
    DacChainConfig cfg;
    cfg.n_bits = bits;
    cfg.lpf_order = order;
    return measure_spectrum(aclr_frame(), cfg, ChannelPlan{}).aclr_db.at(ch);
}

} // namespace

TEST_CASE("Butterworth response")
{
    for (int order : {1, 2, 3, 5})
        CHECK_THAT(linear_to_db(std::norm(butterworth_response(order, 4e8, 4e8))), WithinAbs(-3.0103, 1e-3));
    CHECK_THAT(linear_to_db(std::norm(butterworth_response(1, 4e8, 4e9))), WithinAbs(-20.04, 0.01));
    CHECK_THAT(linear_to_db(std::norm(butterworth_response(3, 4e8, 8e8))), WithinAbs(-18.13, 0.01));
    CHECK(butterworth_response(0, 4e8, 1e12) == cplx(1.0, 0.0));
    CHECK(butterworth_response(2, 4e8, -4e8) == butterworth_response(2, 4e8, 4e8));
    CHECK_THROWS_AS(butterworth_response(-1, 4e8, 0.0), InvalidArgument);
}

TEST_CASE("DAC conversion")
{
    DacChainConfig cfg;
    SECTION("constant input gives constant output")
    {
        ComplexSampleBlock dc{std::vector<cplx>(1024, cplx(0.3, -0.2)), cfg.chip_rate_hz};
        const auto out = dac_convert(dc, cfg);
        CHECK(out.samples.size() == 1024 * 2 * 8);
        CHECK_THAT(out.sample_rate_hz, WithinRel(983.04e6 * 8, 1e-12));
        for (std::size_t i = 1000; i < out.samples.size() - 1000; ++i)
            CHECK(std::abs(out.samples[i] - cplx(0.3, -0.2)) < 1e-3);
    }
    SECTION("a tone is replicated at multiples of fs with sinc shaping")
    {
        const double f0 = 50e6;
        std::vector<cplx> x(1 << 14);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = std::polar(1.0, 2.0 * std::numbers::pi * f0 * static_cast<double>(i) / cfg.chip_rate_hz);
        cfg.lpf_order = 0;
        const auto rep = estimate_psd(transmit_chain({x, cfg.chip_rate_hz}, cfg), 8192);
        const double fs = cfg.dac_fs_hz(), bw = 4e6;
        const double main = integrated_power(rep, f0 - bw, f0 + bw);
        const double lo = integrated_power(rep, fs - f0 - bw, fs - f0 + bw);
        const double hi = integrated_power(rep, fs + f0 - bw, fs + f0 + bw);
        auto sinc2 = [&](double f) {
            const double u = std::numbers::pi * f / fs;
            return std::pow(std::sin(u) / u, 2.0);
        };
        const double neg = integrated_power(rep, f0 - fs - bw, f0 - fs + bw);
        // A complex tone repeats at f0 + k fs only, so fs - f0 stays empty.
        CHECK_THAT(linear_to_db(hi / main), WithinAbs(linear_to_db(sinc2(fs + f0) / sinc2(f0)), 0.5));
        CHECK_THAT(linear_to_db(neg / main), WithinAbs(linear_to_db(sinc2(fs - f0) / sinc2(f0)), 0.5));
        CHECK(lo < 1e-3 * main);
    }
    SECTION("rate mismatch")
    {
        ComplexSampleBlock bad{std::vector<cplx>(64), 1e9};
        CHECK_THROWS_AS(dac_convert(bad, cfg), InvalidArgument);
        cfg.zoh_oversample = 2;
        CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    }
}

TEST_CASE("transmit spectrum")
{
    const auto &frame = aclr_frame();
    SECTION("PSD integrates to the time-domain power")
    {
        DacChainConfig cfg;
        cfg.n_bits = Resolution::bits(4);
        const auto analog = transmit_chain(frame.baseband, cfg);
        const auto rep = estimate_psd(analog, 8192);
        const double fs = analog.sample_rate_hz;
        CHECK_THAT(integrated_power(rep, -fs, fs), WithinRel(mean_power(analog.samples), 0.01));
        CHECK(rep.freqs_hz.size() == rep.psd_dbm_per_hz.size());
    }
    SECTION("occupied band is about 396 MHz wide")
    {
        const auto rep = estimate_psd(frame.baseband, 8192);
        std::vector<double> inband;
        for (std::size_t i = 0; i < rep.freqs_hz.size(); ++i)
            if (std::abs(rep.freqs_hz[i]) < 150e6)
                inband.push_back(rep.psd_dbm_per_hz[i]);
        std::nth_element(inband.begin(), inband.begin() + static_cast<long>(inband.size() / 2), inband.end());
        const double level = inband[inband.size() / 2] - 3.0;
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < rep.freqs_hz.size(); ++i)
            if (rep.psd_dbm_per_hz[i] > level) {
                lo = std::min(lo, rep.freqs_hz[i]);
                hi = std::max(hi, rep.freqs_hz[i]);
            }
        CHECK(hi - lo >= 395e6);
        CHECK(hi - lo <= 400e6);
    }
    SECTION("ACLR is symmetric for a symmetric spectrum")
    {
        DacChainConfig cfg;
        cfg.n_bits = Resolution::bits(4);
        const auto rep = measure_spectrum(frame, cfg, ChannelPlan{});
        CHECK_THAT(rep.aclr_db.at(1), WithinAbs(rep.aclr_db.at(-1), 1.0));
        CHECK(rep.aclr_db.size() == 4);
        CHECK_THROWS_AS(measure_aclr(rep, ChannelPlan{}, 0), InvalidArgument);
        CHECK_THROWS_AS(measure_aclr(rep, ChannelPlan{}, 3), InvalidArgument);
        ChannelPlan wide{400e6, 396e6, 40};
        CHECK_THROWS_AS(measure_aclr(rep, wide, 40), InvalidArgument);
    }
}

TEST_CASE("ACLR against the regulatory limits")
{
    // Without a filter the first hold image falls in the second adjacent channel.
    CHECK(aclr(Resolution::infinite(), 0, 2) < 28.0);
    // 3 bits without filtering meet the UE limit.
    CHECK(aclr(Resolution::bits(3), 0, 1) >= 17.0);
    // 4 bits with a first-order filter sit at the base-station limit.
    const double a4 = aclr(Resolution::bits(4), 1, 1);
    CHECK(a4 > 27.0);
    CHECK(a4 < 29.0);
}

TEST_CASE("ACLR grows with resolution")
{
    for (int order : {0, 1}) {
        double prev = -1e9;
        for (int n : {2, 3, 4, 5, 6}) {
            const double v = aclr(Resolution::bits(n), order, 1);
            INFO("order " << order << " bits " << n);
            CHECK(v >= prev);
            prev = v;
        }
        CHECK(aclr(Resolution::infinite(), order, 1) >= prev);
    }
}

TEST_CASE("EVM")
{
    SECTION("clean loopback")
    {
        DacChainConfig cfg;
        cfg.lpf_order = 0;
        CHECK(measure_evm(cfg, 0.0, Modulation::QAM256) < 0.1);
        cfg.lpf_order = 3;
        CHECK(measure_evm(cfg, 0.0, Modulation::QAM256) < 1.0);
    }
    SECTION("floor follows the quantization model")
    {
        const OfdmNumerology num = full_band();
        for (int n : {3, 4, 5, 6}) {
            DacChainConfig cfg;
            cfg.n_bits = Resolution::bits(n);
            const double a = alpha_of(n);
            const double sv = inband_quantization_noise(a, num.occupied_bw_hz(), cfg.dac_fs_hz());
            const double floor = measure_evm(cfg, 0.0, Modulation::QAM256);
            INFO("bits " << n);
            CHECK_THAT(floor, WithinRel(evm_prediction(a, 0.0, sv, 1.0), 0.1));
        }
    }
    SECTION("resolution needed per modulation order")
    {
        const EvmThresholds th;
        DacChainConfig cfg;
        cfg.n_bits = Resolution::bits(4);
        CHECK(measure_evm(cfg, 1e-6, Modulation::QAM256) < th.qam64);
        cfg.n_bits = Resolution::bits(5);
        CHECK(measure_evm(cfg, 1e-6, Modulation::QAM256) >= th.qam256);
        cfg.n_bits = Resolution::bits(6);
        CHECK(measure_evm(cfg, 1e-6, Modulation::QAM256) < th.qam256);
    }
    SECTION("monotone in resolution and impairment")
    {
        const TxFrame frame = make_tx_frame(full_band(), 8, Modulation::QAM64, 3);
        const std::vector<double> sig = {1e-1, 1e-2, 1e-3, 1e-4, 0.0};
        std::vector<double> prev;
        for (int n : {3, 4, 5, 6}) {
            DacChainConfig cfg;
            cfg.n_bits = Resolution::bits(n);
            const auto curve = evm_curve(dac_chain_errors(frame, cfg), sig, 5);
            for (std::size_t i = 1; i < curve.size(); ++i)
                CHECK(curve[i] <= curve[i - 1]);
            if (!prev.empty())
                for (std::size_t i = 0; i < curve.size(); ++i)
                    CHECK(curve[i] <= prev[i]);
            prev = curve;
        }
    }
}

TEST_CASE("EVM prediction")
{
    CHECK(evm_prediction(0.0, 0.0, 0.0, 1.0) == 0.0);
    CHECK_THAT(evm_prediction(0.01, 0.0, 0.0, 1.0), WithinAbs(1.0, 1e-12));
    CHECK_THAT(evm_prediction(0.0, 0.01, 0.0, 1.0), WithinAbs(10.0, 1e-12));
    CHECK_THROWS_AS(evm_prediction(0.1, 0.0, 0.0, 0.0), InvalidArgument);
    CHECK_THAT(inband_quantization_noise(0.5, 1.0, 2.0), WithinAbs(0.125, 1e-15));
}
