// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#include <catch_amalgamated.hpp>

#include "lowres/dsp.hpp"
#include "lowres/rng.hpp"

#include <numbers>

using namespace lowres;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<cplx> tone(std::size_t n, double f_norm, double amp = 1.0)
{
    std::vector<cplx> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::polar(amp, 2.0 * std::numbers::pi * f_norm * static_cast<double>(i));
    return x;
}

} // namespace

TEST_CASE("FFT round trip and impulse")
{
    Rng rng = make_rng(1, 0);
    const auto x = complex_gaussian_vector(1000, 1.0, rng);
    const auto y = ifft(fft(x));
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(y[i] - x[i]) < 1e-12);

    std::vector<cplx> d(64);
    d[0] = 1.0;
    for (const auto &v : fft(d))
        CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-15);

    CHECK(bin_frequency(0, 8, 8.0) == 0.0);
    CHECK(bin_frequency(3, 8, 8.0) == 3.0);
    CHECK(bin_frequency(4, 8, 8.0) == -4.0);
    CHECK(bin_frequency(7, 8, 8.0) == -1.0);
}

TEST_CASE("windows")
{
    const auto hann = make_window(9, Window::Hann);
    CHECK_THAT(hann.front(), WithinAbs(0.0, 1e-15));
    CHECK_THAT(hann[4], WithinAbs(1.0, 1e-15));
    const auto hamming = make_window(9, Window::Hamming);
    CHECK_THAT(hamming.front(), WithinAbs(0.08, 1e-12));
    const auto kaiser = make_window(9, Window::Kaiser, false, 8.0);
    CHECK_THAT(kaiser[4], WithinAbs(1.0, 1e-12));
    CHECK_THAT(kaiser.front(), WithinAbs(1.0 / std::cyl_bessel_i(0.0, 8.0), 1e-12));
    const auto periodic = make_window(8, Window::Hann, true);
    CHECK_THAT(periodic[4], WithinAbs(1.0, 1e-15));
}

TEST_CASE("lowpass design")
{
    const auto h = design_lowpass(0.2, 129);
    double dc = 0.0;
    for (double v : h)
        dc += v;
    CHECK_THAT(dc, WithinAbs(1.0, 1e-12));
    for (std::size_t i = 0; i < h.size(); ++i)
        CHECK_THAT(h[i], WithinAbs(h[h.size() - 1 - i], 1e-17));

    CHECK(std::abs(linear_to_db(std::norm(fir_response(h, 0.1)))) < 0.1);
    CHECK(linear_to_db(std::norm(fir_response(h, 0.3))) < -40.0);
    CHECK(std::abs(fir_response(h, 0.13).imag()) < 1e-12);

    CHECK_THROWS_AS(design_lowpass(0.0, 129), InvalidArgument);
    CHECK_THROWS_AS(design_lowpass(0.5, 129), InvalidArgument);
    CHECK_THROWS_AS(design_lowpass(0.2, 128), InvalidArgument);
}

TEST_CASE("FIR lowpass on sample blocks")
{
    const double fs = 1e9;
    SECTION("passband tone keeps its amplitude")
    {
        const ComplexSampleBlock in{tone(4000, 0.05), fs};
        const auto out = fir_lowpass(in, 0.2 * fs);
        for (std::size_t i = 200; i < 3800; ++i)
            CHECK(std::abs(linear_to_db(std::norm(out.samples[i]))) < 0.1);
        // Group delay is removed: the phase matches the input.
        CHECK(std::abs(out.samples[2000] - in.samples[2000]) < 0.02);
    }
    SECTION("tone at 1.5x the cutoff is attenuated")
    {
        const ComplexSampleBlock in{tone(4000, 0.3), fs};
        const auto out = fir_lowpass(in, 0.2 * fs);
        double p = 0.0;
        for (std::size_t i = 200; i < 3800; ++i)
            p += std::norm(out.samples[i]);
        CHECK(linear_to_db(p / 3600.0) < -40.0);
    }
    SECTION("white input becomes band-limited")
    {
        Rng rng = make_rng(2, 0);
        const ComplexSampleBlock in{complex_gaussian_vector(1 << 17, 1.0, rng), fs};
        const auto out = fir_lowpass(in, 0.2 * fs);
        const auto psd = welch_psd(out.samples, fs, 1024);
        const double pass = integrate_psd(psd, -0.15 * fs, 0.15 * fs) / (0.3 * fs);
        const double stop = integrate_psd(psd, 0.3 * fs, 0.5 * fs) / (0.2 * fs);
        CHECK(linear_to_db(pass / stop) > 40.0);
    }
    SECTION("invalid cutoff")
    {
        const ComplexSampleBlock in{tone(100, 0.1), fs};
        CHECK_THROWS_AS(fir_lowpass(in, 0.6 * fs), InvalidArgument);
        CHECK_THROWS_AS(fir_lowpass(in, 0.0), InvalidArgument);
    }
}

TEST_CASE("Welch PSD")
{
    const double fs = 2e9;
    SECTION("white noise integrates to its power")
    {
        Rng rng = make_rng(3, 0);
        const auto x = complex_gaussian_vector(1 << 18, 2.5, rng);
        const auto psd = welch_psd(x, fs, 2048);
        CHECK_THAT(integrate_psd(psd, -fs, fs), WithinRel(mean_power(x), 0.01));
        CHECK_THAT(integrate_psd(psd, -fs, fs), WithinRel(2.5, 0.02));
        // Flat: the two halves hold the same power.
        CHECK_THAT(integrate_psd(psd, -fs / 2, 0.0), WithinRel(integrate_psd(psd, 0.0, fs / 2), 0.02));
        CHECK(std::is_sorted(psd.freqs_hz.begin(), psd.freqs_hz.end()));
    }
    SECTION("a tone forms a single peak")
    {
        const auto x = tone(1 << 16, 0.125, 0.5);
        const auto psd = welch_psd(x, fs, 1024);
        const auto peak = std::max_element(psd.psd.begin(), psd.psd.end()) - psd.psd.begin();
        CHECK_THAT(psd.freqs_hz[static_cast<std::size_t>(peak)], WithinAbs(0.125 * fs, psd.df_hz));
        CHECK_THAT(integrate_psd(psd, -fs, fs), WithinRel(0.25, 0.02));
        CHECK(integrate_psd(psd, 0.2 * fs, 0.3 * fs) < 1e-6);
    }
    SECTION("input too short")
    {
        const auto x = tone(1000, 0.1);
        CHECK_THROWS_AS(welch_psd(x, fs, 512), InvalidArgument);
    }
}
