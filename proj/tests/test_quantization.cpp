// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#include <catch_amalgamated.hpp>

#include "lowres/quantization.hpp"
#include "lowres/rng.hpp"

#include <cmath>
#include <vector>

using namespace lowres;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent MSE oracle: midpoint rule on [-9, 9] with an explicit quantizer.
struct MidpointMse {
    std::vector<double> x, w;

    explicit MidpointMse(std::size_t n)
    {
        const double lo = -9.0, h = 18.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = lo + (static_cast<double>(i) + 0.5) * h;
            x.push_back(xi);
            w.push_back(h * std::exp(-0.5 * xi * xi) / std::sqrt(2.0 * M_PI));
        }
    }

    double operator()(double step, int bits) const
    {
        const double top = std::ldexp(1.0, bits - 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double k = std::floor(x[i] / step);
            if (k < -top)
                k = -top;
            if (k > top - 1)
                k = top - 1;
            const double e = x[i] - (k + 0.5) * step;
            acc += w[i] * e * e;
        }
        return acc;
    }
};

// Brute-force minimum over a log-spaced grid of 10^4 steps in [1e-3, 4].
double grid_alpha(int bits, const MidpointMse &mse)
{
    double best = 1e9;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double step = 1e-3 * std::pow(4000.0, static_cast<double>(i) / (n - 1));
        best = std::min(best, mse(step, bits));
    }
    return best;
}

std::vector<cplx> gaussian_block(std::size_t n, std::uint64_t seed)
{
    Rng rng = make_rng(seed, 0);
    return complex_gaussian_vector(n, 1.0, rng);
}

} // namespace

TEST_CASE("optimal uniform quantizer values")
{
    // Frozen from the grid and midpoint oracle below.
    const double expected_alpha[] = {0.36338023, 0.11884605, 0.03743966, 0.01154288, 0.00349521,
                                     0.00104005, 3.0433e-4,  8.7686e-5,  2.4919e-5,  6.997e-6};
    for (int n = 1; n <= 10; ++n)
        CHECK_THAT(alpha_of(n), WithinRel(expected_alpha[n - 1], 2e-4));

    CHECK_THAT(optimal_step(1), WithinAbs(1.5957691107, 1e-6));
    CHECK_THAT(optimal_step(2), WithinAbs(0.9956866849, 1e-6));
    CHECK_THAT(optimal_step(3), WithinAbs(0.5860194408, 1e-6));
    CHECK_THAT(optimal_step(4), WithinAbs(0.3352006003, 1e-6));

    // One-bit closed form: outputs +/- sqrt(2/pi), alpha = 1 - 2/pi.
    CHECK_THAT(optimal_step(1) / 2.0, WithinAbs(std::sqrt(2.0 / M_PI), 1e-6));
    CHECK_THAT(alpha_of(1), WithinAbs(1.0 - 2.0 / M_PI, 1e-9));

    CHECK(alpha_of(Resolution::infinite()) == 0.0);
    CHECK(alpha_of(16) < 1e-6);
    for (int n = 1; n < 10; ++n)
        CHECK(alpha_of(n) > alpha_of(n + 1));
}

TEST_CASE("alpha matches brute-force grid and quadrature oracle")
{
    const MidpointMse mse(6000);
    for (int n = 1; n <= 6; ++n) {
        const double oracle = grid_alpha(n, mse);
        INFO("n = " << n);
        CHECK_THAT(alpha_of(n), WithinAbs(oracle, 1e-4));
        CHECK(alpha_of(n) <= oracle + 1e-5);
    }
    CHECK_THAT(gaussian_quantizer_mse(optimal_step(4), 4), WithinRel(mse(optimal_step(4), 4), 1e-4));
}

TEST_CASE("alpha matches Monte Carlo with 10^7 samples")
{
    const auto y = gaussian_block(10'000'000, 77);
    for (int n = 1; n <= 6; ++n) {
        auto q = y;
        quantize_inplace(q, QuantizerSpec::optimal(Resolution::bits(n)));
        double err = 0.0, energy = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            err += std::norm(y[i] - q[i]);
            energy += std::norm(y[i]);
        }
        INFO("n = " << n);
        CHECK_THAT(err / energy, WithinAbs(alpha_of(n), 1e-3));
        CHECK_THAT(measure_alpha(y, q), WithinAbs(alpha_of(n), 1e-3));
    }
}

TEST_CASE("AQNM decomposition is uncorrelated and has the stated error energy")
{
    const auto y = gaussian_block(1'000'000, 5);
    for (int n = 2; n <= 6; ++n) {
        const double a = alpha_of(n);
        auto q = y;
        quantize_inplace(q, QuantizerSpec::optimal(Resolution::bits(n)));
        cplx cross = 0.0;
        double vv = 0.0, yy = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const cplx v = q[i] - (1.0 - a) * y[i];
            cross += v * std::conj(y[i]);
            vv += std::norm(v);
            yy += std::norm(y[i]);
        }
        INFO("n = " << n);
        CHECK(std::abs(cross) / std::sqrt(vv * yy) < 0.02);
        CHECK_THAT(vv / yy, WithinRel(a * (1.0 - a), 0.05));
        CHECK_THAT(measure_alpha(y, q), WithinRel(a, 0.05));
    }
}

TEST_CASE("quantize behaviour")
{
    const auto y = gaussian_block(4096, 9);
    ComplexSampleBlock block{y, 1e9};

    SECTION("infinite resolution is the identity")
    {
        const auto out = quantize(block, QuantizerSpec::optimal(Resolution::infinite()));
        CHECK(out.samples == block.samples);
    }
    SECTION("idempotent and deterministic")
    {
        const auto spec = QuantizerSpec::optimal(Resolution::bits(3));
        const auto once = quantize(block, spec);
        CHECK(quantize(once, spec).samples == once.samples);
        CHECK(quantize(block, spec).samples == once.samples);
    }
    SECTION("zero maps to the positive inner level")
    {
        for (int n : {1, 3, 5}) {
            const auto spec = QuantizerSpec::optimal(Resolution::bits(n));
            std::vector<cplx> z = {cplx(0.0, 0.0)};
            quantize_inplace(z, spec);
            const double half = 0.5 * spec.component_step();
            CHECK(z[0] == cplx(half, half));
        }
    }
    SECTION("saturates at the outer levels")
    {
        const auto spec = QuantizerSpec::optimal(Resolution::bits(2));
        std::vector<cplx> z = {cplx(100.0, -100.0)};
        quantize_inplace(z, spec);
        const double d = spec.component_step();
        CHECK_THAT(z[0].real(), WithinAbs(1.5 * d, 1e-15));
        CHECK_THAT(z[0].imag(), WithinAbs(-1.5 * d, 1e-15));
    }
    SECTION("10^6 samples at 4 bits give alpha within 5%")
    {
        const auto big = gaussian_block(1'000'000, 13);
        auto q = big;
        quantize_inplace(q, QuantizerSpec::optimal(Resolution::bits(4)));
        double err = 0.0, energy = 0.0;
        for (std::size_t i = 0; i < big.size(); ++i) {
            err += std::norm(big[i] - q[i]);
            energy += std::norm(big[i]);
        }
        CHECK_THAT(err / energy, WithinRel(alpha_of(4), 0.05));
    }
}

TEST_CASE("measure_alpha definitions")
{
    const auto y = gaussian_block(2000, 21);
    CHECK_THAT(measure_alpha(y, y), WithinAbs(0.0, 1e-14));
    auto scaled = y;
    for (auto &v : scaled)
        v *= 0.75;
    CHECK_THAT(measure_alpha(y, scaled), WithinAbs(0.25, 1e-14));
}

TEST_CASE("quantization errors")
{
    CHECK_THROWS_AS(Resolution::bits(0), InvalidArgument);
    CHECK_THROWS_AS(Resolution::bits(17), InvalidArgument);
    CHECK_THROWS_AS(alpha_of(0), InvalidArgument);
    CHECK_THROWS_AS(gaussian_quantizer_mse(0.0, 3), InvalidArgument);
    std::vector<cplx> bad = {cplx(std::nan(""), 0.0)};
    CHECK_THROWS_AS(quantize_inplace(bad, QuantizerSpec::optimal(Resolution::bits(3))), InvalidInput);
    std::vector<cplx> inf = {cplx(0.0, std::numeric_limits<double>::infinity())};
    CHECK_THROWS_AS(quantize_inplace(inf, QuantizerSpec::optimal(Resolution::infinite())), InvalidInput);
    std::vector<cplx> shortv(10);
    CHECK_THROWS_AS(measure_alpha(shortv, shortv), InvalidArgument);
    std::vector<cplx> zeros(2000);
    CHECK_THROWS_AS(measure_alpha(zeros, zeros), DegenerateInput);
    CHECK_THROWS_AS(QuantizerSpec::with_alpha(Resolution::bits(3), 1.5), InvalidArgument);
    CHECK(Resolution::parse("inf").is_infinite());
    CHECK(Resolution::parse("4") == Resolution::bits(4));
    CHECK_THROWS_AS(Resolution::parse("4x"), InvalidArgument);
}
