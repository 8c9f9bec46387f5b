// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#pragma once

#include "lowres/common.hpp"

#include <cstdint>
#include <random>

namespace lowres {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Substream seed for (master, stream). Streams are addressed by index, so the mapping does
// not depend on which worker runs which job.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream)
{
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) { return Rng(substream_seed(master, stream)); }

// Circular complex Gaussian with E|z|^2 = variance.
class ComplexGaussian {
  public:
    explicit ComplexGaussian(double variance = 1.0) : dist_(0.0, std::sqrt(0.5 * variance)) {}
    cplx operator()(Rng &rng) { return {dist_(rng), dist_(rng)}; }

  private:
    std::normal_distribution<double> dist_;
};

inline std::vector<cplx> complex_gaussian_vector(std::size_t n, double variance, Rng &rng)
{
    ComplexGaussian g(variance);
    std::vector<cplx> out(n);
    for (auto &s : out)
        s = g(rng);
    return out;
}

} // namespace lowres
