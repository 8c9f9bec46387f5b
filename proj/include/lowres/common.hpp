// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace lowres {

using cplx = std::complex<double>;

// Error categories. Invalid arguments reuse std::invalid_argument so callers can catch
// either the library type or the standard one.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidInput : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};
struct DegenerateInput : DomainError {
    using DomainError::DomainError;
};
struct InfeasibleDrive : DomainError {
    using DomainError::DomainError;
};
struct UnboundedResult : DomainError {
    using DomainError::DomainError;
};

inline constexpr int kMaxBits = 16;

// Converter resolution: a finite bit count or infinite.
class Resolution {
  public:
    constexpr Resolution() = default;

    static constexpr Resolution infinite() { return Resolution{}; }
    static Resolution bits(int n)
    {
        if (n < 1 || n > kMaxBits)
            throw InvalidArgument("resolution must be between 1 and " + std::to_string(kMaxBits) +
                                  " bits, got " + std::to_string(n));
        Resolution r;
        r.bits_ = n;
        return r;
    }

    constexpr bool is_infinite() const { return bits_ == 0; }
    int n_bits() const
    {
        if (is_infinite())
            throw InvalidArgument("infinite resolution has no bit count");
        return bits_;
    }

    // Infinite compares as larger than every finite resolution.
    constexpr int rank() const { return bits_ == 0 ? kMaxBits + 1 : bits_; }
    friend constexpr bool operator==(Resolution a, Resolution b) { return a.bits_ == b.bits_; }
    friend constexpr auto operator<=>(Resolution a, Resolution b) { return a.rank() <=> b.rank(); }

    std::string to_string() const { return is_infinite() ? std::string("inf") : std::to_string(bits_); }

    static Resolution parse(const std::string &text)
    {
        if (text == "inf" || text == "Inf" || text == "infinite")
            return infinite();
        std::size_t pos = 0;
        int n = 0;
        try {
            n = std::stoi(text, &pos);
        } catch (const std::exception &) {
            throw InvalidArgument("cannot parse resolution '" + text + "'");
        }
        if (pos != text.size())
            throw InvalidArgument("cannot parse resolution '" + text + "'");
        return bits(n);
    }

  private:
    int bits_ = 0;
};

inline double db_to_linear(double db) { return std::pow(10.0, 0.1 * db); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, 0.1 * dbm); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

struct ComplexSampleBlock {
    std::vector<cplx> samples;
    double sample_rate_hz = 1.0;

    std::size_t size() const { return samples.size(); }

    void validate() const
    {
        if (samples.empty())
            throw InvalidInput("sample block is empty");
        if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
            throw InvalidInput("sample rate must be positive");
        for (const auto &s : samples)
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
                throw InvalidInput("sample block contains a non-finite value");
    }
};

inline double mean_power(const std::vector<cplx> &x)
{
    if (x.empty())
        return 0.0;
    double acc = 0.0;
    for (const auto &s : x)
        acc += std::norm(s);
    return acc / static_cast<double>(x.size());
}

} // namespace lowres
