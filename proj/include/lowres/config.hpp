// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------
//
// INI configuration with a fixed schema. Every key has a typed binding into Settings; unknown
// sections or keys are rejected and all problems are reported together.

#pragma once

#include "lowres/common.hpp"
#include "lowres/network_sim.hpp"
#include "lowres/ofdm_link.hpp"
#include "lowres/power_model.hpp"
#include "lowres/tx_chain.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace lowres {

struct PowerSettings {
    TxFrontEndConfig tx{};
    RxFrontEndConfig rx{};
    int hybrid_streams = 2;
    int high_res_bits = 8;
    int low_res_bits = 4;
};

struct AqnmSettings {
    std::vector<Resolution> bits = {Resolution::bits(1), Resolution::bits(2), Resolution::bits(3),
                                    Resolution::bits(4), Resolution::bits(5), Resolution::bits(6),
                                    Resolution::bits(7), Resolution::bits(8)};
    double snr_min_db = -10.0;
    double snr_max_db = 40.0;
    double snr_step_db = 1.0;
};

enum class DacMode { Offset, Equal, Infinite };

struct LinkSettings {
    OfdmNumerology numerology{};
    std::size_t n_symbols = 22;
    std::size_t n_pilot_symbols = 2;
    std::size_t fir_taps = 129;
    std::size_t window_advance = 144;
    std::vector<Resolution> bits = {Resolution::bits(2), Resolution::bits(3), Resolution::bits(4),
                                    Resolution::bits(5)};
    DacMode dac_mode = DacMode::Offset;
    int dac_bits_offset = 2;
    double snr_min_db = -5.0;
    double snr_max_db = 30.0;
    double snr_step_db = 5.0;

    Resolution dac_for(Resolution adc) const
    {
        if (adc.is_infinite() || dac_mode == DacMode::Infinite)
            return Resolution::infinite();
        if (dac_mode == DacMode::Equal)
            return adc;
        const int n = adc.n_bits() + dac_bits_offset;
        return n > kMaxBits ? Resolution::infinite() : Resolution::bits(n);
    }
};

struct SdmaLinkSettings {
    std::vector<double> gamma0_db = {0.0, 15.0};
    std::vector<Resolution> bits = {Resolution::bits(3), Resolution::bits(4)};
    double sir_min_db = 0.0;
    double sir_max_db = 40.0;
    double sir_step_db = 5.0;
};

struct TxSettings {
    DacChainConfig dac{};
    ChannelPlan plan{};
    std::size_t used_prbs = 275;
    std::size_t n_symbols = 12;
    std::size_t nperseg = 8192;
    Modulation modulation = Modulation::QPSK;
    std::vector<Resolution> psd_bits = {Resolution::bits(4), Resolution::infinite()};
    std::vector<int> psd_lpf_orders = {0, 1};
    std::vector<Resolution> aclr_bits = {Resolution::bits(2), Resolution::bits(3), Resolution::bits(4),
                                         Resolution::bits(5), Resolution::bits(6), Resolution::bits(8),
                                         Resolution::infinite()};
    std::vector<int> aclr_lpf_orders = {0, 1, 2};
    double limit_bs_db = 28.0;
    double limit_ue_db = 17.0;
    std::vector<Resolution> evm_bits = {Resolution::bits(3), Resolution::bits(4), Resolution::bits(5),
                                        Resolution::bits(6)};
    Modulation evm_modulation = Modulation::QAM256;
    std::size_t evm_n_symbols = 14;
    double inv_sigma_rf_min_db = 10.0;
    double inv_sigma_rf_max_db = 60.0;
    double inv_sigma_rf_step_db = 2.0;
};

struct NetworkSettings {
    NetworkConfig cfg{};
    std::size_t n_drops = 20;
    std::vector<Resolution> bits = {Resolution::bits(2), Resolution::bits(3), Resolution::bits(4),
                                    Resolution::infinite()};
    std::vector<int> sdma_beams = {2, 4};
};

struct Settings {
    std::uint64_t seed = 1;
    PowerSettings power{};
    AqnmSettings aqnm{};
    LinkSettings link{};
    SdmaLinkSettings sdma{};
    TxSettings tx{};
    NetworkSettings network{};
};

struct ConfigError : InvalidArgument {
    std::vector<std::string> problems;

    explicit ConfigError(std::vector<std::string> p) : InvalidArgument(join(p)), problems(std::move(p)) {}

    static std::string join(const std::vector<std::string> &p)
    {
        std::string s;
        for (std::size_t i = 0; i < p.size(); ++i)
            s += (i ? "\n" : "") + p[i];
        return s;
    }
};

// ---- value codecs ----------------------------------------------------------------------

namespace config_detail {

inline std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string &s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ','))
        out.push_back(trim(item));
    if (out.empty() || (out.size() == 1 && out[0].empty()))
        throw InvalidArgument("empty list");
    return out;
}

inline std::string format_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

template <class T>
T parse_number(const std::string &text)
{
    const std::string s = trim(text);
    T v{};
    if constexpr (std::is_floating_point_v<T>) {
        if (s == "inf")
            return std::numeric_limits<T>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<T>::infinity();
    }
    if constexpr (std::is_unsigned_v<T>) {
        if (!s.empty() && s[0] == '-')
            throw InvalidArgument("expected a nonnegative integer, got '" + s + "'");
    }
    const char *b = s.data();
    const char *e = s.data() + s.size();
    if (!s.empty() && s[0] == '+')
        ++b;
    auto r = std::from_chars(b, e, v);
    if (s.empty() || r.ec != std::errc() || r.ptr != e) {
        if constexpr (std::is_floating_point_v<T>)
            throw InvalidArgument("expected a number, got '" + s + "'");
        else
            throw InvalidArgument("expected an integer, got '" + s + "'");
    }
    return v;
}

template <class T>
struct Codec;

template <>
struct Codec<double> {
    static double parse(const std::string &s) { return parse_number<double>(s); }
    static std::string format(double v) { return format_double(v); }
};
template <>
struct Codec<int> {
    static int parse(const std::string &s) { return parse_number<int>(s); }
    static std::string format(int v) { return std::to_string(v); }
};
template <>
struct Codec<std::size_t> {
    static std::size_t parse(const std::string &s) { return parse_number<std::size_t>(s); }
    static std::string format(std::size_t v) { return std::to_string(v); }
};
static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed codec assumes a 64-bit size_t");
template <>
struct Codec<bool> {
    static bool parse(const std::string &text)
    {
        const std::string s = trim(text);
        if (s == "true" || s == "1" || s == "yes" || s == "on")
            return true;
        if (s == "false" || s == "0" || s == "no" || s == "off")
            return false;
        throw InvalidArgument("expected true or false, got '" + s + "'");
    }
    static std::string format(bool v) { return v ? "true" : "false"; }
};
template <>
struct Codec<Resolution> {
    static Resolution parse(const std::string &s) { return Resolution::parse(trim(s)); }
    static std::string format(Resolution r) { return r.to_string(); }
};
template <>
struct Codec<std::optional<double>> {
    static std::optional<double> parse(const std::string &text)
    {
        const std::string s = trim(text);
        if (s.empty() || s == "none")
            return std::nullopt;
        return parse_number<double>(s);
    }
    static std::string format(const std::optional<double> &v) { return v ? format_double(*v) : "none"; }
};

template <class T>
struct Codec<std::vector<T>> {
    static std::vector<T> parse(const std::string &s)
    {
        std::vector<T> out;
        for (const auto &item : split_list(s))
            out.push_back(Codec<T>::parse(item));
        return out;
    }
    static std::string format(const std::vector<T> &v)
    {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + Codec<T>::format(v[i]);
        return s;
    }
};

template <class E>
struct EnumNames;

template <>
struct EnumNames<SchedulerKind> {
    static constexpr std::pair<SchedulerKind, const char *> table[] = {{SchedulerKind::OfdmaPf, "OFDMA_PF"},
                                                                       {SchedulerKind::SdmaGreedy, "SDMA_GREEDY"}};
};
template <>
struct EnumNames<UeDropMode> {
    static constexpr std::pair<UeDropMode, const char *> table[] = {{UeDropMode::Poisson, "poisson"},
                                                                    {UeDropMode::Fixed, "fixed"}};
};
template <>
struct EnumNames<Modulation> {
    static constexpr std::pair<Modulation, const char *> table[] = {{Modulation::QPSK, "qpsk"},
                                                                    {Modulation::QAM16, "qam16"},
                                                                    {Modulation::QAM64, "qam64"},
                                                                    {Modulation::QAM256, "qam256"}};
};
template <>
struct EnumNames<DacMode> {
    static constexpr std::pair<DacMode, const char *> table[] = {
        {DacMode::Offset, "offset"}, {DacMode::Equal, "equal"}, {DacMode::Infinite, "inf"}};
};

template <class E>
    requires std::is_enum_v<E>
struct Codec<E> {
    static E parse(const std::string &text)
    {
        const std::string s = trim(text);
        std::string options;
        for (const auto &[v, name] : EnumNames<E>::table) {
            if (s == name)
                return v;
            options += options.empty() ? name : std::string(", ") + name;
        }
        throw InvalidArgument("expected one of {" + options + "}, got '" + s + "'");
    }
    static std::string format(E e)
    {
        for (const auto &[v, name] : EnumNames<E>::table)
            if (v == e)
                return name;
        return "?";
    }
};

} // namespace config_detail

template <class E>
std::string enum_name(E e)
{
    return config_detail::Codec<E>::format(e);
}

// ---- schema ----------------------------------------------------------------------------

enum class Bound { Any, Positive, NonNegative, Probability };

struct KeyBinding {
    std::string section;
    std::string key;
    std::function<void(Settings &, const std::string &)> set;
    std::function<std::string(const Settings &)> get;
    std::function<std::optional<std::string>(const Settings &)> check;

    std::string name() const { return section + "." + key; }
};

namespace config_detail {

template <class T>
std::optional<std::string> check_bound(const T &v, Bound b)
{
    if constexpr (std::is_arithmetic_v<T> && !std::is_same_v<T, bool>) {
        const double x = static_cast<double>(v);
        switch (b) {
        case Bound::Any:
            return std::nullopt;
        case Bound::Positive:
            if (!(x > 0.0))
                return "must be positive, got " + format_double(x);
            return std::nullopt;
        case Bound::NonNegative:
            if (!(x >= 0.0))
                return "must be nonnegative, got " + format_double(x);
            return std::nullopt;
        case Bound::Probability:
            if (!(x >= 0.0 && x < 1.0))
                return "must lie in [0, 1), got " + format_double(x);
            return std::nullopt;
        }
    } else if constexpr (requires { v.size(); typename T::value_type; }) {
        if constexpr (std::is_arithmetic_v<typename T::value_type>) {
            for (const auto &x : v)
                if (auto e = check_bound(x, b))
                    return e;
        }
    }
    return std::nullopt;
}

template <class Acc>
KeyBinding bind(std::string section, std::string key, Acc acc, Bound bound = Bound::Any)
{
    using T = std::remove_cvref_t<decltype(acc(std::declval<Settings &>()))>;
    KeyBinding k;
    k.section = std::move(section);
    k.key = std::move(key);
    k.set = [acc](Settings &s, const std::string &v) { acc(s) = Codec<T>::parse(v); };
    k.get = [acc](const Settings &s) { return Codec<T>::format(acc(const_cast<Settings &>(s))); };
    k.check = [acc, bound](const Settings &s) { return check_bound(acc(const_cast<Settings &>(s)), bound); };
    return k;
}

} // namespace config_detail

inline const std::vector<KeyBinding> &config_schema()
{
    using config_detail::bind;
    using B = Bound;
    static const std::vector<KeyBinding> schema = [] {
        std::vector<KeyBinding> v;
        // clang-format off
        v.push_back(bind("general", "seed", [](Settings &s) -> auto & { return s.seed; }));

        v.push_back(bind("power", "eirp_dbm", [](Settings &s) -> auto & { return s.power.tx.eirp_dbm; }));
        v.push_back(bind("power", "n_antennas", [](Settings &s) -> auto & { return s.power.tx.n_antennas; }, B::Positive));
        v.push_back(bind("power", "p_bb_in_dbm", [](Settings &s) -> auto & { return s.power.tx.p_bb_in_dbm; }));
        v.push_back(bind("power", "tx_il_ps_db", [](Settings &s) -> auto & { return s.power.tx.il_ps_db; }, B::NonNegative));
        v.push_back(bind("power", "tx_il_mix_db", [](Settings &s) -> auto & { return s.power.tx.il_mix_db; }, B::NonNegative));
        v.push_back(bind("power", "tx_p_lo_mw", [](Settings &s) -> auto & { return s.power.tx.p_lo_mw; }, B::NonNegative));
        v.push_back(bind("power", "eta_pae", [](Settings &s) -> auto & { return s.power.tx.eta_pae; }, B::Positive));
        v.push_back(bind("power", "dac_fom_fj", [](Settings &s) -> auto & { return s.power.tx.dac.fom_fj_per_conv; }, B::Positive));
        v.push_back(bind("power", "dac_fs_hz", [](Settings &s) -> auto & { return s.power.tx.dac.fs_hz; }, B::Positive));
        v.push_back(bind("power", "lpf_fom_mw_per_ghz", [](Settings &s) -> auto & { return s.power.tx.lpf.fom_mw_per_ghz; }, B::Positive));
        v.push_back(bind("power", "lpf_order", [](Settings &s) -> auto & { return s.power.tx.lpf.order; }, B::NonNegative));
        v.push_back(bind("power", "lpf_fc_ghz", [](Settings &s) -> auto & { return s.power.tx.lpf.fc_ghz; }, B::Positive));
        v.push_back(bind("power", "g_lna_db", [](Settings &s) -> auto & { return s.power.rx.g_lna_db; }));
        v.push_back(bind("power", "nf_lna_db", [](Settings &s) -> auto & { return s.power.rx.nf_lna_db; }, B::Positive));
        v.push_back(bind("power", "fom_lna_per_mw", [](Settings &s) -> auto & { return s.power.rx.fom_lna_per_mw; }, B::Positive));
        v.push_back(bind("power", "rx_il_ps_db", [](Settings &s) -> auto & { return s.power.rx.il_ps_db; }, B::NonNegative));
        v.push_back(bind("power", "vga_fom", [](Settings &s) -> auto & { return s.power.rx.vga_fom; }, B::Positive));
        v.push_back(bind("power", "vga_area_mm2", [](Settings &s) -> auto & { return s.power.rx.vga_area_mm2; }, B::Positive));
        v.push_back(bind("power", "vga_bw_ghz", [](Settings &s) -> auto & { return s.power.rx.bw_ghz; }, B::Positive));
        v.push_back(bind("power", "vga_gain_range_db", [](Settings &s) -> auto & { return s.power.rx.vga_gain_range_db; }, B::Positive));
        v.push_back(bind("power", "rx_p_lo_mw", [](Settings &s) -> auto & { return s.power.rx.p_lo_mw; }, B::NonNegative));
        v.push_back(bind("power", "adc_fom_fj", [](Settings &s) -> auto & { return s.power.rx.adc.fom_fj_per_conv; }, B::Positive));
        v.push_back(bind("power", "adc_fs_hz", [](Settings &s) -> auto & { return s.power.rx.adc.fs_hz; }, B::Positive));
        v.push_back(bind("power", "hybrid_streams", [](Settings &s) -> auto & { return s.power.hybrid_streams; }, B::Positive));
        v.push_back(bind("power", "high_res_bits", [](Settings &s) -> auto & { return s.power.high_res_bits; }, B::Positive));
        v.push_back(bind("power", "low_res_bits", [](Settings &s) -> auto & { return s.power.low_res_bits; }, B::Positive));

        v.push_back(bind("aqnm", "bits", [](Settings &s) -> auto & { return s.aqnm.bits; }));
        v.push_back(bind("aqnm", "snr_min_db", [](Settings &s) -> auto & { return s.aqnm.snr_min_db; }));
        v.push_back(bind("aqnm", "snr_max_db", [](Settings &s) -> auto & { return s.aqnm.snr_max_db; }));
        v.push_back(bind("aqnm", "snr_step_db", [](Settings &s) -> auto & { return s.aqnm.snr_step_db; }, B::Positive));

        v.push_back(bind("link", "fft_size", [](Settings &s) -> auto & { return s.link.numerology.fft_size; }, B::Positive));
        v.push_back(bind("link", "scs_hz", [](Settings &s) -> auto & { return s.link.numerology.scs_hz; }, B::Positive));
        v.push_back(bind("link", "used_prbs", [](Settings &s) -> auto & { return s.link.numerology.used_prbs; }, B::Positive));
        v.push_back(bind("link", "cp_length", [](Settings &s) -> auto & { return s.link.numerology.cp_length; }));
        v.push_back(bind("link", "n_symbols", [](Settings &s) -> auto & { return s.link.n_symbols; }, B::Positive));
        v.push_back(bind("link", "n_pilot_symbols", [](Settings &s) -> auto & { return s.link.n_pilot_symbols; }, B::Positive));
        v.push_back(bind("link", "fir_taps", [](Settings &s) -> auto & { return s.link.fir_taps; }, B::Positive));
        v.push_back(bind("link", "window_advance", [](Settings &s) -> auto & { return s.link.window_advance; }));
        v.push_back(bind("link", "bits", [](Settings &s) -> auto & { return s.link.bits; }));
        v.push_back(bind("link", "dac_mode", [](Settings &s) -> auto & { return s.link.dac_mode; }));
        v.push_back(bind("link", "dac_bits_offset", [](Settings &s) -> auto & { return s.link.dac_bits_offset; }, B::NonNegative));
        v.push_back(bind("link", "snr_min_db", [](Settings &s) -> auto & { return s.link.snr_min_db; }));
        v.push_back(bind("link", "snr_max_db", [](Settings &s) -> auto & { return s.link.snr_max_db; }));
        v.push_back(bind("link", "snr_step_db", [](Settings &s) -> auto & { return s.link.snr_step_db; }, B::Positive));

        v.push_back(bind("sdma", "gamma0_db", [](Settings &s) -> auto & { return s.sdma.gamma0_db; }));
        v.push_back(bind("sdma", "bits", [](Settings &s) -> auto & { return s.sdma.bits; }));
        v.push_back(bind("sdma", "sir_min_db", [](Settings &s) -> auto & { return s.sdma.sir_min_db; }));
        v.push_back(bind("sdma", "sir_max_db", [](Settings &s) -> auto & { return s.sdma.sir_max_db; }));
        v.push_back(bind("sdma", "sir_step_db", [](Settings &s) -> auto & { return s.sdma.sir_step_db; }, B::Positive));

        v.push_back(bind("tx", "interp_m", [](Settings &s) -> auto & { return s.tx.dac.interp_m; }, B::Positive));
        v.push_back(bind("tx", "zoh_oversample", [](Settings &s) -> auto & { return s.tx.dac.zoh_oversample; }, B::Positive));
        v.push_back(bind("tx", "lpf_fc_hz", [](Settings &s) -> auto & { return s.tx.dac.lpf_fc_hz; }, B::Positive));
        v.push_back(bind("tx", "chip_rate_hz", [](Settings &s) -> auto & { return s.tx.dac.chip_rate_hz; }, B::Positive));
        v.push_back(bind("tx", "interp_taps", [](Settings &s) -> auto & { return s.tx.dac.interp_taps; }, B::Positive));
        v.push_back(bind("tx", "interp_kaiser_beta", [](Settings &s) -> auto & { return s.tx.dac.interp_kaiser_beta; }, B::NonNegative));
        v.push_back(bind("tx", "ch_bw_hz", [](Settings &s) -> auto & { return s.tx.plan.ch_bw_hz; }, B::Positive));
        v.push_back(bind("tx", "meas_bw_hz", [](Settings &s) -> auto & { return s.tx.plan.meas_bw_hz; }, B::Positive));
        v.push_back(bind("tx", "n_adjacent", [](Settings &s) -> auto & { return s.tx.plan.n_adjacent; }, B::Positive));
        v.push_back(bind("tx", "used_prbs", [](Settings &s) -> auto & { return s.tx.used_prbs; }, B::Positive));
        v.push_back(bind("tx", "n_symbols", [](Settings &s) -> auto & { return s.tx.n_symbols; }, B::Positive));
        v.push_back(bind("tx", "nperseg", [](Settings &s) -> auto & { return s.tx.nperseg; }, B::Positive));
        v.push_back(bind("tx", "modulation", [](Settings &s) -> auto & { return s.tx.modulation; }));
        v.push_back(bind("tx", "psd_bits", [](Settings &s) -> auto & { return s.tx.psd_bits; }));
        v.push_back(bind("tx", "psd_lpf_orders", [](Settings &s) -> auto & { return s.tx.psd_lpf_orders; }, B::NonNegative));
        v.push_back(bind("tx", "aclr_bits", [](Settings &s) -> auto & { return s.tx.aclr_bits; }));
        v.push_back(bind("tx", "aclr_lpf_orders", [](Settings &s) -> auto & { return s.tx.aclr_lpf_orders; }, B::NonNegative));
        v.push_back(bind("tx", "limit_bs_db", [](Settings &s) -> auto & { return s.tx.limit_bs_db; }));
        v.push_back(bind("tx", "limit_ue_db", [](Settings &s) -> auto & { return s.tx.limit_ue_db; }));
        v.push_back(bind("tx", "evm_bits", [](Settings &s) -> auto & { return s.tx.evm_bits; }));
        v.push_back(bind("tx", "evm_modulation", [](Settings &s) -> auto & { return s.tx.evm_modulation; }));
        v.push_back(bind("tx", "evm_n_symbols", [](Settings &s) -> auto & { return s.tx.evm_n_symbols; }, B::Positive));
        v.push_back(bind("tx", "inv_sigma_rf_min_db", [](Settings &s) -> auto & { return s.tx.inv_sigma_rf_min_db; }));
        v.push_back(bind("tx", "inv_sigma_rf_max_db", [](Settings &s) -> auto & { return s.tx.inv_sigma_rf_max_db; }));
        v.push_back(bind("tx", "inv_sigma_rf_step_db", [](Settings &s) -> auto & { return s.tx.inv_sigma_rf_step_db; }, B::Positive));

        v.push_back(bind("network", "area_m", [](Settings &s) -> auto & { return s.network.cfg.area_m; }, B::Positive));
        v.push_back(bind("network", "cell_radius_m", [](Settings &s) -> auto & { return s.network.cfg.cell_radius_m; }, B::Positive));
        v.push_back(bind("network", "fc_hz", [](Settings &s) -> auto & { return s.network.cfg.fc_hz; }, B::Positive));
        v.push_back(bind("network", "bw_hz", [](Settings &s) -> auto & { return s.network.cfg.bw_hz; }, B::Positive));
        v.push_back(bind("network", "tx_power_dbm", [](Settings &s) -> auto & { return s.network.cfg.tx_power_dbm; }));
        v.push_back(bind("network", "noise_figure_db", [](Settings &s) -> auto & { return s.network.cfg.noise_figure_db; }, B::NonNegative));
        v.push_back(bind("network", "noise_psd_dbm_hz", [](Settings &s) -> auto & { return s.network.cfg.noise_psd_dbm_hz; }));
        v.push_back(bind("network", "max_se_bps_hz", [](Settings &s) -> auto & { return s.network.cfg.max_se_bps_hz; }, B::Positive));
        v.push_back(bind("network", "bs_array_rows", [](Settings &s) -> auto & { return s.network.cfg.bs_array.rows; }, B::Positive));
        v.push_back(bind("network", "bs_array_cols", [](Settings &s) -> auto & { return s.network.cfg.bs_array.cols; }, B::Positive));
        v.push_back(bind("network", "ue_array_rows", [](Settings &s) -> auto & { return s.network.cfg.ue_array.rows; }, B::Positive));
        v.push_back(bind("network", "ue_array_cols", [](Settings &s) -> auto & { return s.network.cfg.ue_array.cols; }, B::Positive));
        v.push_back(bind("network", "tti_s", [](Settings &s) -> auto & { return s.network.cfg.tti_s; }, B::Positive));
        v.push_back(bind("network", "overhead", [](Settings &s) -> auto & { return s.network.cfg.overhead; }, B::Probability));
        v.push_back(bind("network", "shannon_loss_db", [](Settings &s) -> auto & { return s.network.cfg.shannon_loss_db; }, B::NonNegative));
        v.push_back(bind("network", "mean_ues_per_cell", [](Settings &s) -> auto & { return s.network.cfg.mean_ues_per_cell; }, B::NonNegative));
        v.push_back(bind("network", "ue_drop_mode", [](Settings &s) -> auto & { return s.network.cfg.ue_drop_mode; }));
        v.push_back(bind("network", "min_ue_distance_m", [](Settings &s) -> auto & { return s.network.cfg.min_ue_distance_m; }, B::NonNegative));
        v.push_back(bind("network", "bs_height_m", [](Settings &s) -> auto & { return s.network.cfg.bs_height_m; }, B::NonNegative));
        v.push_back(bind("network", "ue_height_m", [](Settings &s) -> auto & { return s.network.cfg.ue_height_m; }, B::NonNegative));
        v.push_back(bind("network", "alpha_override", [](Settings &s) -> auto & { return s.network.cfg.alpha_override; }));
        v.push_back(bind("network", "n_ttis", [](Settings &s) -> auto & { return s.network.cfg.n_ttis; }, B::Positive));
        v.push_back(bind("network", "pf_epsilon_bits", [](Settings &s) -> auto & { return s.network.cfg.pf_epsilon_bits; }, B::Positive));
        v.push_back(bind("network", "scheduler_knows_quantization", [](Settings &s) -> auto & { return s.network.cfg.scheduler_knows_quantization; }));
        v.push_back(bind("network", "los_a", [](Settings &s) -> auto & { return s.network.cfg.pathloss.los_a; }));
        v.push_back(bind("network", "los_b", [](Settings &s) -> auto & { return s.network.cfg.pathloss.los_b; }, B::NonNegative));
        v.push_back(bind("network", "los_sigma_db", [](Settings &s) -> auto & { return s.network.cfg.pathloss.los_sigma_db; }, B::NonNegative));
        v.push_back(bind("network", "nlos_a", [](Settings &s) -> auto & { return s.network.cfg.pathloss.nlos_a; }));
        v.push_back(bind("network", "nlos_b", [](Settings &s) -> auto & { return s.network.cfg.pathloss.nlos_b; }, B::NonNegative));
        v.push_back(bind("network", "nlos_sigma_db", [](Settings &s) -> auto & { return s.network.cfg.pathloss.nlos_sigma_db; }, B::NonNegative));
        v.push_back(bind("network", "los_decay_m", [](Settings &s) -> auto & { return s.network.cfg.pathloss.los_decay_m; }, B::Positive));
        v.push_back(bind("network", "outage_slope_per_m", [](Settings &s) -> auto & { return s.network.cfg.pathloss.outage_slope_per_m; }, B::NonNegative));
        v.push_back(bind("network", "outage_offset", [](Settings &s) -> auto & { return s.network.cfg.pathloss.outage_offset; }));
        v.push_back(bind("network", "clamp_free_space", [](Settings &s) -> auto & { return s.network.cfg.pathloss.clamp_free_space; }));
        v.push_back(bind("network", "mean_extra_clusters", [](Settings &s) -> auto & { return s.network.cfg.clusters.mean_extra_clusters; }, B::NonNegative));
        v.push_back(bind("network", "cluster_power_decay", [](Settings &s) -> auto & { return s.network.cfg.clusters.power_decay; }, B::NonNegative));
        v.push_back(bind("network", "cluster_elevation_spread_deg", [](Settings &s) -> auto & { return s.network.cfg.clusters.elevation_spread_deg; }, B::NonNegative));
        v.push_back(bind("network", "rays_per_cluster", [](Settings &s) -> auto & { return s.network.cfg.clusters.rays_per_cluster; }, B::Positive));
        v.push_back(bind("network", "az_spread_tx_deg", [](Settings &s) -> auto & { return s.network.cfg.clusters.az_spread_tx_deg; }, B::NonNegative));
        v.push_back(bind("network", "el_spread_tx_deg", [](Settings &s) -> auto & { return s.network.cfg.clusters.el_spread_tx_deg; }, B::NonNegative));
        v.push_back(bind("network", "az_spread_rx_deg", [](Settings &s) -> auto & { return s.network.cfg.clusters.az_spread_rx_deg; }, B::NonNegative));
        v.push_back(bind("network", "el_spread_rx_deg", [](Settings &s) -> auto & { return s.network.cfg.clusters.el_spread_rx_deg; }, B::NonNegative));
        v.push_back(bind("network", "n_drops", [](Settings &s) -> auto & { return s.network.n_drops; }, B::Positive));
        v.push_back(bind("network", "bits", [](Settings &s) -> auto & { return s.network.bits; }));
        v.push_back(bind("network", "sdma_beams", [](Settings &s) -> auto & { return s.network.sdma_beams; }, B::Positive));
        // clang-format on
        return v;
    }();
    return schema;
}

inline const KeyBinding *find_key(const std::string &section, const std::string &key)
{
    for (const auto &k : config_schema())
        if (k.section == section && k.key == key)
            return &k;
    return nullptr;
}

namespace config_detail {

inline void check_sweep(std::vector<std::string> &errors, const std::string &name, double lo, double hi)
{
    if (!(lo <= hi))
        errors.push_back(name + ": minimum exceeds maximum");
}

template <class Fn>
void check_module(std::vector<std::string> &errors, const std::set<std::string> &bad_sections,
                  const std::string &section, Fn &&fn)
{
    if (bad_sections.count(section))
        return;
    try {
        fn();
    } catch (const std::exception &e) {
        errors.push_back("[" + section + "] " + e.what());
    }
}

} // namespace config_detail

// Field bounds plus each module's own invariants. Module invariants are only checked for sections
// whose fields are all in range, so one bad value is reported once.
inline std::vector<std::string> config_problems(const Settings &s)
{
    std::vector<std::string> errors;
    std::set<std::string> bad;
    for (const auto &k : config_schema())
        if (auto e = k.check(s)) {
            errors.push_back(k.name() + ": " + *e);
            bad.insert(k.section);
        }
    using config_detail::check_sweep;
    const auto check_module = [&](const std::string &section, auto &&fn) {
        config_detail::check_module(errors, bad, section, fn);
    };
    check_sweep(errors, "aqnm.snr", s.aqnm.snr_min_db, s.aqnm.snr_max_db);
    check_sweep(errors, "link.snr", s.link.snr_min_db, s.link.snr_max_db);
    check_sweep(errors, "sdma.sir", s.sdma.sir_min_db, s.sdma.sir_max_db);
    check_sweep(errors, "tx.inv_sigma_rf", s.tx.inv_sigma_rf_min_db, s.tx.inv_sigma_rf_max_db);
    check_module("power", [&] {
        s.power.tx.validate();
        s.power.rx.validate();
        if (s.power.tx.n_antennas != s.power.rx.n_antennas)
            throw InvalidArgument("Tx and Rx antenna counts differ");
        for (int b : {s.power.high_res_bits, s.power.low_res_bits})
            if (b < 1 || b > kMaxBits)
                throw InvalidArgument("converter bits must be between 1 and " + std::to_string(kMaxBits));
        ArchSpec::hybrid(s.power.hybrid_streams).validate(s.power.tx.n_antennas);
    });
    check_module("link", [&] {
        LinkTrialConfig c;
        c.numerology = s.link.numerology;
        c.n_symbols = s.link.n_symbols;
        c.n_pilot_symbols = s.link.n_pilot_symbols;
        c.fir_taps = s.link.fir_taps;
        c.window_advance = s.link.window_advance;
        c.validate();
        if (s.link.fir_taps % 2 == 0)
            throw InvalidArgument("fir_taps must be odd");
    });
    check_module("sdma", [&] {
        if (s.sdma.gamma0_db.empty() || s.sdma.bits.empty())
            throw InvalidArgument("gamma0_db and bits need at least one entry");
    });
    check_module("tx", [&] {
        s.tx.dac.validate();
        s.tx.plan.validate();
        OfdmNumerology n = s.link.numerology;
        n.used_prbs = s.tx.used_prbs;
        n.validate();
    });
    check_module("network", [&] {
        s.network.cfg.validate();
        for (int b : s.network.sdma_beams)
            if (b < 1)
                throw InvalidArgument("sdma_beams entries must be at least 1");
    });
    return errors;
}

struct ConfigEntry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;  // 0 for command-line overrides
};

// Applies entries to the defaults; unknown keys and unparsable values are collected, then the
// result is validated. Throws ConfigError listing every problem.
inline Settings resolve_config(const std::vector<ConfigEntry> &entries)
{
    Settings s;
    std::vector<std::string> errors;
    for (const auto &e : entries) {
        const std::string where = e.line > 0 ? " (line " + std::to_string(e.line) + ")" : "";
        const KeyBinding *k = find_key(e.section, e.key);
        if (!k) {
            errors.push_back("unknown key '" + e.section + "." + e.key + "'" + where);
            continue;
        }
        try {
            k->set(s, e.value);
        } catch (const std::exception &ex) {
            errors.push_back(k->name() + where + ": " + ex.what());
        }
    }
    for (auto &p : config_problems(s))
        errors.push_back(std::move(p));
    if (!errors.empty())
        throw ConfigError(errors);
    return s;
}

// Reads INI text. Keys outside any section belong to [general].
inline std::vector<ConfigEntry> parse_ini(const std::string &text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error &e) {
        throw ConfigError({"line " + std::to_string(e.line()) + ": " + e.message()});
    }
    // ptree does not keep line numbers; recover them from the text for messages.
    std::map<std::string, int> lines;
    std::set<std::string> sections;
    {
        std::istringstream scan(text);
        std::string line, section = "general";
        int no = 0;
        while (std::getline(scan, line)) {
            ++no;
            const std::string t = config_detail::trim(line);
            if (t.empty() || t[0] == ';' || t[0] == '#')
                continue;
            if (t.front() == '[' && t.back() == ']') {
                section = config_detail::trim(t.substr(1, t.size() - 2));
                sections.insert(section);
                continue;
            }
            const auto eq = t.find('=');
            if (eq != std::string::npos)
                lines.emplace(section + "." + config_detail::trim(t.substr(0, eq)), no);
        }
    }
    std::vector<ConfigEntry> out;
    for (const auto &[name, node] : tree) {
        if (node.empty() && sections.count(name))
            continue;
        if (node.empty()) {
            out.push_back({"general", name, node.data(), lines["general." + name]});
            continue;
        }
        for (const auto &[key, leaf] : node)
            out.push_back({name, key, leaf.data(), lines[name + "." + key]});
    }
    return out;
}

inline Settings validate_config(const std::string &text) { return resolve_config(parse_ini(text)); }

// "section.key=value"
inline ConfigEntry parse_override(const std::string &text)
{
    const auto eq = text.find('=');
    const auto dot = text.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError({"override '" + text + "' is not of the form section.key=value"});
    return {config_detail::trim(text.substr(0, dot)), config_detail::trim(text.substr(dot + 1, eq - dot - 1)),
            config_detail::trim(text.substr(eq + 1)), 0};
}

// The resolved configuration as "section.key = value" lines in schema order.
inline std::vector<std::string> describe_config(const Settings &s)
{
    std::vector<std::string> out;
    for (const auto &k : config_schema())
        out.push_back(k.name() + " = " + k.get(s));
    return out;
}

} // namespace lowres
