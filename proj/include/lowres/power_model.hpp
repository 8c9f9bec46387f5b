// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#pragma once

#include "lowres/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace lowres {

enum class ArchKind { Analog, Hybrid, Digital };

struct ArchSpec {
    ArchKind kind = ArchKind::Analog;
    int n_streams = 1;

    static ArchSpec analog() { return {ArchKind::Analog, 1}; }
    static ArchSpec hybrid(int k)
    {
        if (k < 1)
            throw InvalidArgument("hybrid architecture needs at least one stream");
        return {ArchKind::Hybrid, k};
    }
    static ArchSpec digital(int n_antennas)
    {
        if (n_antennas < 1)
            throw InvalidArgument("digital architecture needs at least one antenna");
        return {ArchKind::Digital, n_antennas};
    }

    void validate(int n_antennas) const
    {
        if (n_streams < 1)
            throw InvalidArgument("n_streams must be at least 1");
        if (kind == ArchKind::Analog && n_streams != 1)
            throw InvalidArgument("analog architecture has exactly one stream");
        if (kind == ArchKind::Digital && n_streams != n_antennas)
            throw InvalidArgument("digital architecture needs one stream per antenna");
        if (n_streams > n_antennas)
            throw InvalidArgument("more streams than antennas");
    }
};

struct ConverterSpec {
    double fom_fj_per_conv = 65.0;
    double fs_hz = 1e9;
    int n_bits = 8;
    int pairs = 1;  // I/Q pairs per stream

    void validate() const
    {
        if (!(fom_fj_per_conv > 0.0) || !(fs_hz > 0.0) || n_bits < 1 || pairs < 1)
            throw InvalidArgument("converter parameters must be positive");
    }
};

struct LpfSpec {
    double fom_mw_per_ghz = 1.3;
    int order = 1;
    double fc_ghz = 0.4;

    void validate() const
    {
        if (order < 0)
            throw InvalidArgument("LPF order must be nonnegative");
        if (!(fom_mw_per_ghz > 0.0) || !(fc_ghz > 0.0))
            throw InvalidArgument("LPF figure of merit and cutoff must be positive");
    }
};

struct TxFrontEndConfig {
    double eirp_dbm = 30.0;
    int n_antennas = 16;
    double p_bb_in_dbm = 10.0;
    double il_ps_db = 10.0;
    double il_mix_db = 6.0;
    double p_lo_mw = 10.0;
    double eta_pae = 0.2;
    ConverterSpec dac{67.6, 1e9, 8, 1};
    LpfSpec lpf{};

    void validate() const
    {
        if (n_antennas < 1)
            throw InvalidArgument("n_antennas must be at least 1");
        if (!(eta_pae > 0.0 && eta_pae <= 1.0))
            throw InvalidArgument("eta_pae must lie in (0, 1]");
        if (!(il_ps_db >= 0.0) || !(il_mix_db >= 0.0))
            throw InvalidArgument("insertion losses must be nonnegative");
        if (!(p_lo_mw >= 0.0))
            throw InvalidArgument("LO power must be nonnegative");
        dac.validate();
        lpf.validate();
    }
};

struct RxFrontEndConfig {
    int n_antennas = 16;
    double g_lna_db = 10.0;  // LNA gain of the digital architecture
    double nf_lna_db = 3.0;
    double fom_lna_per_mw = 6.5;
    double il_ps_db = 10.0;
    double vga_fom = 5280.0;
    double vga_area_mm2 = 0.01;
    double bw_ghz = 1.0;
    double vga_gain_range_db = 82.0;
    double p_lo_mw = 10.0;
    ConverterSpec adc{65.0, 1e9, 8, 1};

    void validate() const
    {
        if (n_antennas < 1)
            throw InvalidArgument("n_antennas must be at least 1");
        if (!(nf_lna_db > 0.0))
            throw InvalidArgument("LNA noise figure must be above 0 dB");
        if (!(fom_lna_per_mw > 0.0) || !(vga_fom > 0.0) || !(vga_area_mm2 > 0.0) || !(bw_ghz > 0.0))
            throw InvalidArgument("receiver figures of merit, area and bandwidth must be positive");
        if (!(vga_gain_range_db > 0.0))
            throw InvalidArgument("VGA gain range must be positive");
        if (!(il_ps_db >= 0.0) || !(p_lo_mw >= 0.0))
            throw InvalidArgument("insertion loss and LO power must be nonnegative");
        adc.validate();
    }
};

struct PowerBudget {
    double rffe_mw = 0.0;
    double gain_stage_mw = 0.0;  // VGA on receive, LPF on transmit
    double converter_mw = 0.0;
    double total_mw = 0.0;
};

inline double pa_input_power_dbm(const TxFrontEndConfig &cfg, const ArchSpec &arch)
{
    cfg.validate();
    arch.validate(cfg.n_antennas);
    double p = cfg.p_bb_in_dbm - 10.0 * std::log10(static_cast<double>(cfg.n_antennas)) - cfg.il_mix_db;
    if (arch.kind != ArchKind::Digital)
        p -= cfg.il_ps_db;
    return p;
}

inline double pa_output_power_dbm(const TxFrontEndConfig &cfg)
{
    return cfg.eirp_dbm - 20.0 * std::log10(static_cast<double>(cfg.n_antennas));
}

inline double tx_rffe_power_mw(const TxFrontEndConfig &cfg, const ArchSpec &arch)
{
    const double p_in = pa_input_power_dbm(cfg, arch);
    const double p_out = pa_output_power_dbm(cfg);
    if (p_in > p_out)
        throw InfeasibleDrive("PA input power " + std::to_string(p_in) + " dBm exceeds output power " +
                              std::to_string(p_out) + " dBm");
    const double p_dc = (dbm_to_mw(p_out) - dbm_to_mw(p_in)) / cfg.eta_pae;
    return cfg.n_antennas * p_dc + arch.n_streams * cfg.p_lo_mw;
}

inline double lna_gain_db(const RxFrontEndConfig &cfg, const ArchSpec &arch)
{
    return arch.kind == ArchKind::Digital ? cfg.g_lna_db : cfg.g_lna_db + cfg.il_ps_db;
}

inline double lna_power_mw(double gain_db, double nf_db, double fom_per_mw)
{
    if (!(nf_db > 0.0))
        throw InvalidArgument("LNA noise figure must be above 0 dB");
    return db_to_linear(gain_db) / (fom_per_mw * (db_to_linear(nf_db) - 1.0));
}

inline double rx_rffe_power_mw(const RxFrontEndConfig &cfg, const ArchSpec &arch)
{
    cfg.validate();
    arch.validate(cfg.n_antennas);
    const double p_lna = lna_power_mw(lna_gain_db(cfg, arch), cfg.nf_lna_db, cfg.fom_lna_per_mw);
    return cfg.n_antennas * p_lna + arch.n_streams * cfg.p_lo_mw;
}

// Gain range needed to hold the baseband output power at the cell edge.
inline double vga_gain_range_db(double p_bb_out_dbm, int n_rx, double il_mix_db, double g_lna_net_db,
                                double p_rx_dbm)
{
    if (n_rx < 1)
        throw InvalidArgument("n_rx must be at least 1");
    return p_bb_out_dbm - 10.0 * std::log10(static_cast<double>(n_rx)) + il_mix_db - g_lna_net_db - p_rx_dbm;
}

inline double vga_power_mw(const RxFrontEndConfig &cfg, const ArchSpec &arch)
{
    cfg.validate();
    arch.validate(cfg.n_antennas);
    const double per_vga = cfg.vga_gain_range_db * cfg.bw_ghz / (cfg.vga_fom * cfg.vga_area_mm2);
    return arch.n_streams * per_vga;
}

inline double converter_power_mw(const ConverterSpec &spec, int n_streams)
{
    spec.validate();
    if (n_streams < 1)
        throw InvalidArgument("n_streams must be at least 1");
    const double per_converter_w = spec.fom_fj_per_conv * 1e-15 * spec.fs_hz * std::ldexp(1.0, spec.n_bits);
    return 2.0 * spec.pairs * n_streams * per_converter_w * 1e3;
}

inline double lpf_power_mw(const LpfSpec &spec, int n_streams)
{
    spec.validate();
    if (n_streams < 1)
        throw InvalidArgument("n_streams must be at least 1");
    return n_streams * spec.fom_mw_per_ghz * spec.order * spec.fc_ghz;
}

inline std::pair<PowerBudget, PowerBudget> front_end_budget(const TxFrontEndConfig &tx, const RxFrontEndConfig &rx,
                                                            const ArchSpec &arch)
{
    PowerBudget t;
    t.rffe_mw = tx_rffe_power_mw(tx, arch);
    t.gain_stage_mw = lpf_power_mw(tx.lpf, arch.n_streams);
    t.converter_mw = converter_power_mw(tx.dac, arch.n_streams);
    t.total_mw = t.rffe_mw + t.gain_stage_mw + t.converter_mw;

    PowerBudget r;
    r.rffe_mw = rx_rffe_power_mw(rx, arch);
    r.gain_stage_mw = vga_power_mw(rx, arch);
    r.converter_mw = converter_power_mw(rx.adc, arch.n_streams);
    r.total_mw = r.rffe_mw + r.gain_stage_mw + r.converter_mw;
    return {t, r};
}

struct PowerTableRow {
    std::string arch;
    PowerBudget tx;
    PowerBudget rx;
};

// The four architectures of the standard comparison: analog, 2-stream hybrid, and fully
// digital with high- and low-resolution converters.
inline std::vector<PowerTableRow> power_table(const TxFrontEndConfig &tx, const RxFrontEndConfig &rx,
                                              int hybrid_streams, int high_res_bits, int low_res_bits)
{
    if (tx.n_antennas != rx.n_antennas)
        throw InvalidArgument("power table expects equal Tx and Rx antenna counts");
    struct Case {
        std::string name;
        ArchSpec arch;
        int bits;
    };
    const std::vector<Case> cases = {
        {"analog", ArchSpec::analog(), high_res_bits},
        {"hybrid", ArchSpec::hybrid(hybrid_streams), high_res_bits},
        {"digital_high_res", ArchSpec::digital(tx.n_antennas), high_res_bits},
        {"digital_low_res", ArchSpec::digital(tx.n_antennas), low_res_bits},
    };
    std::vector<PowerTableRow> rows;
    for (const auto &c : cases) {
        TxFrontEndConfig t = tx;
        RxFrontEndConfig r = rx;
        t.dac.n_bits = c.bits;
        r.adc.n_bits = c.bits;
        auto [bt, br] = front_end_budget(t, r, c.arch);
        rows.push_back({c.name, bt, br});
    }
    return rows;
}

} // namespace lowres
