// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------
//
// Experiment presets: each runs one pipeline from resolved Settings, writes CSV files with the
// resolved configuration in header comments, and emits a matplotlib script for the figure.

#pragma once

#include "lowres/config.hpp"
#include "lowres/network_sim.hpp"
#include "lowres/ofdm_link.hpp"
#include "lowres/parallel.hpp"
#include "lowres/power_model.hpp"
#include "lowres/quantization.hpp"
#include "lowres/sinr_model.hpp"
#include "lowres/tx_chain.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace lowres {

struct RunContext {
    std::filesystem::path out_dir = ".";
    unsigned jobs = 1;
    bool timestamp = true;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct PresetReport {
    std::vector<std::filesystem::path> files;
    std::vector<CheckResult> checks;

    bool all_pass() const
    {
        for (const auto &c : checks)
            if (!c.pass)
                return false;
        return true;
    }
};

// ---- output helpers --------------------------------------------------------------------

inline std::string fmt(double v) { return config_detail::format_double(v); }

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path &path, const std::string &preset, const Settings &s, const RunContext &ctx,
              const std::vector<std::string> &columns)
        : path_(path), out_(path)
    {
        if (!out_)
            throw InvalidArgument("cannot write " + path.string());
        if (ctx.timestamp) {
            const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            char buf[32];
            std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
            out_ << "# generated = " << buf << "\n";
        }
        out_ << "# preset = " << preset << "\n";
        out_ << "# seed = " << s.seed << "\n";
        for (const auto &line : describe_config(s))
            out_ << "# " << line << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
        width_ = columns.size();
    }

    void row(const std::vector<std::string> &cells)
    {
        if (cells.size() != width_)
            throw InvalidArgument("CSV row width does not match the header");
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

    const std::filesystem::path &path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t width_ = 0;
};

inline std::vector<double> sweep_points(double lo, double hi, double step)
{
    if (!(step > 0.0))
        throw InvalidArgument("sweep step must be positive");
    std::vector<double> v;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i)
        v.push_back(lo + static_cast<double>(i) * step);
    return v;
}

// Linear-interpolated percentile (p in [0, 100]) of the finite entries of v.
inline double percentile(std::vector<double> v, double p)
{
    std::erase_if(v, [](double x) { return !std::isfinite(x); });
    if (v.empty())
        throw InvalidArgument("percentile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - f) + v[i + 1] * f : v[i];
}

inline std::filesystem::path write_text(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream out(path);
    if (!out)
        throw InvalidArgument("cannot write " + path.string());
    out << text;
    return path;
}

namespace plot_detail {

inline std::string prelude()
{
    return R"PY(#!/usr/bin/env python3
import csv
import glob
import os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def rows(name):
    with open(os.path.join(HERE, name)) as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))


def num(x):
    return float(x)

)PY";
}

} // namespace plot_detail

// ---- power-table -----------------------------------------------------------------------

// Reference totals (mW) of the standard comparison, Tx then Rx, in power_table() row order.
inline const std::array<double, 4> kReferenceTxTotalsMw = {356.12, 401.44, 1021.82, 502.62};
inline const std::array<double, 4> kReferenceRxTotalsMw = {292.15, 337.01, 742.35, 242.85};

inline PresetReport run_power_table(const Settings &s, const RunContext &ctx)
{
    PresetReport rep;
    const auto rows = power_table(s.power.tx, s.power.rx, s.power.hybrid_streams, s.power.high_res_bits,
                                  s.power.low_res_bits);
    CsvWriter csv(ctx.out_dir / "power_table.csv", "power-table", s, ctx, {"arch", "stage", "mw"});
    for (const auto &r : rows) {
        csv.row({r.arch, "tx_rffe", fmt(r.tx.rffe_mw)});
        csv.row({r.arch, "tx_lpf", fmt(r.tx.gain_stage_mw)});
        csv.row({r.arch, "tx_dac", fmt(r.tx.converter_mw)});
        csv.row({r.arch, "tx_total", fmt(r.tx.total_mw)});
        csv.row({r.arch, "rx_rffe", fmt(r.rx.rffe_mw)});
        csv.row({r.arch, "rx_vga", fmt(r.rx.gain_stage_mw)});
        csv.row({r.arch, "rx_adc", fmt(r.rx.converter_mw)});
        csv.row({r.arch, "rx_total", fmt(r.rx.total_mw)});
    }
    rep.files.push_back(csv.path());
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.size() && i < 4; ++i) {
        worst = std::max(worst, std::abs(rows[i].tx.total_mw / kReferenceTxTotalsMw[i] - 1.0));
        worst = std::max(worst, std::abs(rows[i].rx.total_mw / kReferenceRxTotalsMw[i] - 1.0));
    }
    rep.checks.push_back({"totals within 1% of reference", worst <= 0.01, "worst relative error " + fmt(worst)});
    rep.files.push_back(write_text(ctx.out_dir / "plot_power_table.py", plot_detail::prelude() + R"PY(
data = rows("power_table.csv")
archs = list(dict.fromkeys(r["arch"] for r in data))
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, side in zip(axes, ("tx", "rx")):
    stages = [st for st in dict.fromkeys(r["stage"] for r in data) if st.startswith(side) and not st.endswith("total")]
    bottom = [0.0] * len(archs)
    for st in stages:
        vals = [num(next(r["mw"] for r in data if r["arch"] == a and r["stage"] == st)) for a in archs]
        ax.bar(archs, vals, bottom=bottom, label=st)
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_ylabel("power (mW)")
    ax.set_title(side.upper())
    ax.tick_params(axis="x", rotation=20)
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "power_table.png"), dpi=150)
)PY"));
    return rep;
}

// ---- aqnm-curves -----------------------------------------------------------------------

inline PresetReport run_aqnm_curves(const Settings &s, const RunContext &ctx)
{
    PresetReport rep;
    const auto &num = s.link.numerology;
    const double osr = static_cast<double>(num.fft_size) / static_cast<double>(num.n_used_sc());
    CsvWriter table(ctx.out_dir / "aqnm_alpha.csv", "aqnm-curves", s, ctx,
                    {"n_bits", "step", "alpha", "saturation_db"});
    for (Resolution r : s.aqnm.bits) {
        if (r.is_infinite()) {
            table.row({"inf", "0", "0", "inf"});
            continue;
        }
        const double a = alpha_of(r);
        table.row({r.to_string(), fmt(optimal_step(r.n_bits())), fmt(a), fmt(linear_to_db(sinr_saturation(a, osr)))});
    }
    rep.files.push_back(table.path());
    CsvWriter curves(ctx.out_dir / "aqnm_curves.csv", "aqnm-curves", s, ctx, {"n_bits", "snr_db", "predicted_db"});
    auto all = s.aqnm.bits;
    if (std::find(all.begin(), all.end(), Resolution::infinite()) == all.end())
        all.push_back(Resolution::infinite());
    for (Resolution r : all)
        for (double snr : sweep_points(s.aqnm.snr_min_db, s.aqnm.snr_max_db, s.aqnm.snr_step_db))
            curves.row({r.to_string(), fmt(snr), fmt(predicted_post_eq_snr_db(snr, alpha_of(r), num))});
    rep.files.push_back(curves.path());
    rep.files.push_back(write_text(ctx.out_dir / "plot_aqnm_curves.py", plot_detail::prelude() + R"PY(
data = rows("aqnm_curves.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for n in dict.fromkeys(r["n_bits"] for r in data):
    sel = [r for r in data if r["n_bits"] == n]
    ax.plot([num(r["snr_db"]) for r in sel], [num(r["predicted_db"]) for r in sel], label=f"n = {n}")
ax.set_xlabel("input SNR (dB)")
ax.set_ylabel("post-equalization SNR (dB)")
ax.grid(True)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "aqnm_curves.png"), dpi=150)
)PY"));
    return rep;
}

// ---- link-validate ---------------------------------------------------------------------

inline LinkTrialConfig link_trial_config(const Settings &s, Resolution adc, std::uint64_t seed)
{
    LinkTrialConfig c;
    c.numerology = s.link.numerology;
    c.n_symbols = s.link.n_symbols;
    c.n_pilot_symbols = s.link.n_pilot_symbols;
    c.fir_taps = s.link.fir_taps;
    c.window_advance = s.link.window_advance;
    c.n_adc = adc;
    c.n_dac = s.link.dac_for(adc);
    c.seed = seed;
    return c;
}

struct LinkPoint {
    double x_db = 0.0;
    Resolution n_adc;
    Resolution n_dac;
    LinkTrialResult result;
};

// Every resolution at a given SNR shares one seed, so the curves differ only by quantization.
inline std::vector<LinkPoint> link_validate_points(const Settings &s, unsigned jobs)
{
    const auto snrs = sweep_points(s.link.snr_min_db, s.link.snr_max_db, s.link.snr_step_db);
    const auto &bits = s.link.bits;
    return parallel_map<LinkPoint>(snrs.size() * bits.size(), jobs, [&](std::size_t i) {
        const std::size_t si = i / bits.size(), bi = i % bits.size();
        auto c = link_trial_config(s, bits[bi], substream_seed(s.seed, 500 + si));
        c.snr_db = snrs[si];
        return LinkPoint{snrs[si], c.n_adc, c.n_dac, run_link_trial(c)};
    });
}

inline PresetReport run_link_validate(const Settings &s, const RunContext &ctx)
{
    PresetReport rep;
    const auto pts = link_validate_points(s, ctx.jobs);
    CsvWriter csv(ctx.out_dir / "link_validate.csv", "link-validate", s, ctx,
                  {"snr_db", "n_adc", "n_dac", "used_prbs", "post_eq_db", "predicted_db"});
    double worst = 0.0;
    for (const auto &p : pts) {
        csv.row({fmt(p.x_db), p.n_adc.to_string(), p.n_dac.to_string(), std::to_string(s.link.numerology.used_prbs),
                 fmt(p.result.post_eq_db), fmt(p.result.predicted_db)});
        if (p.x_db <= 25.0)
            worst = std::max(worst, std::abs(p.result.post_eq_db - p.result.predicted_db));
    }
    rep.files.push_back(csv.path());
    if (s.link.dac_mode == DacMode::Offset)
        rep.checks.push_back({"max |simulated - predicted| <= 0.5 dB for SNR <= 25 dB", worst <= 0.5,
                              "worst " + fmt(worst) + " dB"});
    rep.files.push_back(write_text(ctx.out_dir / "plot_link_validate.py", plot_detail::prelude() + R"PY(
data = rows("link_validate.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for n in dict.fromkeys(r["n_adc"] for r in data):
    sel = [r for r in data if r["n_adc"] == n]
    x = [num(r["snr_db"]) for r in sel]
    line, = ax.plot(x, [num(r["predicted_db"]) for r in sel], label=f"predicted n = {n}")
    ax.plot(x, [num(r["post_eq_db"]) for r in sel], "o", color=line.get_color())
ax.set_xlabel("input SNR (dB)")
ax.set_ylabel("post-equalization SNR (dB)")
ax.grid(True)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "link_validate.png"), dpi=150)
)PY"));
    return rep;
}

// ---- sdma-link -------------------------------------------------------------------------

struct SdmaPoint {
    double gamma0_db = 0.0;
    double sir_db = 0.0;
    Resolution n_adc;
    Resolution n_dac;
    LinkTrialResult result;
};

inline std::vector<SdmaPoint> sdma_link_points(const Settings &s, unsigned jobs)
{
    const auto sirs = sweep_points(s.sdma.sir_min_db, s.sdma.sir_max_db, s.sdma.sir_step_db);
    auto bits = s.sdma.bits;
    if (std::find(bits.begin(), bits.end(), Resolution::infinite()) == bits.end())
        bits.push_back(Resolution::infinite());
    const auto &g0 = s.sdma.gamma0_db;
    const std::size_t per_g = sirs.size() * bits.size();
    return parallel_map<SdmaPoint>(g0.size() * per_g, jobs, [&](std::size_t i) {
        const std::size_t gi = i / per_g, si = (i % per_g) / bits.size(), bi = i % bits.size();
        auto c = link_trial_config(s, bits[bi], substream_seed(s.seed, 700 + 100 * gi + si));
        c.gamma0_db = g0[gi];
        c.sir_db = sirs[si];
        return SdmaPoint{g0[gi], sirs[si], c.n_adc, c.n_dac, run_sdma_link_trial(c)};
    });
}

// Simulated loss of resolution r against infinite resolution at matching (gamma0, sir).
inline std::vector<std::pair<double, double>> sdma_losses(const std::vector<SdmaPoint> &pts, double gamma0,
                                                          Resolution r)
{
    std::vector<std::pair<double, double>> out;
    for (const auto &p : pts) {
        if (p.gamma0_db != gamma0 || p.n_adc != r)
            continue;
        for (const auto &q : pts)
            if (q.gamma0_db == gamma0 && q.sir_db == p.sir_db && q.n_adc.is_infinite())
                out.emplace_back(p.sir_db, q.result.post_eq_db - p.result.post_eq_db);
    }
    return out;
}

inline PresetReport run_sdma_link(const Settings &s, const RunContext &ctx)
{
    PresetReport rep;
    const auto pts = sdma_link_points(s, ctx.jobs);
    for (double g0 : s.sdma.gamma0_db) {
        CsvWriter csv(ctx.out_dir / ("sdma_link_g0_" + fmt(g0) + "db.csv"), "sdma-link", s, ctx,
                      {"sir_db", "n_adc", "n_dac", "used_prbs", "post_eq_db", "predicted_db"});
        for (const auto &p : pts)
            if (p.gamma0_db == g0)
                csv.row({fmt(p.sir_db), p.n_adc.to_string(), p.n_dac.to_string(),
                         std::to_string(s.link.numerology.used_prbs), fmt(p.result.post_eq_db),
                         fmt(p.result.predicted_db)});
        rep.files.push_back(csv.path());
    }
    const auto has = [&](double g0, int n) {
        return std::find(s.sdma.gamma0_db.begin(), s.sdma.gamma0_db.end(), g0) != s.sdma.gamma0_db.end() &&
               std::find(s.sdma.bits.begin(), s.sdma.bits.end(), Resolution::bits(n)) != s.sdma.bits.end();
    };
    if (has(0.0, 3)) {
        double worst = 0.0;
        for (auto [sir, loss] : sdma_losses(pts, 0.0, Resolution::bits(3)))
            worst = std::max(worst, loss);
        rep.checks.push_back({"gamma0 = 0 dB, n = 3: loss < 0.5 dB at all SIR", worst < 0.5, "max " + fmt(worst)});
    }
    for (int n : {3, 4}) {
        if (!has(15.0, n))
            continue;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (auto [sir, loss] : sdma_losses(pts, 15.0, Resolution::bits(n)))
            if (sir >= 30.0) {
                lo = std::min(lo, loss);
                hi = std::max(hi, loss);
            }
        if (!std::isfinite(lo))
            continue;
        const bool ok = n == 3 ? (lo >= 1.3 && hi <= 2.7) : hi < 1.0;
        rep.checks.push_back({"gamma0 = 15 dB, SIR >= 30 dB, n = " + std::to_string(n) +
                                  (n == 3 ? ": loss in 2 +/- 0.7 dB" : ": loss < 1 dB"),
                              ok, "range [" + fmt(lo) + ", " + fmt(hi) + "] dB"});
    }
    rep.files.push_back(write_text(ctx.out_dir / "plot_sdma_link.py", plot_detail::prelude() + R"PY(
files = sorted(glob.glob(os.path.join(HERE, "sdma_link_g0_*.csv")))
fig, axes = plt.subplots(1, len(files), figsize=(6 * len(files), 4), squeeze=False)
for ax, path in zip(axes[0], files):
    data = rows(os.path.basename(path))
    for n in dict.fromkeys(r["n_adc"] for r in data):
        sel = [r for r in data if r["n_adc"] == n]
        x = [num(r["sir_db"]) for r in sel]
        line, = ax.plot(x, [num(r["predicted_db"]) for r in sel], label=f"predicted n = {n}")
        ax.plot(x, [num(r["post_eq_db"]) for r in sel], "o", color=line.get_color())
    ax.set_title(os.path.basename(path))
    ax.set_xlabel("SIR (dB)")
    ax.set_ylabel("post-equalization SINR (dB)")
    ax.grid(True)
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "sdma_link.png"), dpi=150)
)PY"));
    return rep;
}

// ---- cell-ofdma / cell-sdma ------------------------------------------------------------

struct CellRun {
    std::vector<std::vector<DropResult>> drops;  // [drop][resolution]
    std::vector<Resolution> bits;
};

inline CellRun run_cells(const Settings &s, SchedulerKind kind, int n_beams, unsigned jobs)
{
    NetworkConfig cfg = s.network.cfg;
    cfg.seed = s.seed;
    cfg.scheduler = kind;
    cfg.n_beams_max = n_beams;
    return {run_drops(cfg, s.network.n_drops, s.network.bits, jobs), s.network.bits};
}

inline std::vector<double> cell_metric(const CellRun &run, std::size_t r, bool sinr)
{
    std::vector<double> v;
    for (const auto &d : run.drops)
        for (const auto &u : d[r].ues)
            v.push_back(sinr ? u.sinr_db : u.rate_bps);
    return v;
}

inline std::optional<std::size_t> resolution_index(const CellRun &run, Resolution r)
{
    for (std::size_t i = 0; i < run.bits.size(); ++i)
        if (run.bits[i] == r)
            return i;
    return std::nullopt;
}

inline double fraction_above(const std::vector<double> &v, double threshold)
{
    if (v.empty())
        return 0.0;
    return static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x > threshold; })) /
           static_cast<double>(v.size());
}

// Largest elementwise SINR increase when lowering the resolution; <= 0 means dominance holds.
inline double dominance_violation(const CellRun &run)
{
    std::vector<std::size_t> order(run.bits.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return run.bits[a] < run.bits[b]; });
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto &d : run.drops)
        for (std::size_t k = 0; k + 1 < order.size(); ++k)
            for (std::size_t u = 0; u < d[order[k]].ues.size(); ++u) {
                const double lo = d[order[k]].ues[u].sinr_db, hi = d[order[k + 1]].ues[u].sinr_db;
                if (std::isfinite(lo) && std::isfinite(hi))
                    worst = std::max(worst, lo - hi);
            }
    return worst;
}

inline void write_cell_outputs(const CellRun &run, const std::string &stem, const std::string &preset,
                               const std::string &scheduler, const Settings &s, const RunContext &ctx,
                               PresetReport &rep)
{
    CsvWriter ues(ctx.out_dir / (stem + "_ues.csv"), preset, s, ctx,
                  {"drop", "ue", "serving_bs", "sinr_db", "rate_bps", "n_bits", "scheduler"});
    for (std::size_t d = 0; d < run.drops.size(); ++d)
        for (std::size_t r = 0; r < run.bits.size(); ++r)
            for (const auto &u : run.drops[d][r].ues)
                ues.row({std::to_string(d), std::to_string(u.ue), std::to_string(u.serving_bs),
                         std::isfinite(u.sinr_db) ? fmt(u.sinr_db) : "nan", fmt(u.rate_bps), u.n_bits.to_string(),
                         scheduler});
    rep.files.push_back(ues.path());
    for (bool sinr : {true, false}) {
        CsvWriter cdf(ctx.out_dir / (stem + (sinr ? "_sinr_cdf.csv" : "_rate_cdf.csv")), preset, s, ctx,
                      {"n_bits", "percentile", "value"});
        for (std::size_t r = 0; r < run.bits.size(); ++r) {
            const auto v = cell_metric(run, r, sinr);
            for (int p = 0; p <= 100; ++p)
                cdf.row({run.bits[r].to_string(), std::to_string(p), fmt(percentile(v, p))});
        }
        rep.files.push_back(cdf.path());
    }
}

inline std::string cell_plot_script(const std::string &glob_stem, const std::string &png)
{
    return plot_detail::prelude() + "STEMS = sorted(glob.glob(os.path.join(HERE, \"" + glob_stem +
           "_sinr_cdf.csv\")))\nPNG = \"" + png + "\"\n" + R"PY(
fig, axes = plt.subplots(len(STEMS), 2, figsize=(11, 4 * len(STEMS)), squeeze=False)
for row, path in zip(axes, STEMS):
    stem = os.path.basename(path)[: -len("_sinr_cdf.csv")]
    for ax, metric, label, scale in ((row[0], "sinr", "SINR (dB)", 1.0), (row[1], "rate", "rate (Gbps)", 1e-9)):
        data = rows(f"{stem}_{metric}_cdf.csv")
        for n in dict.fromkeys(r["n_bits"] for r in data):
            sel = [r for r in data if r["n_bits"] == n]
            ax.plot([num(r["value"]) * scale for r in sel], [num(r["percentile"]) / 100 for r in sel], label=f"n = {n}")
        ax.set_xlabel(label)
        ax.set_ylabel("CDF")
        ax.set_title(stem)
        ax.grid(True)
        ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, PNG), dpi=150)
)PY";
}

inline PresetReport run_cell_ofdma(const Settings &s, const RunContext &ctx)
{
    PresetReport rep;
    const auto run = run_cells(s, SchedulerKind::OfdmaPf, 1, ctx.jobs);
    write_cell_outputs(run, "cell_ofdma", "cell-ofdma", "OFDMA_PF", s, ctx, rep);
    const double viol = dominance_violation(run);
    rep.checks.push_back({"AQNM dominance on matched drops", viol <= 1e-9, "max increase " + fmt(viol) + " dB"});
    const auto i3 = resolution_index(run, Resolution::bits(3));
    const auto iinf = resolution_index(run, Resolution::infinite());
    if (i3 && iinf) {
        const auto a = cell_metric(run, *iinf, true), b = cell_metric(run, *i3, true);
        const double l50 = percentile(a, 50) - percentile(b, 50);
        const double l90 = percentile(a, 90) - percentile(b, 90);
        rep.checks.push_back({"n = 3 median SINR loss in [0.5, 2] dB", l50 >= 0.5 && l50 <= 2.0, fmt(l50) + " dB"});
        rep.checks.push_back(
            {"n = 3 90th-percentile SINR loss in [2, 6] dB", l90 >= 2.0 && l90 <= 6.0, fmt(l90) + " dB"});
    }
    rep.files.push_back(write_text(ctx.out_dir / "plot_cell_ofdma.py", cell_plot_script("cell_ofdma", "cell_ofdma.png")));
    return rep;
}

inline double full_group_fraction(const CellRun &run, int n_beams)
{
    std::size_t full = 0, total = 0;
    for (const auto &d : run.drops) {
        const auto &u = d.front().beam_usage;
        for (std::size_t k = 0; k < u.size(); ++k) {
            total += u[k];
            if (static_cast<int>(k) == n_beams)
                full += u[k];
        }
    }
    return total ? static_cast<double>(full) / static_cast<double>(total) : 0.0;
}

inline PresetReport run_cell_sdma(const Settings &s, const RunContext &ctx)
{
    PresetReport rep;
    std::optional<CellRun> four;
    for (int k : s.network.sdma_beams) {
        const auto run = run_cells(s, SchedulerKind::SdmaGreedy, k, ctx.jobs);
        const std::string stem = "cell_sdma_b" + std::to_string(k);
        write_cell_outputs(run, stem, "cell-sdma", "SDMA_GREEDY", s, ctx, rep);
        CsvWriter usage(ctx.out_dir / (stem + "_beam_usage.csv"), "cell-sdma", s, ctx, {"beams", "count", "fraction"});
        std::vector<std::size_t> hist;
        for (const auto &d : run.drops) {
            const auto &u = d.front().beam_usage;
            hist.resize(std::max(hist.size(), u.size()), 0);
            for (std::size_t i = 0; i < u.size(); ++i)
                hist[i] += u[i];
        }
        const double total = static_cast<double>(std::accumulate(hist.begin(), hist.end(), std::size_t{0}));
        for (std::size_t i = 0; i < hist.size(); ++i)
            usage.row({std::to_string(i), std::to_string(hist[i]), fmt(total > 0 ? hist[i] / total : 0.0)});
        rep.files.push_back(usage.path());
        const double viol = dominance_violation(run);
        rep.checks.push_back({"AQNM dominance on matched drops (" + std::to_string(k) + " beams)", viol <= 1e-9,
                              "max increase " + fmt(viol) + " dB"});
        if (k == 2) {
            const double f = full_group_fraction(run, 2);
            rep.checks.push_back({"2 beams used in > 90% of TTIs", f > 0.9, fmt(f)});
        }
        if (k == 4)
            four = run;
    }
    if (four) {
        const auto ofdma = run_cells(s, SchedulerKind::OfdmaPf, 1, ctx.jobs);
        for (std::size_t r = 0; r < four->bits.size(); ++r) {
            const double fs = fraction_above(cell_metric(*four, r, false), 1e9);
            const double fo = fraction_above(cell_metric(ofdma, r, false), 1e9);
            rep.checks.push_back({"n = " + four->bits[r].to_string() + ": 4-beam > 1 Gbps fraction >= 5x OFDMA",
                                  fs >= 5.0 * fo, fmt(fs) + " vs " + fmt(fo)});
        }
    }
    rep.files.push_back(write_text(ctx.out_dir / "plot_cell_sdma.py", cell_plot_script("cell_sdma_b*", "cell_sdma.png")));
    return rep;
}

// ---- tx-psd / aclr-sweep / evm-sweep ---------------------------------------------------

inline OfdmNumerology tx_numerology(const Settings &s)
{
    OfdmNumerology n = s.link.numerology;
    n.used_prbs = s.tx.used_prbs;
    return n;
}

inline DacChainConfig tx_chain_config(const Settings &s, Resolution bits, int order)
{
    DacChainConfig c = s.tx.dac;
    c.n_bits = bits;
    c.lpf_order = order;
    return c;
}

inline PresetReport run_tx_psd(const Settings &s, const RunContext &ctx)
{
    PresetReport rep;
    const TxFrame frame = make_tx_frame(tx_numerology(s), s.tx.n_symbols, s.tx.modulation, s.seed);
    struct Job {
        Resolution bits;
        int order;
    };
    std::vector<Job> jobs;
    for (Resolution b : s.tx.psd_bits)
        for (int o : s.tx.psd_lpf_orders)
            jobs.push_back({b, o});
    const auto reports = parallel_map<SpectrumReport>(jobs.size(), ctx.jobs, [&](std::size_t i) {
        return measure_spectrum(frame, tx_chain_config(s, jobs[i].bits, jobs[i].order), s.tx.plan, s.tx.nperseg);
    });
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        CsvWriter csv(ctx.out_dir / ("tx_psd_n" + jobs[i].bits.to_string() + "_o" + std::to_string(jobs[i].order) +
                                     ".csv"),
                      "tx-psd", s, ctx, {"freq_offset_hz", "psd_db"});
        for (std::size_t k = 0; k < reports[i].freqs_hz.size(); ++k)
            csv.row({fmt(reports[i].freqs_hz[k]), fmt(reports[i].psd_dbm_per_hz[k])});
        rep.files.push_back(csv.path());
    }
    rep.files.push_back(write_text(ctx.out_dir / "plot_tx_psd.py", plot_detail::prelude() + R"PY(
fig, ax = plt.subplots(figsize=(7, 4))
for path in sorted(glob.glob(os.path.join(HERE, "tx_psd_n*_o*.csv"))):
    data = rows(os.path.basename(path))
    ax.plot([num(r["freq_offset_hz"]) / 1e6 for r in data], [num(r["psd_db"]) for r in data],
            label=os.path.basename(path)[len("tx_psd_"):-4])
ax.set_xlabel("frequency offset (MHz)")
ax.set_ylabel("PSD (dB/Hz)")
ax.grid(True)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "tx_psd.png"), dpi=150)
)PY"));
    return rep;
}

struct AclrPoint {
    Resolution bits;
    int order = 0;
    std::map<int, double> aclr_db;
};

inline std::vector<AclrPoint> aclr_points(const Settings &s, unsigned jobs)
{
    const TxFrame frame = make_tx_frame(tx_numerology(s), s.tx.n_symbols, s.tx.modulation, s.seed);
    std::vector<AclrPoint> pts;
    for (Resolution b : s.tx.aclr_bits)
        for (int o : s.tx.aclr_lpf_orders)
            pts.push_back({b, o, {}});
    parallel_for(pts.size(), jobs, [&](std::size_t i) {
        pts[i].aclr_db =
            measure_spectrum(frame, tx_chain_config(s, pts[i].bits, pts[i].order), s.tx.plan, s.tx.nperseg).aclr_db;
    });
    return pts;
}

// The worse of the two sides of adjacent channel k.
inline double worst_aclr(const AclrPoint &p, int k) { return std::min(p.aclr_db.at(k), p.aclr_db.at(-k)); }

inline PresetReport run_aclr_sweep(const Settings &s, const RunContext &ctx)
{
    PresetReport rep;
    const auto pts = aclr_points(s, ctx.jobs);
    CsvWriter csv(ctx.out_dir / "aclr_sweep.csv", "aclr-sweep", s, ctx,
                  {"n_bits", "lpf_order", "adj_index", "aclr_db", "limit_bs_db", "limit_ue_db"});
    for (const auto &p : pts)
        for (const auto &[k, v] : p.aclr_db)
            csv.row({p.bits.to_string(), std::to_string(p.order), std::to_string(k), fmt(v), fmt(s.tx.limit_bs_db),
                     fmt(s.tx.limit_ue_db)});
    rep.files.push_back(csv.path());
    bool ok_bs = true, ok_ue = true, any_bs = false, any_ue = false;
    std::string d_bs, d_ue;
    std::optional<double> inf_order0_ch2;
    for (const auto &p : pts) {
        const double ch1 = worst_aclr(p, 1);
        if (p.order == 1 && p.bits.rank() >= 4) {
            any_bs = true;
            ok_bs = ok_bs && ch1 >= s.tx.limit_bs_db;
            d_bs += "n=" + p.bits.to_string() + ":" + fmt(ch1) + " ";
        }
        if (p.order == 0 && p.bits.rank() >= 3) {
            any_ue = true;
            ok_ue = ok_ue && ch1 >= s.tx.limit_ue_db;
            d_ue += "n=" + p.bits.to_string() + ":" + fmt(ch1) + " ";
        }
        if (p.order == 0 && p.bits.is_infinite() && p.aclr_db.count(2))
            inf_order0_ch2 = worst_aclr(p, 2);
    }
    if (any_bs)
        rep.checks.push_back({"order 1, n >= 4: ACLR ch1 >= BS limit", ok_bs, d_bs});
    if (any_ue)
        rep.checks.push_back({"order 0, n >= 3: ACLR ch1 >= UE limit", ok_ue, d_ue});
    if (inf_order0_ch2)
        rep.checks.push_back({"order 0, infinite resolution: ACLR ch2 below BS limit",
                              *inf_order0_ch2 < s.tx.limit_bs_db, fmt(*inf_order0_ch2) + " dB"});
    rep.files.push_back(write_text(ctx.out_dir / "plot_aclr_sweep.py", plot_detail::prelude() + R"PY(
data = rows("aclr_sweep.csv")
fig, axes = plt.subplots(1, 2, figsize=(11, 4))
for ax, adj in zip(axes, ("1", "2")):
    for order in dict.fromkeys(r["lpf_order"] for r in data):
        sel = [r for r in data if r["lpf_order"] == order and r["adj_index"] == adj]
        ax.plot([r["n_bits"] for r in sel], [num(r["aclr_db"]) for r in sel], "o-", label=f"order {order}")
    ax.axhline(num(data[0]["limit_bs_db"]), color="k", ls="--", label="BS limit")
    ax.axhline(num(data[0]["limit_ue_db"]), color="k", ls=":", label="UE limit")
    ax.set_xlabel("DAC bits")
    ax.set_ylabel(f"ACLR, adjacent channel {adj} (dB)")
    ax.grid(True)
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "aclr_sweep.png"), dpi=150)
)PY"));
    return rep;
}

struct EvmSeries {
    Resolution bits;
    std::vector<double> inv_sigma_db;
    std::vector<double> evm_pct;
    std::vector<double> predicted_pct;
    double floor_pct = 0.0;            // measured without RF noise
    double floor_predicted_pct = 0.0;  // sqrt(alpha^2 + sigma_v^2 / E|I|^2)
};

inline std::vector<EvmSeries> evm_series(const Settings &s, unsigned jobs)
{
    const OfdmNumerology num = tx_numerology(s);
    const TxFrame frame = make_tx_frame(num, s.tx.evm_n_symbols, s.tx.evm_modulation, s.seed);
    const auto inv = sweep_points(s.tx.inv_sigma_rf_min_db, s.tx.inv_sigma_rf_max_db, s.tx.inv_sigma_rf_step_db);
    std::vector<double> sig2;
    for (double x : inv)
        sig2.push_back(db_to_linear(-x));
    sig2.push_back(0.0);
    return parallel_map<EvmSeries>(s.tx.evm_bits.size(), jobs, [&](std::size_t i) {
        const Resolution b = s.tx.evm_bits[i];
        const DacChainConfig cfg = tx_chain_config(s, b, s.tx.dac.lpf_order);
        const auto errs = dac_chain_errors(frame, cfg);
        auto curve = evm_curve(errs, sig2, s.seed);
        EvmSeries out;
        out.bits = b;
        out.inv_sigma_db = inv;
        out.floor_pct = curve.back();
        curve.pop_back();
        out.evm_pct = curve;
        const double a = alpha_of(b);
        const double sv = inband_quantization_noise(a, num.occupied_bw_hz(), cfg.dac_fs_hz());
        for (double x : inv)
            out.predicted_pct.push_back(evm_prediction(a, db_to_linear(-x), sv, 1.0));
        out.floor_predicted_pct = evm_prediction(a, 0.0, sv, 1.0);
        return out;
    });
}

inline PresetReport run_evm_sweep(const Settings &s, const RunContext &ctx)
{
    PresetReport rep;
    const auto series = evm_series(s, ctx.jobs);
    CsvWriter csv(ctx.out_dir / "evm_sweep.csv", "evm-sweep", s, ctx,
                  {"n_bits", "inv_sigma_rf_db", "evm_pct", "predicted_pct"});
    for (const auto &e : series)
        for (std::size_t k = 0; k < e.inv_sigma_db.size(); ++k)
            csv.row({e.bits.to_string(), fmt(e.inv_sigma_db[k]), fmt(e.evm_pct[k]), fmt(e.predicted_pct[k])});
    rep.files.push_back(csv.path());
    const EvmThresholds th;
    for (const auto &e : series) {
        const double rel = std::abs(e.floor_pct / e.floor_predicted_pct - 1.0);
        if (!e.bits.is_infinite() && e.bits.n_bits() >= 3 && e.bits.n_bits() <= 6)
            rep.checks.push_back({"n = " + e.bits.to_string() + ": EVM floor within 10% of prediction", rel <= 0.10,
                                  fmt(e.floor_pct) + "% vs " + fmt(e.floor_predicted_pct) + "%"});
        const double best = *std::min_element(e.evm_pct.begin(), e.evm_pct.end());
        if (e.bits == Resolution::bits(4))
            rep.checks.push_back({"n = 4 passes the 64-QAM limit", best < th.qam64, fmt(best) + "%"});
        if (e.bits == Resolution::bits(6))
            rep.checks.push_back({"n = 6 passes the 256-QAM limit", best < th.qam256, fmt(best) + "%"});
        if (e.bits == Resolution::bits(5))
            rep.checks.push_back({"n = 5 does not pass the 256-QAM limit", best >= th.qam256, fmt(best) + "%"});
    }
    rep.files.push_back(write_text(ctx.out_dir / "plot_evm_sweep.py", plot_detail::prelude() + R"PY(
data = rows("evm_sweep.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for n in dict.fromkeys(r["n_bits"] for r in data):
    sel = [r for r in data if r["n_bits"] == n]
    x = [num(r["inv_sigma_rf_db"]) for r in sel]
    line, = ax.semilogy(x, [num(r["evm_pct"]) for r in sel], "o", label=f"n = {n}")
    ax.semilogy(x, [num(r["predicted_pct"]) for r in sel], color=line.get_color())
for level in (17.5, 12.5, 8.0, 3.5):
    ax.axhline(level, color="k", ls=":", lw=0.8)
ax.set_xlabel("1 / sigma_RF^2 (dB)")
ax.set_ylabel("EVM (%)")
ax.grid(True, which="both")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "evm_sweep.png"), dpi=150)
)PY"));
    return rep;
}

// ---- dispatch --------------------------------------------------------------------------

using PresetFn = std::function<PresetReport(const Settings &, const RunContext &)>;

inline const std::vector<std::pair<std::string, PresetFn>> &presets()
{
    static const std::vector<std::pair<std::string, PresetFn>> table = {
        {"power-table", run_power_table}, {"aqnm-curves", run_aqnm_curves}, {"link-validate", run_link_validate},
        {"sdma-link", run_sdma_link},     {"cell-ofdma", run_cell_ofdma},   {"cell-sdma", run_cell_sdma},
        {"tx-psd", run_tx_psd},           {"aclr-sweep", run_aclr_sweep},   {"evm-sweep", run_evm_sweep},
    };
    return table;
}

inline PresetReport run_preset(const std::string &name, const Settings &s, const RunContext &ctx)
{
    for (const auto &[n, fn] : presets())
        if (n == name) {
            std::filesystem::create_directories(ctx.out_dir);
            return fn(s, ctx);
        }
    throw InvalidArgument("unknown preset '" + name + "'");
}

} // namespace lowres
