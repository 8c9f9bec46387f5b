// SPDX-License-Identifier: Apache-2.0
//
// lowres: low-resolution converter analysis toolkit for mmWave cellular links
// ------------------------------------------------------------------------

#include "lowres/config.hpp"
#include "lowres/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kDomainError = 2, kCheckFailed = 3 };

std::string read_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw lowres::ConfigError({"cannot open config file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// "a:b" or "a:b:step"
std::vector<lowres::ConfigEntry> snr_overrides(const std::string &section, const std::string &prefix,
                                               const std::string &range)
{
    std::vector<std::string> parts;
    std::stringstream ss(range);
    std::string p;
    while (std::getline(ss, p, ':'))
        parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 3)
        throw lowres::ConfigError({"range '" + range + "' is not of the form min:max[:step]"});
    std::vector<lowres::ConfigEntry> out = {{section, prefix + "_min_db", parts[0], 0},
                                            {section, prefix + "_max_db", parts[1], 0}};
    if (parts.size() == 3)
        out.push_back({section, prefix + "_step_db", parts[2], 0});
    return out;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"lowres: low-resolution converter experiments"};
    std::string preset, config_path, out_dir = "out", bits, snr;
    std::optional<std::uint64_t> seed;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool no_timestamp = false, check = false, list = false, dump = false;
    std::vector<std::string> sets;

    std::vector<std::string> names;
    for (const auto &p : lowres::presets())
        names.push_back(p.first);
    app.add_option("--preset", preset, "Experiment to run")->check(CLI::IsMember(names));
    app.add_option("--config", config_path, "INI configuration file");
    app.add_option("--seed", seed, "Master seed (overrides general.seed)");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Output directory");
    app.add_flag("--no-timestamp", no_timestamp, "Omit the timestamp header line");
    app.add_flag("--check", check, "Evaluate the preset's acceptance checks; exit 3 on failure");
    app.add_option("--set", sets, "Override a key: section.key=value (repeatable)");
    app.add_option("--bits", bits, "Resolution list for the preset, e.g. 2,3,4 or inf");
    app.add_option("--snr", snr, "Sweep range min:max[:step] in dB (SNR, or SIR for sdma-link)");
    app.add_flag("--list-presets", list, "Print preset names");
    app.add_flag("--dump-config", dump, "Print the resolved configuration and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }
    if (list) {
        for (const auto &n : names)
            std::cout << n << "\n";
        return kOk;
    }

    lowres::Settings settings;
    try {
        std::vector<lowres::ConfigEntry> entries;
        if (!config_path.empty())
            entries = lowres::parse_ini(read_file(config_path));
        const std::string section = preset == "sdma-link"                         ? "sdma"
                                    : preset == "aqnm-curves"                     ? "aqnm"
                                    : preset == "cell-ofdma" || preset == "cell-sdma" ? "network"
                                    : preset == "tx-psd"                          ? "tx"
                                    : preset == "aclr-sweep"                      ? "tx"
                                    : preset == "evm-sweep"                       ? "tx"
                                                                                  : "link";
        if (!bits.empty()) {
            const std::string key = preset == "tx-psd"       ? "psd_bits"
                                    : preset == "aclr-sweep" ? "aclr_bits"
                                    : preset == "evm-sweep"  ? "evm_bits"
                                                             : "bits";
            entries.push_back({section, key, bits, 0});
        }
        if (!snr.empty()) {
            const auto extra = preset == "sdma-link" ? snr_overrides("sdma", "sir", snr)
                                                     : snr_overrides(preset == "aqnm-curves" ? "aqnm" : "link", "snr", snr);
            entries.insert(entries.end(), extra.begin(), extra.end());
        }
        for (const auto &s : sets)
            entries.push_back(lowres::parse_override(s));
        if (seed)
            entries.push_back({"general", "seed", std::to_string(*seed), 0});
        settings = lowres::resolve_config(entries);
    } catch (const lowres::ConfigError &e) {
        for (const auto &p : e.problems)
            std::cerr << "config error: " << p << "\n";
        return kConfigError;
    }

    if (dump) {
        for (const auto &line : lowres::describe_config(settings))
            std::cout << line << "\n";
        return kOk;
    }
    if (preset.empty()) {
        std::cerr << "config error: --preset is required\n";
        return kConfigError;
    }

    try {
        lowres::RunContext ctx{out_dir, jobs, !no_timestamp};
        const auto report = lowres::run_preset(preset, settings, ctx);
        for (const auto &f : report.files)
            std::cout << "wrote " << f.string() << "\n";
        if (check) {
            for (const auto &c : report.checks)
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
            if (!report.all_pass())
                return kCheckFailed;
        }
    } catch (const lowres::DomainError &e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kDomainError;
    } catch (const std::invalid_argument &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDomainError;
    }
    return kOk;
}
