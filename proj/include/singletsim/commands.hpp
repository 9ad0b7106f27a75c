/**
 * @file commands.hpp
 * @brief Subcommand implementations behind the command-line tool.
 *
 * Each command throws InputError for bad input and NumericalError for
 * numerical failure; exit_code() maps both to process exit codes.
 */
#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "singletsim/analysis.hpp"
#include "singletsim/config.hpp"
#include "singletsim/errors.hpp"
#include "singletsim/presets.hpp"
#include "singletsim/sequences.hpp"
#include "singletsim/trace_io.hpp"

namespace singletsim {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumerical = 2;

// ============================================================================
// simulate
// ============================================================================

/// Noiseless protocol trace with the configured envelope applied.
[[nodiscard]] inline Trace simulate_clean(const RunConfig& c) {
    const Protocol& p = c.protocol;
    Trace t;
    switch (p.kind) {
        case ProtocolKind::rabi: t = run_rabi(c.system, p); break;
        case ProtocolKind::double_rabi: t = run_double_rabi(c.system, p); break;
        case ProtocolKind::ramsey: t = run_ramsey(c.system, p); break;
        case ProtocolKind::pumping: return run_pumping(c.system, p);
        case ProtocolKind::resonance_scan:
            throw InputError("resonance_scan configs run with the scan command");
    }
    if (c.envelope.empty()) return t;
    if (!t.sweep_is_time) {
        throw InputError("envelope: lifetimes apply only to duration or delay sweeps");
    }
    if (p.kind == ProtocolKind::double_rabi) {
        // both blocks elapse for each sweep value
        const auto sweep = t.sweep;
        for (auto& v : t.sweep) v *= 2.0;
        t = apply_relaxation_envelope(t, c.envelope);
        t.sweep = sweep;
        return t;
    }
    return apply_relaxation_envelope(t, c.envelope);
}

/// Additive Gaussian noise on the observable, seeded.
inline void add_noise(Trace& t, const NoiseSpec& noise) {
    if (!noise.enabled()) return;
    std::mt19937_64 rng(*noise.seed);
    std::normal_distribution<double> g(0.0, noise.sigma);
    for (auto& v : t.observable) v += g(rng);
    t.metadata["noise_sigma"] = noise.sigma;
    t.metadata["noise_seed"] = *noise.seed;
}

[[nodiscard]] inline Trace simulate_trace(const RunConfig& c) {
    Trace t = simulate_clean(c);
    add_noise(t, c.noise);
    return t;
}

/// Runs the configured protocol and writes <out_dir>/<trace_file>.
inline fs::path cmd_simulate(const RunConfig& c, const fs::path& out_dir) {
    const Trace t = simulate_trace(c);
    fs::create_directories(out_dir);
    const fs::path path = out_dir / c.trace_file;
    write_trace_csv(path.string(), t, c.resolved);
    return path;
}

// ============================================================================
// fit
// ============================================================================

enum class FitModel { rabi, ramsey, lorentzian, exponential };

[[nodiscard]] inline FitModel parse_fit_model(const std::string& s) {
    if (s == "rabi") return FitModel::rabi;
    if (s == "ramsey") return FitModel::ramsey;
    if (s == "lorentzian") return FitModel::lorentzian;
    if (s == "exponential") return FitModel::exponential;
    throw InputError("--model must be rabi, ramsey, lorentzian or exponential");
}

struct FitRequest {
    FitModel model = FitModel::rabi;
    std::string column = "observable";  ///< or pairN_singlet
    std::optional<RabiMode> rabi_mode;   ///< default from trace metadata
    RamseySign ramsey_sign = RamseySign::plus;
    FitOptions options;
};

[[nodiscard]] inline std::vector<double> trace_column(const Trace& t, const std::string& column) {
    if (column == "observable") return t.observable;
    const std::string pre = "pair", post = "_singlet";
    if (column.size() > pre.size() + post.size() && column.rfind(pre, 0) == 0 &&
        column.compare(column.size() - post.size(), post.size(), post) == 0) {
        const std::string num = column.substr(pre.size(), column.size() - pre.size() - post.size());
        const int k = static_cast<int>(parse_number(num, "--column")) - 1;
        if (k >= 0 && static_cast<std::size_t>(k) < t.pair_singlet.size()) {
            return t.pair_singlet[static_cast<std::size_t>(k)];
        }
    }
    throw InputError("--column: no column named '" + column + "'");
}

/// The readout pair of a trace, or the pair named by a pairN_singlet column.
[[nodiscard]] inline RabiMode default_rabi_mode(const Trace& t, const std::string& column) {
    const auto& m = t.metadata;
    if (!m.contains("source_pair") || !m["source_pair"].is_number_integer()) return RabiMode::sin2;
    const int source = m["source_pair"].get<int>();
    int pair = m.contains("readout_pair") && m["readout_pair"].is_number_integer()
                   ? m["readout_pair"].get<int>()
                   : -1;
    if (column != "observable") pair = std::stoi(column.substr(4));
    return pair == source ? RabiMode::cos2 : RabiMode::sin2;
}

/// Model curve at x from fitted parameters.
[[nodiscard]] inline double evaluate_fit(const FitResult& r, double x, RabiMode mode, RamseySign sign) {
    if (r.model.starts_with("rabi")) {
        return rabi_model(x, r.value("A"), r.value("f_hz"), r.value("c"), r.value("T_rabi_s"), mode);
    }
    if (r.model.starts_with("ramsey")) {
        return ramsey_model(x, r.value("A"), r.value("f_hz"), r.value("phi_rad"), r.value("c"),
                            r.value("T2s_s"), r.value("Ts_s"), sign);
    }
    if (r.model == "lorentzian") {
        return lorentzian_model(x, r.value("center"), r.value("fwhm"), r.value("height"),
                                r.value("baseline"));
    }
    return exponential_model(x, r.value("A"), r.value("T_s"), r.value("c"));
}

[[nodiscard]] inline ojson number_or_null(double v) {
    return std::isfinite(v) ? ojson(v) : ojson(nullptr);
}

[[nodiscard]] inline ojson fit_report_json(const FitResult& r) {
    ojson params = ojson::array();
    for (const auto& p : r.params) {
        params.push_back({{"name", p.name},
                          {"value", number_or_null(p.value)},
                          {"sigma", number_or_null(p.sigma)},
                          {"fixed", p.fixed}});
    }
    return {{"model", r.model},
            {"converged", r.converged},
            {"flat", r.flat},
            {"iterations", r.iterations},
            {"message", r.message},
            {"rss", r.rss},
            {"reduced_chi2", number_or_null(r.reduced_chi2)},
            {"dof", r.dof},
            {"parameters", params}};
}

struct FitOutcome {
    FitResult result;
    RabiMode rabi_mode = RabiMode::sin2;
    ojson report;
};

[[nodiscard]] inline FitOutcome fit_trace(const TraceFile& tf, const FitRequest& req) {
    const auto& x = tf.trace.sweep;
    const auto y = trace_column(tf.trace, req.column);
    FitOutcome out;
    out.rabi_mode = req.rabi_mode.value_or(default_rabi_mode(tf.trace, req.column));
    switch (req.model) {
        case FitModel::rabi: out.result = fit_rabi(x, y, out.rabi_mode, req.options); break;
        case FitModel::ramsey: out.result = fit_ramsey(x, y, req.ramsey_sign, req.options); break;
        case FitModel::lorentzian: out.result = fit_lorentzian(x, y, req.options); break;
        case FitModel::exponential: out.result = fit_exponential(x, y, req.options); break;
    }
    out.report = fit_report_json(out.result);
    out.report["column"] = req.column;
    out.report["sweep_variable"] = tf.trace.sweep_name;
    if (req.model == FitModel::rabi) {
        out.report["rabi_mode"] = out.rabi_mode == RabiMode::sin2 ? "sin2" : "cos2";
    }
    if (req.model == FitModel::ramsey) {
        out.report["ramsey_sign"] = req.ramsey_sign == RamseySign::plus ? "plus" : "minus";
    }
    out.report["config"] = tf.config;
    return out;
}

/// Curve file path next to a report: report.json -> report_curve.csv.
[[nodiscard]] inline fs::path curve_path(const fs::path& report) {
    fs::path p = report;
    p.replace_filename(report.stem().string() + "_curve.csv");
    return p;
}

/**
 * Fits a trace column and writes the JSON report to `report_path` and the
 * data plus fitted curve to the matching _curve.csv. Returns the outcome;
 * a non-converged fit is still written, and the caller reports it.
 */
inline FitOutcome cmd_fit(const fs::path& trace_path, const FitRequest& req, const fs::path& report_path) {
    const TraceFile tf = read_trace_csv(trace_path.string());
    FitOutcome out = fit_trace(tf, req);
    out.report["trace"] = trace_path.string();
    if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
    {
        std::ofstream f(report_path);
        if (!f) throw InputError("cannot write " + report_path.string());
        f << out.report.dump(2) << '\n';
    }
    const auto y = trace_column(tf.trace, req.column);
    std::ofstream c(curve_path(report_path));
    if (!c) throw InputError("cannot write " + curve_path(report_path).string());
    if (!tf.config.is_null()) c << kConfigHeaderPrefix << tf.config.dump() << '\n';
    c << "# fit: " << fit_report_json(out.result).dump() << '\n';
    c << "sweep_value,data,fit\n";
    for (std::size_t i = 0; i < y.size(); ++i) {
        c << format_number(tf.trace.sweep[i]) << ',' << format_number(y[i]) << ','
          << format_number(evaluate_fit(out.result, tf.trace.sweep[i], out.rabi_mode, req.ramsey_sign))
          << '\n';
    }
    return out;
}

// ============================================================================
// scan
// ============================================================================

struct ScanFiles {
    fs::path table;
    fs::path fit;
    ScanResult result;
};

inline void write_scan_csv(std::ostream& out, const ScanResult& r, const ojson& config) {
    out << kConfigHeaderPrefix << config.dump() << '\n';
    out << "nu_n_hz,delta_nu_n_hz,amplitude,frequency_hz\n";
    for (const auto& row : r.rows) {
        if (!row.ok) {
            out << "# failed: nu_n_hz=" << format_number(row.nutation_hz)
                << " delta_nu_n_hz=" << format_number(row.delta_nutation_hz) << " " << row.message << '\n';
            continue;
        }
        out << format_number(row.nutation_hz) << ',' << format_number(row.delta_nutation_hz) << ','
            << format_number(row.amplitude) << ',' << format_number(row.frequency_hz) << '\n';
    }
    if (!r.warning.empty()) out << "# warning: " << r.warning << '\n';
    if (r.lorentzian) {
        for (const auto& p : r.lorentzian->params) {
            out << "# lorentzian " << p.name << " = " << format_number(p.value) << " +- "
                << format_number(p.sigma) << '\n';
        }
        out << "# lorentzian reduced_chi2 = " << format_number(r.lorentzian->reduced_chi2) << '\n';
    }
}

/// Runs a resonance scan and writes <out>/scan.csv and <out>/scan_fit.json.
inline ScanFiles cmd_scan(const RunConfig& c, const fs::path& out_dir) {
    if (c.protocol.kind != ProtocolKind::resonance_scan) {
        throw InputError("protocol.kind: the scan command needs resonance_scan");
    }
    ScanFiles files;
    files.result = run_resonance_scan(c.system, c.protocol);
    fs::create_directories(out_dir);
    files.table = out_dir / "scan.csv";
    files.fit = out_dir / "scan_fit.json";
    {
        std::ofstream f(files.table);
        if (!f) throw InputError("cannot write " + files.table.string());
        write_scan_csv(f, files.result, c.resolved);
    }
    ojson j = {{"warning", files.result.warning},
               {"lorentzian", files.result.lorentzian ? fit_report_json(*files.result.lorentzian)
                                                      : ojson(nullptr)},
               {"config", c.resolved}};
    std::ofstream f(files.fit);
    if (!f) throw InputError("cannot write " + files.fit.string());
    f << j.dump(2) << '\n';
    return files;
}

// ============================================================================
// presets
// ============================================================================

[[nodiscard]] inline ojson preset_json(const Preset& p) {
    ojson access = ojson::array();
    for (std::size_t k = 0; k < p.access.size(); ++k) {
        access.push_back(cfg::access_json(p.access[k], static_cast<int>(k)));
    }
    return {{"name", p.name},
            {"spectrometer_mhz", p.spectrometer_mhz},
            {"pair_shift_ppm", p.pair_shift_ppm},
            {"parameters", p.parameters},
            {"system", system_json(p.system)},
            {"access", access},
            {"transfer",
             {{"nutation_hz", p.transfer.nutation_hz},
              {"phase_rad", p.transfer.phase_rad},
              {"transmitter_offset_hz", p.transfer.transmitter_offset_hz}}},
            {"source_pair", p.source_pair + 1},
            {"readout_pair", p.readout_pair + 1}};
}

[[nodiscard]] inline ojson cmd_presets_dump(const std::string& name) {
    return preset_json(make_preset(name));
}

/// Exit code for an exception escaping a command.
[[nodiscard]] inline int exit_code(const std::exception& e) {
    if (dynamic_cast<const InputError*>(&e) != nullptr) return kExitInput;
    if (dynamic_cast<const nlohmann::json::exception*>(&e) != nullptr) return kExitInput;
    if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return kExitInput;
    return kExitNumerical;
}

}  // namespace singletsim
