// singletsim command-line front end: simulate, fit, scan, presets.
#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "singletsim.hpp"

namespace {

using namespace singletsim;

std::vector<std::pair<std::string, double>> parse_assignments(const std::vector<std::string>& items,
                                                              const std::string& flag) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& s : items) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw InputError(flag + ": expected name=value, got '" + s + "'");
        out.emplace_back(s.substr(0, eq), parse_number(s.substr(eq + 1), flag));
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Singlet-state transfer simulator for coupled spin pairs"};
    app.require_subcommand(1);

    std::string config_path, out_path, trace_path, model = "rabi", column = "observable";
    std::string mode, sign = "plus", dump_name;
    std::vector<std::string> fixed, initial;
    double noise_sigma = 0.0;
    bool list = false;

    auto* sim = app.add_subcommand("simulate", "Run the configured protocol and write a trace CSV");
    sim->add_option("--config", config_path, "Config JSON (or a trace file with embedded config)")->required();
    sim->add_option("--out", out_path, "Output directory")->required();

    auto* fit = app.add_subcommand("fit", "Fit a model to a trace column");
    fit->add_option("--trace", trace_path, "Trace CSV")->required();
    fit->add_option("--model", model, "rabi | ramsey | lorentzian | exponential")->required();
    fit->add_option("--out", out_path, "Fit report JSON path; the curve goes to <stem>_curve.csv")->required();
    fit->add_option("--column", column, "observable or pairN_singlet");
    fit->add_option("--mode", mode, "Rabi shape: sin2 or cos2 (default from trace metadata)");
    fit->add_option("--sign", sign, "Ramsey sign: plus or minus");
    fit->add_option("--noise-sigma", noise_sigma, "Known noise level for chi-square");
    fit->add_option("--fix", fixed, "Hold a parameter fixed: name=value");
    fit->add_option("--init", initial, "Starting value: name=value");

    auto* scan = app.add_subcommand("scan", "Resonance scan: Rabi fits across nutation frequencies");
    scan->add_option("--config", config_path, "Config JSON with protocol.kind = resonance_scan")->required();
    scan->add_option("--out", out_path, "Output directory")->required();

    auto* presets = app.add_subcommand("presets", "List or dump molecule presets");
    presets->add_flag("--list", list, "List preset names");
    presets->add_option("--dump", dump_name, "Print the resolved preset as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (sim->parsed()) {
            const auto path = cmd_simulate(load_config(config_path), out_path);
            std::cout << "wrote " << path.string() << '\n';
            return kExitOk;
        }
        if (fit->parsed()) {
            FitRequest req;
            req.model = parse_fit_model(model);
            req.column = column;
            if (!mode.empty()) {
                if (mode == "sin2") {
                    req.rabi_mode = RabiMode::sin2;
                } else if (mode == "cos2") {
                    req.rabi_mode = RabiMode::cos2;
                } else {
                    throw InputError("--mode must be sin2 or cos2");
                }
            }
            if (sign != "plus" && sign != "minus") throw InputError("--sign must be plus or minus");
            req.ramsey_sign = sign == "plus" ? RamseySign::plus : RamseySign::minus;
            if (noise_sigma > 0.0) req.options.noise_sigma = noise_sigma;
            req.options.fixed = parse_assignments(fixed, "--fix");
            req.options.initial = parse_assignments(initial, "--init");
            const auto out = cmd_fit(trace_path, req, out_path);
            std::cout << out.report.dump(2) << '\n';
            if (!out.result.converged) {
                std::cerr << "fit did not converge: " << out.result.message << '\n';
                return kExitNumerical;
            }
            return kExitOk;
        }
        if (scan->parsed()) {
            const auto files = cmd_scan(load_config(config_path), out_path);
            if (!files.result.warning.empty()) std::cerr << "warning: " << files.result.warning << '\n';
            std::cout << "wrote " << files.table.string() << " and " << files.fit.string() << '\n';
            return kExitOk;
        }
        if (presets->parsed()) {
            if (!dump_name.empty()) {
                std::cout << cmd_presets_dump(dump_name).dump(2) << '\n';
            } else {
                for (const auto& n : preset_names()) std::cout << n << '\n';
            }
            (void)list;
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    }
    return kExitInput;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
