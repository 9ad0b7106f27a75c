#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "singletsim.hpp"
#include "synthetic.hpp"

using namespace singletsim;
namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, const char* fallback) {
    const char* v = std::getenv(name);
    return v ? v : fallback;
}

std::string cli() { return env_or("SINGLETSIM_CLI", SINGLETSIM_CLI_PATH); }
fs::path configs() { return env_or("SINGLETSIM_CONFIGS", SINGLETSIM_CONFIGS_DIR); }

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("singletsim_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const fs::path& path() const { return path_; }
    [[nodiscard]] fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = "\"" + cli() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

const char* kTwoSpinSystem = R"({
  "system": {
    "spectrometer_mhz": 200,
    "spins": [{"label": "a", "shift_ppm": 2.04}, {"label": "b", "shift_ppm": 2.30},
              {"label": "c", "shift_ppm": 3.70}, {"label": "d", "shift_ppm": 3.72}],
    "couplings": [{"spins": ["a", "b"], "j_hz": 16.0}, {"spins": ["c", "d"], "j_hz": 17.0}],
    "pairs": [["a", "b"], ["c", "d"]]
  },
  "protocol": {"kind": "rabi", "transfer": {"nutation_hz": 600},
               "sweep": {"variable": "tau_sl_s", "values": [0.0, 0.1]}}
})";

std::string message_of(const std::string& text) {
    try {
        (void)parse_config_text(text, "cfg.json");
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

TEST(Config, GlutamatePreset) {
    const auto c = parse_config_text(R"({"preset": "glutamate", "protocol": {"kind": "rabi",
        "sweep": {"variable": "tau_sl_s", "start": 0, "stop": 1, "count": 11}}})", "cfg.json");
    EXPECT_EQ(c.system.n_spins(), 4);
    EXPECT_NEAR(c.system.pair_offset_hz(0), 2.04 * 200.0, 1e-9);
    EXPECT_NEAR(c.system.pair_offset_hz(1), 2.30 * 200.0, 1e-9);
    EXPECT_EQ(c.protocol.sweep.size(), 11u);
    EXPECT_DOUBLE_EQ(c.protocol.sweep.back(), 1.0);
    EXPECT_DOUBLE_EQ(c.protocol.sweep[3], 0.3);
}

TEST(Config, PheGlyGlyPreset) {
    const auto c = parse_config_text(R"({"preset": "phe-gly-gly", "protocol": {"kind": "rabi",
        "sweep": {"variable": "tau_sl_s", "values": [0, 10]}}})", "cfg.json");
    EXPECT_NEAR(c.system.pair_offset_hz(0), 3.89 * 200.0, 1e-9);
    EXPECT_NEAR(c.system.pair_offset_hz(1), 3.71 * 200.0, 1e-9);
}

TEST(Config, PpmConvertsThroughSpectrometerFrequency) {
    const auto c = parse_config_text(kTwoSpinSystem, "cfg.json");
    EXPECT_NEAR(c.system.offset_hz(1) - c.system.offset_hz(0), 0.26 * 200.0, 1e-9);
    EXPECT_NEAR(c.system.offset_hz(1) - c.system.offset_hz(0), 52.0, 1e-9);
    EXPECT_DOUBLE_EQ(c.system.coupling_hz(0, 1), 16.0);
}

TEST(Config, MissingCouplingMatrixRejected) {
    std::string text = kTwoSpinSystem;
    const auto start = text.find("\"couplings\"");
    const auto end = text.find("\"pairs\"");
    text.erase(start, end - start);
    const std::string msg = message_of(text);
    EXPECT_NE(msg.find("system"), std::string::npos) << msg;
    EXPECT_NE(msg.find("coupling"), std::string::npos) << msg;
}

TEST(Config, ParseErrorReportsLineAndColumn) {
    const std::string msg = message_of("{\n  \"preset\": \"glutamate\",\n  oops\n}\n");
    EXPECT_EQ(msg.rfind("cfg.json:3:", 0), 0u) << msg;
}

TEST(Config, ValidationErrorNamesTheField) {
    const std::string msg = message_of(R"({"preset": "glutamate", "protocol": {"kind": "rabi",
        "sweep": {"variable": "tau_sl_s", "values": [0.2, 0.1]}}})");
    EXPECT_NE(msg.find("protocol.sweep"), std::string::npos) << msg;
    const std::string unknown = message_of(R"({"preset": "glutamate", "protcol": {}})");
    EXPECT_NE(unknown.find("protcol"), std::string::npos) << unknown;
}

TEST(Config, NoiseRequiresSeed) {
    const std::string msg = message_of(R"({"preset": "glutamate", "protocol": {"kind": "rabi",
        "sweep": {"variable": "tau_sl_s", "values": [0, 1]}}, "noise": {"sigma": 0.01}})");
    EXPECT_NE(msg.find("seed"), std::string::npos) << msg;
}

TEST(Config, ExactlyOneOfPresetAndSystem) {
    std::string both = kTwoSpinSystem;
    both.insert(1, "\"preset\": \"glutamate\",");
    EXPECT_FALSE(message_of(both).empty());
    EXPECT_FALSE(message_of(R"({"protocol": {"kind": "rabi"}})").empty());
}

TEST(Config, ResolvedConfigReparsesToSameResolution) {
    const auto c = parse_config_text(R"({"preset": "glutamate", "protocol": {"kind": "ramsey",
        "sweep": {"variable": "tau_ramsey_s", "start": 0, "stop": 1, "count": 5}}})", "cfg.json");
    const auto again = parse_config(c.resolved);
    EXPECT_EQ(again.resolved.dump(), c.resolved.dump());
    EXPECT_NEAR(again.protocol.ramsey_half_pi_s, 0.25 / 2.57, 1e-12);
}

TEST(ExitCodes, ErrorClassesMapToCodes) {
    EXPECT_EQ(exit_code(InputError("x")), kExitInput);
    EXPECT_EQ(exit_code(NumericalError("x")), kExitNumerical);
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

TEST(TraceFile, WrongColumnCountIsInputError) {
    std::istringstream in("sweep_value,observable,pair1_singlet\n0,0.1,0.2\n1,0.3\n");
    try {
        (void)read_trace_csv(in, "t.csv");
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("t.csv:3: expected 3 columns, got 2"), std::string::npos)
            << e.what();
    }
}

TEST(TraceFile, WriteReadRoundTripIsExact) {
    Trace t;
    t.sweep_name = "tau_sl_s";
    t.sweep = {0.0, 0.1, 1.0 / 3.0};
    t.observable = {0.25, 1e-17, 0.1 + 0.2};
    t.pair_singlet = {{1.0, 0.5, 0.2}, t.observable};
    t.metadata["readout_pair"] = 2;
    std::ostringstream out;
    write_trace_csv(out, t, {{"k", 1}});
    std::istringstream in(out.str());
    const auto back = read_trace_csv(in, "t.csv");
    EXPECT_EQ(back.trace.sweep, t.sweep);
    EXPECT_EQ(back.trace.observable, t.observable);
    EXPECT_EQ(back.trace.pair_singlet, t.pair_singlet);
    EXPECT_EQ(back.trace.readout_pair, 1);
    EXPECT_EQ(back.config["k"], 1);
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

TEST(Cli, SimulateIsDeterministicForFixedSeed) {
    ASSERT_FALSE(cli().empty());
    TempDir dir;
    const auto cfg = configs() / "phe_gly_gly_rabi.json";
    ASSERT_EQ(run_cli("simulate --config " + quoted(cfg) + " --out " + quoted(dir / "a"), dir / "log"), 0)
        << slurp(dir / "log");
    ASSERT_EQ(run_cli("simulate --config " + quoted(cfg) + " --out " + quoted(dir / "b"), dir / "log"), 0);
    const std::string a = slurp(dir / "a" / "trace.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / "b" / "trace.csv"));
    EXPECT_NE(a.find("\"seed\":7"), std::string::npos);
}

TEST(Cli, RunReproducesFromItsOwnOutput) {
    TempDir dir;
    const auto cfg = configs() / "glutamate_double_rabi.json";
    ASSERT_EQ(run_cli("simulate --config " + quoted(cfg) + " --out " + quoted(dir / "a"), dir / "log"), 0)
        << slurp(dir / "log");
    ASSERT_EQ(run_cli("simulate --config " + quoted(dir / "a" / "trace.csv") + " --out " + quoted(dir / "b"),
                      dir / "log"),
              0)
        << slurp(dir / "log");
    EXPECT_EQ(slurp(dir / "a" / "trace.csv"), slurp(dir / "b" / "trace.csv"));
}

TEST(Cli, SinglePointGridWritesOneRow) {
    TempDir dir;
    write_file(dir / "cfg.json", R"({"preset": "glutamate", "protocol": {"kind": "rabi",
        "sweep": {"variable": "tau_sl_s", "values": [0.0]}}})");
    ASSERT_EQ(run_cli("simulate --config " + quoted(dir / "cfg.json") + " --out " + quoted(dir.path()),
                      dir / "log"),
              0)
        << slurp(dir / "log");
    const auto tf = read_trace_csv((dir / "trace.csv").string());
    ASSERT_EQ(tf.trace.size(), 1u);
    const auto c = load_config((dir / "cfg.json").string());
    const auto direct = run_rabi(c.system, c.protocol);
    EXPECT_EQ(tf.trace.observable, direct.observable);
    EXPECT_EQ(tf.trace.pair_singlet, direct.pair_singlet);
}

TEST(Cli, GlutamateRabiFitReportsCisTransDifference) {
    TempDir dir;
    ASSERT_EQ(run_cli("simulate --config " + quoted(configs() / "glutamate_rabi.json") + " --out " +
                          quoted(dir.path()),
                      dir / "log"),
              0)
        << slurp(dir / "log");
    ASSERT_EQ(run_cli("fit --trace " + quoted(dir / "trace.csv") + " --model rabi --out " +
                          quoted(dir / "fit.json"),
                      dir / "log"),
              0)
        << slurp(dir / "log");
    const auto report = nlohmann::json::parse(slurp(dir / "fit.json"));
    EXPECT_EQ(report["model"], "rabi_sin2");
    double f = 0.0;
    for (const auto& p : report["parameters"]) {
        if (p["name"] == "f_hz") f = p["value"].get<double>();
    }
    EXPECT_NEAR(f, 2.57, 0.02 * 2.57);
    EXPECT_TRUE(report.contains("reduced_chi2"));
    EXPECT_TRUE(fs::exists(dir / "fit_curve.csv"));

    // the source pair column defaults to the cos^2 shape at the same frequency
    ASSERT_EQ(run_cli("fit --trace " + quoted(dir / "trace.csv") + " --model rabi --column pair1_singlet --out " +
                          quoted(dir / "src.json"),
                      dir / "log"),
              0)
        << slurp(dir / "log");
    const auto src = nlohmann::json::parse(slurp(dir / "src.json"));
    EXPECT_EQ(src["model"], "rabi_cos2");
}

TEST(Cli, RamseySyntheticFileRoundTrip) {
    TempDir dir;
    const synth::Ramsey p;
    const auto s = synth::ramsey(p);
    Trace t;
    t.sweep_name = "tau_ramsey_s";
    t.sweep = s.t;
    t.observable = s.y;
    write_trace_csv((dir / "ramsey.csv").string(), t, nullptr);
    ASSERT_EQ(run_cli("fit --trace " + quoted(dir / "ramsey.csv") + " --model ramsey --out " +
                          quoted(dir / "fit.json"),
                      dir / "log"),
              0)
        << slurp(dir / "log");
    const auto report = nlohmann::json::parse(slurp(dir / "fit.json"));
    std::map<std::string, double> v;
    for (const auto& q : report["parameters"]) v[q["name"]] = q["value"].get<double>();
    EXPECT_LT(synth::rel(v["f_hz"], p.f), 1e-6);
    EXPECT_LT(synth::rel(v["phi_rad"], p.phi), 1e-6);
    EXPECT_LT(synth::rel(v["T2s_s"], p.t2), 1e-6);
    EXPECT_LT(synth::rel(v["Ts_s"], p.ts), 1e-6);
}

TEST(Cli, WrongColumnCountExitsWithInputError) {
    TempDir dir;
    write_file(dir / "bad.csv", "sweep_value,observable,pair1_singlet,pair2_singlet\n0,0,1,0\n0.1,0.2,0.8\n");
    EXPECT_EQ(run_cli("fit --trace " + quoted(dir / "bad.csv") + " --model rabi --out " + quoted(dir / "f.json"),
                      dir / "log"),
              1);
    EXPECT_NE(slurp(dir / "log").find("expected 4 columns, got 3"), std::string::npos) << slurp(dir / "log");
}

TEST(Cli, InputErrorsExitWithOne) {
    TempDir dir;
    EXPECT_EQ(run_cli("simulate --config " + quoted(dir / "missing.json") + " --out " + quoted(dir.path()),
                      dir / "log"),
              1);
    write_file(dir / "cfg.json", "{\n  \"preset\": \"glutamate\",\n  oops\n}\n");
    EXPECT_EQ(run_cli("simulate --config " + quoted(dir / "cfg.json") + " --out " + quoted(dir.path()),
                      dir / "log"),
              1);
    EXPECT_NE(slurp(dir / "log").find("cfg.json:3:"), std::string::npos) << slurp(dir / "log");
    EXPECT_EQ(run_cli("fit --trace x.csv --model cubic --out y.json", dir / "log"), 1);
    EXPECT_EQ(run_cli("", dir / "log"), 1);
    EXPECT_EQ(run_cli("scan --config " + quoted(configs() / "glutamate_rabi.json") + " --out " + quoted(dir.path()),
                      dir / "log"),
              1);
}

TEST(Cli, ScanWithTwoPointsWarnsWithoutLorentzian) {
    TempDir dir;
    write_file(dir / "cfg.json", R"({"preset": "glutamate", "protocol": {"kind": "resonance_scan",
        "sweep": {"variable": "delta_nu_n_hz", "values": [2.0, 2.5]},
        "scan": {"durations": {"start": 0, "stop": 2, "count": 41}}}})");
    ASSERT_EQ(run_cli("scan --config " + quoted(dir / "cfg.json") + " --out " + quoted(dir.path()), dir / "log"), 0)
        << slurp(dir / "log");
    EXPECT_NE(slurp(dir / "log").find("warning"), std::string::npos);
    const auto fit = nlohmann::json::parse(slurp(dir / "scan_fit.json"));
    EXPECT_TRUE(fit["lorentzian"].is_null());
    EXPECT_FALSE(fit["warning"].get<std::string>().empty());
    const std::string table = slurp(dir / "scan.csv");
    EXPECT_NE(table.find("nu_n_hz,delta_nu_n_hz,amplitude,frequency_hz"), std::string::npos);
}

TEST(Cli, ScanPeakNearEnergyMismatch) {
    TempDir dir;
    ASSERT_EQ(run_cli("scan --config " + quoted(configs() / "glutamate_scan.json") + " --out " + quoted(dir.path()),
                      dir / "log"),
              0)
        << slurp(dir / "log");
    const auto fit = nlohmann::json::parse(slurp(dir / "scan_fit.json"));
    ASSERT_FALSE(fit["lorentzian"].is_null());
    double center = 0.0;
    for (const auto& p : fit["lorentzian"]["parameters"]) {
        if (p["name"] == "center") center = p["value"].get<double>();
    }
    EXPECT_NEAR(center, 2.25, 0.225);
}

TEST(Cli, ScanSymmetricGridGivesSymmetricAmplitudes) {
    const auto c = parse_config_text(R"({"preset": "glutamate", "protocol": {"kind": "resonance_scan",
        "sweep": {"variable": "delta_nu_n_hz", "values": [1.25, 1.75, 2.25, 2.75, 3.25]},
        "scan": {"durations": {"start": 0, "stop": 3, "count": 121}}}})", "cfg.json");
    const auto res = run_resonance_scan(c.system, c.protocol);
    ASSERT_EQ(res.rows.size(), 5u);
    for (std::size_t k = 0; k < 2; ++k) {
        const double a = res.rows[k].amplitude, b = res.rows[4 - k].amplitude;
        EXPECT_NEAR(a, b, 0.15 * std::max(a, b)) << k;
    }
    EXPECT_GT(res.rows[2].amplitude, res.rows[0].amplitude);
    EXPECT_GT(res.rows[2].amplitude, res.rows[4].amplitude);
}

TEST(Cli, PresetsListAndDump) {
    TempDir dir;
    ASSERT_EQ(run_cli("presets --list", dir / "log"), 0);
    const std::string list = slurp(dir / "log");
    EXPECT_NE(list.find("glutamate"), std::string::npos);
    EXPECT_NE(list.find("phe-gly-gly"), std::string::npos);
    ASSERT_EQ(run_cli("presets --dump glutamate", dir / "log"), 0);
    const auto j = nlohmann::json::parse(slurp(dir / "log"));
    EXPECT_EQ(j["name"], "glutamate");
    EXPECT_DOUBLE_EQ(j["spectrometer_mhz"].get<double>(), 200.0);
    EXPECT_DOUBLE_EQ(j["pair_shift_ppm"][1].get<double>(), 2.30);
    EXPECT_EQ(run_cli("presets --dump nonesuch", dir / "log"), 1);
}

TEST(Cli, ShippedConfigsRun) {
    for (const auto& entry : fs::directory_iterator(configs())) {
        if (entry.path().extension() != ".json") continue;
        TempDir dir;
        const auto c = load_config(entry.path().string());
        const std::string sub = c.protocol.kind == ProtocolKind::resonance_scan ? "scan" : "simulate";
        EXPECT_EQ(run_cli(sub + " --config " + quoted(entry.path()) + " --out " + quoted(dir.path()), dir / "log"), 0)
            << entry.path() << "\n"
            << slurp(dir / "log");
    }
}
