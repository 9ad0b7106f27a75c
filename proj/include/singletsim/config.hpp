/**
 * @file config.hpp
 * @brief JSON run configuration: system (preset or explicit), protocol,
 * envelope, noise and output settings.
 *
 * Field names carry their units (shift_ppm, offset_hz, duration_s, phase_deg
 * or phase_rad). Pair numbers are 1-based in files and 0-based in code.
 * `resolve` produces the fully explicit form embedded in every output file;
 * loading that form reproduces the run exactly.
 */
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "singletsim/errors.hpp"
#include "singletsim/hamiltonian.hpp"
#include "singletsim/presets.hpp"
#include "singletsim/propagator.hpp"
#include "singletsim/sequences.hpp"
#include "singletsim/spin_core.hpp"

namespace singletsim {

using ojson = nlohmann::ordered_json;

struct NoiseSpec {
    double sigma = 0.0;
    std::optional<std::uint64_t> seed;
    [[nodiscard]] bool enabled() const noexcept { return sigma > 0.0; }
};

struct RunConfig {
    SpinSystem system{{0.0}, Eigen::MatrixXd::Zero(1, 1)};
    Protocol protocol;
    RelaxationEnvelope envelope;
    NoiseSpec noise;
    std::string trace_file = "trace.csv";
    ojson provenance = ojson::object();
    ojson resolved;  ///< canonical explicit form
};

namespace cfg {

/// JSON path-aware accessors producing "field: problem" diagnostics.
class Node {
public:
    Node(const ojson& j, std::string path) : j_(j), path_(std::move(path)) {}

    [[nodiscard]] const std::string& path() const noexcept { return path_; }
    [[nodiscard]] const ojson& raw() const noexcept { return j_; }
    [[nodiscard]] bool has(const std::string& key) const {
        return j_.is_object() && j_.contains(key) && !j_.at(key).is_null();
    }
    [[nodiscard]] Node at(const std::string& key) const {
        if (!j_.is_object()) fail("expected an object");
        if (!j_.contains(key)) throw InputError(sub(key) + ": required field missing");
        return {j_.at(key), sub(key)};
    }
    [[nodiscard]] Node at(std::size_t i) const {
        return {j_.at(i), path_ + "[" + std::to_string(i) + "]"};
    }
    [[nodiscard]] std::size_t size() const {
        if (!j_.is_array()) fail("expected an array");
        return j_.size();
    }
    [[nodiscard]] double number() const {
        if (!j_.is_number()) fail("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail("must be finite");
        return v;
    }
    [[nodiscard]] double number(const std::string& key, double fallback) const {
        return has(key) ? at(key).number() : fallback;
    }
    [[nodiscard]] int integer() const {
        if (!j_.is_number_integer()) fail("expected an integer");
        return j_.get<int>();
    }
    [[nodiscard]] bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) at(key).fail("expected true or false");
        return v.get<bool>();
    }
    [[nodiscard]] std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }
    [[nodiscard]] std::string string(const std::string& key, const std::string& fallback) const {
        return has(key) ? at(key).string() : fallback;
    }
    void only(const std::vector<std::string>& keys) const {
        if (!j_.is_object()) fail("expected an object");
        for (const auto& [k, v] : j_.items()) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                throw InputError(sub(k) + ": unknown field");
            }
        }
    }
    [[noreturn]] void fail(const std::string& what) const { throw InputError(path_ + ": " + what); }

private:
    [[nodiscard]] std::string sub(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }
    const ojson& j_;
    std::string path_;
};

/// Grid from {"values": [...]} or {"start", "stop", "count"}.
inline std::vector<double> grid(const Node& n) {
    std::vector<double> v;
    if (n.has("values")) {
        const Node vals = n.at("values");
        for (std::size_t i = 0; i < vals.size(); ++i) v.push_back(vals.at(i).number());
    } else if (n.has("start") || n.has("stop") || n.has("count")) {
        const double a = n.at("start").number();
        const double b = n.at("stop").number();
        const int c = n.at("count").integer();
        if (c < 1) n.at("count").fail("must be >= 1");
        if (c == 1) {
            v.push_back(a);
        } else {
            if (!(b > a)) n.at("stop").fail("must exceed start");
            const double h = (b - a) / (c - 1.0);
            for (int k = 0; k < c; ++k) v.push_back(a + k * h);
            v.back() = b;
        }
    } else {
        n.fail("grid needs 'values' or 'start'/'stop'/'count'");
    }
    if (v.empty()) n.fail("grid must be nonempty");
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!(v[k] > v[k - 1])) n.fail("grid must be strictly increasing");
    }
    return v;
}

inline double phase(const Node& n, double fallback) {
    if (n.has("phase_rad") && n.has("phase_deg")) n.fail("give phase_rad or phase_deg, not both");
    if (n.has("phase_rad")) return n.at("phase_rad").number();
    if (n.has("phase_deg")) return n.at("phase_deg").number() * std::numbers::pi / 180.0;
    return fallback;
}

inline int pair_number(const Node& n, const SpinSystem& s) {
    const int v = n.integer();
    if (v < 1 || v > s.n_pairs()) {
        n.fail("pair number must be between 1 and " + std::to_string(s.n_pairs()));
    }
    return v - 1;
}

struct SystemParse {
    SpinSystem system{{0.0}, Eigen::MatrixXd::Zero(1, 1)};
    std::vector<PairAccess> access;
    SpinLockParams transfer{0.0, kPhaseY, 0.0};
    std::optional<double> transfer_nutation;
    ojson provenance = ojson::object();
};

inline SystemParse parse_system(const Node& sys) {
    sys.only({"spectrometer_mhz", "spins", "couplings", "coupling_matrix_hz", "pairs"});
    const double mhz = sys.number("spectrometer_mhz", kDefaultSpectrometerMhz);
    if (!(mhz > 0.0)) sys.at("spectrometer_mhz").fail("must be > 0");
    const Node spins = sys.at("spins");
    const std::size_t n = spins.size();
    if (n == 0) spins.fail("at least one spin required");
    std::vector<double> offsets;
    std::vector<std::string> labels;
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < n; ++i) {
        const Node s = spins.at(i);
        s.only({"label", "shift_ppm", "offset_hz"});
        const std::string label = s.string("label", std::to_string(i + 1));
        if (index.count(label)) s.at("label").fail("duplicate spin label '" + label + "'");
        index[label] = static_cast<int>(i);
        labels.push_back(label);
        if (s.has("shift_ppm") == s.has("offset_hz")) s.fail("give exactly one of shift_ppm, offset_hz");
        offsets.push_back(s.has("shift_ppm") ? ppm_to_hz(s.at("shift_ppm").number(), mhz)
                                             : s.at("offset_hz").number());
    }
    auto spin_ref = [&](const Node& r) {
        if (r.raw().is_string()) {
            const auto it = index.find(r.string());
            if (it == index.end()) r.fail("unknown spin label '" + r.string() + "'");
            return it->second;
        }
        const int v = r.integer();
        if (v < 1 || v > static_cast<int>(n)) r.fail("spin number out of range");
        return v - 1;
    };

    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    if (sys.has("couplings") == sys.has("coupling_matrix_hz")) {
        sys.fail("give exactly one of couplings (list) or coupling_matrix_hz; the coupling matrix is required");
    }
    if (sys.has("couplings")) {
        const Node cl = sys.at("couplings");
        for (std::size_t k = 0; k < cl.size(); ++k) {
            const Node c = cl.at(k);
            c.only({"spins", "j_hz"});
            const Node pr = c.at("spins");
            if (pr.size() != 2) pr.fail("a coupling names exactly two spins");
            const int a = spin_ref(pr.at(0));
            const int b = spin_ref(pr.at(1));
            if (a == b) pr.fail("a spin cannot couple to itself");
            j(a, b) = j(b, a) = c.at("j_hz").number();
        }
    } else {
        const Node m = sys.at("coupling_matrix_hz");
        if (m.size() != n) m.fail("must be " + std::to_string(n) + " rows");
        for (std::size_t r = 0; r < n; ++r) {
            const Node row = m.at(r);
            if (row.size() != n) row.fail("must have " + std::to_string(n) + " entries");
            for (std::size_t c = 0; c < n; ++c) {
                j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.at(c).number();
            }
        }
    }
    std::vector<SpinPair> pairs;
    if (sys.has("pairs")) {
        const Node pl = sys.at("pairs");
        for (std::size_t k = 0; k < pl.size(); ++k) {
            const Node pr = pl.at(k);
            if (pr.size() != 2) pr.fail("a pair names exactly two spins");
            pairs.push_back({spin_ref(pr.at(0)), spin_ref(pr.at(1))});
        }
    }
    SystemParse out;
    try {
        out.system = SpinSystem(offsets, j, pairs, labels);
    } catch (const InputError& e) {
        sys.fail(e.what());
    }
    out.access.assign(static_cast<std::size_t>(out.system.n_pairs()), PairAccess{});
    if (out.system.n_pairs() > 0) out.transfer.transmitter_offset_hz = out.system.pair_offset_hz(0);
    return out;
}

inline SystemParse parse_preset(const Node& pn) {
    std::string name;
    ojson overrides = ojson::object();
    if (pn.raw().is_string()) {
        name = pn.string();
    } else {
        pn.only({"name", "overrides"});
        name = pn.at("name").string();
        if (pn.has("overrides")) overrides = pn.at("overrides").raw();
    }
    Preset p = [&] {
        try {
            return make_preset(name, nlohmann::json::parse(overrides.dump()));
        } catch (const InputError& e) {
            pn.fail(e.what());
        }
    }();
    SystemParse out;
    out.system = p.system;
    out.access = p.access;
    out.transfer = p.transfer;
    out.transfer_nutation = p.transfer.nutation_hz;
    out.provenance = {{"preset", p.name}, {"overrides", overrides}, {"parameters", p.parameters}};
    return out;
}

inline PairAccess parse_access(const Node& a, const PairAccess& base) {
    a.only({"pair", "method", "nutation_hz", "duration_s", "phase_deg", "phase_rad", "tau1_s",
            "tau2_s", "tau3_s"});
    PairAccess out = base;
    const std::string m = a.string("method", to_string(base.method));
    if (m == "ideal") {
        out.method = PrepMethod::ideal;
    } else if (m == "slic") {
        out.method = PrepMethod::slic;
        out.slic_nutation_hz = a.number("nutation_hz", base.slic_nutation_hz);
        out.slic_duration_s = a.number("duration_s", base.slic_duration_s);
        out.slic_phase_rad = phase(a, base.slic_phase_rad);
        if (!(out.slic_nutation_hz >= 0.0)) a.fail("nutation_hz must be >= 0");
        if (!(out.slic_duration_s >= 0.0)) a.fail("duration_s must be >= 0");
    } else if (m == "three_pulse") {
        out.method = PrepMethod::three_pulse;
        out.tau1_s = a.number("tau1_s", base.tau1_s);
        out.tau2_s = a.number("tau2_s", base.tau2_s);
        out.tau3_s = a.number("tau3_s", base.tau3_s);
        if (out.tau1_s < 0.0 || out.tau2_s < 0.0 || out.tau3_s < 0.0) a.fail("delays must be >= 0");
    } else {
        a.at("method").fail("must be ideal, slic or three_pulse");
    }
    return out;
}

inline ProtocolKind parse_kind(const Node& n) {
    const std::string k = n.string();
    if (k == "rabi") return ProtocolKind::rabi;
    if (k == "ramsey") return ProtocolKind::ramsey;
    if (k == "double_rabi") return ProtocolKind::double_rabi;
    if (k == "pumping") return ProtocolKind::pumping;
    if (k == "resonance_scan") return ProtocolKind::resonance_scan;
    n.fail("must be rabi, ramsey, double_rabi, pumping or resonance_scan");
}

inline SweepVariable parse_sweep_variable(const Node& n) {
    const std::string v = n.string();
    for (auto s : {SweepVariable::lock_duration, SweepVariable::nutation, SweepVariable::delta_nutation,
                   SweepVariable::ramsey_delay, SweepVariable::cycles}) {
        if (to_string(s) == v) return s;
    }
    n.fail("unknown sweep variable '" + v + "'");
}

inline SweepVariable default_sweep(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::ramsey: return SweepVariable::ramsey_delay;
        case ProtocolKind::pumping: return SweepVariable::cycles;
        case ProtocolKind::resonance_scan: return SweepVariable::delta_nutation;
        default: return SweepVariable::lock_duration;
    }
}

inline Protocol parse_protocol(const Node& pn, const SystemParse& sp) {
    pn.only({"kind", "source_pair", "readout_pair", "access", "transfer", "readout", "phase_cycle",
             "sweep", "ramsey", "double_rabi", "pumping", "scan"});
    const SpinSystem& s = sp.system;
    Protocol p;
    p.kind = parse_kind(pn.at("kind"));
    if (s.n_pairs() < 2) pn.fail("transfer protocols need at least two assigned pairs");
    p.source_pair = pn.has("source_pair") ? pair_number(pn.at("source_pair"), s) : 0;
    p.readout_pair = pn.has("readout_pair") ? pair_number(pn.at("readout_pair"), s) : 1;
    p.access = sp.access;
    if (pn.has("access")) {
        const Node al = pn.at("access");
        for (std::size_t k = 0; k < al.size(); ++k) {
            const Node a = al.at(k);
            const int pair = pair_number(a.at("pair"), s);
            p.access[static_cast<std::size_t>(pair)] =
                parse_access(a, p.access[static_cast<std::size_t>(pair)]);
        }
    }

    p.transfer = sp.transfer;
    std::optional<double> nutation = sp.transfer_nutation;
    bool find_resonance = false;
    if (pn.has("transfer")) {
        const Node t = pn.at("transfer");
        t.only({"nutation_hz", "phase_deg", "phase_rad", "transmitter_offset_hz", "transmitter_pair",
                "duration_s"});
        if (t.has("nutation_hz")) {
            const Node nn = t.at("nutation_hz");
            if (nn.raw().is_string()) {
                if (nn.string() != "resonance") nn.fail("must be a number or \"resonance\"");
                find_resonance = true;
            } else {
                nutation = nn.number();
            }
        }
        p.transfer.phase_rad = phase(t, p.transfer.phase_rad);
        if (t.has("transmitter_offset_hz") && t.has("transmitter_pair")) {
            t.fail("give transmitter_offset_hz or transmitter_pair, not both");
        }
        if (t.has("transmitter_offset_hz")) {
            p.transfer.transmitter_offset_hz = t.at("transmitter_offset_hz").number();
        }
        if (t.has("transmitter_pair")) {
            p.transfer.transmitter_offset_hz = s.pair_offset_hz(pair_number(t.at("transmitter_pair"), s));
        }
        p.transfer_duration_s = t.number("duration_s", 0.0);
        if (p.transfer_duration_s < 0.0) t.at("duration_s").fail("must be >= 0");
    }
    if (find_resonance) {
        std::optional<double> r;
        for (int k : {0, 2}) {
            if (!r) r = find_resonance_nutation(s, p.source_pair, p.readout_pair, k, 1.0, 20000.0, p.transfer);
        }
        if (!r) pn.at("transfer").at("nutation_hz").fail("no resonance between 1 Hz and 20 kHz");
        nutation = r;
    }
    if (!nutation) pn.fail("transfer.nutation_hz is required without a preset");
    p.transfer.nutation_hz = *nutation;
    if (p.transfer.nutation_hz < 0.0) pn.at("transfer").at("nutation_hz").fail("must be >= 0");

    const std::string ro = pn.string("readout", "projector");
    if (ro == "projector") {
        p.readout = ReadoutMethod::projector;
    } else if (ro == "signal_proxy") {
        p.readout = ReadoutMethod::signal_proxy;
    } else {
        pn.at("readout").fail("must be projector or signal_proxy");
    }
    p.phase_cycle = pn.boolean("phase_cycle", false);

    const Node sw = pn.at("sweep");
    sw.only({"variable", "values", "start", "stop", "count"});
    p.sweep_variable = sw.has("variable") ? parse_sweep_variable(sw.at("variable")) : default_sweep(p.kind);
    p.sweep = grid(sw);
    if (p.sweep_variable == SweepVariable::cycles) {
        for (auto& v : p.sweep) v = std::round(v);
    }

    const auto period = transfer_period(interpair_couplings(s, p.source_pair, p.readout_pair));
    p.ramsey_half_pi_s = period ? *period / 4.0 : 0.0;
    if (pn.has("ramsey")) {
        const Node r = pn.at("ramsey");
        r.only({"half_pi_s", "free_nutation_hz"});
        p.ramsey_half_pi_s = r.number("half_pi_s", p.ramsey_half_pi_s);
        p.ramsey_free_nutation_hz = r.number("free_nutation_hz", p.ramsey_free_nutation_hz);
    }
    if (pn.has("double_rabi")) {
        const Node d = pn.at("double_rabi");
        d.only({"second_phase_deg", "second_phase_rad"});
        if (d.has("second_phase_rad")) p.second_phase_rad = d.at("second_phase_rad").number();
        if (d.has("second_phase_deg")) {
            p.second_phase_rad = d.at("second_phase_deg").number() * std::numbers::pi / 180.0;
        }
    }
    if (pn.has("pumping")) {
        const Node d = pn.at("pumping");
        d.only({"reset_delay_s"});
        p.reset_delay_s = d.number("reset_delay_s", p.reset_delay_s);
    }
    if (pn.has("scan")) {
        const Node d = pn.at("scan");
        d.only({"durations"});
        p.scan_durations = grid(d.at("durations"));
    }
    return p;
}

inline std::vector<std::optional<double>> lifetimes(const Node& n, const SpinSystem& s) {
    std::vector<std::optional<double>> v(static_cast<std::size_t>(s.n_pairs()));
    if (n.raw().is_number()) {
        const double t = n.number();
        for (auto& x : v) x = t;
        return v;
    }
    if (n.size() != v.size()) n.fail("one entry (or null) per pair");
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!n.at(k).raw().is_null()) v[k] = n.at(k).number();
    }
    return v;
}

inline RelaxationEnvelope parse_envelope(const Node& e, const SpinSystem& s) {
    e.only({"singlet_lifetime_s", "triplet_lifetime_s", "dephasing_time_s"});
    RelaxationEnvelope env;
    env.singlet_lifetime_s.resize(static_cast<std::size_t>(s.n_pairs()));
    env.triplet_lifetime_s.resize(static_cast<std::size_t>(s.n_pairs()));
    if (e.has("singlet_lifetime_s")) env.singlet_lifetime_s = lifetimes(e.at("singlet_lifetime_s"), s);
    if (e.has("triplet_lifetime_s")) env.triplet_lifetime_s = lifetimes(e.at("triplet_lifetime_s"), s);
    if (e.has("dephasing_time_s")) env.dephasing_time_s = e.at("dephasing_time_s").number();
    try {
        env.validate();
    } catch (const InputError& ex) {
        e.fail(ex.what());
    }
    return env;
}

inline ojson optional_list(const std::vector<std::optional<double>>& v) {
    ojson a = ojson::array();
    for (const auto& x : v) a.push_back(x ? ojson(*x) : ojson(nullptr));
    return a;
}

inline ojson access_json(const PairAccess& a, int pair) {
    ojson j = {{"pair", pair + 1}, {"method", to_string(a.method)}};
    if (a.method == PrepMethod::slic) {
        j["nutation_hz"] = a.slic_nutation_hz;
        j["duration_s"] = a.slic_duration_s;
        j["phase_rad"] = a.slic_phase_rad;
    } else if (a.method == PrepMethod::three_pulse) {
        j["tau1_s"] = a.tau1_s;
        j["tau2_s"] = a.tau2_s;
        j["tau3_s"] = a.tau3_s;
    }
    return j;
}

}  // namespace cfg

/// Explicit system block: Hz offsets, every nonzero coupling, and pairs.
[[nodiscard]] inline ojson system_json(const SpinSystem& s) {
    ojson spins = ojson::array();
    for (int i = 0; i < s.n_spins(); ++i) {
        spins.push_back({{"label", s.label(i)}, {"offset_hz", s.offset_hz(i)}});
    }
    ojson couplings = ojson::array();
    for (int i = 0; i < s.n_spins(); ++i) {
        for (int j = i + 1; j < s.n_spins(); ++j) {
            if (s.coupling_hz(i, j) != 0.0) {
                couplings.push_back({{"spins", {s.label(i), s.label(j)}}, {"j_hz", s.coupling_hz(i, j)}});
            }
        }
    }
    ojson pairs = ojson::array();
    for (const auto& p : s.pairs()) pairs.push_back({s.label(p.a), s.label(p.b)});
    return {{"spins", spins}, {"couplings", couplings}, {"pairs", pairs}};
}

/// Canonical explicit form of a run configuration.
[[nodiscard]] inline ojson resolve(const RunConfig& c) {
    const Protocol& p = c.protocol;
    ojson access = ojson::array();
    for (int k = 0; k < c.system.n_pairs(); ++k) access.push_back(cfg::access_json(p.access_for(k), k));
    ojson protocol = {{"kind", to_string(p.kind)},
                      {"source_pair", p.source_pair + 1},
                      {"readout_pair", p.readout_pair + 1},
                      {"access", access},
                      {"transfer",
                       {{"nutation_hz", p.transfer.nutation_hz},
                        {"phase_rad", p.transfer.phase_rad},
                        {"transmitter_offset_hz", p.transfer.transmitter_offset_hz},
                        {"duration_s", p.transfer_duration_s}}},
                      {"readout", p.readout == ReadoutMethod::projector ? "projector" : "signal_proxy"},
                      {"phase_cycle", p.phase_cycle},
                      {"sweep", {{"variable", to_string(p.sweep_variable)}, {"values", p.sweep}}}};
    if (p.kind == ProtocolKind::ramsey) {
        protocol["ramsey"] = {{"half_pi_s", p.ramsey_half_pi_s},
                              {"free_nutation_hz", p.ramsey_free_nutation_hz}};
    }
    if (p.kind == ProtocolKind::double_rabi) {
        protocol["double_rabi"] = {{"second_phase_rad", p.second_phase_rad}};
    }
    if (p.kind == ProtocolKind::pumping) protocol["pumping"] = {{"reset_delay_s", p.reset_delay_s}};
    if (p.kind == ProtocolKind::resonance_scan) {
        protocol["scan"] = {{"durations", {{"values", p.scan_durations}}}};
    }
    ojson out = {{"system", system_json(c.system)},
                 {"protocol", protocol},
                 {"envelope",
                  {{"singlet_lifetime_s", cfg::optional_list(c.envelope.singlet_lifetime_s)},
                   {"triplet_lifetime_s", cfg::optional_list(c.envelope.triplet_lifetime_s)},
                   {"dephasing_time_s", c.envelope.dephasing_time_s
                                            ? ojson(*c.envelope.dephasing_time_s)
                                            : ojson(nullptr)}}},
                 {"noise", {{"sigma", c.noise.sigma},
                            {"seed", c.noise.seed ? ojson(*c.noise.seed) : ojson(nullptr)}}},
                 {"output", {{"trace_file", c.trace_file}}}};
    if (!c.provenance.empty()) out["provenance"] = c.provenance;
    return out;
}

/// Build and validate a RunConfig from a parsed JSON document.
[[nodiscard]] inline RunConfig parse_config(const ojson& doc) {
    const cfg::Node root(doc, "");
    root.only({"preset", "system", "protocol", "envelope", "noise", "output", "provenance"});
    if (root.has("preset") == root.has("system")) {
        throw InputError("config: give exactly one of 'preset' or 'system'");
    }
    const cfg::SystemParse sp =
        root.has("preset") ? cfg::parse_preset(root.at("preset")) : cfg::parse_system(root.at("system"));
    RunConfig c;
    c.system = sp.system;
    c.provenance = root.has("provenance") ? root.at("provenance").raw() : sp.provenance;
    c.protocol = cfg::parse_protocol(root.at("protocol"), sp);
    c.envelope.singlet_lifetime_s.resize(static_cast<std::size_t>(c.system.n_pairs()));
    c.envelope.triplet_lifetime_s.resize(static_cast<std::size_t>(c.system.n_pairs()));
    if (root.has("envelope")) c.envelope = cfg::parse_envelope(root.at("envelope"), c.system);
    c.protocol.envelope = c.envelope;
    if (root.has("noise")) {
        const cfg::Node n = root.at("noise");
        n.only({"sigma", "seed"});
        c.noise.sigma = n.number("sigma", 0.0);
        if (c.noise.sigma < 0.0) n.at("sigma").fail("must be >= 0");
        if (n.has("seed")) {
            if (!n.at("seed").raw().is_number_unsigned()) n.at("seed").fail("must be a nonnegative integer");
            c.noise.seed = n.at("seed").raw().get<std::uint64_t>();
        }
        if (c.noise.enabled() && !c.noise.seed) n.fail("a seed is required when noise is enabled");
    }
    if (root.has("output")) {
        const cfg::Node o = root.at("output");
        o.only({"trace_file"});
        c.trace_file = o.string("trace_file", c.trace_file);
        if (c.trace_file.empty() || c.trace_file.find('/') != std::string::npos) {
            o.at("trace_file").fail("must be a plain file name");
        }
    }
    try {
        c.protocol.validate(c.system);
    } catch (const InputError& e) {
        throw InputError(std::string("protocol: ") + e.what());
    }
    c.resolved = resolve(c);
    return c;
}

/// 1-based line and column of a byte offset.
[[nodiscard]] inline std::pair<std::size_t, std::size_t> line_column(const std::string& text,
                                                                     std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

[[nodiscard]] inline RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [l, c] = line_column(text, e.byte);
        throw InputError(origin + ":" + std::to_string(l) + ":" + std::to_string(c) +
                         ": JSON parse error: " + e.what());
    }
    try {
        return parse_config(doc);
    } catch (const InputError& e) {
        throw InputError(origin + ": " + e.what());
    }
}

inline constexpr const char* kConfigHeaderPrefix = "# config: ";

/**
 * Load a JSON config, or the config embedded in a trace file written by this
 * toolkit (its "# config: " header line).
 */
[[nodiscard]] inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (!text.empty() && text.front() == '#') {
        std::istringstream lines(text);
        std::string line;
        const std::string prefix = kConfigHeaderPrefix;
        while (std::getline(lines, line) && !line.empty() && line.front() == '#') {
            if (line.rfind(prefix, 0) == 0) return parse_config_text(line.substr(prefix.size()), path);
        }
        throw InputError(path + ": no embedded config header");
    }
    return parse_config_text(text, path);
}

}  // namespace singletsim
