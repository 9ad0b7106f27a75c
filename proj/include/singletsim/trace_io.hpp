// CSV traces: '#' header lines carrying the resolved config and metadata,
// then sweep_value,observable,pair1_singlet,... rows.
#pragma once

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "singletsim/errors.hpp"
#include "singletsim/trace.hpp"

namespace singletsim {

/// Shortest round-trip decimal form.
[[nodiscard]] inline std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

[[nodiscard]] inline double parse_number(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && *b == ' ') ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc{} || r.ptr != e) throw InputError(where + ": not a number: '" + s + "'");
    return v;
}

inline void write_trace_csv(std::ostream& out, const Trace& trace,
                            const nlohmann::ordered_json& config) {
    trace.validate();
    if (!config.is_null()) out << "# config: " << config.dump() << '\n';
    out << "# sweep_variable: " << trace.sweep_name << '\n';
    out << "# metadata: " << trace.metadata.dump() << '\n';
    out << "sweep_value,observable";
    for (std::size_t p = 0; p < trace.pair_singlet.size(); ++p) out << ",pair" << p + 1 << "_singlet";
    out << '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << format_number(trace.sweep[i]) << ',' << format_number(trace.observable[i]);
        for (const auto& col : trace.pair_singlet) out << ',' << format_number(col[i]);
        out << '\n';
    }
}

inline void write_trace_csv(const std::string& path, const Trace& trace,
                            const nlohmann::ordered_json& config) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    write_trace_csv(out, trace, config);
    if (!out) throw InputError("write failed: " + path);
}

struct TraceFile {
    Trace trace;
    nlohmann::ordered_json config;  ///< null when absent
};

[[nodiscard]] inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

[[nodiscard]] inline TraceFile read_trace_csv(std::istream& in, const std::string& origin) {
    TraceFile f;
    f.config = nullptr;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    auto json_after = [&](const std::string& l, const std::string& prefix) {
        try {
            return nlohmann::ordered_json::parse(l.substr(prefix.size()));
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(origin + ":" + std::to_string(lineno) + ": bad JSON header: " + e.what());
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line.rfind("# config: ", 0) == 0) f.config = json_after(line, "# config: ");
            if (line.rfind("# metadata: ", 0) == 0) f.trace.metadata = json_after(line, "# metadata: ");
            if (line.rfind("# sweep_variable: ", 0) == 0) f.trace.sweep_name = line.substr(18);
            continue;
        }
        const auto cells = split_csv(line);
        const std::string where = origin + ":" + std::to_string(lineno);
        if (header.empty()) {
            header = cells;
            if (header.size() < 2 || header[0] != "sweep_value" || header[1] != "observable") {
                throw InputError(where + ": header must start with sweep_value,observable");
            }
            f.trace.pair_singlet.resize(header.size() - 2);
            continue;
        }
        if (cells.size() != header.size()) {
            throw InputError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                             std::to_string(cells.size()));
        }
        f.trace.sweep.push_back(parse_number(cells[0], where));
        f.trace.observable.push_back(parse_number(cells[1], where));
        for (std::size_t c = 2; c < cells.size(); ++c) {
            f.trace.pair_singlet[c - 2].push_back(parse_number(cells[c], where));
        }
    }
    if (header.empty()) throw InputError(origin + ": no CSV header found");
    if (f.trace.size() == 0) throw InputError(origin + ": trace has no data rows");
    f.trace.sweep_is_time = f.trace.sweep_name == "tau_sl_s" || f.trace.sweep_name == "tau_ramsey_s" ||
                            f.trace.sweep_name == "time_s";
    if (f.trace.metadata.contains("readout_pair") && f.trace.metadata["readout_pair"].is_number_integer()) {
        f.trace.readout_pair = f.trace.metadata["readout_pair"].get<int>() - 1;
    }
    f.trace.validate();
    return f;
}

[[nodiscard]] inline TraceFile read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trace file " + path);
    return read_trace_csv(in, path);
}

}  // namespace singletsim
