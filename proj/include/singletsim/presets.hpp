/**
 * @file presets.hpp
 * @brief Built-in glutamate and phe-gly-gly spin systems.
 *
 * Values not fixed by measurement (intrapair couplings, intrapair shift
 * differences, coupling signs) are inferred; see the README parameter table.
 * All couplings are taken positive.
 */
#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "singletsim/errors.hpp"
#include "singletsim/hamiltonian.hpp"
#include "singletsim/sequences.hpp"
#include "singletsim/spin_core.hpp"

namespace singletsim {

inline constexpr double kDefaultSpectrometerMhz = 200.0;

/// ppm to Hz offset from the 0 ppm reference.
[[nodiscard]] inline double ppm_to_hz(double ppm, double spectrometer_mhz) {
    return ppm * spectrometer_mhz;
}

struct Preset {
    std::string name;
    SpinSystem system;
    double spectrometer_mhz = kDefaultSpectrometerMhz;
    std::vector<double> pair_shift_ppm;
    std::vector<PairAccess> access;
    SpinLockParams transfer;  ///< default transfer lock
    int source_pair = 0;
    int readout_pair = 1;
    nlohmann::ordered_json parameters;  ///< resolved preset parameters

    Preset(std::string n, SpinSystem s) : name(std::move(n)), system(std::move(s)) {}
};

namespace detail {

struct PairSpec {
    std::string label;
    double shift_ppm = 0.0;
    double intra_delta_hz = 0.0;  ///< shift difference between the two members
    double j_intra_hz = 0.0;
};

inline SpinSystem build_pairs(const std::vector<PairSpec>& pairs, double mhz) {
    const int n = 2 * static_cast<int>(pairs.size());
    std::vector<double> offsets;
    std::vector<std::string> labels;
    std::vector<SpinPair> assign;
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const double c = ppm_to_hz(pairs[p].shift_ppm, mhz);
        offsets.push_back(c - 0.5 * pairs[p].intra_delta_hz);
        offsets.push_back(c + 0.5 * pairs[p].intra_delta_hz);
        labels.push_back(pairs[p].label + "a");
        labels.push_back(pairs[p].label + "b");
        const int a = 2 * static_cast<int>(p);
        assign.push_back({a, a + 1});
        j(a, a + 1) = j(a + 1, a) = pairs[p].j_intra_hz;
    }
    return {offsets, j, assign, labels};
}

inline SpinSystem with_interpair(SpinSystem s, int p, int q, double j_cis, double j_trans) {
    const auto a = s.pair(p);
    const auto b = s.pair(q);
    s = s.with_coupling(a.a, b.a, j_cis);
    s = s.with_coupling(a.b, b.b, j_cis);
    s = s.with_coupling(a.a, b.b, j_trans);
    s = s.with_coupling(a.b, b.a, j_trans);
    return s;
}

template <typename T>
T get_or(const nlohmann::json& o, const char* key, T fallback) {
    if (!o.contains(key)) return fallback;
    try {
        return o.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InputError(std::string("preset override '") + key + "' has the wrong type");
    }
}

inline void check_override_keys(const nlohmann::json& o, const std::vector<std::string>& allowed,
                                const std::string& preset) {
    if (!o.is_object()) throw InputError("preset overrides must be an object");
    for (const auto& [k, v] : o.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw InputError("unknown override '" + k + "' for preset " + preset);
        }
    }
}

}  // namespace detail

/**
 * Glutamate: two CH2 pairs at 2.04 and 2.30 ppm. Intrapair shift differences
 * follow from the SLIC durations (dnu = 1/(sqrt2 tau)); intrapair couplings
 * 15.0 and 17.25 Hz give |J_1a1b - J_2a2b| = 2.25 Hz. Cis and trans
 * interpair couplings 5.0 and 2.43 Hz differ by 2.57 Hz.
 *
 * Overrides: j_cis_hz, j_trans_hz, j_1a1b_hz, j_2a2b_hz, delta_nu_1_hz,
 * delta_nu_2_hz, transfer_nutation_hz.
 */
[[nodiscard]] inline Preset glutamate_preset(const nlohmann::json& overrides = nlohmann::json::object()) {
    detail::check_override_keys(overrides,
                                {"j_cis_hz", "j_trans_hz", "j_1a1b_hz", "j_2a2b_hz",
                                 "delta_nu_1_hz", "delta_nu_2_hz", "transfer_nutation_hz",
                                 "spectrometer_mhz"},
                                "glutamate");
    const double mhz = detail::get_or(overrides, "spectrometer_mhz", kDefaultSpectrometerMhz);
    const double slic1_s = 0.157, slic2_s = 0.145;
    const double dnu1 = detail::get_or(overrides, "delta_nu_1_hz",
                                       std::round(1.0 / (std::sqrt(2.0) * slic1_s) * 100.0) / 100.0);
    const double dnu2 = detail::get_or(overrides, "delta_nu_2_hz",
                                       std::round(1.0 / (std::sqrt(2.0) * slic2_s) * 100.0) / 100.0);
    const double j1 = detail::get_or(overrides, "j_1a1b_hz", 15.0);
    const double j2 = detail::get_or(overrides, "j_2a2b_hz", 17.25);
    const double j_cis = detail::get_or(overrides, "j_cis_hz", 5.0);
    const double j_trans = detail::get_or(overrides, "j_trans_hz", 2.43);

    Preset p{"glutamate",
             detail::with_interpair(detail::build_pairs({{"1", 2.04, dnu1, j1}, {"2", 2.30, dnu2, j2}}, mhz),
                                    0, 1, j_cis, j_trans)};
    p.spectrometer_mhz = mhz;
    p.pair_shift_ppm = {2.04, 2.30};
    p.access = {PairAccess::slic(15.5, slic1_s), PairAccess::slic(17.0, slic2_s)};
    p.transfer = {0.0, kPhaseY, p.system.pair_offset_hz(0)};
    if (overrides.contains("transfer_nutation_hz")) {
        p.transfer.nutation_hz = detail::get_or(overrides, "transfer_nutation_hz", 0.0);
    } else {
        // the phi+/phi- component resonance between 100 Hz and 5 kHz
        for (int k : {0, 2}) {
            if (auto r = find_resonance_nutation(p.system, 0, 1, k, 100.0, 5000.0, p.transfer)) {
                p.transfer.nutation_hz = *r;
                break;
            }
        }
        if (p.transfer.nutation_hz == 0.0) p.transfer.nutation_hz = 500.0;
    }
    p.parameters = {{"spectrometer_mhz", mhz},     {"delta_nu_1_hz", dnu1},
                    {"delta_nu_2_hz", dnu2},       {"j_1a1b_hz", j1},
                    {"j_2a2b_hz", j2},             {"j_cis_hz", j_cis},
                    {"j_trans_hz", j_trans},       {"transfer_nutation_hz", p.transfer.nutation_hz}};
    return p;
}

/**
 * Phe-gly-gly: the center glycine CH2 (3.89 ppm, three-pulse access) as pair 1
 * and the end glycine CH2 (3.71 ppm, SLIC access) as pair 2, with a cis/trans
 * difference of 8 mHz. The center pair's intrapair coupling is tuned so that
 * one triplet component is exactly resonant under the 280 Hz transfer lock.
 * With third_pair the phenylalanine CH2 is added as pair 3, coupled to the
 * center pair.
 *
 * Overrides: j_cis_hz, j_trans_hz, j_center_hz (disables tuning), j_end_hz,
 * delta_nu_center_hz, delta_nu_end_hz, transfer_nutation_hz, third_pair.
 */
[[nodiscard]] inline Preset phe_gly_gly_preset(const nlohmann::json& overrides = nlohmann::json::object()) {
    detail::check_override_keys(overrides,
                                {"j_cis_hz", "j_trans_hz", "j_center_hz", "j_end_hz",
                                 "delta_nu_center_hz", "delta_nu_end_hz", "transfer_nutation_hz",
                                 "third_pair", "spectrometer_mhz"},
                                "phe-gly-gly");
    const double mhz = detail::get_or(overrides, "spectrometer_mhz", kDefaultSpectrometerMhz);
    const double slic_end_s = 0.300;
    const double dnu_c = detail::get_or(overrides, "delta_nu_center_hz", 30.0);
    const double dnu_e = detail::get_or(overrides, "delta_nu_end_hz",
                                        std::round(1.0 / (std::sqrt(2.0) * slic_end_s) * 100.0) / 100.0);
    const double j_e = detail::get_or(overrides, "j_end_hz", 17.5);
    const double j_cis = detail::get_or(overrides, "j_cis_hz", 0.012);
    const double j_trans = detail::get_or(overrides, "j_trans_hz", 0.004);
    const double nu_lock = detail::get_or(overrides, "transfer_nutation_hz", 280.0);
    const bool third = detail::get_or(overrides, "third_pair", false);
    const double tx = ppm_to_hz(3.89, mhz);

    auto build = [&](double j_c) {
        std::vector<detail::PairSpec> pairs{{"c", 3.89, dnu_c, j_c}, {"e", 3.71, dnu_e, j_e}};
        if (third) pairs.push_back({"f", 3.10, 10.0, 14.0});
        SpinSystem s = detail::with_interpair(detail::build_pairs(pairs, mhz), 0, 1, j_cis, j_trans);
        if (third) s = detail::with_interpair(s, 0, 2, j_cis, j_trans);
        return s;
    };

    double j_c = 16.0;
    bool tuned = false;
    if (overrides.contains("j_center_hz")) {
        j_c = detail::get_or(overrides, "j_center_hz", j_c);
    } else {
        // root of the dressed detuning of the phi+ or phi- component in j_center
        std::optional<double> best;
        for (std::size_t k : {std::size_t{0}, std::size_t{2}}) {
            auto f = [&](double jc) {
                return dressed_detunings(build(jc), 0, 1, {nu_lock, kPhaseY, tx})[k];
            };
            double lo = 12.0, hi = 20.0;
            const double flo = f(lo), fhi = f(hi);
            if ((flo > 0.0) == (fhi > 0.0)) continue;
            std::uintmax_t it = 200;
            const auto r = boost::math::tools::toms748_solve(
                f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50), it);
            const double root = 0.5 * (r.first + r.second);
            if (!best || std::abs(root - 16.0) < std::abs(*best - 16.0)) best = root;
        }
        if (!best) throw NumericalError("could not tune the phe-gly-gly center coupling");
        j_c = *best;
        tuned = true;
    }

    Preset p{"phe-gly-gly", build(j_c)};
    p.spectrometer_mhz = mhz;
    p.pair_shift_ppm = {3.89, 3.71};
    if (third) p.pair_shift_ppm.push_back(3.10);
    p.access = {PairAccess::three_pulse(0.007, 0.0205, 0.00925), PairAccess::slic(17.5, slic_end_s)};
    if (third) p.access.push_back(PairAccess::slic(14.0, 1.0 / (std::sqrt(2.0) * 10.0)));
    p.transfer = {nu_lock, kPhaseY, tx};
    p.parameters = {{"spectrometer_mhz", mhz},
                    {"delta_nu_center_hz", dnu_c},
                    {"delta_nu_end_hz", dnu_e},
                    {"j_center_hz", j_c},
                    {"j_center_tuned", tuned},
                    {"j_end_hz", j_e},
                    {"j_cis_hz", j_cis},
                    {"j_trans_hz", j_trans},
                    {"transfer_nutation_hz", nu_lock},
                    {"third_pair", third}};
    return p;
}

[[nodiscard]] inline std::vector<std::string> preset_names() { return {"glutamate", "phe-gly-gly"}; }

[[nodiscard]] inline Preset make_preset(const std::string& name,
                                        const nlohmann::json& overrides = nlohmann::json::object()) {
    if (name == "glutamate") return glutamate_preset(overrides);
    if (name == "phe-gly-gly" || name == "phe_gly_gly") return phe_gly_gly_preset(overrides);
    throw InputError("unknown preset '" + name + "' (known: glutamate, phe-gly-gly)");
}

}  // namespace singletsim
