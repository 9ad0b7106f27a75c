/**
 * @file sequences.hpp
 * @brief Singlet access sequences, transfer experiments and the per-component
 * effective model they are compared against.
 *
 * Transfer experiments start from the prepared singlet on the source pair with
 * every other pair in the maximally mixed triplet P_T/3. The observable is the
 * readout pair's singlet population unless the signal proxy is selected.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "singletsim/analysis.hpp"
#include "singletsim/errors.hpp"
#include "singletsim/hamiltonian.hpp"
#include "singletsim/propagator.hpp"
#include "singletsim/spin_core.hpp"
#include "singletsim/trace.hpp"

namespace singletsim {

// ============================================================================
// Protocol description
// ============================================================================

enum class ProtocolKind { rabi, ramsey, double_rabi, pumping, resonance_scan };
enum class PrepMethod { ideal, slic, three_pulse };
enum class ReadoutMethod { projector, signal_proxy };

[[nodiscard]] inline std::string to_string(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::rabi: return "rabi";
        case ProtocolKind::ramsey: return "ramsey";
        case ProtocolKind::double_rabi: return "double_rabi";
        case ProtocolKind::pumping: return "pumping";
        case ProtocolKind::resonance_scan: return "resonance_scan";
    }
    return "?";
}
[[nodiscard]] inline std::string to_string(PrepMethod m) {
    switch (m) {
        case PrepMethod::ideal: return "ideal";
        case PrepMethod::slic: return "slic";
        case PrepMethod::three_pulse: return "three_pulse";
    }
    return "?";
}

/// How one pair's singlet is created and read.
struct PairAccess {
    PrepMethod method = PrepMethod::ideal;
    double slic_nutation_hz = 0.0;
    double slic_duration_s = 0.0;
    double slic_phase_rad = kPhaseY;
    double tau1_s = 0.0;
    double tau2_s = 0.0;
    double tau3_s = 0.0;

    static PairAccess slic(double nutation_hz, double duration_s) {
        PairAccess a;
        a.method = PrepMethod::slic;
        a.slic_nutation_hz = nutation_hz;
        a.slic_duration_s = duration_s;
        return a;
    }
    static PairAccess three_pulse(double t1, double t2, double t3) {
        PairAccess a;
        a.method = PrepMethod::three_pulse;
        a.tau1_s = t1;
        a.tau2_s = t2;
        a.tau3_s = t3;
        return a;
    }
};

enum class SweepVariable { lock_duration, nutation, delta_nutation, ramsey_delay, cycles };

[[nodiscard]] inline std::string to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::lock_duration: return "tau_sl_s";
        case SweepVariable::nutation: return "nu_n_hz";
        case SweepVariable::delta_nutation: return "delta_nu_n_hz";
        case SweepVariable::ramsey_delay: return "tau_ramsey_s";
        case SweepVariable::cycles: return "cycles";
    }
    return "?";
}

struct Protocol {
    ProtocolKind kind = ProtocolKind::rabi;
    int source_pair = 0;   ///< 0-based
    int readout_pair = 1;  ///< 0-based
    std::vector<PairAccess> access;  ///< per pair; missing entries are ideal

    /// Transfer lock. Its duration is used when the sweep is not over duration.
    SpinLockParams transfer{600.0, kPhaseY, 0.0};
    double transfer_duration_s = 0.0;

    ReadoutMethod readout = ReadoutMethod::projector;
    bool phase_cycle = false;

    SweepVariable sweep_variable = SweepVariable::lock_duration;
    std::vector<double> sweep;

    // ramsey: pi/2 transfer block, then free precession under a weak lock
    double ramsey_half_pi_s = 0.0;
    double ramsey_free_nutation_hz = 47.0;

    // double rabi: phase of the second block
    double second_phase_rad = kPhaseMinusY;

    // pumping
    double reset_delay_s = 3.1;
    RelaxationEnvelope envelope;

    // resonance scan: lock durations of each Rabi sweep
    std::vector<double> scan_durations;

    [[nodiscard]] PairAccess access_for(int pair) const {
        if (pair >= 0 && static_cast<std::size_t>(pair) < access.size()) {
            return access[static_cast<std::size_t>(pair)];
        }
        return {};
    }

    void validate(const SpinSystem& system) const {
        if (system.n_pairs() < 2) throw InputError("transfer protocols need at least two pairs");
        (void)system.pair(source_pair);
        (void)system.pair(readout_pair);
        if (2 * system.n_pairs() != system.n_spins()) {
            throw InputError("every spin must belong to a pair");
        }
        transfer.validate();
        if (!(transfer_duration_s >= 0.0)) throw InputError("transfer duration must be >= 0");
        if (sweep.empty()) throw InputError("sweep grid must be nonempty");
        for (std::size_t k = 0; k < sweep.size(); ++k) {
            if (!std::isfinite(sweep[k])) throw InputError("sweep values must be finite");
            if (k > 0 && !(sweep[k] > sweep[k - 1])) {
                throw InputError("sweep grid must be strictly increasing");
            }
        }
        envelope.validate();
        if (kind == ProtocolKind::pumping) {
            if (sweep_variable != SweepVariable::cycles) {
                throw InputError("pumping sweeps the cycle count");
            }
            for (double v : sweep) {
                if (v < 1.0 || v != std::floor(v)) {
                    throw InputError("cycle counts must be integers >= 1");
                }
            }
            if (!(reset_delay_s >= 0.0)) throw InputError("reset delay must be >= 0");
        }
        if (kind == ProtocolKind::resonance_scan) {
            if (sweep_variable != SweepVariable::nutation &&
                sweep_variable != SweepVariable::delta_nutation) {
                throw InputError("resonance scans sweep nu_n_hz or delta_nu_n_hz");
            }
            if (scan_durations.size() < 8) {
                throw InputError("resonance scan needs at least 8 lock durations per point");
            }
        }
        if (kind == ProtocolKind::ramsey && !(ramsey_half_pi_s >= 0.0)) {
            throw InputError("ramsey pi/2 duration must be >= 0");
        }
    }
};

// ============================================================================
// Access sequences
// ============================================================================

/// 90 degree pulse at (phase - 90 deg), then a spin lock at `phase`: the
/// pulse turns +z magnetization antiparallel to the lock axis.
[[nodiscard]] inline Sequence slic_sequence(double nutation_hz, double duration_s,
                                            double phase_rad = kPhaseY,
                                            double transmitter_offset_hz = 0.0) {
    return {HardPulse{std::numbers::pi / 2.0, phase_rad - std::numbers::pi / 2.0},
            SpinLock{{nutation_hz, phase_rad, transmitter_offset_hz}, duration_s}};
}

/// SLIC on an assigned pair, transmitter at the pair's mean offset.
[[nodiscard]] inline Sequence slic_sequence(const SpinSystem& system, int pair_index,
                                            double nutation_hz, double duration_s,
                                            double phase_rad = kPhaseY) {
    return slic_sequence(nutation_hz, duration_s, phase_rad, system.pair_offset_hz(pair_index));
}

/// 90(x) - tau1 - 180(y) - tau2 - 90(y) - tau3.
[[nodiscard]] inline Sequence three_pulse_sequence(double tau1_s, double tau2_s, double tau3_s,
                                                   double transmitter_offset_hz = 0.0) {
    if (!(tau1_s >= 0.0) || !(tau2_s >= 0.0) || !(tau3_s >= 0.0)) {
        throw InputError("three-pulse delays must be >= 0");
    }
    return {HardPulse{std::numbers::pi / 2.0, kPhaseX},
            Delay{tau1_s, transmitter_offset_hz},
            HardPulse{std::numbers::pi, kPhaseY},
            Delay{tau2_s, transmitter_offset_hz},
            HardPulse{std::numbers::pi / 2.0, kPhaseY},
            Delay{tau3_s, transmitter_offset_hz}};
}

/// The pair and its intrapair coupling as a standalone two-spin system.
[[nodiscard]] inline SpinSystem isolated_pair(const SpinSystem& system, int pair_index) {
    const auto& p = system.pair(pair_index);
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, 2);
    j(0, 1) = j(1, 0) = system.coupling_hz(p.a, p.b);
    return SpinSystem({system.offset_hz(p.a), system.offset_hz(p.b)}, j, {{0, 1}},
                      {system.label(p.a), system.label(p.b)});
}

[[nodiscard]] inline Sequence access_sequence(const SpinSystem& system, int pair_index,
                                              const PairAccess& a) {
    const double tx = system.pair_offset_hz(pair_index);
    switch (a.method) {
        case PrepMethod::ideal: return {};
        case PrepMethod::slic:
            return slic_sequence(a.slic_nutation_hz, a.slic_duration_s, a.slic_phase_rad, tx);
        case PrepMethod::three_pulse: return three_pulse_sequence(a.tau1_s, a.tau2_s, a.tau3_s, tx);
    }
    return {};
}

/// Pair state after the access sequence acting on |up up>, with the pair
/// treated in isolation. Ideal access returns the exact singlet.
[[nodiscard]] inline PairOperator prepare_pair_state(const SpinSystem& system, int pair_index,
                                                     const PairAccess& a) {
    if (a.method == PrepMethod::ideal) return pair_singlet_projector();
    const SpinSystem pair = isolated_pair(system, pair_index);
    PairKet up_up = PairKet::Zero();
    up_up(0) = 1.0;
    const auto rho = propagate_final(DensityState::pure(up_up), access_sequence(system, pair_index, a),
                                     pair);
    return rho.matrix();
}

/// Singlet population created from |up up> by the three-pulse pattern on a
/// two-spin pair with coupling j_hz and shift difference dnu_hz.
[[nodiscard]] inline double three_pulse_singlet_yield(double j_hz, double dnu_hz, double tau1_s,
                                                      double tau2_s, double tau3_s) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, 2);
    j(0, 1) = j(1, 0) = j_hz;
    const SpinSystem pair({-0.5 * dnu_hz, 0.5 * dnu_hz}, j, {{0, 1}});
    PairKet up_up = PairKet::Zero();
    up_up(0) = 1.0;
    const auto rho = propagate_final(DensityState::pure(up_up),
                                     three_pulse_sequence(tau1_s, tau2_s, tau3_s), pair);
    return singlet_population(rho, pair, 0);
}

struct ThreePulseDelays {
    double tau1_s = 0.0;
    double tau2_s = 0.0;
    double tau3_s = 0.0;
    double singlet_yield = 0.0;
};

/// Grid search over (tau1, tau2, tau3) in [0, max_delay_s]^3.
[[nodiscard]] inline ThreePulseDelays optimize_three_pulse(double j_hz, double dnu_hz,
                                                           double max_delay_s = 0.05,
                                                           int steps = 21) {
    if (steps < 2 || !(max_delay_s > 0.0)) throw InputError("invalid grid for three-pulse search");
    ThreePulseDelays best;
    best.singlet_yield = -1.0;
    const double h = max_delay_s / (steps - 1);
    for (int a = 0; a < steps; ++a) {
        for (int b = 0; b < steps; ++b) {
            for (int c = 0; c < steps; ++c) {
                const double y = three_pulse_singlet_yield(j_hz, dnu_hz, a * h, b * h, c * h);
                if (y > best.singlet_yield) best = {a * h, b * h, c * h, y};
            }
        }
    }
    return best;
}

// ============================================================================
// Initial state and readout
// ============================================================================

/// Source pair prepared by its access sequence, all other pairs in P_T/3.
[[nodiscard]] inline DensityState transfer_initial_state(const SpinSystem& system,
                                                         const Protocol& protocol) {
    std::vector<PairOperator> states(static_cast<std::size_t>(system.n_pairs()),
                                     maximally_mixed_triplet());
    states[static_cast<std::size_t>(protocol.source_pair)] =
        prepare_pair_state(system, protocol.source_pair, protocol.access_for(protocol.source_pair));
    return product_density(system, states);
}

/// Complex transverse magnetization sum_i <I_ix> + i <I_iy> over a pair.
[[nodiscard]] inline cplx pair_transverse_magnetization(const DensityState& rho,
                                                        const SpinSystem& system, int pair_index) {
    const auto& p = system.pair(pair_index);
    cplx m{0.0, 0.0};
    for (int s : {p.a, p.b}) {
        m += expectation(rho, embed_spin_operator(system, s, Axis::x)).real();
        m += cplx{0.0, 1.0} * expectation(rho, embed_spin_operator(system, s, Axis::y)).real();
    }
    return m;
}

/// Access sequence run in reverse order with inverted pulse phases, which
/// converts the pair's singlet back to transverse magnetization.
[[nodiscard]] inline Sequence readout_sequence(const SpinSystem& system, int pair_index,
                                               const PairAccess& a, double extra_phase_rad = 0.0) {
    Sequence prep = access_sequence(system, pair_index, a);
    Sequence out;
    for (auto it = prep.rbegin(); it != prep.rend(); ++it) {
        Segment s = *it;
        if (auto* p = std::get_if<HardPulse>(&s)) p->phase_rad += std::numbers::pi;
        std::visit(
            [&](auto& seg) {
                using T = std::decay_t<decltype(seg)>;
                if constexpr (std::is_same_v<T, HardPulse>) {
                    seg.phase_rad += extra_phase_rad;
                } else if constexpr (std::is_same_v<T, SpinLock>) {
                    seg.params.phase_rad += extra_phase_rad;
                }
            },
            s);
        out.push_back(s);
    }
    // SLIC readout is the lock alone; the locked magnetization is transverse
    if (a.method == PrepMethod::slic && !out.empty() && std::holds_alternative<SpinLock>(out.front())) {
        return {out.front()};
    }
    return out;
}

/**
 * Observable for one state: the readout pair's singlet population, or the
 * signal proxy |M| after the readout sequence. With phase cycling the proxy is
 * |M(0) - M(pi)|/2 over a two-step shift of every readout phase.
 */
[[nodiscard]] inline double readout_observable(const DensityState& rho, const SpinSystem& system,
                                               const Protocol& protocol) {
    if (protocol.readout == ReadoutMethod::projector) {
        return singlet_population(rho, system, protocol.readout_pair);
    }
    const auto a = protocol.access_for(protocol.readout_pair);
    if (a.method == PrepMethod::ideal) {
        return singlet_population(rho, system, protocol.readout_pair);
    }
    auto signal = [&](double shift) {
        const auto after = propagate_final(
            rho, readout_sequence(system, protocol.readout_pair, a, shift), system);
        return pair_transverse_magnetization(after, system, protocol.readout_pair);
    };
    if (!protocol.phase_cycle) return std::abs(signal(0.0));
    return 0.5 * std::abs(signal(0.0) - signal(std::numbers::pi));
}

namespace detail {

inline void record(Trace& trace, double x, const DensityState& rho, const SpinSystem& system,
                   const Protocol& protocol) {
    trace.sweep.push_back(x);
    trace.observable.push_back(readout_observable(rho, system, protocol));
    for (int p = 0; p < system.n_pairs(); ++p) {
        trace.pair_singlet[static_cast<std::size_t>(p)].push_back(
            singlet_population(rho, system, p));
    }
}

inline Trace empty_trace(const SpinSystem& system, const Protocol& protocol) {
    Trace t;
    t.sweep_name = to_string(protocol.sweep_variable);
    t.sweep_is_time = protocol.sweep_variable == SweepVariable::lock_duration ||
                      protocol.sweep_variable == SweepVariable::ramsey_delay;
    t.pair_singlet.resize(static_cast<std::size_t>(system.n_pairs()));
    t.readout_pair = protocol.readout_pair;
    t.metadata["protocol"] = to_string(protocol.kind);
    t.metadata["source_pair"] = protocol.source_pair + 1;
    t.metadata["readout_pair"] = protocol.readout_pair + 1;
    return t;
}

inline void require_kind(const Protocol& p, ProtocolKind k) {
    if (p.kind != k) {
        throw InputError("protocol kind is " + to_string(p.kind) + ", expected " + to_string(k));
    }
}

/// Mean offset difference between source and readout pairs.
inline double pair_shift_difference(const SpinSystem& system, const Protocol& p) {
    return system.pair_offset_hz(p.readout_pair) - system.pair_offset_hz(p.source_pair);
}

}  // namespace detail

/// Nutation frequency for a target effective nutation difference between the
/// protocol's source and readout pairs.
[[nodiscard]] inline double nutation_for(const SpinSystem& system, const Protocol& p,
                                         double delta_nu_n_hz) {
    return nutation_for_difference(delta_nu_n_hz, detail::pair_shift_difference(system, p));
}

// ============================================================================
// Experiments
// ============================================================================

/// Transfer lock swept over duration or nutation frequency.
[[nodiscard]] inline Trace run_rabi(const SpinSystem& system, const Protocol& protocol) {
    detail::require_kind(protocol, ProtocolKind::rabi);
    protocol.validate(system);
    const DensityState rho0 = transfer_initial_state(system, protocol);
    Trace trace = detail::empty_trace(system, protocol);
    switch (protocol.sweep_variable) {
        case SweepVariable::lock_duration: {
            if (protocol.sweep.front() < 0.0) throw InputError("lock durations must be >= 0");
            const SpectralPropagator sp(spinlock_hamiltonian(system, protocol.transfer));
            for (double t : protocol.sweep) detail::record(trace, t, sp.evolve(rho0, t), system, protocol);
            break;
        }
        case SweepVariable::nutation:
        case SweepVariable::delta_nutation: {
            for (double v : protocol.sweep) {
                SpinLockParams lock = protocol.transfer;
                lock.nutation_hz = protocol.sweep_variable == SweepVariable::nutation
                                       ? v
                                       : nutation_for(system, protocol, v);
                const SpectralPropagator sp(spinlock_hamiltonian(system, lock));
                detail::record(trace, v, sp.evolve(rho0, protocol.transfer_duration_s), system,
                               protocol);
            }
            break;
        }
        default: throw InputError("rabi sweeps lock duration or nutation frequency");
    }
    trace.metadata["transfer_nutation_hz"] = protocol.transfer.nutation_hz;
    return trace;
}

/// Lock with the transfer phase for tau, then with the second phase for tau.
[[nodiscard]] inline Trace run_double_rabi(const SpinSystem& system, const Protocol& protocol) {
    detail::require_kind(protocol, ProtocolKind::double_rabi);
    protocol.validate(system);
    if (protocol.sweep_variable != SweepVariable::lock_duration) {
        throw InputError("double rabi sweeps the lock duration");
    }
    const DensityState rho0 = transfer_initial_state(system, protocol);
    SpinLockParams second = protocol.transfer;
    second.phase_rad = protocol.second_phase_rad;
    const SpectralPropagator first(spinlock_hamiltonian(system, protocol.transfer));
    const SpectralPropagator other(spinlock_hamiltonian(system, second));
    Trace trace = detail::empty_trace(system, protocol);
    for (double t : protocol.sweep) {
        if (t < 0.0) throw InputError("lock durations must be >= 0");
        detail::record(trace, t, other.evolve(first.evolve(rho0, t), t), system, protocol);
    }
    return trace;
}

/// pi/2 transfer block, weak-lock free precession for tau, pi/2 block.
[[nodiscard]] inline Trace run_ramsey(const SpinSystem& system, const Protocol& protocol) {
    detail::require_kind(protocol, ProtocolKind::ramsey);
    protocol.validate(system);
    if (protocol.sweep_variable != SweepVariable::ramsey_delay) {
        throw InputError("ramsey sweeps the free-precession delay");
    }
    const DensityState rho0 = transfer_initial_state(system, protocol);
    const Operator u_half =
        SpectralPropagator(spinlock_hamiltonian(system, protocol.transfer)).at(protocol.ramsey_half_pi_s);
    SpinLockParams weak = protocol.transfer;
    weak.nutation_hz = protocol.ramsey_free_nutation_hz;
    const SpectralPropagator free(spinlock_hamiltonian(system, weak));
    const DensityState after_first = rho0.conjugated_by(u_half);
    Trace trace = detail::empty_trace(system, protocol);
    for (double t : protocol.sweep) {
        if (t < 0.0) throw InputError("ramsey delays must be >= 0");
        detail::record(trace, t, free.evolve(after_first, t).conjugated_by(u_half), system,
                       protocol);
    }
    trace.metadata["ramsey_half_pi_s"] = protocol.ramsey_half_pi_s;
    trace.metadata["ramsey_free_nutation_hz"] = protocol.ramsey_free_nutation_hz;
    return trace;
}

namespace detail {

/// Reduced pair state with coherences between singlet and triplet dropped.
inline PairOperator dephase_singlet_triplet(const PairOperator& rho) {
    const PairOperator ps = pair_singlet_projector();
    const PairOperator pt = pair_triplet_projector();
    return ps * rho * ps + pt * rho * pt;
}

/// Singlet population p decays to p e^{-t/T_S}; the lost population joins
/// the triplet uniformly. The triplet block relaxes to uniform with T_1.
inline PairOperator relax_pair(const PairOperator& rho, double t, std::optional<double> t_s,
                               std::optional<double> t_1) {
    const PairOperator ps = pair_singlet_projector();
    const PairOperator pt = pair_triplet_projector();
    const double p = (ps * rho).trace().real();
    PairOperator trip = pt * rho * pt;
    const double trip_pop = 1.0 - p;
    if (t_1) {
        const double k = std::exp(-t / *t_1);
        trip = k * trip + (1.0 - k) * trip_pop * pt / 3.0;
    }
    const double p_new = t_s ? p * std::exp(-t / *t_s) : p;
    return p_new * ps + trip + (p - p_new) * pt / 3.0;
}

}  // namespace detail

/**
 * Repeated transfer into the readout pair. Each cycle re-prepares the source
 * pair, keeps the readout pair's state (singlet-triplet coherences and
 * interpair correlations dropped), applies the transfer lock for
 * transfer_duration_s, then waits reset_delay_s. Singlet decay (T_S) acts
 * during the lock and the wait; the triplet block relaxes toward uniform with
 * T_1 during the wait, with T_1 = reset_delay_s / 5 unless the envelope gives
 * a triplet lifetime for the readout pair. The trace records all pair populations at the end of the lock of the
 * n-th cycle.
 */
[[nodiscard]] inline Trace run_pumping(const SpinSystem& system, const Protocol& protocol) {
    detail::require_kind(protocol, ProtocolKind::pumping);
    protocol.validate(system);
    const int src = protocol.source_pair;
    const int dst = protocol.readout_pair;
    const auto ts_dst = protocol.envelope.singlet_lifetime(dst);
    const double t1_dst =
        protocol.envelope.triplet_lifetime(dst).value_or(protocol.reset_delay_s / 5.0);
    const double tau = protocol.transfer_duration_s;
    const SpectralPropagator lock(spinlock_hamiltonian(system, protocol.transfer));
    const PairOperator source_state = prepare_pair_state(system, src, protocol.access_for(src));

    Trace trace = detail::empty_trace(system, protocol);
    trace.sweep_is_time = false;
    PairOperator dst_state = maximally_mixed_triplet();
    const int n_max = static_cast<int>(protocol.sweep.back());
    std::size_t next = 0;
    for (int cycle = 1; cycle <= n_max; ++cycle) {
        std::vector<PairOperator> states(static_cast<std::size_t>(system.n_pairs()),
                                         maximally_mixed_triplet());
        states[static_cast<std::size_t>(src)] = source_state;
        states[static_cast<std::size_t>(dst)] = dst_state;
        const DensityState after = lock.evolve(product_density(system, states), tau);

        dst_state = detail::relax_pair(
            detail::dephase_singlet_triplet(reduced_pair_density(after, system, dst)), tau, ts_dst,
            std::nullopt);
        if (next < protocol.sweep.size() && static_cast<int>(protocol.sweep[next]) == cycle) {
            trace.sweep.push_back(cycle);
            for (int p = 0; p < system.n_pairs(); ++p) {
                double pop = singlet_population(after, system, p);
                if (p == dst) {
                    pop = (pair_singlet_projector() * dst_state).trace().real();
                } else if (const auto t_s = protocol.envelope.singlet_lifetime(p)) {
                    pop *= std::exp(-tau / *t_s);
                }
                trace.pair_singlet[static_cast<std::size_t>(p)].push_back(pop);
            }
            trace.observable.push_back(trace.pair_singlet[static_cast<std::size_t>(dst)].back());
            ++next;
        }
        if (protocol.reset_delay_s > 0.0) {
            dst_state = detail::relax_pair(dst_state, protocol.reset_delay_s, ts_dst, t1_dst);
        }
    }
    trace.metadata["transfer_duration_s"] = tau;
    trace.metadata["reset_delay_s"] = protocol.reset_delay_s;
    return trace;
}

// ============================================================================
// Resonance scan
// ============================================================================

struct ScanRow {
    double nutation_hz = 0.0;
    double delta_nutation_hz = 0.0;
    double amplitude = 0.0;
    double frequency_hz = 0.0;
    bool ok = false;
    std::string message;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    std::optional<FitResult> lorentzian;
    std::string warning;

    /// Successful rows as amplitude vs effective nutation difference.
    [[nodiscard]] Trace amplitude_trace() const {
        Trace t;
        t.sweep_name = "delta_nu_n_hz";
        t.sweep_is_time = false;
        for (const auto& r : rows) {
            if (!r.ok) continue;
            t.sweep.push_back(r.delta_nutation_hz);
            t.observable.push_back(r.amplitude);
        }
        return t;
    }
};

/**
 * For each nutation frequency, a Rabi duration sweep over scan_durations is
 * fitted with A [sin^2 + c] e^{-t/T}; |A| is recorded against the effective
 * nutation difference. Points whose fit fails are kept with ok = false. A
 * Lorentzian is fitted when at least five points succeed.
 */
[[nodiscard]] inline ScanResult run_resonance_scan(const SpinSystem& system,
                                                   const Protocol& protocol) {
    detail::require_kind(protocol, ProtocolKind::resonance_scan);
    protocol.validate(system);
    const double d12 = detail::pair_shift_difference(system, protocol);
    const DensityState rho0 = transfer_initial_state(system, protocol);
    ScanResult out;
    for (double v : protocol.sweep) {
        ScanRow row;
        try {
            if (protocol.sweep_variable == SweepVariable::nutation) {
                row.nutation_hz = v;
                row.delta_nutation_hz = effective_nutation_difference(v, d12);
            } else {
                row.delta_nutation_hz = v;
                row.nutation_hz = nutation_for_difference(v, d12);
            }
            SpinLockParams lock = protocol.transfer;
            lock.nutation_hz = row.nutation_hz;
            const SpectralPropagator sp(spinlock_hamiltonian(system, lock));
            std::vector<double> y;
            y.reserve(protocol.scan_durations.size());
            for (double t : protocol.scan_durations) {
                y.push_back(readout_observable(sp.evolve(rho0, t), system, protocol));
            }
            const auto fit = fit_rabi(protocol.scan_durations, y, RabiMode::sin2);
            row.amplitude = std::abs(fit.value("A"));
            row.frequency_hz = fit.value("f_hz");
            row.ok = fit.converged;
            row.message = fit.message;
        } catch (const std::exception& e) {
            row.ok = false;
            row.message = e.what();
        }
        out.rows.push_back(row);
    }
    const Trace amp = out.amplitude_trace();
    if (amp.size() < 5) {
        out.warning = "fewer than five successful scan points: no Lorentzian fit attempted";
    } else {
        try {
            out.lorentzian = fit_lorentzian(amp.sweep, amp.observable);
            if (!out.lorentzian->converged) out.warning = "Lorentzian fit did not converge";
        } catch (const std::exception& e) {
            out.warning = std::string("Lorentzian fit failed: ") + e.what();
        }
    }
    return out;
}

// ============================================================================
// Per-component effective model
// ============================================================================

/**
 * One triplet component of the transfer: |S0 T_k> <-> |T_k S0> as an
 * independent two-level system with the given weight. Components are
 * ordered (phi+, phi0, phi-) along the lock axis.
 */
struct EffectiveComponent {
    EffectiveTwoLevel model;
    double weight = 1.0 / 3.0;
};

using EffectiveComponents = std::array<EffectiveComponent, 3>;

/**
 * Components from the closed-form interaction strength and state energies:
 * each pair's effective nutation is sqrt(nu_n^2 + offset^2) with offset the
 * pair's mean offset from the transmitter; the three components use pure
 * phi+, phi0, phi- amplitudes on both pairs.
 */
[[nodiscard]] inline EffectiveComponents effective_components(const SpinSystem& system, int source,
                                                              int target,
                                                              const SpinLockParams& lock) {
    const auto j = interpair_couplings(system, source, target);
    const auto& ps = system.pair(source);
    const auto& pt = system.pair(target);
    const double j_src = system.coupling_hz(ps.a, ps.b);
    const double j_dst = system.coupling_hz(pt.a, pt.b);
    const double nu_src = std::hypot(lock.nutation_hz,
                                     system.pair_offset_hz(source) - lock.transmitter_offset_hz);
    const double nu_dst = std::hypot(lock.nutation_hz,
                                     system.pair_offset_hz(target) - lock.transmitter_offset_hz);
    const std::array<TripletAmplitudes, 3> amps{TripletAmplitudes::phi_plus(),
                                                TripletAmplitudes::phi0(),
                                                TripletAmplitudes::phi_minus()};
    EffectiveComponents out;
    for (std::size_t k = 0; k < 3; ++k) {
        // E1: triplet on the target pair, singlet on the source (the initial state)
        const auto e = state_energies(j_dst, j_src, nu_dst, nu_src, amps[k], amps[k]);
        out[k].model = EffectiveTwoLevel(e, interaction_strength(j, amps[k], amps[k]));
    }
    return out;
}

/**
 * Components from diagonalized single-pair lock Hamiltonians: detuning from
 * the dressed levels and C scaled by the overlap of the two pairs'
 * triplet-like eigenvectors.
 */
[[nodiscard]] inline EffectiveComponents dressed_effective_components(const SpinSystem& system,
                                                                      int source, int target,
                                                                      const SpinLockParams& lock) {
    const auto a = pair_dressed_levels(system, source, lock);
    const auto b = pair_dressed_levels(system, target, lock);
    const double c0 = 0.25 * interpair_couplings(system, source, target).antisymmetric_sum();
    EffectiveComponents out;
    for (std::size_t k = 0; k < 3; ++k) {
        // energy order is (phi-, phi0, phi+); store as (phi+, phi0, phi-)
        const std::size_t m = 2 - k;
        const double d = (b.triplet_energies[m] - b.singlet_energy) -
                         (a.triplet_energies[m] - a.singlet_energy);
        const double ov = std::abs(a.triplet_states[m].dot(b.triplet_states[m]));
        out[k].model = EffectiveTwoLevel(0.5 * d, -0.5 * d, c0 * ov);
    }
    return out;
}

/// Receiving-pair singlet population from a prepared source singlet.
[[nodiscard]] inline std::vector<double> effective_rabi(const EffectiveComponents& comps,
                                                        const std::vector<double>& times) {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) {
        double p = 0.0;
        for (const auto& c : comps) p += c.weight * c.model.transfer_probability(t);
        out.push_back(p);
    }
    return out;
}

/// Receiving-pair population after block 1 (t) then block 2 (t). With
/// `reversed_order` the second block's component k is the first block's
/// component 2 - k, as happens when the lock phase is inverted.
[[nodiscard]] inline std::vector<double> effective_double_rabi(const EffectiveComponents& first,
                                                               const EffectiveComponents& second,
                                                               const std::vector<double>& times,
                                                               bool reversed_order = true) {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) {
        double p = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& c2 = second[reversed_order ? 2 - k : k];
            const Eigen::Matrix2cd u = c2.model.propagator(t) * first[k].model.propagator(t);
            p += first[k].weight * std::norm(u(1, 0));
        }
        out.push_back(p);
    }
    return out;
}

/// Ramsey: half block (t_half), free block (tau), half block, per component.
[[nodiscard]] inline std::vector<double> effective_ramsey(const EffectiveComponents& half,
                                                          const EffectiveComponents& free_prec,
                                                          double t_half,
                                                          const std::vector<double>& times) {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) {
        double p = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const Eigen::Matrix2cd uh = half[k].model.propagator(t_half);
            const Eigen::Matrix2cd u = uh * free_prec[k].model.propagator(t) * uh;
            p += half[k].weight * std::norm(u(1, 0));
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace singletsim
