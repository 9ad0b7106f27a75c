/**
 * @file propagator.hpp
 * @brief Piecewise-constant unitary evolution and phenomenological decay envelopes.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "singletsim/errors.hpp"
#include "singletsim/hamiltonian.hpp"
#include "singletsim/spin_core.hpp"
#include "singletsim/trace.hpp"

namespace singletsim {

inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kBoundarySnap = 1e-9;

[[nodiscard]] inline double hermiticity_error(const Operator& h) {
    return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

[[nodiscard]] inline double unitarity_error(const Operator& u) {
    return (u.adjoint() * u - Operator::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

/**
 * exp(-i 2 pi H t) for a fixed Hermitian H, from one eigendecomposition.
 * Evaluating many durations costs one matrix product each.
 */
class SpectralPropagator {
public:
    explicit SpectralPropagator(const Operator& h) {
        if (h.rows() != h.cols()) throw InputError("Hamiltonian must be square");
        const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
        if (hermiticity_error(h) > kHermitianTolerance * scale) {
            throw NumericalError("Hamiltonian is not Hermitian");
        }
        Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (h + h.adjoint()));
        if (es.info() != Eigen::Success) {
            throw NumericalError("Hamiltonian eigendecomposition failed");
        }
        energies_ = es.eigenvalues();
        vectors_ = es.eigenvectors();
    }

    [[nodiscard]] Operator at(double t) const {
        const Eigen::VectorXcd phases =
            (energies_ * (-2.0 * std::numbers::pi * t)).unaryExpr([](double a) {
                return std::polar(1.0, a);
            });
        return vectors_ * phases.asDiagonal() * vectors_.adjoint();
    }

    /// U rho U^dag evaluated in the eigenbasis.
    [[nodiscard]] DensityState evolve(const DensityState& rho, double t) const {
        return rho.conjugated_by(at(t));
    }

    [[nodiscard]] const Eigen::VectorXd& energies() const noexcept { return energies_; }
    [[nodiscard]] const Operator& eigenvectors() const noexcept { return vectors_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return energies_.size(); }

private:
    Eigen::VectorXd energies_;
    Operator vectors_;
};

/// exp(-i 2 pi H t) via Hermitian eigendecomposition.
[[nodiscard]] inline Operator segment_propagator(const Operator& h, double duration_s) {
    if (!(duration_s >= 0.0)) throw InputError("segment duration must be >= 0");
    return SpectralPropagator(h).at(duration_s);
}

/// exp(-i theta sum_i (cos phi I_ix + sin phi I_iy)): a product of identical
/// single-spin rotations.
[[nodiscard]] inline Operator hard_pulse_propagator(int n_spins, double flip_rad, double phase_rad) {
    if (!std::isfinite(flip_rad) || !std::isfinite(phase_rad)) {
        throw InputError("pulse flip angle and phase must be finite");
    }
    const cplx i{0.0, 1.0};
    const double c = std::cos(0.5 * flip_rad);
    const double s = std::sin(0.5 * flip_rad);
    Eigen::Matrix2cd r;
    r << c, -i * s * std::polar(1.0, -phase_rad), -i * s * std::polar(1.0, phase_rad), c;
    const Eigen::Index dim = Eigen::Index{1} << n_spins;
    Operator u(dim, dim);
    for (Eigen::Index row = 0; row < dim; ++row) {
        for (Eigen::Index col = 0; col < dim; ++col) {
            cplx v{1.0, 0.0};
            for (int k = 0; k < n_spins; ++k) {
                v *= r(spin_bit(row, k, n_spins), spin_bit(col, k, n_spins));
            }
            u(row, col) = v;
        }
    }
    return u;
}

// ============================================================================
// Segments
// ============================================================================

struct HardPulse {
    double flip_rad = std::numbers::pi / 2.0;
    double phase_rad = 0.0;
};

/// Free evolution; the transmitter offset sets the rotating frame.
struct Delay {
    double duration_s = 0.0;
    double transmitter_offset_hz = 0.0;
};

struct SpinLock {
    SpinLockParams params;
    double duration_s = 0.0;
};

using Segment = std::variant<HardPulse, Delay, SpinLock>;
using Sequence = std::vector<Segment>;

[[nodiscard]] inline double segment_duration(const Segment& seg) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, HardPulse>) {
                return 0.0;
            } else {
                return s.duration_s;
            }
        },
        seg);
}

inline void validate_segment(const Segment& seg) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, HardPulse>) {
                if (!std::isfinite(s.flip_rad) || !std::isfinite(s.phase_rad)) {
                    throw InputError("pulse flip angle and phase must be finite");
                }
            } else {
                if (!(s.duration_s >= 0.0) || !std::isfinite(s.duration_s)) {
                    throw InputError("segment duration must be finite and >= 0");
                }
                if constexpr (std::is_same_v<T, SpinLock>) s.params.validate();
            }
        },
        seg);
}

[[nodiscard]] inline double sequence_duration(const Sequence& seq) {
    double t = 0.0;
    for (const auto& s : seq) t += segment_duration(s);
    return t;
}

/// Hamiltonian active during a timed segment.
[[nodiscard]] inline Operator segment_hamiltonian(const SpinSystem& system, const Segment& seg) {
    if (const auto* d = std::get_if<Delay>(&seg)) {
        return free_hamiltonian(system, d->transmitter_offset_hz);
    }
    if (const auto* l = std::get_if<SpinLock>(&seg)) {
        return spinlock_hamiltonian(system, l->params);
    }
    throw InputError("hard pulses have no Hamiltonian");
}

/// Full propagator of one segment.
[[nodiscard]] inline Operator segment_unitary(const SpinSystem& system, const Segment& seg) {
    if (const auto* p = std::get_if<HardPulse>(&seg)) {
        return hard_pulse_propagator(system.n_spins(), p->flip_rad, p->phase_rad);
    }
    return segment_propagator(segment_hamiltonian(system, seg), segment_duration(seg));
}

/// Product of all segment propagators (last segment leftmost).
[[nodiscard]] inline Operator sequence_unitary(const SpinSystem& system, const Sequence& seq) {
    Operator u = Operator::Identity(system.dim(), system.dim());
    for (const auto& s : seq) {
        validate_segment(s);
        u = segment_unitary(system, s) * u;
    }
    return u;
}

[[nodiscard]] inline DensityState propagate_final(const DensityState& state, const Sequence& seq,
                                                  const SpinSystem& system) {
    if (state.dim() != system.dim()) throw InputError("state dimension does not match system");
    if (seq.empty()) return state;
    return state.conjugated_by(sequence_unitary(system, seq));
}

/**
 * States at the requested times (s from sequence start). A sample within
 * 1e-9 s of a segment boundary is placed on it and sees every segment that
 * ends at or before that boundary, including instantaneous pulses there.
 */
[[nodiscard]] inline std::vector<DensityState> propagate(const DensityState& state,
                                                         const Sequence& seq,
                                                         const SpinSystem& system,
                                                         const std::vector<double>& sample_times) {
    if (state.dim() != system.dim()) throw InputError("state dimension does not match system");
    for (const auto& s : seq) validate_segment(s);

    std::vector<double> bounds{0.0};
    for (const auto& s : seq) bounds.push_back(bounds.back() + segment_duration(s));
    const double total = bounds.back();

    std::vector<double> times(sample_times.size());
    for (std::size_t k = 0; k < sample_times.size(); ++k) {
        double t = sample_times[k];
        if (!std::isfinite(t) || t < -kBoundarySnap || t > total + kBoundarySnap) {
            throw InputError("sample time outside sequence duration");
        }
        for (double b : bounds) {
            if (std::abs(t - b) <= kBoundarySnap) {
                t = b;
                break;
            }
        }
        times[k] = t;
    }

    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    std::vector<std::optional<DensityState>> out(times.size());
    DensityState current = state;
    std::size_t next = 0;
    for (std::size_t seg = 0; seg <= seq.size(); ++seg) {
        const double start = bounds[seg];
        // samples at this boundary, after all segments ending here
        const bool boundary_pulse_follows =
            seg < seq.size() && std::holds_alternative<HardPulse>(seq[seg]);
        if (!boundary_pulse_follows) {
            while (next < order.size() && times[order[next]] == start) {
                out[order[next++]] = current;
            }
        }
        if (seg == seq.size()) break;

        const auto& s = seq[seg];
        if (std::holds_alternative<HardPulse>(s)) {
            current = current.conjugated_by(segment_unitary(system, s));
            continue;
        }
        const double end = bounds[seg + 1];
        std::optional<SpectralPropagator> sp;
        while (next < order.size() && times[order[next]] < end) {
            if (!sp) sp.emplace(segment_hamiltonian(system, s));
            out[order[next]] = sp->evolve(current, times[order[next]] - start);
            ++next;
        }
        if (!sp) sp.emplace(segment_hamiltonian(system, s));
        current = sp->evolve(current, end - start);
    }

    std::vector<DensityState> result;
    result.reserve(out.size());
    for (auto& o : out) result.push_back(std::move(*o));
    return result;
}

// ============================================================================
// Relaxation envelopes
// ============================================================================

/**
 * Optional lifetimes, applied to observables after simulation: singlet
 * lifetime T_S and triplet lifetime T_1 per pair, plus singlet-singlet
 * dephasing T_2S*. Absent values mean no decay.
 */
struct RelaxationEnvelope {
    std::vector<std::optional<double>> singlet_lifetime_s;
    std::vector<std::optional<double>> triplet_lifetime_s;
    std::optional<double> dephasing_time_s;

    [[nodiscard]] std::optional<double> singlet_lifetime(int pair) const {
        if (pair < 0 || static_cast<std::size_t>(pair) >= singlet_lifetime_s.size()) {
            return std::nullopt;
        }
        return singlet_lifetime_s[static_cast<std::size_t>(pair)];
    }
    [[nodiscard]] std::optional<double> triplet_lifetime(int pair) const {
        if (pair < 0 || static_cast<std::size_t>(pair) >= triplet_lifetime_s.size()) {
            return std::nullopt;
        }
        return triplet_lifetime_s[static_cast<std::size_t>(pair)];
    }
    [[nodiscard]] bool empty() const {
        auto none = [](const auto& v) {
            return std::none_of(v.begin(), v.end(), [](const auto& x) { return x.has_value(); });
        };
        return none(singlet_lifetime_s) && none(triplet_lifetime_s) && !dephasing_time_s;
    }

    void validate() const {
        auto check = [](const std::optional<double>& v) {
            if (v && !(*v > 0.0)) throw InputError("envelope lifetimes must be > 0");
        };
        for (const auto& v : singlet_lifetime_s) check(v);
        for (const auto& v : triplet_lifetime_s) check(v);
        check(dephasing_time_s);
    }

    /// Same singlet lifetime on every one of `n_pairs` pairs.
    static RelaxationEnvelope uniform_singlet(int n_pairs, double t_s) {
        RelaxationEnvelope e;
        e.singlet_lifetime_s.assign(static_cast<std::size_t>(n_pairs), t_s);
        return e;
    }
};

namespace detail {

inline void apply_envelope_column(std::vector<double>& y, const std::vector<double>& t,
                                  std::optional<double> t_s, std::optional<double> t2) {
    if (y.empty() || (!t_s && !t2)) return;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        double v = y[k];
        if (t2) v = (v - mean) * std::exp(-t[k] / *t2) + mean;
        if (t_s) v *= std::exp(-t[k] / *t_s);
        y[k] = v;
    }
}

}  // namespace detail

/**
 * y(t) -> [(y(t) - ybar) exp(-t/T_2S*) + ybar] exp(-t/T_S), with ybar the
 * trace mean, applied to every pair column with that pair's T_S and to the
 * observable with the readout pair's T_S.
 */
[[nodiscard]] inline Trace apply_relaxation_envelope(Trace trace, const RelaxationEnvelope& env) {
    env.validate();
    trace.validate();
    if (env.empty()) return trace;
    if (!trace.sweep_is_time) {
        throw InputError("relaxation envelopes apply only to time-swept traces");
    }
    for (std::size_t p = 0; p < trace.pair_singlet.size(); ++p) {
        detail::apply_envelope_column(trace.pair_singlet[p], trace.sweep,
                                      env.singlet_lifetime(static_cast<int>(p)),
                                      env.dephasing_time_s);
    }
    detail::apply_envelope_column(trace.observable, trace.sweep,
                                  env.singlet_lifetime(trace.readout_pair), env.dephasing_time_s);
    return trace;
}

}  // namespace singletsim
