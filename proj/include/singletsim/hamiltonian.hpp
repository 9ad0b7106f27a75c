/**
 * @file hamiltonian.hpp
 * @brief Rotating-frame Hamiltonians and the effective two-level transfer model.
 *
 * All Hamiltonians are in Hz. The factor 2*pi appears only when a propagator
 * is formed (see propagator.hpp).
 */
#pragma once

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>

#include "singletsim/errors.hpp"
#include "singletsim/spin_core.hpp"

namespace singletsim {

/// Spin-lock RF field: nutation frequency (Hz), phase (rad), transmitter offset (Hz).
struct SpinLockParams {
    double nutation_hz = 0.0;
    double phase_rad = 0.0;
    double transmitter_offset_hz = 0.0;

    void validate() const {
        if (!(nutation_hz >= 0.0) || !std::isfinite(nutation_hz)) {
            throw InputError("spin-lock nutation frequency must be finite and >= 0");
        }
        if (!std::isfinite(phase_rad) || !std::isfinite(transmitter_offset_hz)) {
            throw InputError("spin-lock phase and transmitter offset must be finite");
        }
    }
};

/// Phase of a y (+pi/2) or -y (-pi/2) spin lock.
inline constexpr double kPhaseX = 0.0;
inline constexpr double kPhaseY = std::numbers::pi / 2.0;
inline constexpr double kPhaseMinusY = -std::numbers::pi / 2.0;

// ============================================================================
// Full Hamiltonians
// ============================================================================

/**
 * H = sum_i (nu_i - tx) I_iz + sum_{i<j} J_ij I_i . I_j, built directly in the
 * product basis: the zz part is diagonal and the flip-flop part connects basis
 * states that differ by exchanging one up/down pair.
 */
[[nodiscard]] inline Operator free_hamiltonian(const SpinSystem& system,
                                               double transmitter_offset_hz) {
    const int n = system.n_spins();
    const Eigen::Index dim = system.dim();
    Operator h = Operator::Zero(dim, dim);
    for (Eigen::Index idx = 0; idx < dim; ++idx) {
        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            const double mi = spin_bit(idx, i, n) ? -0.5 : 0.5;
            diag += (system.offset_hz(i) - transmitter_offset_hz) * mi;
            for (int j = i + 1; j < n; ++j) {
                const double jij = system.coupling_hz(i, j);
                if (jij == 0.0) continue;
                const double mj = spin_bit(idx, j, n) ? -0.5 : 0.5;
                diag += jij * mi * mj;
                if (mi != mj) {
                    const Eigen::Index flipped =
                        idx ^ (Eigen::Index{1} << (n - 1 - i)) ^ (Eigen::Index{1} << (n - 1 - j));
                    h(flipped, idx) += 0.5 * jij;
                }
            }
        }
        h(idx, idx) += diag;
    }
    return h;
}

/// nu_n * sum_i (cos(phase) I_ix + sin(phase) I_iy).
[[nodiscard]] inline Operator rf_field_operator(const SpinSystem& system, double nutation_hz,
                                                double phase_rad) {
    const int n = system.n_spins();
    const Eigen::Index dim = system.dim();
    const cplx e_minus = 0.5 * nutation_hz * std::polar(1.0, -phase_rad);
    Operator h = Operator::Zero(dim, dim);
    for (Eigen::Index idx = 0; idx < dim; ++idx) {
        for (int i = 0; i < n; ++i) {
            if (spin_bit(idx, i, n) == 1) {
                // <up| ... |down> = nu/2 e^{-i phase}
                const Eigen::Index up = idx ^ (Eigen::Index{1} << (n - 1 - i));
                h(up, idx) = e_minus;
                h(idx, up) = std::conj(e_minus);
            }
        }
    }
    return h;
}

/// Free Hamiltonian at the lock transmitter offset plus the RF term.
[[nodiscard]] inline Operator spinlock_hamiltonian(const SpinSystem& system,
                                                   const SpinLockParams& params) {
    params.validate();
    Operator h = free_hamiltonian(system, params.transmitter_offset_hz);
    if (params.nutation_hz != 0.0) {
        h += rf_field_operator(system, params.nutation_hz, params.phase_rad);
    }
    return h;
}

// ============================================================================
// Effective theory
// ============================================================================

/// The four couplings between pair 1 (1a, 1b) and pair 2 (2a, 2b), Hz.
struct InterpairCouplings {
    double j_1a2a = 0.0;
    double j_1b2b = 0.0;
    double j_1a2b = 0.0;
    double j_1b2a = 0.0;

    /// J_1a2a + J_1b2b - J_1a2b - J_1b2a.
    [[nodiscard]] double antisymmetric_sum() const noexcept {
        return j_1a2a + j_1b2b - j_1a2b - j_1b2a;
    }
    /// Same couplings with a and b swapped in pair 1.
    [[nodiscard]] InterpairCouplings swap_first() const noexcept {
        return {j_1b2a, j_1a2b, j_1b2b, j_1a2a};
    }
    static InterpairCouplings cis_trans(double j_cis, double j_trans) noexcept {
        return {j_cis, j_cis, j_trans, j_trans};
    }
};

[[nodiscard]] inline InterpairCouplings interpair_couplings(const SpinSystem& system, int pair1,
                                                            int pair2) {
    const auto& p = system.pair(pair1);
    const auto& q = system.pair(pair2);
    return {system.coupling_hz(p.a, q.a), system.coupling_hz(p.b, q.b),
            system.coupling_hz(p.a, q.b), system.coupling_hz(p.b, q.a)};
}

/// C = (J_1a2a + J_1b2b - J_1a2b - J_1b2a)/4 * (a1 a2 + b1 b2 + g1 g2).
[[nodiscard]] inline double interaction_strength(const InterpairCouplings& j,
                                                 const TripletAmplitudes& amp1,
                                                 const TripletAmplitudes& amp2) {
    amp1.validate();
    amp2.validate();
    return 0.25 * j.antisymmetric_sum() * amp1.overlap(amp2);
}

struct StateEnergies {
    double e1 = 0.0;  ///< |T S0>
    double e2 = 0.0;  ///< |S0 T>
};

/// Energies of |T S0> and |S0 T> under spin locking with per-pair effective
/// nutation frequencies nu_n1, nu_n2.
[[nodiscard]] inline StateEnergies state_energies(double j_1a1b, double j_2a2b, double nu_n1,
                                                  double nu_n2, const TripletAmplitudes& amp1,
                                                  const TripletAmplitudes& amp2) {
    amp1.validate();
    amp2.validate();
    const double w1 = amp1.alpha * amp1.alpha - amp1.gamma * amp1.gamma;
    const double w2 = amp2.alpha * amp2.alpha - amp2.gamma * amp2.gamma;
    return {j_1a1b / 4.0 - 3.0 * j_2a2b / 4.0 + w1 * nu_n1,
            j_2a2b / 4.0 - 3.0 * j_1a1b / 4.0 + w2 * nu_n2};
}

/// Two-level model over |T S0>, |S0 T>.
struct EffectiveTwoLevel {
    double e1 = 0.0;
    double e2 = 0.0;
    double c = 0.0;

    EffectiveTwoLevel() = default;
    EffectiveTwoLevel(double e1_hz, double e2_hz, double c_hz) : e1(e1_hz), e2(e2_hz), c(c_hz) {
        if (!std::isfinite(e1) || !std::isfinite(e2) || !std::isfinite(c)) {
            throw InputError("effective two-level parameters must be finite");
        }
    }
    EffectiveTwoLevel(StateEnergies e, double c_hz) : EffectiveTwoLevel(e.e1, e.e2, c_hz) {}

    [[nodiscard]] Eigen::Matrix2d hamiltonian() const {
        Eigen::Matrix2d h;
        h << e1, c, c, e2;
        return h;
    }
    [[nodiscard]] double detuning() const noexcept { return e1 - e2; }
    /// sqrt((E1 - E2)^2 + 4 C^2).
    [[nodiscard]] double oscillation_frequency() const noexcept {
        return std::hypot(detuning(), 2.0 * c);
    }
    /// 4C^2 / ((E1 - E2)^2 + 4C^2); zero when C = 0.
    [[nodiscard]] double transfer_contrast() const noexcept {
        const double f = oscillation_frequency();
        return c == 0.0 ? 0.0 : 4.0 * c * c / (f * f);
    }
    /// Population moved from |T S0> to |S0 T> after time t.
    [[nodiscard]] double transfer_probability(double t) const noexcept {
        const double s = std::sin(std::numbers::pi * oscillation_frequency() * t);
        return transfer_contrast() * s * s;
    }
    /// exp(-i 2 pi h t), closed form.
    [[nodiscard]] Eigen::Matrix2cd propagator(double t) const {
        const double mean = 0.5 * (e1 + e2);
        const double half = 0.5 * oscillation_frequency();
        const double theta = 2.0 * std::numbers::pi * half * t;
        const cplx i{0.0, 1.0};
        Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity() * std::cos(theta);
        if (half > 0.0) {
            Eigen::Matrix2d n;  // traceless part / half
            n << 0.5 * detuning(), c, c, -0.5 * detuning();
            n /= half;
            u -= i * std::sin(theta) * n.cast<cplx>();
        }
        return std::exp(-i * 2.0 * std::numbers::pi * mean * t) * u;
    }
};

/// sqrt(nu_n^2 + dnu12^2) - nu_n.
[[nodiscard]] inline double effective_nutation_difference(double nutation_hz, double delta_nu12_hz) {
    if (!(nutation_hz >= 0.0)) {
        throw InputError("nutation frequency must be >= 0");
    }
    return std::hypot(nutation_hz, delta_nu12_hz) - nutation_hz;
}

/// Inverse of effective_nutation_difference: nu_n giving a target difference.
[[nodiscard]] inline double nutation_for_difference(double delta_nu_n_hz, double delta_nu12_hz) {
    const double d12 = std::abs(delta_nu12_hz);
    if (!(delta_nu_n_hz > 0.0) || delta_nu_n_hz > d12) {
        throw InputError("effective nutation difference must lie in (0, |dnu12|]");
    }
    return (d12 * d12 - delta_nu_n_hz * delta_nu_n_hz) / (2.0 * delta_nu_n_hz);
}

/// Splitting of a single spin at `offset_hz` under a lock of `nutation_hz`, by
/// diagonalizing its 2x2 rotating-frame Hamiltonian.
[[nodiscard]] inline double dressed_splitting(double offset_hz, double nutation_hz) {
    const SpinSystem one({offset_hz}, Eigen::MatrixXd::Zero(1, 1));
    Eigen::SelfAdjointEigenSolver<Operator> es(
        spinlock_hamiltonian(one, {nutation_hz, 0.0, 0.0}), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(1) - es.eigenvalues()(0);
}

/// Difference of dressed splittings of two spins separated by dnu12, with the
/// transmitter on the first.
[[nodiscard]] inline double exact_nutation_difference(double nutation_hz, double delta_nu12_hz) {
    return dressed_splitting(delta_nu12_hz, nutation_hz) - dressed_splitting(0.0, nutation_hz);
}

/// 2 / (J_1a2a + J_1b2b - J_1a2b - J_1b2a) in s; empty when the combination
/// vanishes (no transfer).
[[nodiscard]] inline std::optional<double> transfer_period(const InterpairCouplings& j) {
    const double s = j.antisymmetric_sum();
    if (std::abs(s) < 1e-15) return std::nullopt;
    return 2.0 / std::abs(s);
}

// ============================================================================
// Dressed pair levels
// ============================================================================

/**
 * Eigenlevels of one spin-locked pair in isolation. The singlet-like level
 * is the eigenvector with largest singlet overlap; the remaining three are
 * sorted by energy, so under a strong lock they are phi-, phi0, phi+ for
 * positive nutation.
 */
struct PairDressedLevels {
    double singlet_energy = 0.0;
    std::array<double, 3> triplet_energies{};
    std::array<PairKet, 3> triplet_states{};
    PairKet singlet_state = PairKet::Zero();
    double singlet_overlap = 0.0;
};

[[nodiscard]] inline PairDressedLevels pair_dressed_levels(const SpinSystem& system, int pair_index,
                                                           const SpinLockParams& params) {
    const auto& p = system.pair(pair_index);
    Eigen::MatrixXd j2 = Eigen::MatrixXd::Zero(2, 2);
    j2(0, 1) = j2(1, 0) = system.coupling_hz(p.a, p.b);
    const SpinSystem pair_only({system.offset_hz(p.a), system.offset_hz(p.b)}, j2, {{0, 1}});
    Eigen::SelfAdjointEigenSolver<Operator> es(spinlock_hamiltonian(pair_only, params));
    const PairKet s0 = pair_basis().s0;
    int s_idx = 0;
    double best = -1.0;
    for (int k = 0; k < 4; ++k) {
        const double ov = std::norm(s0.dot(es.eigenvectors().col(k)));
        if (ov > best) {
            best = ov;
            s_idx = k;
        }
    }
    PairDressedLevels out;
    out.singlet_energy = es.eigenvalues()(s_idx);
    out.singlet_state = es.eigenvectors().col(s_idx);
    out.singlet_overlap = best;
    int m = 0;
    for (int k = 0; k < 4; ++k) {
        if (k == s_idx) continue;
        out.triplet_energies[static_cast<std::size_t>(m)] = es.eigenvalues()(k);
        out.triplet_states[static_cast<std::size_t>(m)] = es.eigenvectors().col(k);
        ++m;
    }
    return out;
}

/// Per-component detuning between |T_k S0> and |S0 T_k>: the energy cost of
/// moving the singlet from `source` to `target` while the triplet component k
/// (energy-ordered) moves the other way.
[[nodiscard]] inline std::array<double, 3> dressed_detunings(const SpinSystem& system, int source,
                                                             int target,
                                                             const SpinLockParams& params) {
    const auto a = pair_dressed_levels(system, source, params);
    const auto b = pair_dressed_levels(system, target, params);
    std::array<double, 3> d{};
    for (std::size_t k = 0; k < 3; ++k) {
        d[k] = (b.triplet_energies[k] - b.singlet_energy) - (a.triplet_energies[k] - a.singlet_energy);
    }
    return d;
}

/**
 * Nutation frequency in [lo, hi] at which component k's dressed detuning
 * vanishes (k = 0 is the lowest triplet-like level, 2 the highest). Empty when
 * there is no sign change on the interval.
 */
[[nodiscard]] inline std::optional<double> find_resonance_nutation(const SpinSystem& system,
                                                                   int source, int target, int k,
                                                                   double lo_hz, double hi_hz,
                                                                   SpinLockParams base = {}) {
    if (k < 0 || k > 2) throw InputError("triplet component index must be 0, 1 or 2");
    if (!(lo_hz >= 0.0) || !(hi_hz > lo_hz)) throw InputError("invalid nutation interval");
    auto f = [&](double nu) {
        base.nutation_hz = nu;
        return dressed_detunings(system, source, target, base)[static_cast<std::size_t>(k)];
    };
    const double flo = f(lo_hz);
    const double fhi = f(hi_hz);
    if (flo == 0.0) return lo_hz;
    if (fhi == 0.0) return hi_hz;
    if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
    std::uintmax_t max_iter = 200;
    const auto tol = boost::math::tools::eps_tolerance<double>(48);
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo_hz, hi_hz, flo, fhi, tol, max_iter);
    return 0.5 * (a + b);
}

}  // namespace singletsim
