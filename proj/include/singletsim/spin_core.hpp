/**
 * @file spin_core.hpp
 * @brief Operator algebra and state construction for systems of spin-1/2 nuclei.
 *
 * Basis convention: spin 0 is the most significant qubit of the computational
 * basis index and |up> is the first basis vector of every spin. A basis index
 * b therefore encodes spin i as bit (n - 1 - i) of b, with 0 = up, 1 = down.
 *
 * Within a pair (a, b) the 4-component kets are ordered
 * (|up up>, |up down>, |down up>, |down down>).
 *
 * Triplet labels follow the two-pair singlet literature this toolkit models:
 * T- = |up up> and T+ = |down down>, the reverse of the common convention.
 */
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "singletsim/errors.hpp"

namespace singletsim {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;
using PairKet = Eigen::Vector4cd;
using PairOperator = Eigen::Matrix4cd;

enum class Axis { x, y, z };

/// Two spin indices forming a labelled pair; `a` is the more significant member.
struct SpinPair {
    int a = 0;
    int b = 1;
};

// ============================================================================
// SpinSystem
// ============================================================================

/**
 * Spin count, rotating-frame offsets (Hz) and scalar couplings (Hz).
 *
 * Invariants: the coupling matrix is square, symmetric and has a zero
 * diagonal; pair assignments are disjoint and reference distinct in-range
 * spins.
 */
class SpinSystem {
public:
    static constexpr int kMaxSpins = 10;

    SpinSystem(std::vector<double> offsets_hz, Eigen::MatrixXd couplings_hz,
               std::vector<SpinPair> pairs = {}, std::vector<std::string> labels = {})
        : offsets_(std::move(offsets_hz)),
          couplings_(std::move(couplings_hz)),
          pairs_(std::move(pairs)),
          labels_(std::move(labels)) {
        const auto n = static_cast<Eigen::Index>(offsets_.size());
        if (n < 1 || n > kMaxSpins) {
            throw InputError("spin system must contain between 1 and " +
                             std::to_string(kMaxSpins) + " spins");
        }
        if (couplings_.rows() != n || couplings_.cols() != n) {
            throw InputError("coupling matrix must be " + std::to_string(n) + "x" +
                             std::to_string(n));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(offsets_[static_cast<std::size_t>(i)])) {
                throw InputError("spin offsets must be finite");
            }
            if (couplings_(i, i) != 0.0) {
                throw InputError("coupling matrix must have a zero diagonal");
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!std::isfinite(couplings_(i, j))) {
                    throw InputError("couplings must be finite");
                }
                if (std::abs(couplings_(i, j) - couplings_(j, i)) > 1e-12) {
                    throw InputError("coupling matrix must be symmetric");
                }
            }
        }
        std::vector<bool> used(static_cast<std::size_t>(n), false);
        for (const auto& p : pairs_) {
            if (p.a < 0 || p.b < 0 || p.a >= n || p.b >= n || p.a == p.b) {
                throw InputError("pair must name two distinct in-range spins");
            }
            if (used[static_cast<std::size_t>(p.a)] || used[static_cast<std::size_t>(p.b)]) {
                throw InputError("pair assignments must be disjoint");
            }
            used[static_cast<std::size_t>(p.a)] = used[static_cast<std::size_t>(p.b)] = true;
        }
        if (!labels_.empty() && labels_.size() != offsets_.size()) {
            throw InputError("one label per spin required");
        }
    }

    [[nodiscard]] int n_spins() const noexcept { return static_cast<int>(offsets_.size()); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return Eigen::Index{1} << n_spins(); }

    [[nodiscard]] double offset_hz(int i) const { return offsets_.at(check_spin(i)); }
    [[nodiscard]] const std::vector<double>& offsets_hz() const noexcept { return offsets_; }
    [[nodiscard]] double coupling_hz(int i, int j) const {
        return couplings_(check_spin(i), check_spin(j));
    }
    [[nodiscard]] const Eigen::MatrixXd& couplings_hz() const noexcept { return couplings_; }

    [[nodiscard]] int n_pairs() const noexcept { return static_cast<int>(pairs_.size()); }
    [[nodiscard]] const std::vector<SpinPair>& pairs() const noexcept { return pairs_; }
    [[nodiscard]] const SpinPair& pair(int index) const {
        if (index < 0 || index >= n_pairs()) {
            throw InputError("pair " + std::to_string(index) + " is not assigned");
        }
        return pairs_[static_cast<std::size_t>(index)];
    }

    /// Mean offset of the two members of a pair.
    [[nodiscard]] double pair_offset_hz(int index) const {
        const auto& p = pair(index);
        return 0.5 * (offset_hz(p.a) + offset_hz(p.b));
    }

    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] std::string label(int i) const {
        return labels_.empty() ? std::to_string(i) : labels_.at(check_spin(i));
    }

    /// Copy with one coupling replaced (both symmetric entries).
    [[nodiscard]] SpinSystem with_coupling(int i, int j, double j_hz) const {
        Eigen::MatrixXd c = couplings_;
        c(check_spin(i), check_spin(j)) = j_hz;
        c(check_spin(j), check_spin(i)) = j_hz;
        return {offsets_, std::move(c), pairs_, labels_};
    }

    [[nodiscard]] std::size_t check_spin(int i) const {
        if (i < 0 || i >= n_spins()) {
            throw InputError("spin index " + std::to_string(i) + " out of range");
        }
        return static_cast<std::size_t>(i);
    }

private:
    std::vector<double> offsets_;
    Eigen::MatrixXd couplings_;
    std::vector<SpinPair> pairs_;
    std::vector<std::string> labels_;
};

// ============================================================================
// Single-spin and pair operators
// ============================================================================

/// Spin-1/2 operator I_axis in the (|up>, |down>) basis.
[[nodiscard]] inline Eigen::Matrix2cd spin_half(Axis axis) {
    const cplx i{0.0, 1.0};
    Eigen::Matrix2cd m;
    switch (axis) {
        case Axis::x: m << 0.0, 0.5, 0.5, 0.0; break;
        case Axis::y: m << 0.0, -0.5 * i, 0.5 * i, 0.0; break;
        case Axis::z: m << 0.5, 0.0, 0.0, -0.5; break;
    }
    return m;
}

/// Bit value (0 = up, 1 = down) of `spin` in basis index `index`.
[[nodiscard]] inline int spin_bit(Eigen::Index index, int spin, int n_spins) noexcept {
    return static_cast<int>((index >> (n_spins - 1 - spin)) & 1);
}

/// Embed a 2x2 single-spin operator on `spin`, identity elsewhere.
[[nodiscard]] inline Operator embed_single(int n_spins, int spin, const Eigen::Matrix2cd& op) {
    const Eigen::Index dim = Eigen::Index{1} << n_spins;
    const Eigen::Index mask = Eigen::Index{1} << (n_spins - 1 - spin);
    Operator out = Operator::Zero(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const int br = spin_bit(r, spin, n_spins);
        const Eigen::Index base = r & ~mask;
        for (int bc = 0; bc < 2; ++bc) {
            const Eigen::Index c = base | (bc ? mask : 0);
            out(r, c) = op(br, bc);
        }
    }
    return out;
}

/// I_axis acting on one spin of the system, identity on all others.
[[nodiscard]] inline Operator embed_spin_operator(const SpinSystem& system, int spin_index,
                                                  Axis axis) {
    (void)system.check_spin(spin_index);
    return embed_single(system.n_spins(), spin_index, spin_half(axis));
}

/// Sum over all spins of I_axis.
[[nodiscard]] inline Operator total_spin(const SpinSystem& system, Axis axis) {
    Operator out = Operator::Zero(system.dim(), system.dim());
    for (int i = 0; i < system.n_spins(); ++i) {
        out += embed_spin_operator(system, i, axis);
    }
    return out;
}

/// Embed a 4x4 operator acting on spins (a, b), identity elsewhere.
[[nodiscard]] inline Operator embed_pair_operator(int n_spins, SpinPair pair,
                                                  const PairOperator& op) {
    const Eigen::Index dim = Eigen::Index{1} << n_spins;
    const Eigen::Index ma = Eigen::Index{1} << (n_spins - 1 - pair.a);
    const Eigen::Index mb = Eigen::Index{1} << (n_spins - 1 - pair.b);
    Operator out = Operator::Zero(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const int sr = (spin_bit(r, pair.a, n_spins) << 1) | spin_bit(r, pair.b, n_spins);
        const Eigen::Index base = r & ~(ma | mb);
        for (int sc = 0; sc < 4; ++sc) {
            const Eigen::Index c = base | ((sc & 2) ? ma : 0) | ((sc & 1) ? mb : 0);
            out(r, c) = op(sr, sc);
        }
    }
    return out;
}

// ============================================================================
// Pair basis
// ============================================================================

/**
 * Singlet/triplet kets together with the spin-locked eigenstates of a pair
 * locked along x:
 *   phi+ = (|ud> + |du> + |uu> + |dd>)/2,   phi0 = (|uu> - |dd>)/sqrt2,
 *   phiS = S0 = (|ud> - |du>)/sqrt2,         phi- = (|ud> + |du> - |uu> - |dd>)/2.
 */
struct PairBasis {
    PairKet s0, t_plus, t0, t_minus;
    PairKet phi_plus, phi0, phi_s, phi_minus;
};

[[nodiscard]] inline PairBasis pair_basis() {
    const double r2 = 1.0 / std::sqrt(2.0);
    PairBasis b;
    // component order: uu, ud, du, dd
    b.s0 << 0.0, r2, -r2, 0.0;
    b.t_minus << 1.0, 0.0, 0.0, 0.0;
    b.t0 << 0.0, r2, r2, 0.0;
    b.t_plus << 0.0, 0.0, 0.0, 1.0;
    b.phi_plus << 0.5, 0.5, 0.5, 0.5;
    b.phi0 << r2, 0.0, 0.0, -r2;
    b.phi_s = b.s0;
    b.phi_minus << -0.5, 0.5, 0.5, -0.5;
    return b;
}

/// Pair basis for an assigned pair of `system`.
[[nodiscard]] inline PairBasis pair_basis(const SpinSystem& system, int pair_index) {
    (void)system.pair(pair_index);
    return pair_basis();
}

/// Projector onto the singlet of a two-spin pair in the 4-dimensional pair space.
[[nodiscard]] inline PairOperator pair_singlet_projector() {
    const PairKet s = pair_basis().s0;
    return s * s.adjoint();
}

/// Projector onto the triplet manifold of a pair.
[[nodiscard]] inline PairOperator pair_triplet_projector() {
    return PairOperator::Identity() - pair_singlet_projector();
}

/// Maximally mixed triplet state (equal phi+, phi0, phi- populations).
[[nodiscard]] inline PairOperator maximally_mixed_triplet() {
    return pair_triplet_projector() / 3.0;
}

// ============================================================================
// Triplet amplitudes
// ============================================================================

/// Real amplitudes of a triplet state on the phi+, phi0, phi- basis.
struct TripletAmplitudes {
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;

    [[nodiscard]] double norm_squared() const noexcept {
        return alpha * alpha + beta * beta + gamma * gamma;
    }
    [[nodiscard]] bool is_normalized(double tol = 1e-12) const noexcept {
        return std::abs(norm_squared() - 1.0) <= tol;
    }
    void validate() const {
        if (!is_normalized()) {
            throw InputError("triplet amplitudes must satisfy alpha^2 + beta^2 + gamma^2 = 1");
        }
    }
    [[nodiscard]] double overlap(const TripletAmplitudes& o) const noexcept {
        return alpha * o.alpha + beta * o.beta + gamma * o.gamma;
    }
    [[nodiscard]] PairKet ket() const {
        const auto b = pair_basis();
        return alpha * b.phi_plus + beta * b.phi0 + gamma * b.phi_minus;
    }

    static TripletAmplitudes phi_plus() { return {1.0, 0.0, 0.0}; }
    static TripletAmplitudes phi0() { return {0.0, 1.0, 0.0}; }
    static TripletAmplitudes phi_minus() { return {0.0, 0.0, 1.0}; }
};

// ============================================================================
// Density states
// ============================================================================

/**
 * Hermitian, unit-trace, positive-semidefinite state matrix.
 *
 * `from_matrix` validates (1e-10) Hermiticity, trace and spectrum.
 * `conjugated_by` applies U rho U^dag without re-validating; callers pass
 * unitaries.
 */
class DensityState {
public:
    static constexpr double kTolerance = 1e-10;

    static DensityState from_matrix(Operator rho) {
        if (rho.rows() != rho.cols() || rho.rows() == 0) {
            throw InputError("density matrix must be square and non-empty");
        }
        const auto dim = rho.rows();
        if ((dim & (dim - 1)) != 0) {
            throw InputError("density matrix dimension must be a power of two");
        }
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kTolerance) {
            throw InputError("density matrix is not Hermitian");
        }
        if (std::abs(rho.trace() - cplx{1.0, 0.0}) > kTolerance) {
            throw InputError("density matrix must have unit trace");
        }
        Operator herm = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<Operator> es(herm, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -kTolerance) {
            throw InputError("density matrix has a negative eigenvalue");
        }
        return DensityState(std::move(rho));
    }

    /// |psi><psi| of a unit-norm ket.
    static DensityState pure(const Ket& psi) {
        if (std::abs(psi.squaredNorm() - 1.0) > kTolerance) {
            throw InputError("pure state ket must be normalized");
        }
        return from_matrix(psi * psi.adjoint());
    }

    static DensityState maximally_mixed(Eigen::Index dim) {
        return from_matrix(Operator::Identity(dim, dim) / static_cast<double>(dim));
    }

    [[nodiscard]] const Operator& matrix() const noexcept { return rho_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return rho_.rows(); }
    [[nodiscard]] double purity() const { return (rho_ * rho_).trace().real(); }

    [[nodiscard]] DensityState conjugated_by(const Operator& unitary) const {
        if (unitary.rows() != dim() || unitary.cols() != dim()) {
            throw InputError("propagator dimension does not match state");
        }
        return DensityState(unitary * rho_ * unitary.adjoint());
    }

private:
    explicit DensityState(Operator rho) : rho_(std::move(rho)) {}
    Operator rho_;
};

/// trace(state * obs).
[[nodiscard]] inline cplx expectation(const DensityState& state, const Operator& obs) {
    if (obs.rows() != state.dim() || obs.cols() != state.dim()) {
        throw InputError("observable dimension does not match state");
    }
    // trace(rho * A) without forming the product
    return (state.matrix().transpose().cwiseProduct(obs)).sum();
}

/// |S0><S0| on the given pair tensored with identity on all other spins.
[[nodiscard]] inline Operator singlet_projector(const SpinSystem& system, int pair_index) {
    return embed_pair_operator(system.n_spins(), system.pair(pair_index),
                               pair_singlet_projector());
}

/// Singlet population of `pair_index`.
[[nodiscard]] inline double singlet_population(const DensityState& state, const SpinSystem& system,
                                               int pair_index) {
    return expectation(state, singlet_projector(system, pair_index)).real();
}

namespace detail {

inline void check_pair_cover(const SpinSystem& system, std::size_t n_given) {
    if (static_cast<int>(n_given) != system.n_pairs()) {
        throw InputError("one pair state required for each of the " +
                         std::to_string(system.n_pairs()) + " pairs");
    }
    if (2 * system.n_pairs() != system.n_spins()) {
        throw InputError("pair assignments do not cover every spin");
    }
}

inline int pair_sub_index(Eigen::Index index, const SpinPair& p, int n) noexcept {
    return (spin_bit(index, p.a, n) << 1) | spin_bit(index, p.b, n);
}

}  // namespace detail

/// Pure tensor-product state from one ket per pair; pairs must cover every spin.
[[nodiscard]] inline DensityState product_state(const SpinSystem& system,
                                                const std::vector<PairKet>& pair_states) {
    detail::check_pair_cover(system, pair_states.size());
    const int n = system.n_spins();
    Ket psi(system.dim());
    for (Eigen::Index idx = 0; idx < system.dim(); ++idx) {
        cplx amp{1.0, 0.0};
        for (int p = 0; p < system.n_pairs(); ++p) {
            amp *= pair_states[static_cast<std::size_t>(p)](
                detail::pair_sub_index(idx, system.pair(p), n));
        }
        psi(idx) = amp;
    }
    return DensityState::pure(psi);
}

/// Tensor product of per-pair density matrices; pairs must cover every spin.
[[nodiscard]] inline DensityState product_density(const SpinSystem& system,
                                                  const std::vector<PairOperator>& pair_states) {
    detail::check_pair_cover(system, pair_states.size());
    const int n = system.n_spins();
    const Eigen::Index dim = system.dim();
    Operator rho(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            cplx v{1.0, 0.0};
            for (int p = 0; p < system.n_pairs(); ++p) {
                const auto& pr = system.pair(p);
                v *= pair_states[static_cast<std::size_t>(p)](detail::pair_sub_index(r, pr, n),
                                                              detail::pair_sub_index(c, pr, n));
            }
            rho(r, c) = v;
        }
    }
    return DensityState::from_matrix(std::move(rho));
}

/// Partial trace onto one pair.
[[nodiscard]] inline PairOperator reduced_pair_density(const DensityState& state,
                                                       const SpinSystem& system, int pair_index) {
    const auto& pr = system.pair(pair_index);
    const int n = system.n_spins();
    const Eigen::Index ma = Eigen::Index{1} << (n - 1 - pr.a);
    const Eigen::Index mb = Eigen::Index{1} << (n - 1 - pr.b);
    PairOperator out = PairOperator::Zero();
    const auto& rho = state.matrix();
    for (Eigen::Index r = 0; r < system.dim(); ++r) {
        const int sr = detail::pair_sub_index(r, pr, n);
        const Eigen::Index base = r & ~(ma | mb);
        for (int sc = 0; sc < 4; ++sc) {
            const Eigen::Index c = base | ((sc & 2) ? ma : 0) | ((sc & 1) ? mb : 0);
            out(sr, sc) += rho(r, c);
        }
    }
    return out;
}

}  // namespace singletsim
