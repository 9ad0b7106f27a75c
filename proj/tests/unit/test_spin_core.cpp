#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "singletsim/spin_core.hpp"

using namespace singletsim;

namespace {

SpinSystem four_spins() {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(4, 4);
    j(0, 1) = j(1, 0) = 15.0;
    j(2, 3) = j(3, 2) = 17.25;
    j(0, 2) = j(2, 0) = 5.0;
    return {{-2.0, 2.0, 50.0, 54.0}, j, {{0, 1}, {2, 3}}};
}

SpinSystem two_spins() {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, 2);
    j(0, 1) = j(1, 0) = 10.0;
    return {{0.0, 3.0}, j, {{0, 1}}};
}

double max_abs(const Operator& m) { return m.cwiseAbs().maxCoeff(); }

// component order of the basis kets: uu, ud, du, dd
constexpr int kUU = 0, kUD = 1, kDU = 2, kDD = 3;

}  // namespace

TEST(SpinSystem, RejectsAsymmetricCouplings) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, 2);
    j(0, 1) = 1.0;
    EXPECT_THROW(SpinSystem({0.0, 0.0}, j), InputError);
}

TEST(SpinSystem, RejectsNonzeroDiagonal) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, 2);
    j(0, 0) = 1.0;
    EXPECT_THROW(SpinSystem({0.0, 0.0}, j), InputError);
}

TEST(SpinSystem, RejectsOverlappingPairs) {
    const Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, 3);
    EXPECT_THROW(SpinSystem({0.0, 0.0, 0.0}, j, {{0, 1}, {1, 2}}), InputError);
    EXPECT_THROW(SpinSystem({0.0, 0.0, 0.0}, j, {{0, 0}}), InputError);
    EXPECT_THROW(SpinSystem({0.0, 0.0, 0.0}, j, {{0, 3}}), InputError);
}

TEST(SpinSystem, RejectsMismatchedDimensions) {
    EXPECT_THROW(SpinSystem({0.0, 0.0}, Eigen::MatrixXd::Zero(3, 3)), InputError);
    EXPECT_THROW(SpinSystem({}, Eigen::MatrixXd::Zero(0, 0)), InputError);
}

TEST(SpinSystem, UnassignedPairThrows) {
    const auto s = two_spins();
    EXPECT_THROW((void)s.pair(1), InputError);
    EXPECT_THROW((void)singlet_projector(s, 3), InputError);
}

TEST(EmbedSpinOperator, SingleSpinZ) {
    const SpinSystem s({0.0}, Eigen::MatrixXd::Zero(1, 1));
    const Operator iz = embed_spin_operator(s, 0, Axis::z);
    EXPECT_DOUBLE_EQ(iz(0, 0).real(), 0.5);
    EXPECT_DOUBLE_EQ(iz(1, 1).real(), -0.5);
    EXPECT_EQ(iz(0, 1), cplx(0.0));
}

TEST(EmbedSpinOperator, LeastSignificantSpinZ) {
    const auto s = two_spins();
    const Operator iz = embed_spin_operator(s, 1, Axis::z);
    const Eigen::Vector4d expected(0.5, -0.5, 0.5, -0.5);
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(iz(k, k).real(), expected(k));
    EXPECT_NEAR(max_abs(iz - Operator(iz.diagonal().asDiagonal())), 0.0, 0.0);
}

TEST(EmbedSpinOperator, MatchesKroneckerOracleAndIsTraceless) {
    const auto s = four_spins();
    for (int i = 0; i < 4; ++i) {
        for (auto [axis, c] : {std::pair{Axis::x, 'x'}, {Axis::y, 'y'}, {Axis::z, 'z'}}) {
            const Operator op = embed_spin_operator(s, i, axis);
            EXPECT_LT(max_abs(op - oracle::kron_embed(4, i, oracle::pauli_half(c))), 1e-15);
            EXPECT_LT(std::abs(op.trace()), 1e-15);
        }
    }
}

TEST(EmbedSpinOperator, OutOfRangeThrows) {
    const auto s = two_spins();
    EXPECT_THROW((void)embed_spin_operator(s, 2, Axis::x), InputError);
    EXPECT_THROW((void)embed_spin_operator(s, -1, Axis::x), InputError);
}

TEST(EmbedSpinOperator, DistinctSpinsCommute) {
    const auto s = four_spins();
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 4; ++k) {
            if (i == k) continue;
            for (auto a : {Axis::x, Axis::y, Axis::z}) {
                for (auto b : {Axis::x, Axis::y, Axis::z}) {
                    const Operator p = embed_spin_operator(s, i, a);
                    const Operator q = embed_spin_operator(s, k, b);
                    EXPECT_LT(max_abs(p * q - q * p), 1e-12);
                }
            }
        }
    }
}

TEST(EmbedSpinOperator, AngularMomentumCommutator) {
    const auto s = four_spins();
    const cplx i1{0.0, 1.0};
    for (int i = 0; i < 4; ++i) {
        const Operator x = embed_spin_operator(s, i, Axis::x);
        const Operator y = embed_spin_operator(s, i, Axis::y);
        const Operator z = embed_spin_operator(s, i, Axis::z);
        EXPECT_LT(max_abs(x * y - y * x - i1 * z), 1e-12);
    }
}

TEST(PairBasis, SingletTripletOrthonormal) {
    const auto b = pair_basis();
    const std::vector<PairKet> st{b.s0, b.t_plus, b.t0, b.t_minus};
    const std::vector<PairKet> locked{b.phi_plus, b.phi0, b.phi_s, b.phi_minus};
    for (const auto* set : {&st, &locked}) {
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t k = 0; k < 4; ++k) {
                EXPECT_NEAR(std::abs((*set)[i].dot((*set)[k])), i == k ? 1.0 : 0.0, 1e-15);
            }
        }
    }
    EXPECT_EQ(b.phi_s, b.s0);
}

TEST(PairBasis, LockedStateCoefficients) {
    const auto b = pair_basis();
    EXPECT_NEAR(std::abs(b.phi_plus.dot(b.phi_minus)), 0.0, 1e-15);
    for (int k : {kUD, kDU, kUU, kDD}) EXPECT_DOUBLE_EQ(b.phi_plus(k).real(), 0.5);
    const double r2 = 1.0 / std::sqrt(2.0);
    EXPECT_DOUBLE_EQ(b.phi0(kUD).real(), 0.0);
    EXPECT_DOUBLE_EQ(b.phi0(kDU).real(), 0.0);
    EXPECT_DOUBLE_EQ(b.phi0(kUU).real(), r2);
    EXPECT_DOUBLE_EQ(b.phi0(kDD).real(), -r2);
}

TEST(PairBasis, TripletLabelsFollowLockedConvention) {
    const auto b = pair_basis();
    EXPECT_DOUBLE_EQ(b.t_minus(kUU).real(), 1.0);
    EXPECT_DOUBLE_EQ(b.t_plus(kDD).real(), 1.0);
}

TEST(PairBasis, TripletRotationIsOrthogonal) {
    const auto b = pair_basis();
    const std::vector<PairKet> t{b.t_plus, b.t0, b.t_minus};
    const std::vector<PairKet> phi{b.phi_plus, b.phi0, b.phi_minus};
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
            const cplx v = t[static_cast<std::size_t>(i)].dot(phi[static_cast<std::size_t>(k)]);
            EXPECT_NEAR(v.imag(), 0.0, 1e-15);
            m(i, k) = v.real();
        }
    }
    EXPECT_LT((m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PairBasis, UnassignedPairThrows) {
    EXPECT_THROW((void)pair_basis(two_spins(), 1), InputError);
}

TEST(SingletProjector, TraceAndIdempotence) {
    const auto s = four_spins();
    for (int p = 0; p < 2; ++p) {
        const Operator ps = singlet_projector(s, p);
        EXPECT_NEAR(ps.trace().real(), 4.0, 1e-12);
        EXPECT_LT(max_abs(ps * ps - ps), 1e-12);
        EXPECT_LT(max_abs(ps - ps.adjoint()), 1e-15);
    }
}

TEST(SingletProjector, EigenstateExpectation) {
    const auto s = four_spins();
    const auto b = pair_basis();
    const auto rho = product_state(s, {b.s0, b.t_plus});
    EXPECT_NEAR(expectation(rho, singlet_projector(s, 0)).real(), 1.0, 1e-15);
    EXPECT_NEAR(singlet_population(rho, s, 1), 0.0, 1e-15);
}

TEST(SingletProjector, CommutesWithPairRotations) {
    const auto s = four_spins();
    for (int p = 0; p < 2; ++p) {
        const auto pr = s.pair(p);
        const Operator ps = singlet_projector(s, p);
        for (auto a : {Axis::x, Axis::y, Axis::z}) {
            const Operator f = embed_spin_operator(s, pr.a, a) + embed_spin_operator(s, pr.b, a);
            EXPECT_LT(max_abs(ps * f - f * ps), 1e-12);
        }
    }
}

TEST(SingletProjector, MatchesKroneckerConstruction) {
    const auto s = four_spins();
    const auto b = pair_basis();
    const Eigen::Matrix4cd p4 = b.s0 * b.s0.adjoint();
    const oracle::Mat expected = Eigen::kroneckerProduct(oracle::Mat(p4), oracle::Mat::Identity(4, 4)).eval();
    EXPECT_LT(max_abs(singlet_projector(s, 0) - expected), 1e-15);
}

TEST(Expectation, MixedStateAndIdentity) {
    const auto s = two_spins();
    const auto mixed = DensityState::maximally_mixed(4);
    EXPECT_NEAR(expectation(mixed, singlet_projector(s, 0)).real(), 0.25, 1e-15);
    const auto b = pair_basis();
    const auto rho = DensityState::pure(b.s0);
    EXPECT_NEAR(expectation(rho, Operator::Identity(4, 4)).real(), 1.0, 1e-15);
    const Operator iz = embed_spin_operator(s, 0, Axis::z) + embed_spin_operator(s, 1, Axis::z);
    EXPECT_NEAR(std::abs(expectation(rho, iz)), 0.0, 1e-15);
}

TEST(Expectation, RealForHermitianObservables) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 5; ++trial) {
        Ket psi(16);
        for (auto& v : psi) v = cplx(g(rng), g(rng));
        psi.normalize();
        Operator a(16, 16);
        for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = cplx(g(rng), g(rng));
        const Operator h = a + a.adjoint();
        const auto rho = DensityState::pure(psi);
        const cplx e = expectation(rho, h);
        EXPECT_LT(std::abs(e.imag()), 1e-10);
        EXPECT_NEAR(e.real(), (rho.matrix() * h).trace().real(), 1e-10);
    }
}

TEST(Expectation, DimensionMismatchThrows) {
    EXPECT_THROW((void)expectation(DensityState::maximally_mixed(4), Operator::Identity(8, 8)),
                 InputError);
}

TEST(DensityState, ValidationTolerances) {
    Operator m = Operator::Identity(4, 4) / 4.0;
    EXPECT_NO_THROW((void)DensityState::from_matrix(m));
    Operator bad_trace = m * 1.01;
    EXPECT_THROW((void)DensityState::from_matrix(bad_trace), InputError);
    Operator non_herm = m;
    non_herm(0, 1) = cplx(1e-6, 0.0);
    EXPECT_THROW((void)DensityState::from_matrix(non_herm), InputError);
    Operator negative = Operator::Zero(2, 2);
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    EXPECT_THROW((void)DensityState::from_matrix(negative), InputError);
    EXPECT_THROW((void)DensityState::from_matrix(Operator::Identity(3, 3) / 3.0), InputError);
}

TEST(ProductState, SingletSingletIsPure) {
    const auto s = four_spins();
    const auto b = pair_basis();
    const auto rho = product_state(s, {b.s0, b.s0});
    EXPECT_NEAR(rho.matrix().trace().real(), 1.0, 1e-15);
    EXPECT_NEAR(rho.purity(), 1.0, 1e-14);
}

TEST(ProductState, LockedTripletTimesSinglet) {
    const auto s = four_spins();
    const auto b = pair_basis();
    const auto rho = product_state(s, {b.phi_plus, b.s0});
    EXPECT_NEAR(singlet_population(rho, s, 1), 1.0, 1e-15);
    EXPECT_NEAR(singlet_population(rho, s, 0), 0.0, 1e-15);
}

TEST(ProductState, SingletSuperposition) {
    const auto s = four_spins();
    const auto b = pair_basis();
    Ket psi(16);
    const double r2 = 1.0 / std::sqrt(2.0);
    for (Eigen::Index idx = 0; idx < 16; ++idx) {
        const int p1 = static_cast<int>(idx >> 2), p2 = static_cast<int>(idx & 3);
        psi(idx) = r2 * (b.phi_plus(p1) * b.s0(p2) + b.s0(p1) * b.phi_plus(p2));
    }
    const auto rho = DensityState::pure(psi);
    EXPECT_NEAR(singlet_population(rho, s, 0), 0.5, 1e-15);
    EXPECT_NEAR(singlet_population(rho, s, 1), 0.5, 1e-15);
}

TEST(ProductState, MatchesKroneckerProduct) {
    const auto s = four_spins();
    const auto b = pair_basis();
    const Ket psi = Eigen::kroneckerProduct(b.phi0, b.t0).eval();
    const auto rho = product_state(s, {b.phi0, b.t0});
    EXPECT_LT(max_abs(rho.matrix() - psi * psi.adjoint()), 1e-15);
}

TEST(ProductState, IncompleteCoverageThrows) {
    const auto s = four_spins();
    const auto b = pair_basis();
    EXPECT_THROW((void)product_state(s, {b.s0}), InputError);
    const SpinSystem three({0.0, 0.0, 0.0}, Eigen::MatrixXd::Zero(3, 3), {{0, 1}});
    EXPECT_THROW((void)product_state(three, {b.s0}), InputError);
}

TEST(ReducedPairDensity, InvertsProductDensity) {
    const auto s = four_spins();
    const auto b = pair_basis();
    const PairOperator r1 = 0.7 * b.s0 * b.s0.adjoint() + 0.3 * b.t0 * b.t0.adjoint();
    const PairOperator r2 = maximally_mixed_triplet();
    const auto rho = product_density(s, {r1, r2});
    EXPECT_LT((reduced_pair_density(rho, s, 0) - r1).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((reduced_pair_density(rho, s, 1) - r2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TripletAmplitudes, Normalization) {
    EXPECT_TRUE(TripletAmplitudes::phi_plus().is_normalized());
    const double r3 = 1.0 / std::sqrt(3.0);
    EXPECT_TRUE((TripletAmplitudes{r3, r3, r3}.is_normalized()));
    EXPECT_THROW((TripletAmplitudes{1.0, 1e-5, 0.0}.validate()), InputError);
    const auto k = TripletAmplitudes{0.6, 0.0, 0.8}.ket();
    EXPECT_NEAR(k.norm(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(k.dot(pair_basis().s0)), 0.0, 1e-15);
}
