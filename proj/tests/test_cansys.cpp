#include <gtest/gtest.h>

#include <random>

#include "canspec/cansys.hpp"
#include "oracles.hpp"

using namespace canspec;

namespace {

double symplectic_defect(const FundamentalSolution& Uz, const FundamentalSolution& Uzb, double t) {
    const CMat J = symplectic_j(Uz.p());
    return (Uzb(t).adjoint() * J * Uz(t) - J).norm();
}

}  // namespace

TEST(Validate, FreeSystem) {
    const auto rep = validate_system(CanonicalSystem::free(1, 2.0));
    EXPECT_TRUE(rep.rank_one.empty());
    EXPECT_TRUE(rep.definiteness_checked);
}

TEST(Validate, TraceTwo) {
    auto sys = CanonicalSystem::free(1, 2.0);
    sys.segments[0].H = RMat::Identity(2, 2);
    try {
        validate_system(sys);
        FAIL();
    } catch (const InvalidCoefficients& e) {
        EXPECT_EQ(e.segments, std::vector<std::size_t>{0});
        EXPECT_NE(std::string(e.what()).find("segments[0].H"), std::string::npos);
    }
}

TEST(Validate, RankOneFlag) {
    auto sys = oracle::single_segment(1.0, oracle::xi_xi(0.0));
    sys.segments.push_back({1.0, RMat::Identity(2, 2) / 2, RMat::Zero(2, 2)});
    const auto rep = validate_system(sys);
    EXPECT_EQ(rep.rank_one, std::vector<std::size_t>{0});
}

TEST(Validate, NonSymmetricF) {
    auto sys = CanonicalSystem::free(1, 1.0);
    sys.segments[0].F(0, 1) = 1.0;
    EXPECT_THROW(validate_system(sys), InvalidCoefficients);
}

TEST(Validate, DefinitenessFails) {
    // one indivisible segment: the constant solution orthogonal to xi is invisible
    EXPECT_THROW(validate_system(oracle::single_segment(1.0, oracle::xi_xi(0.3))), InvalidCoefficients);
}

TEST(Fundamental, ZeroSpectralParameter) {
    const FundamentalSolution U(CanonicalSystem::free(2, 3.0), 0.0);
    for (double t : {0.0, 1.0, 3.0}) EXPECT_LT((U(t) - CMat::Identity(4, 4)).norm(), 1e-15);
}

TEST(Fundamental, FreeClosedForm) {
    const auto sys = CanonicalSystem::free(1, 2.0);
    for (cplx z : {cplx(0.7, 0), cplx(1, 1), cplx(-2, 0.5)}) {
        const FundamentalSolution U(sys, z);
        for (double t : {0.0, 0.3, 1.0, 2.0}) EXPECT_LT((U(t) - oracle::free_rotation(z, t)).norm(), 1e-13);
        EXPECT_LT(std::abs(U.c1(2.0)(0, 0) - std::cos(z)), 1e-13);
        EXPECT_LT(std::abs(U.c2(2.0)(0, 0) + std::sin(z)), 1e-13);
        EXPECT_LT(std::abs(U.s1(2.0)(0, 0) - std::sin(z)), 1e-13);
        EXPECT_LT(std::abs(U.s2(2.0)(0, 0) - std::cos(z)), 1e-13);
    }
}

TEST(Fundamental, TwoSegmentsAgainstRk4) {
    CanonicalSystem sys;
    RMat H1(2, 2), H2(2, 2), F(2, 2);
    H1 << 0.7, 0.2, 0.2, 0.3;
    H2 << 0.4, -0.1, -0.1, 0.6;
    F << 0.3, 0.1, 0.1, -0.2;
    sys.segments = {{0.8, H1, F}, {1.3, H2, RMat::Zero(2, 2)}};
    const cplx z(1.2, 0.4);
    EXPECT_LT((monodromy(sys, z) - oracle::rk4_monodromy(sys, z)).norm(), 1e-8);
}

TEST(Fundamental, SymplecticIdentity) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto sys = oracle::random_system(rng, 1 + trial % 2);
        const cplx z(1.5 - 0.3 * trial, 0.2 * trial - 0.5);
        const FundamentalSolution U(sys, z), Ub(sys, std::conj(z));
        const double b = sys.mesh_end();
        for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) EXPECT_LT(symplectic_defect(U, Ub, f * b), 1e-8);
    }
}

TEST(Fundamental, OutOfInterval) {
    const FundamentalSolution U(CanonicalSystem::free(1, 2.0), 1.0);
    EXPECT_THROW(U(-0.1), OutOfInterval);
    EXPECT_THROW(U(2.1), OutOfInterval);
}

TEST(Fundamental, HalfLineTail) {
    const auto sys = CanonicalSystem::free(1, 1.5, RightEndpoint::limit_point);
    const cplx z(0.8, 0.1);
    const FundamentalSolution U(sys, z);
    for (double t : {0.5, 1.5, 4.0, 37.3}) EXPECT_LT((U(t) - oracle::free_rotation(z, t)).norm(), 1e-10);
}

TEST(Monodromy, Examples) {
    const auto sys = CanonicalSystem::free(1, 2.0);
    CMat R(2, 2);
    R << 0, 1, -1, 0;
    EXPECT_LT((monodromy(sys, M_PI / 2) - R).norm(), 1e-14);
    EXPECT_LT((monodromy(sys, 0.0) - CMat::Identity(2, 2)).norm(), 1e-15);
    EXPECT_THROW(monodromy(CanonicalSystem::free(1, 1.0, RightEndpoint::limit_point), 1.0), NotRegular);
}

TEST(Monodromy, DeterminantOne) {
    std::mt19937 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        const auto sys = oracle::random_system(rng, 2);
        EXPECT_NEAR(std::abs(monodromy(sys, cplx(0.9, 0.3)).determinant() - 1.0), 0.0, 1e-8);
    }
}

TEST(Monodromy, CauchyIntegralReconstruction) {
    std::mt19937 rng(13);
    const auto sys = oracle::random_system(rng, 1, 4);
    const double R = 3.0;
    const int m = 256;
    CMat avg = CMat::Zero(2, 2);
    for (int k = 0; k < m; ++k) avg += monodromy(sys, R * std::exp(cplx(0, 2 * M_PI * k / m)));
    avg /= static_cast<double>(m);
    EXPECT_LT((avg - monodromy(sys, 0.0)).norm(), 1e-6);
}

TEST(Monodromy, RealPointIsRealSymplectic) {
    std::mt19937 rng(14);
    const auto sys = oracle::random_system(rng, 2);
    const CMat U = monodromy(sys, 1.3);
    const CMat J = symplectic_j(2);
    EXPECT_LT(U.imag().norm(), 1e-12);
    EXPECT_LT((U.transpose() * J * U - J).norm(), 1e-10);
}

TEST(Subspace, PropagationMatchesDirect) {
    const auto sys = CanonicalSystem::free(1, 2.0);
    const cplx z(0.5, 3.0);
    CMat G0 = CMat::Zero(2, 1);
    G0(0, 0) = 1;
    const CMat G = propagate_subspace(sys, z, G0, 0.5);
    EXPECT_TRUE(same_span(G, monodromy(sys, z).leftCols(1), 1e-8));
}

TEST(Indivisible, Types) {
    auto t0 = detect_indivisible(oracle::single_segment(1.0, oracle::xi_xi(0.0)));
    ASSERT_EQ(t0.size(), 1u);
    EXPECT_NEAR(t0[0].psi, 0.0, 1e-15);
    auto t1 = detect_indivisible(oracle::single_segment(1.0, RMat::Constant(2, 2, 0.5)));
    ASSERT_EQ(t1.size(), 1u);
    EXPECT_NEAR(t1[0].psi, M_PI / 4, 1e-12);
    EXPECT_TRUE(detect_indivisible(CanonicalSystem::free(1, 1.0)).empty());
    // a direction near pi folds to 0
    auto tpi = detect_indivisible(oracle::single_segment(1.0, oracle::xi_xi(M_PI - 1e-14)));
    ASSERT_EQ(tpi.size(), 1u);
    EXPECT_EQ(tpi[0].psi, 0.0);
}

TEST(Indivisible, RunsAndEndpoints) {
    CanonicalSystem sys;
    sys.segments = {{0.5, oracle::xi_xi(M_PI / 2), RMat::Zero(2, 2)},
                    {0.5, oracle::xi_xi(M_PI / 2), RMat::Zero(2, 2)},
                    {1.0, RMat::Identity(2, 2) / 2, RMat::Zero(2, 2)},
                    {0.7, oracle::xi_xi(0.3), RMat::Zero(2, 2)}};
    const auto runs = detect_indivisible(sys);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_EQ(runs[0].first, 0u);
    EXPECT_EQ(runs[0].last, 1u);
    EXPECT_NEAR(runs[0].to, 1.0, 1e-15);
    EXPECT_TRUE(runs[0].at_left);
    EXPECT_FALSE(runs[0].at_right);
    EXPECT_NEAR(runs[1].psi, 0.3, 1e-12);
    EXPECT_TRUE(runs[1].at_right);
    EXPECT_THROW(detect_indivisible(CanonicalSystem::free(2, 1.0)), UnsupportedDimension);
}
