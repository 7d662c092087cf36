#include <gtest/gtest.h>

#include <random>

#include "canspec/jmoebius.hpp"
#include "oracles.hpp"

using namespace canspec;

namespace {

CMat mat2(cplx a, cplx b, cplx c, cplx d) {
    CMat M(2, 2);
    M << a, b, c, d;
    return M;
}

/// Left matrix of the free Neumann problem on [0, 2]: transpose-sharp of the rotation.
ResolventMatrix free_right() {
    return {1, ResolventKind::right,
            [](cplx z) { return mat2(std::cos(z), std::sin(z), -std::sin(z), std::cos(z)); }, std::nullopt};
}

CMat random_expansive(std::mt19937& rng, int p) {
    // W = exp(-i J_p H) with H Hermitian PSD-ish, scaled
    std::normal_distribution<double> g;
    CMat X(2 * p, 2 * p);
    for (int i = 0; i < 2 * p; ++i)
        for (int j = 0; j < 2 * p; ++j) X(i, j) = cplx(g(rng), g(rng));
    const CMat H = 0.2 * (X * X.adjoint());
    return (cplx(0, 1) * H * signature_j(p)).exp();
}

}  // namespace

TEST(Kernel, IdentityVanishes) {
    const auto W = ResolventMatrix::constant(CMat::Identity(2, 2));
    EXPECT_LT(kernel_KW(W, cplx(0, 1), cplx(1, 2)).norm(), 1e-15);
}

TEST(Kernel, JUnitaryConstantVanishes) {
    // real symplectic rotations are J_p-unitary
    const auto W = ResolventMatrix::constant(oracle::free_rotation(0.9, 1.0));
    EXPECT_LT(kernel_KW(W, cplx(0, 1), cplx(2, 1)).norm(), 1e-14);
}

TEST(Kernel, FreeMatrixIsPositive) {
    const auto K = kernel_KW(free_right(), cplx(0, 1), cplx(0, 1));
    EXPECT_GE(min_eigenvalue(K), -1e-12);
    EXPECT_TRUE(certify_class_W(free_right(), {cplx(0, 1), cplx(0, 2)}).certified);
}

TEST(Kernel, ConjugateCollision) {
    EXPECT_THROW(certify_class_W(free_right(), {cplx(1, 1), cplx(1, -1)}), ConjugateCollision);
}

TEST(ClassW, Examples) {
    EXPECT_NEAR(certify_class_W(ResolventMatrix::constant(CMat::Identity(2, 2)), {cplx(0, 1), cplx(1, 1)}).lambda_min,
                0.0, 1e-15);
    EXPECT_TRUE(certify_class_W(free_right(), {cplx(0, 1), cplx(1, 1), cplx(-1, 0.5), cplx(0.3, 2)}).certified);
    const ResolventMatrix bad{2, ResolventKind::right,
                              [](cplx z) {
                                  CMat W = CMat::Identity(4, 4);
                                  W(0, 0) = z;
                                  return W;
                              },
                              std::nullopt};
    EXPECT_LT(certify_class_W(bad, {cplx(0, 1), cplx(1, 1), cplx(0, 3)}).lambda_min, 0.0);
}

TEST(Kernel, RealDiagonal) {
    const auto K = kernel_KW(free_right(), cplx(0.4, 0), cplx(0.4, 0));
    // -i R'(x) J R(x)* = -i (-J R) (iJ) R^T ... for the rotation this is the identity
    EXPECT_LT((K - CMat::Identity(2, 2)).norm(), 1e-8);
}

TEST(Lft, Identity) {
    const CMat tau = mat2(1, cplx(0, 2), cplx(0, -2), 3);
    EXPECT_LT((lft_right(CMat::Identity(4, 4), tau) - tau).norm(), 1e-14);
}

TEST(Lft, Inversion) {
    const CMat W = mat2(0, -1, 1, 0);
    const CMat tau = CMat::Constant(1, 1, 2.5);
    EXPECT_NEAR(lft_right(W, tau)(0, 0).real(), -1 / 2.5, 1e-15);
}

TEST(Lft, Composition) {
    std::mt19937 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const CMat W1 = random_expansive(rng, 2), W2 = random_expansive(rng, 2);
        std::normal_distribution<double> g;
        CMat X(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) X(i, j) = cplx(g(rng), g(rng));
        const CMat tau = X + X.adjoint();
        const CMat lhs = lft_right(CMat(W1 * W2), tau);
        const CMat rhs = lft_right(W1, lft_right(W2, tau));
        EXPECT_LT((lhs - rhs).norm(), 1e-10 * std::max(1.0, lhs.norm()));
    }
}

TEST(Lft, SingularDenominator) {
    const CMat W = mat2(0, -1, 1, 0);
    EXPECT_THROW(lft_right(W, CMat::Zero(1, 1)), SingularDenominator);
}

TEST(Lft, MultivaluedParameterPair) {
    // tau = {0} x C: T_W[tau] = w11 w21^{-1}
    const CMat W = mat2(2, 1, 3, 4);
    EXPECT_NEAR(lft_right(W, multivalued_pair(1))(0, 0).real(), 2.0 / 3.0, 1e-14);
}

TEST(Lft, LeftIdentity) {
    const CMat tau = mat2(1, cplx(0, 2), cplx(0, -2), 3);
    EXPECT_LT((lft_left(CMat::Identity(4, 4), pair_from_matrix(tau)) - tau).norm(), 1e-14);
}

TEST(Lft, LeftRightAgreement) {
    std::mt19937 rng(22);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 10; ++trial) {
        const CMat W = random_expansive(rng, 2);
        CMat X(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) X(i, j) = cplx(g(rng), g(rng));
        const CMat tau = X + X.adjoint();
        // constant W: left(z) = right(conj z)*, and both are z-independent
        const CMat right = lft_right(W, tau);
        const CMat left = lft_left(CMat(W.adjoint()), pair_from_matrix(tau));
        EXPECT_LT((right.adjoint() - left).norm(), 1e-10 * std::max(1.0, right.norm()));
    }
}

TEST(Lft, FreeLeftGivesTangent) {
    // W^l(z) = W(conj z)* of the rotation; (C, D) = (0, 1) is tau = 0
    const auto Wl = free_right().dual();
    const cplx z(0.4, 0.3);
    EXPECT_LT(std::abs(lft_left(Wl, MatrixPair{CMat::Zero(1, 1), CMat::Identity(1, 1)}, z)(0, 0) - std::tan(z)), 1e-13);
}

TEST(Defect, Examples) {
    EXPECT_NEAR(j_unitarity_defect(ResolventMatrix::constant(CMat::Identity(4, 4)), cplx(0, 1)), 0.0, 1e-15);
    EXPECT_LT(j_unitarity_defect(free_right().dual(), 0.7), 1e-12);
    CMat D = CMat::Identity(2, 2);
    D(0, 0) = 2;
    EXPECT_GT(j_unitarity_defect(ResolventMatrix::constant(D), 0.3), 0.5);
}

TEST(Herglotz, TransformPreservesClass) {
    // Im T_W[tau] >= 0 for W in class W and Hermitian tau
    const auto W = free_right();
    for (double t : {-2.0, 0.0, 0.5, 3.0})
        for (cplx z : {cplx(0.2, 0.5), cplx(-1.0, 0.1), cplx(2, 2)}) {
            const CMat r = lft_right(W, CMat::Constant(1, 1, t), z);
            EXPECT_GE(r(0, 0).imag() / z.imag(), -1e-8);
        }
}
