#include <gtest/gtest.h>

#include <random>

#include "canspec/boundary.hpp"
#include "oracles.hpp"

using namespace canspec;

namespace {

VectorFunction smooth_f(double lo, double hi) {
    return {[](double t) {
                CVec v(2);
                v << std::sin(1.3 * t) + 0.2, cplx(std::cos(2.0 * t), 0.3 * t);
                return v;
            },
            lo, hi};
}

VectorFunction smooth_f2(double lo, double hi) {
    return {[](double t) {
                CVec v(4);
                v << std::sin(t), 0.5, cplx(0, std::cos(t)), t * t;
                return v;
            },
            lo, hi};
}

/// |J g' + F g - z H g - H f| at t by central differences.
double ode_residual(const CanonicalSystem& sys, cplx z, const VectorFunction& g, const VectorFunction& f, double t) {
    const double d = 1e-5;
    const CVec dg = (g(t + d) - g(t - d)) / (2 * d);
    const Segment seg = sys.segment_at(t);
    const CMat J = symplectic_j(sys.p);
    const CMat H = seg.H.cast<cplx>(), F = seg.F.cast<cplx>();
    return (J * dg + F * g(t) - z * H * g(t) - H * f(t)).norm();
}

double max_diff(const VectorFunction& g, const VectorFunction& h, const std::vector<double>& ts) {
    double e = 0.0;
    for (double t : ts) e = std::max(e, (g(t) - h(t)).norm() / std::max(1.0, g(t).norm()));
    return e;
}

CanonicalSystem two_segment() {
    CanonicalSystem sys;
    RMat H1(2, 2), H2(2, 2), F(2, 2);
    H1 << 0.7, 0.2, 0.2, 0.3;
    H2 << 0.4, -0.1, -0.1, 0.6;
    F << 0.3, 0.1, 0.1, -0.2;
    sys.segments = {{0.8, H1, F}, {1.3, H2, RMat::Zero(2, 2)}};
    return sys;
}

}  // namespace

TEST(Weyl, FreeFullIsTangent) {
    const auto sys = CanonicalSystem::free(1, 2.0);
    for (cplx z : {cplx(0.3, 0.4), cplx(-1, 2), cplx(2, -0.5)}) {
        const CMat M = weyl_function(sys, TripleKind::full_regular, z);
        EXPECT_LT((M - std::tan(z / 2.0) * CMat::Identity(2, 2)).norm(), 1e-12);
    }
}

TEST(Weyl, FreeNeumannIsMinusCotangent) {
    const auto sys = CanonicalSystem::free(1, 2.0);
    for (cplx z : {cplx(0.3, 0.4), cplx(-1, 2), cplx(2, -0.5)})
        EXPECT_LT(std::abs(weyl_function(sys, TripleKind::neumann_left, z)(0, 0) + 1.0 / std::tan(z)), 1e-12);
}

TEST(Weyl, FreeLimitPointIsI) {
    const auto sys = CanonicalSystem::free(1, 1.0, RightEndpoint::limit_point);
    EXPECT_LT(std::abs(weyl_function(sys, TripleKind::limit_point, cplx(0.5, 1))(0, 0) - cplx(0, 1)), 1e-10);
    EXPECT_LT(std::abs(weyl_function(sys, TripleKind::limit_point, cplx(0.5, -1))(0, 0) - cplx(0, -1)), 1e-10);
}

TEST(Weyl, StableRouteFarFromRealAxis) {
    const auto sys = CanonicalSystem::free(1, 2.0);
    const cplx z(3, 60);
    EXPECT_GT(detail::growth_exponent(sys, z), detail::kDirectExponent);
    EXPECT_LT((weyl_function(sys, TripleKind::full_regular, z) - std::tan(z / 2.0) * CMat::Identity(2, 2)).norm(), 1e-10);
    EXPECT_LT(std::abs(weyl_function(sys, TripleKind::neumann_left, z)(0, 0) + 1.0 / std::tan(z)), 1e-10);
}

TEST(Weyl, StableRouteMatchesDirect) {
    std::mt19937 rng(31);
    const auto sys = oracle::random_system(rng, 2);
    // just below the switch, where the direct route is still accurate
    const cplx z(1.0, 1.0);
    const CMat direct = weyl_function(sys, TripleKind::full_regular, z);
    const int n = 4;
    CMat G0(2 * n, n);
    G0 << CMat::Identity(n, n), CMat::Identity(n, n);
    const CMat G = detail::propagate_span(sys, G0, [&](const Segment& s) {
        CMat A = CMat::Zero(2 * n, 2 * n);
        A.bottomRightCorner(n, n) = segment_generator(s, z);
        return A;
    });
    const CMat stable =
        -symplectic_j(2) * (G.topRows(n) - G.bottomRows(n)) * (G.topRows(n) + G.bottomRows(n)).inverse();
    EXPECT_LT((stable - direct).norm(), 1e-9 * direct.norm());
}

TEST(Weyl, SpectralPoint) {
    // -cot z and tan(z / 2) both have a pole at pi
    const auto sys = CanonicalSystem::free(1, 2.0);
    EXPECT_THROW(weyl_function(sys, TripleKind::neumann_left, M_PI), SpectralPoint);
    EXPECT_THROW(weyl_function(sys, TripleKind::full_regular, M_PI), SpectralPoint);
}

TEST(Weyl, KindChecks) {
    EXPECT_THROW(weyl_function(CanonicalSystem::free(1, 1.0, RightEndpoint::limit_point), TripleKind::full_regular, 1.0),
                 NotRegular);
    EXPECT_THROW(weyl_function(CanonicalSystem::free(1, 1.0), TripleKind::limit_point, cplx(0, 1)), Error);
    EXPECT_THROW(limit_point_m(CanonicalSystem::free(2, 1.0, RightEndpoint::limit_point), cplx(0, 1)),
                 UnsupportedDimension);
}

TEST(Weyl, HerglotzAndSymmetry) {
    std::mt19937 rng(32);
    for (int trial = 0; trial < 6; ++trial) {
        const auto sys = oracle::random_system(rng, 1 + trial % 2);
        for (auto kind : {TripleKind::full_regular, TripleKind::neumann_left}) {
            const cplx z(0.4 * trial - 1.0, 0.7);
            const CMat M = weyl_function(sys, kind, z);
            EXPECT_GE(min_eigenvalue(imag_part(M)), -1e-10);
            EXPECT_LT((weyl_function(sys, kind, std::conj(z)) - M.adjoint()).norm(), 1e-10 * M.norm());
        }
    }
}

class WeylIdentity : public ::testing::TestWithParam<int> {};

TEST_P(WeylIdentity, RegularTriples) {
    std::mt19937 rng(40 + GetParam());
    const auto sys = oracle::random_system(rng, 1 + GetParam() % 2);
    const cplx z(0.6, 0.9), zeta(-0.4, 0.5);
    for (auto kind : {TripleKind::full_regular, TripleKind::neumann_left}) {
        const auto gz = gamma_field(sys, kind, z), gw = gamma_field(sys, kind, zeta);
        const Mesh mesh = build_mesh(sys, sys.a, sys.mesh_end(), 2.0);
        const CMat lhs = weyl_function(sys, kind, z) - weyl_function(sys, kind, zeta).adjoint();
        const CMat rhs = (z - std::conj(zeta)) * gram_pairing(mesh, gw.eval, gz.eval);
        EXPECT_LT((lhs - rhs).norm(), 1e-6 * lhs.norm()) << to_string(kind);
    }
}

INSTANTIATE_TEST_SUITE_P(Random, WeylIdentity, ::testing::Range(0, 4));

TEST(WeylIdentityLimitPoint, FreeAndPerturbed) {
    auto sys = CanonicalSystem::free(1, 1.0, RightEndpoint::limit_point);
    RMat H(2, 2);
    H << 0.8, 0.1, 0.1, 0.2;
    sys.segments.insert(sys.segments.begin(), Segment{0.7, H, RMat::Zero(2, 2)});
    const cplx z(0.3, 1.0), zeta(-0.2, 0.8);
    const auto gz = gamma_field(sys, TripleKind::limit_point, z);
    const auto gw = gamma_field(sys, TripleKind::limit_point, zeta);
    const Mesh mesh = build_mesh(sys, sys.a, std::max(gz.support_end, gw.support_end), 2.0);
    const CMat lhs = weyl_function(sys, TripleKind::limit_point, z) -
                     weyl_function(sys, TripleKind::limit_point, zeta).adjoint();
    const CMat rhs = (z - std::conj(zeta)) * gram_pairing(mesh, gw.eval, gz.eval);
    EXPECT_LT((lhs - rhs).norm(), 1e-6 * lhs.norm());
}

TEST(Gamma, BoundaryValues) {
    const auto sys = two_segment();
    const cplx z(0.5, 0.5);
    for (auto kind : {TripleKind::full_regular, TripleKind::neumann_left}) {
        const auto g = gamma_field(sys, kind, z);
        const CMat M = weyl_function(sys, kind, z);
        const int d = boundary_dim(sys, kind);
        for (int k = 0; k < d; ++k) {
            const CVec fa = g(sys.a).col(k), fb = g(sys.mesh_end()).col(k);
            const auto [g0, g1] = boundary_values(sys, kind, fa, fb);
            EXPECT_LT((g0 - CVec::Unit(d, k)).norm(), 1e-10);
            EXPECT_LT((g1 - M.col(k)).norm(), 1e-10);
        }
    }
}

TEST(Resolvent, CanonicalMatchesDirectSolve) {
    std::mt19937 rng(50);
    const auto sys2 = oracle::random_system(rng, 2, 4);
    for (const auto& sys : {two_segment(), sys2}) {
        const auto f = sys.p == 1 ? smooth_f(sys.a, sys.mesh_end()) : smooth_f2(sys.a, sys.mesh_end());
        const cplx z(0.7, 0.6);
        const int d = 2 * sys.p;
        const double b = sys.mesh_end();
        const std::vector<double> ts{0.0, 0.15 * b, 0.45 * b, 0.8 * b, b};
        // ker Gamma0: (C, D) = (I, 0)
        const MatrixPair full0{CMat::Identity(d, d), CMat::Zero(d, d)};
        EXPECT_LT(max_diff(canonical_resolvent(sys, TripleKind::full_regular, z, f),
                           solve_boundary_problem(sys, TripleKind::full_regular, full0, z, f), ts),
                  1e-8);
        const MatrixPair neu0{CMat::Identity(sys.p, sys.p), CMat::Zero(sys.p, sys.p)};
        EXPECT_LT(max_diff(canonical_resolvent(sys, TripleKind::neumann_left, z, f),
                           solve_boundary_problem(sys, TripleKind::neumann_left, neu0, z, f), ts),
                  1e-8);
    }
}

TEST(Resolvent, OdeResidual) {
    const auto sys = two_segment();
    const auto f = smooth_f(sys.a, sys.mesh_end());
    const cplx z(-0.4, 0.8);
    for (auto kind : {TripleKind::full_regular, TripleKind::neumann_left}) {
        const auto g = canonical_resolvent(sys, kind, z, f);
        for (double t : {0.3, 0.6, 1.2, 1.9}) EXPECT_LT(ode_residual(sys, z, g, f, t), 1e-5);
        const auto [g0, g1] = boundary_values(sys, kind, g(sys.a), g(sys.mesh_end()));
        EXPECT_LT(g0.norm(), 1e-9);
        if (kind == TripleKind::neumann_left) EXPECT_LT(std::abs(g(sys.a)(1)), 1e-9);
    }
}

TEST(Resolvent, KreinFormulaFullTriple) {
    const auto sys = two_segment();
    const auto f = smooth_f(sys.a, sys.mesh_end());
    const cplx z(0.7, 0.6);
    const std::vector<double> ts{0.0, 0.5, 1.1, 1.7, 2.1};
    std::vector<MatrixPair> pairs;
    CMat t1 = CMat::Zero(2, 2);
    CMat t2(2, 2);
    t2 << 1.0, cplx(0, 0.5), cplx(0, -0.5), 2.0;
    CMat t3(2, 2);
    t3 << -1.0, 0.3, 0.3, 0.1;
    for (const CMat& t : {t1, t2, t3}) {
        const MatrixPair pair = pair_from_matrix(t);
        const auto krein = krein_resolvent(sys, TripleKind::full_regular, pair, z, f);
        const auto direct = solve_boundary_problem(sys, TripleKind::full_regular, pair, z, f);
        EXPECT_LT(max_diff(krein, direct, ts), 1e-6);
        for (double t : {0.4, 1.5}) EXPECT_LT(ode_residual(sys, z, direct, f, t), 1e-5);
    }
}

TEST(Resolvent, KreinFormulaNeumann) {
    std::mt19937 rng(51);
    const auto sys = oracle::random_system(rng, 1, 5);
    const auto f = smooth_f(sys.a, sys.mesh_end());
    const cplx z(0.2, 0.9);
    const std::vector<double> ts{0.0, sys.mesh_end() / 3, sys.mesh_end()};
    for (const MatrixPair& pair : {pair_from_matrix(CMat::Constant(1, 1, 0.7)), multivalued_pair(1)}) {
        const auto krein = krein_resolvent(sys, TripleKind::neumann_left, pair, z, f);
        const auto direct = solve_boundary_problem(sys, TripleKind::neumann_left, pair, z, f);
        EXPECT_LT(max_diff(krein, direct, ts), 1e-6);
    }
}

TEST(Resolvent, LimitPointSolutionIsSquareIntegrable) {
    const auto sys = CanonicalSystem::free(1, 1.0, RightEndpoint::limit_point);
    const VectorFunction f{[](double t) {
                               CVec v(2);
                               v << std::exp(-t), t < 3 ? 1.0 : 0.0;
                               return v;
                           },
                           0.0, 3.0};
    const cplx z(0.5, 1.0);
    const auto g = canonical_resolvent(sys, TripleKind::limit_point, z, f);
    EXPECT_LT(std::abs(g(0.0)(1)), 1e-10);
    for (double t : {0.5, 1.7, 2.5}) EXPECT_LT(ode_residual(sys, z, g, f, t), 1e-5);
    // beyond supp f the solution decays like exp(-Im z t / 2)
    EXPECT_LT(g(30.0).norm(), 1e-4 * g(3.0).norm());
}

TEST(Disk, FreeClosedForm) {
    const auto sys = CanonicalSystem::free(1, 1.0, RightEndpoint::limit_point);
    const cplx z(0.4, 0.6);
    const auto r = limit_point_m(sys, z);
    EXPECT_LT(std::abs(r.m - cplx(0, 1)), 1e-10);
    for (const auto& d : r.history) {
        EXPECT_NEAR(d.radius, 1.0 / std::sinh(z.imag() * d.truncation), 1e-9 * std::max(1.0, d.radius));
        EXPECT_LE(std::abs(d.center - cplx(0, 1)), d.radius * (1 + 1e-9));
    }
}

TEST(Disk, Nesting) {
    auto sys = CanonicalSystem::free(1, 0.5, RightEndpoint::limit_point);
    RMat H(2, 2);
    H << 0.3, -0.2, -0.2, 0.7;
    sys.segments.insert(sys.segments.begin(), Segment{1.2, H, RMat::Zero(2, 2)});
    const cplx z(-0.3, 1.5);
    const auto r = limit_point_m(sys, z);
    ASSERT_GE(r.history.size(), 3u);
    for (std::size_t k = 1; k < r.history.size(); ++k) {
        const auto &prev = r.history[k - 1], &cur = r.history[k];
        EXPECT_LE(cur.radius, prev.radius * (1 + 1e-12));
        EXPECT_LE(std::abs(cur.center - prev.center) + cur.radius, prev.radius * (1 + 1e-9) + 1e-12);
    }
    EXPECT_GT(r.m.imag(), 0.0);
    // the periodic-tail value sits in every disk
    const cplx m = weyl_function(sys, TripleKind::limit_point, z)(0, 0);
    for (const auto& d : r.history) EXPECT_LE(std::abs(m - d.center), d.radius * (1 + 1e-9) + 1e-12);
    EXPECT_LT(std::abs(m - r.m), 1e-10);
}

TEST(Floquet, CloseToRealAxis) {
    // the disks cannot shrink here within the repetition budget, the periodic tail still gives m
    const auto sys = CanonicalSystem::free(1, 1.0, RightEndpoint::limit_point);
    EXPECT_LT(std::abs(weyl_function(sys, TripleKind::limit_point, cplx(0.7, 1e-4))(0, 0) - cplx(0, 1)), 1e-9);
    EXPECT_THROW(weyl_function(sys, TripleKind::limit_point, 0.7), NotInHalfPlane);
}

TEST(Disk, Failures) {
    const auto sys = CanonicalSystem::free(1, 1.0, RightEndpoint::limit_point);
    EXPECT_THROW(limit_point_m(sys, 0.5), NotInHalfPlane);
    try {
        limit_point_m(sys, cplx(0, 1e-3));
        FAIL();
    } catch (const NoShrinkage& e) {
        EXPECT_GT(e.radius, 1.0);
    }
}

TEST(ResolventMatrix, JUnitaryOnRealLine) {
    std::mt19937 rng(60);
    const auto sys = oracle::random_system(rng, 1, 5);
    for (auto kind : {TripleKind::full_regular, TripleKind::neumann_left})
        for (auto side : {ResolventKind::left, ResolventKind::right}) {
            const auto W = resolvent_matrix(sys, kind, side);
            for (double x : {-1.3, 0.2, 2.5}) EXPECT_LT(j_unitarity_defect(W, x), 1e-9);
        }
}

TEST(ResolventMatrix, RightKernelIsPositive) {
    std::mt19937 rng(61);
    const std::vector<cplx> nodes{cplx(0, 1), cplx(1, 0.5), cplx(-0.7, 2), cplx(0.3, 0.2), cplx(0.5, 0)};
    for (int trial = 0; trial < 3; ++trial) {
        const auto sys = oracle::random_system(rng, 1 + trial % 2, 4);
        for (auto kind : {TripleKind::full_regular, TripleKind::neumann_left}) {
            const auto G = certify_class_W(resolvent_matrix(sys, kind, ResolventKind::right), nodes);
            EXPECT_TRUE(G.certified) << to_string(kind) << " lambda_min " << G.lambda_min;
        }
    }
    const auto lp = CanonicalSystem::free(1, 1.0, RightEndpoint::limit_point);
    EXPECT_TRUE(certify_class_W(resolvent_matrix(lp, TripleKind::limit_point), {cplx(0, 1), cplx(1, 1)}).certified);
}

TEST(ResolventMatrix, FreeNeumannGivesTangent) {
    const auto sys = CanonicalSystem::free(1, 2.0);
    const auto W = resolvent_matrix(sys, TripleKind::neumann_left);
    const cplx z(0.3, 0.2);
    EXPECT_LT(std::abs(lft_right(W, CMat::Zero(1, 1), z)(0, 0) - std::tan(z)), 1e-12);
    const auto Wl = resolvent_matrix(sys, TripleKind::neumann_left, ResolventKind::left);
    EXPECT_LT(std::abs(lft_left(Wl, pair_from_matrix(CMat::Zero(1, 1)), z)(0, 0) - std::tan(z)), 1e-12);
}

TEST(ResolventMatrix, LeftLftIsHerglotz) {
    const auto sys = two_segment();
    const auto Wl = resolvent_matrix(sys, TripleKind::full_regular, ResolventKind::left);
    CMat t(2, 2);
    t << 0.5, 0.2, 0.2, -1.0;
    for (cplx z : {cplx(0.3, 0.5), cplx(-2, 0.1), cplx(1, 3)}) {
        const CMat r = lft_left(Wl, pair_from_matrix(t), z);
        EXPECT_GE(min_eigenvalue(imag_part(r)), -1e-10);
    }
}

TEST(Preresolvent, CornerAndSymmetry) {
    const auto sys = two_segment();
    const cplx z(0.4, 0.7);
    const CMat A = preresolvent_matrix(sys, z);
    EXPECT_LT((A.topLeftCorner(2, 2) - weyl_function(sys, TripleKind::full_regular, z)).norm(), 1e-12);
    EXPECT_LT((preresolvent_matrix(sys, std::conj(z)) - A.adjoint()).norm(), 1e-10 * A.norm());
}

TEST(Fourier, FreeNeumannCosineTransform) {
    const auto sys = CanonicalSystem::free(1, 2.0);
    const VectorFunction f{[](double) {
                               CVec v(2);
                               v << 1.0, 0.0;
                               return v;
                           },
                           0.0, 2.0};
    // F(lambda) = int_0^2 cos(lambda t / 2) / 2 dt = sin(lambda) / lambda
    const FourierTransform F(sys, TripleKind::neumann_left, f, 20.0);
    for (double l : {0.5, 3.0, 17.0}) EXPECT_NEAR(F(l)(0).real(), std::sin(l) / l, 1e-12);
    EXPECT_THROW(F(25.0), QuadratureUnderResolved);
}
