#pragma once

// Dense complex linear algebra shared by all modules.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>

#include "canspec/errors.hpp"

namespace canspec {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;

/// z -> p x p matrix.
using MatrixFunction = std::function<CMat(cplx)>;

inline constexpr double kRankTol = 1e-10;
inline constexpr double kCondLimit = 1e12;

/// Symplectic unit [[0, -I], [I, 0]] of size 2p.
inline CMat symplectic_j(int p) {
    CMat J = CMat::Zero(2 * p, 2 * p);
    J.topRightCorner(p, p) = -CMat::Identity(p, p);
    J.bottomLeftCorner(p, p) = CMat::Identity(p, p);
    return J;
}

/// Signature matrix [[0, -iI], [iI, 0]] of size 2p.
inline CMat signature_j(int p) {
    const cplx I(0.0, 1.0);
    CMat J = CMat::Zero(2 * p, 2 * p);
    J.topRightCorner(p, p) = -I * CMat::Identity(p, p);
    J.bottomLeftCorner(p, p) = I * CMat::Identity(p, p);
    return J;
}

inline Eigen::VectorXd singular_values(const CMat& A) {
    if (A.size() == 0) return Eigen::VectorXd();
    return Eigen::JacobiSVD<CMat>(A).singularValues();
}

/// Rank with singular values below rel_tol * sigma_max treated as zero.
inline int numerical_rank(const CMat& A, double rel_tol = kRankTol) {
    if (A.size() == 0) return 0;
    const Eigen::VectorXd s = singular_values(A);
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s(k) > rel_tol * s(0)) ++r;
    return r;
}

/// Orthonormal basis of the column span.
inline CMat orthonormal_basis(const CMat& A, double rel_tol = kRankTol) {
    if (A.cols() == 0) return CMat(A.rows(), 0);
    Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeThinU);
    const Eigen::VectorXd& s = svd.singularValues();
    int r = 0;
    if (s.size() > 0 && s(0) > 0.0)
        for (Eigen::Index k = 0; k < s.size(); ++k)
            if (s(k) > rel_tol * s(0)) ++r;
    return svd.matrixU().leftCols(r);
}

/// Orthonormal basis of ker A (A is m x n; result n x k).
inline CMat null_space(const CMat& A, double rel_tol = kRankTol) {
    const Eigen::Index n = A.cols();
    if (A.rows() == 0) return CMat::Identity(n, n);
    Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    int r = 0;
    if (s.size() > 0 && s(0) > 0.0)
        for (Eigen::Index k = 0; k < s.size(); ++k)
            if (s(k) > rel_tol * s(0)) ++r;
    return svd.matrixV().rightCols(n - r);
}

/// Equality of column spans, decided by ranks of the concatenation.
inline bool same_span(const CMat& A, const CMat& B, double rel_tol = kRankTol) {
    if (A.rows() != B.rows()) return false;
    const int ra = numerical_rank(A, rel_tol);
    const int rb = numerical_rank(B, rel_tol);
    if (ra != rb) return false;
    CMat AB(A.rows(), A.cols() + B.cols());
    AB << A, B;
    return numerical_rank(AB, rel_tol) == ra;
}

inline CMat hermitian_part(const CMat& A) { return 0.5 * (A + A.adjoint()); }

/// (A - A*) / 2i, the Hermitian imaginary part.
inline CMat imag_part(const CMat& A) { return (A - A.adjoint()) / cplx(0.0, 2.0); }

inline double min_eigenvalue(const CMat& hermitian) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double spectral_norm(const CMat& A) {
    if (A.size() == 0) return 0.0;
    return singular_values(A)(0);
}

inline double condition_number(const CMat& A) {
    const Eigen::VectorXd s = singular_values(A);
    if (s.size() == 0) return 1.0;
    const double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

/// Solves A X = B, refusing when cond(A) exceeds the limit.
template <class Error = SingularDenominator>
CMat guarded_solve(const CMat& A, const CMat& B, const char* what, double limit = kCondLimit) {
    const double cond = condition_number(A);
    if (!(cond <= limit)) throw Error(std::string(what) + " is numerically singular", cond);
    return A.partialPivLu().solve(B);
}

/// X A^{-1}, same guard.
template <class Error = SingularDenominator>
CMat guarded_right_solve(const CMat& X, const CMat& A, const char* what, double limit = kCondLimit) {
    return guarded_solve<Error>(A.adjoint(), X.adjoint(), what, limit).adjoint();
}

inline bool is_real(cplx z) { return z.imag() == 0.0; }

}  // namespace canspec
