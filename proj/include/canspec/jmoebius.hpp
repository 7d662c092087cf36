#pragma once

// J-geometry of 2p x 2p matrix functions and linear-fractional transforms.

#include <optional>

#include "canspec/herglotz.hpp"
#include "canspec/linrel.hpp"

namespace canspec {

enum class ResolventKind { right, left, preresolvent };

struct ResolventMatrix {
    int p = 1;  // block size, the matrix is 2p x 2p
    ResolventKind kind = ResolventKind::right;
    MatrixFunction eval;
    std::optional<MatrixFunction> derivative;

    CMat operator()(cplx z) const { return eval(z); }

    /// z -> W(conj z)*, the left/right dual.
    ResolventMatrix dual() const {
        ResolventMatrix d;
        d.p = p;
        d.kind = kind == ResolventKind::right ? ResolventKind::left : ResolventKind::right;
        auto f = eval;
        d.eval = [f](cplx z) { return CMat(f(std::conj(z)).adjoint()); };
        return d;
    }

    static ResolventMatrix constant(const CMat& W, ResolventKind kind = ResolventKind::right) {
        return {static_cast<int>(W.rows() / 2), kind, [W](cplx) { return W; }, std::nullopt};
    }
};

struct Blocks {
    CMat w11, w12, w21, w22;
};

inline Blocks blocks(const CMat& W) {
    const auto p = W.rows() / 2;
    return {W.topLeftCorner(p, p), W.topRightCorner(p, p), W.bottomLeftCorner(p, p), W.bottomRightCorner(p, p)};
}

/// (J - W(z) J W(zeta)*) / (-i (z - conj zeta)).
inline CMat kernel_KW(const ResolventMatrix& W, cplx z, cplx zeta) {
    const CMat J = signature_j(W.p);
    const cplx den = cplx(0.0, -1.0) * (z - std::conj(zeta));
    if (std::abs(z - std::conj(zeta)) < 1e-14 * std::max(1.0, std::abs(z))) {
        if (z != zeta) throw ConjugateCollision("kernel K^W at z = conj(zeta)");
        // real diagonal: limit -i W'(x) J W(x)*
        const double x = z.real();
        const CMat Wx = W(x);
        CMat dW;
        if (W.derivative) {
            dW = (*W.derivative)(x);
        } else {
            const double h = 1e-6 * (1.0 + std::abs(x));
            dW = (W(x + h) - W(x - h)) / (2.0 * h);
        }
        return cplx(0.0, -1.0) * dW * J * Wx.adjoint();
    }
    return (J - W(z) * J * W(zeta).adjoint()) / den;
}

/// Block Gram [K_{zeta_k}(z_j)] and its minimal eigenvalue.
inline KernelGram certify_class_W(const ResolventMatrix& W, const std::vector<cplx>& nodes) {
    const auto m = nodes.size();
    const int n = 2 * W.p;
    KernelGram out;
    out.nodes = nodes;
    out.gram = CMat::Zero(n * m, n * m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k) {
            if (j != k && std::abs(nodes[j] - std::conj(nodes[k])) < 1e-14)
                throw ConjugateCollision("class W nodes contain a conjugate pair");
            out.gram.block(j * n, k * n, n, n) = kernel_KW(W, nodes[j], nodes[k]);
        }
    out.gram = hermitian_part(out.gram);
    out.lambda_min = m ? min_eigenvalue(out.gram) : 0.0;
    out.certified = out.lambda_min >= -1e-8 * spectral_norm(out.gram);
    return out;
}

/// (w11 psi + w12 phi)(w21 psi + w22 phi)^{-1}.
inline CMat lft_right(const CMat& W, const NevanlinnaFamilySample& tau) {
    const Blocks b = blocks(W);
    return guarded_right_solve(b.w11 * tau.psi + b.w12 * tau.phi, b.w21 * tau.psi + b.w22 * tau.phi,
                               "right LFT denominator");
}

/// Constant Hermitian (or any operator) tau: (w11 tau + w12)(w21 tau + w22)^{-1}.
inline CMat lft_right(const CMat& W, const CMat& tau) {
    return lft_right(W, NevanlinnaFamilySample{CMat::Identity(tau.rows(), tau.cols()), tau, {}});
}

/// Pair form: the family at z spans ker[C, -D].
inline CMat lft_right(const CMat& W, const MatrixPair& pair) {
    return lft_right(W, family_from_pair(pair, {}));
}

inline CMat lft_right(const ResolventMatrix& W, const MatrixPair& pair, cplx z) { return lft_right(W(z), pair); }

inline CMat lft_right(const ResolventMatrix& W, const CMat& tau, cplx z) { return lft_right(W(z), tau); }

inline CMat lft_right(const ResolventMatrix& W, const NevanlinnaFamilySample& tau, cplx z) {
    return lft_right(W(z), tau);
}

/// (C w12 + D w22)^{-1}(C w11 + D w21).
inline CMat lft_left(const CMat& Wl, const MatrixPair& pair) {
    const Blocks b = blocks(Wl);
    return guarded_solve(pair.C * b.w12 + pair.D * b.w22, pair.C * b.w11 + pair.D * b.w21, "left LFT denominator");
}

inline CMat lft_left(const ResolventMatrix& Wl, const MatrixPair& pair, cplx z) { return lft_left(Wl(z), pair); }

/// ||W(z) J W(conj z)* - J|| (Frobenius).
inline double j_unitarity_defect(const ResolventMatrix& W, cplx z) {
    const CMat J = signature_j(W.p);
    return (W(z) * J * W(std::conj(z)).adjoint() - J).norm();
}

}  // namespace canspec
