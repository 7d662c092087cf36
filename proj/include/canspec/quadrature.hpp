#pragma once

// Gauss-Legendre meshes that never straddle a coefficient jump.

#include <array>
#include <functional>
#include <vector>

#include "canspec/cansys.hpp"

namespace canspec {

/// Vector function on [lo, hi]; values are 2p-vectors.
struct VectorFunction {
    std::function<CVec(double)> eval;
    double lo = 0.0;
    double hi = 0.0;

    CVec operator()(double t) const { return eval(t); }
};

namespace gl8 {
// nodes on [0, 1] and weights summing to 1
inline constexpr std::array<double, 8> x{
    0.019855071751231856, 0.10166676129318664, 0.2372337950418355, 0.4082826787521751,
    0.5917173212478249,   0.7627662049581645,  0.8983332387068134, 0.9801449282487681};
inline constexpr std::array<double, 8> w{
    0.05061426814518813, 0.11119051722668724, 0.15685332293894363, 0.18134189168918100,
    0.18134189168918100, 0.15685332293894363, 0.11119051722668724, 0.05061426814518813};
}  // namespace gl8

struct MeshPart {
    double start = 0.0;
    double length = 0.0;
    Segment seg;
    int cells = 1;
};

struct Mesh {
    std::vector<MeshPart> parts;
    std::vector<double> t;
    std::vector<double> w;
    std::vector<std::size_t> part;
    double lambda_bound = 0.0;  // |z| up to which the cells resolve the oscillation

    std::size_t size() const { return t.size(); }
};

inline constexpr std::size_t kMaxCells = 400000;

/// Cells of length <= 2 pi / (|z| ||H|| + ||F|| + 1), at least min_cells per segment.
inline Mesh build_mesh(const CanonicalSystem& sys, double lo, double hi, double lambda_bound, int min_cells = 4) {
    if (hi < lo) throw std::invalid_argument("build_mesh: hi < lo");
    Mesh mesh;
    mesh.lambda_bound = lambda_bound;
    std::size_t total = 0;
    double t = std::max(lo, sys.a);
    while (t < hi - 1e-14 * std::max(1.0, std::abs(hi))) {
        double start = 0.0;
        Segment seg = sys.segment_at(t, &start);
        if (start + seg.length <= t) seg = sys.segment_at(t + 1e-12 * std::max(1.0, std::abs(t)), &start);
        double end = std::min(hi, start + seg.length);
        if (!sys.half_line() && end > sys.mesh_end()) end = sys.mesh_end();
        if (end <= t) break;
        const double len = end - t;
        const double hn = seg.H.operatorNorm();
        const double fn = seg.F.operatorNorm();
        const double cell = 2.0 * M_PI / (lambda_bound * hn + fn + 1.0);
        const int cells = std::max(min_cells, static_cast<int>(std::ceil(len / cell)));
        total += static_cast<std::size_t>(cells);
        if (total > kMaxCells) throw QuadratureUnderResolved("mesh needs more than the maximum number of cells");
        mesh.parts.push_back({t, len, seg, cells});
        const double hc = len / cells;
        for (int c = 0; c < cells; ++c)
            for (std::size_t k = 0; k < 8; ++k) {
                mesh.t.push_back(t + hc * (c + gl8::x[k]));
                mesh.w.push_back(hc * gl8::w[k]);
                mesh.part.push_back(mesh.parts.size() - 1);
            }
        t = end;
    }
    return mesh;
}

inline void require_resolved(const Mesh& mesh, cplx z) {
    if (std::abs(z) > mesh.lambda_bound * (1.0 + 1e-12))
        throw QuadratureUnderResolved("mesh built for |z| <= " + std::to_string(mesh.lambda_bound) +
                                      ", asked for |z| = " + std::to_string(std::abs(z)));
}

/// U(t, z) at every mesh node, cell by cell.
inline std::vector<CMat> fundamental_on_mesh(const CanonicalSystem& sys, cplx z, const Mesh& mesh) {
    require_resolved(mesh, z);
    std::vector<CMat> out;
    out.reserve(mesh.size());
    if (mesh.parts.empty()) return out;
    FundamentalSolution U(sys, z);
    CMat cur = U(mesh.parts.front().start);
    for (std::size_t j = 0; j < mesh.parts.size(); ++j) {
        const auto& part = mesh.parts[j];
        if (j > 0 && std::abs(part.start - (mesh.parts[j - 1].start + mesh.parts[j - 1].length)) > 1e-12)
            cur = U(part.start);
        const CMat A = segment_generator(part.seg, z);
        const double hc = part.length / part.cells;
        const CMat step = (hc * A).exp();
        std::array<CMat, 8> inner;
        for (std::size_t k = 0; k < 8; ++k) inner[k] = (hc * gl8::x[k] * A).exp();
        for (int c = 0; c < part.cells; ++c) {
            for (std::size_t k = 0; k < 8; ++k) out.push_back(inner[k] * cur);
            cur = step * cur;
        }
    }
    return out;
}

/// H at every mesh node.
inline std::vector<CMat> weight_on_mesh(const Mesh& mesh) {
    std::vector<CMat> out;
    out.reserve(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) out.push_back(mesh.parts[mesh.part[i]].seg.H.cast<cplx>());
    return out;
}

inline std::vector<CVec> sample(const VectorFunction& f, const Mesh& mesh) {
    std::vector<CVec> out;
    out.reserve(mesh.size());
    for (double t : mesh.t) out.push_back(f(t));
    return out;
}

/// (f, g) = int g* H f over the mesh.
inline cplx inner_product(const Mesh& mesh, const std::vector<CVec>& f, const std::vector<CVec>& g) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i)
        s += mesh.w[i] * g[i].dot(mesh.parts[mesh.part[i]].seg.H.cast<cplx>() * f[i]);
    return s;
}

/// int X(t)* H Y(t) dt for matrix-valued X, Y.
inline CMat gram_pairing(const Mesh& mesh, const std::function<CMat(double)>& X, const std::function<CMat(double)>& Y) {
    CMat s;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const CMat term = mesh.w[i] * (X(mesh.t[i]).adjoint() * mesh.parts[mesh.part[i]].seg.H.cast<cplx>() * Y(mesh.t[i]));
        if (i == 0) s = term;
        else s += term;
    }
    return s;
}

}  // namespace canspec
