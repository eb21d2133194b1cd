#pragma once

#include "mcfsound/components.hpp"
#include "mcfsound/eigensolver.hpp"
#include "mcfsound/mesh.hpp"

#include <Eigen/Sparse>

namespace mcfsound {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class MassNormalization { Lumped, None };

inline MassNormalization parse_mass_normalization(const std::string& s) {
    if (s == "lumped") return MassNormalization::Lumped;
    if (s == "none") return MassNormalization::None;
    throw SpectrumError("unknown mass normalization '" + s + "' (expected lumped or none)");
}

/// Cotan stiffness matrix of a mesh snapshot: a_ij = -w_ij on edges and
/// a_ii = sum_j w_ij. Rows follow the compacted order of live vertices.
struct CotanLaplacian {
    SparseMatrix stiffness;
    Eigen::VectorXd mass;              // barycentric vertex areas
    std::vector<VertexId> vertex_ids;  // row -> mesh vertex

    Eigen::Index dimension() const { return stiffness.rows(); }

    /// Operator whose eigenpairs are reported. With lumped mass this is
    /// M^-1/2 A M^-1/2, which has the spectrum of the generalized problem
    /// A x = lambda M x and stays symmetric.
    SparseMatrix spectral_operator(MassNormalization norm) const {
        if (norm == MassNormalization::None) return stiffness;
        const Eigen::VectorXd s = mass.cwiseSqrt().cwiseInverse();
        SparseMatrix out = s.asDiagonal() * stiffness * s.asDiagonal();
        return out;
    }
};

/// 1/2 (cot alpha + cot beta) for the two angles opposite edge (i, j).
inline double cotan_weight(const SurfaceMesh& mesh, VertexId i, VertexId j) {
    const auto faces = mesh.edge_faces(i, j);
    if (faces.size() != 2)
        throw SpectrumError("edge " + std::to_string(i) + "-" + std::to_string(j) + " has " +
                                std::to_string(faces.size()) + " incident faces",
                            i);
    double w = 0;
    for (FaceId f : faces) {
        const auto& t = mesh.face(f);
        VertexId k = t[0];
        for (VertexId x : t)
            if (x != i && x != j) k = x;
        const Vec3 a = mesh.position(i) - mesh.position(k);
        const Vec3 b = mesh.position(j) - mesh.position(k);
        const double c = a.cross(b).norm();
        if (!(c > 0)) throw SpectrumError("zero-area triangle in cotan weight", f);
        w += 0.5 * a.dot(b) / c;
    }
    return w;
}

inline CotanLaplacian assemble_laplacian(const SurfaceMesh& mesh) {
    CotanLaplacian L;
    std::vector<VertexId> row(mesh.vertex_slots(), kNoVertex);
    for (VertexId v : mesh.live_vertices()) {
        row[v] = static_cast<VertexId>(L.vertex_ids.size());
        L.vertex_ids.push_back(v);
    }
    const auto n = static_cast<Eigen::Index>(L.vertex_ids.size());
    L.mass = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> trip;
    const auto edges = mesh.edges();
    trip.reserve(2 * edges.size() + n);
    for (const auto& [i, j] : edges) {
        const double w = cotan_weight(mesh, i, j);
        trip.emplace_back(row[i], row[j], -w);
        trip.emplace_back(row[j], row[i], -w);
        diag[row[i]] += w;
        diag[row[j]] += w;
    }
    for (Eigen::Index r = 0; r < n; ++r) trip.emplace_back(r, r, diag[r]);
    for (FaceId f : mesh.live_faces()) {
        const double a = mesh.face_area(f) / 3.0;
        for (VertexId v : mesh.face(f)) L.mass[row[v]] += a;
    }
    L.stiffness.resize(n, n);
    L.stiffness.setFromTriplets(trip.begin(), trip.end());
    return L;
}

struct SpectrumOptions {
    int modes = 50;
    MassNormalization normalization = MassNormalization::Lumped;
    std::uint64_t seed = 1;
};

/// Eigenpairs of the spectral operator of the mesh, ascending. `warm`
/// optionally seeds the solver with approximate eigenvectors (one row per
/// live vertex).
inline EigenPairSet mesh_spectrum(const SurfaceMesh& mesh, const SpectrumOptions& opts = {},
                                  const Eigen::MatrixXd& warm = {}) {
    if (mesh.empty()) return {};
    const CotanLaplacian L = assemble_laplacian(mesh);
    const auto k = std::min<Eigen::Index>(opts.modes, L.dimension());
    EigensolverOptions eo;
    eo.seed = opts.seed;
    eo.start = warm;
    return smallest_eigenpairs(L.spectral_operator(opts.normalization), k, eo);
}

/// Eigenvalues below this count as zero modes: 1e-8 of the largest
/// computed eigenvalue, and never less than 1e-10.
inline double zero_mode_tolerance(const EigenPairSet& pairs) {
    if (pairs.values.size() == 0) return 1e-10;
    return std::max(1e-8 * std::abs(pairs.values(pairs.values.size() - 1)), 1e-10);
}

inline int zero_mode_count(const EigenPairSet& pairs, double tol = kNaN) {
    if (!(tol == tol)) tol = zero_mode_tolerance(pairs);
    int count = 0;
    for (Eigen::Index i = 0; i < pairs.values.size(); ++i)
        if (pairs.values(i) < tol) ++count;
    return count;
}

}  // namespace mcfsound
