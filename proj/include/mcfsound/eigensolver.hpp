#pragma once

#include "mcfsound/core.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <random>
#include <vector>

namespace mcfsound {

/// Ascending eigenvalues with matching unit eigenvectors (columns).
struct EigenPairSet {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    Eigen::VectorXd residuals;           // ||A x - lambda x|| per pair
    double orthonormality_residual = 0;  // max |X^T X - I|
    int iterations = 0;

    Eigen::Index size() const { return values.size(); }
};

struct EigensolverOptions {
    std::uint64_t seed = 1;
    int block_size = 8;
    int max_iterations = 2000;
    double tolerance = 1e-10;  // on ||A x - lambda x|| / (1 + |lambda|)
    double shift_fraction = 1e-3;
    Eigen::MatrixXd start;  // optional initial subspace, e.g. eigenvectors of a nearby operator
};

namespace detail {

/// Deterministic uniform values in [-0.5, 0.5) independent of the standard
/// library's distribution implementations.
class UnitNoise {
  public:
    explicit UnitNoise(std::uint64_t seed) : rng_(seed) {}
    double operator()() { return double(rng_() >> 11) * 0x1.0p-53 - 0.5; }
    Eigen::VectorXd vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = (*this)();
        return v;
    }

  private:
    std::mt19937_64 rng_;
};

/// Orthonormalize the columns of R against the first c columns of V and
/// among themselves, then append them to V. Columns that vanish are
/// replaced by random directions while room remains. Returns the number of
/// columns appended.
inline Eigen::Index append_orthonormal(Eigen::MatrixXd& V, Eigen::Index c, Eigen::MatrixXd R, UnitNoise& noise) {
    const Eigen::Index n = V.rows();
    Eigen::Index added = 0;
    for (Eigen::Index j = 0; j < R.cols() && c + added < n; ++j) {
        Eigen::VectorXd x = R.col(j);
        for (int attempt = 0; attempt < 4; ++attempt) {
            const double before = x.norm();
            for (int pass = 0; pass < 2; ++pass) {
                const auto Q = V.leftCols(c + added);
                x -= Q * (Q.transpose() * x);
            }
            const double after = x.norm();
            if (after > 1e-10 * before && after > 0) break;
            x = noise.vector(n);
        }
        const double nx = x.norm();
        if (!(nx > 0)) continue;
        V.col(c + added) = x / nx;
        ++added;
    }
    return added;
}

}  // namespace detail

/// The k algebraically smallest eigenpairs of a sparse symmetric positive
/// semi-definite matrix.
///
/// Block Krylov iteration on the shift-inverted operator (A + sI)^-1 with
/// full reorthogonalization and thick restarts: the wanted Ritz vectors are
/// kept, and the basis is extended by their residual directions. A final
/// Rayleigh-Ritz step on A itself fixes the reported eigenpairs.
inline EigenPairSet smallest_eigenpairs(const Eigen::SparseMatrix<double>& A, Eigen::Index k,
                                        const EigensolverOptions& opts = {}) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n) throw SpectrumError("matrix is not square");
    if (k < 1 || k > n)
        throw SpectrumError("requested " + std::to_string(k) + " eigenpairs of a " + std::to_string(n) +
                            "-dimensional operator");

    const double shift = opts.shift_fraction * std::max(A.diagonal().cwiseAbs().mean(), 1e-300);
    Eigen::SparseMatrix<double> shifted = A;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
    if (solver.info() != Eigen::Success) throw SpectrumError("factorization of the shifted operator failed");
    auto apply_op = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd { return solver.solve(X); };

    const Eigen::Index b = std::min<Eigen::Index>(opts.block_size, n);
    const Eigen::Index m = std::min<Eigen::Index>(n, std::max(2 * k + 2 * b, k + 4 * b));
    const Eigen::Index keep = std::min(m - b, k + b);

    detail::UnitNoise noise(opts.seed);
    Eigen::MatrixXd V(n, m), W(n, m);
    const Eigen::Index given = opts.start.rows() == n ? std::min(opts.start.cols(), m - b) : 0;
    Eigen::MatrixXd start(n, given + b);
    if (given > 0) start.leftCols(given) = opts.start.leftCols(given);
    for (Eigen::Index j = given; j < given + b; ++j) start.col(j) = noise.vector(n);
    Eigen::Index c = detail::append_orthonormal(V, 0, start, noise);
    W.leftCols(c) = apply_op(V.leftCols(c));

    auto residual_of = [&](const Eigen::VectorXd& x, double& lambda) {
        const Eigen::VectorXd Ax = A * x;
        lambda = x.dot(Ax);
        return (Ax - lambda * x).norm();
    };

    Eigen::MatrixXd Y;
    Eigen::VectorXd theta;
    std::vector<double> last_res;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        Eigen::MatrixXd H = V.leftCols(c).transpose() * W.leftCols(c);
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        // largest eigenvalues of the inverse first
        theta = es.eigenvalues().reverse();
        Y = es.eigenvectors().rowwise().reverse();

        const Eigen::Index wanted = std::min(k, c);
        std::vector<Eigen::Index> unconverged;
        last_res.assign(wanted, 0.0);
        if (wanted == k) {
            for (Eigen::Index j = 0; j < k; ++j) {
                const Eigen::VectorXd x = V.leftCols(c) * Y.col(j);
                double lambda = 0;
                last_res[j] = residual_of(x, lambda);
                if (last_res[j] > opts.tolerance * (1 + std::abs(lambda))) unconverged.push_back(j);
            }
            if (unconverged.empty() || c == n) {
                // Rayleigh-Ritz with A on the converged subspace
                const Eigen::MatrixXd X = V.leftCols(c) * Y.leftCols(k);
                Eigen::MatrixXd G = X.transpose() * (A * X);
                G = 0.5 * (G + G.transpose()).eval();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> fin(G);
                EigenPairSet out;
                out.values = fin.eigenvalues();
                out.vectors = X * fin.eigenvectors();
                out.residuals.resize(k);
                for (Eigen::Index j = 0; j < k; ++j) {
                    auto col = out.vectors.col(j);
                    col.normalize();
                    Eigen::Index imax = 0;
                    col.cwiseAbs().maxCoeff(&imax);
                    if (col(imax) < 0) col = -col;
                    out.residuals(j) = (A * col - out.values(j) * col).norm();
                }
                out.orthonormality_residual =
                    (out.vectors.transpose() * out.vectors - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
                out.iterations = it;
                return out;
            }
        } else {
            for (Eigen::Index j = 0; j < wanted; ++j) unconverged.push_back(j);
        }

        // new directions: residuals of the leading unconverged Ritz pairs
        Eigen::MatrixXd R(n, b);
        Eigen::Index r = 0;
        for (Eigen::Index j : unconverged) {
            if (r == b) break;
            R.col(r++) = W.leftCols(c) * Y.col(j) - theta(j) * (V.leftCols(c) * Y.col(j));
        }
        for (Eigen::Index j = wanted; j < c && r < b; ++j)
            R.col(r++) = W.leftCols(c) * Y.col(j) - theta(j) * (V.leftCols(c) * Y.col(j));
        while (r < b) R.col(r++) = noise.vector(n);

        if (c + b > m) {
            const Eigen::MatrixXd Vk = V.leftCols(c) * Y.leftCols(keep);
            const Eigen::MatrixXd Wk = W.leftCols(c) * Y.leftCols(keep);
            V.leftCols(keep) = Vk;
            W.leftCols(keep) = Wk;
            c = keep;
        }
        const Eigen::Index added = detail::append_orthonormal(V, c, R, noise);
        if (added == 0) throw SpectrumError("Krylov basis stopped growing");
        W.middleCols(c, added) = apply_op(V.middleCols(c, added));
        c += added;
    }
    std::ostringstream os;
    os << "eigensolver did not converge in " << opts.max_iterations << " iterations; residuals:";
    for (double x : last_res) os << " " << x;
    throw SpectrumError(os.str());
}

}  // namespace mcfsound
