#pragma once

#include "mcfsound/one_ring.hpp"

#include <Eigen/Dense>

#include <numbers>
#include <optional>

namespace mcfsound {

using Mat4 = Eigen::Matrix4d;
using Mat3 = Eigen::Matrix3d;
using Vec4 = Eigen::Vector4d;

enum class NormalBranch { FaceAverage, EdgeAverage };

inline const char* to_string(NormalBranch b) { return b == NormalBranch::FaceAverage ? "face-average" : "edge-average"; }

struct NormalEstimate {
    Vec3 direction = Vec3::UnitZ();
    NormalBranch branch = NormalBranch::FaceAverage;
    double raw_magnitude = 0.0;
};

/// Right-handed orthonormal frame; z is the surface normal.
struct Frame {
    Vec3 x = Vec3::UnitX();
    Vec3 y = Vec3::UnitY();
    Vec3 n = Vec3::UnitZ();

    Vec3 local(const Vec3& p) const { return {p.dot(x), p.dot(y), p.dot(n)}; }
};

/// Fitted form z = a + d x^2 + 2 e xy + f y^2 in the local frame.
///
/// `consistency` is the mean of d and f that the same ring yields when fit
/// to the unit paraboloid z = x^2 + y^2; the fit has a valence-dependent
/// bias that does not vanish under refinement, and dividing by this factor
/// removes it exactly for isotropic quadratics. It is 1 when calibration
/// is disabled.
struct ShapeCoefficients {
    double a = 0, d = 0, e = 0, f = 0;
    Frame frame;
    double consistency = 1.0;
    double stiffness = kNaN;  // d kappa / d (center displacement along -normal)

    Vec4 w() const { return {a, d, e, f}; }
};

struct FitSystem {
    Mat4 M = Mat4::Zero();
    Vec4 rhs = Vec4::Zero();
    Vec4 paraboloid_rhs = Vec4::Zero();  // same functional against z = x^2 + y^2
    Vec4 lift_rhs = Vec4::Zero();        // against z = 1 on the ring, 0 at the center
    double condition_estimate = kInf;
    // Coordinates were divided by this length before assembly.
    double scale = 1.0;
};

struct FitOptions {
    bool calibrate = true;
    double max_condition = 1e12;
    bool refine_normal = true;
    double max_refine_angle = 0.3;  // radians; larger corrections are discarded
};

namespace detail {

inline double corner_angle(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

/// Faces of the ring whose area is below 1e-14 of the ring mean are treated
/// as absent from every sum.
inline std::vector<char> live_ring_faces(const OneRing& ring) {
    const std::size_t n = ring.size();
    std::vector<double> area(n);
    double total = 0;
    for (std::size_t j = 0; j < n; ++j) total += area[j] = 0.5 * ring[j].cross(ring[j + 1]).norm();
    std::vector<char> live(n);
    const double floor = 1e-14 * total / double(n);
    for (std::size_t j = 0; j < n; ++j) live[j] = area[j] > floor;
    return live;
}

inline void require_ring(const OneRing& ring) {
    if (ring.size() < 3) throw DifferentialError("ring needs at least 3 neighbors", ring.center);
    for (const auto& v : ring.offsets)
        if (!(v.norm() > 0)) throw DifferentialError("zero-length ring edge", ring.center);
}

}  // namespace detail

namespace detail {

struct NormalAverages {
    Vec3 face, edge;
};

/// Both averages from one pass over the ring.
inline NormalAverages normal_averages(const OneRing& ring) {
    require_ring(ring);
    const std::size_t n = ring.size();
    const auto live = live_ring_faces(ring);
    std::vector<double> theta(n, 0.0);
    double theta_sum = 0;
    Vec3 face = Vec3::Zero();
    for (std::size_t j = 0; j < n; ++j) {
        if (!live[j]) continue;
        const Vec3 c = ring[j].cross(ring[j + 1]);
        theta[j] = std::atan2(c.norm(), ring[j].dot(ring[j + 1]));
        face += theta[j] * c.normalized();
        theta_sum += theta[j];
    }
    if (!(theta_sum > 0)) throw DifferentialError("all ring faces are degenerate", ring.center);
    Vec3 edge = Vec3::Zero();
    for (std::size_t j = 0; j < n; ++j) edge += (theta[(j + n - 1) % n] + theta[j]) * ring[j].normalized();
    return {face / theta_sum, -edge / (2.0 * theta_sum)};
}

}  // namespace detail

/// Angle-weighted average of the unit face normals around the center.
inline Vec3 face_normal_average(const OneRing& ring) { return detail::normal_averages(ring).face; }

/// Negated angle-weighted average of the unit edge directions. Large where
/// the face normals cancel, e.g. at the tip of a needle.
inline Vec3 edge_direction_average(const OneRing& ring) { return detail::normal_averages(ring).edge; }

inline NormalEstimate estimate_normal(const OneRing& ring) {
    const auto [fa, ea] = detail::normal_averages(ring);
    const double mf = fa.norm(), me = ea.norm();
    NormalEstimate out;
    if (me > mf + 1e-12) {
        out.branch = NormalBranch::EdgeAverage;
        out.raw_magnitude = me;
        out.direction = ea / me;
    } else {
        if (!(mf > 0)) throw DifferentialError("both normal averages vanish", ring.center);
        out.branch = NormalBranch::FaceAverage;
        out.raw_magnitude = mf;
        out.direction = fa / mf;
    }
    return out;
}

inline Frame build_local_frame(const Vec3& n) {
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(n[i]) < std::abs(n[k])) k = i;
    Frame fr;
    fr.n = n;
    fr.x = n.cross(Vec3::Unit(k)).normalized();
    fr.y = n.cross(fr.x);
    return fr;
}

/// Tilts n toward the gradient-free normal of the quadratic through the
/// center that best fits the ring vertices, z = bx + cy + dx^2 + 2exy + fy^2.
/// The angle-weighted average is only first-order accurate on irregular
/// rings and its error leaks into d and f at full strength. Needs valence 5.
inline std::optional<Vec3> refine_normal(const OneRing& ring, const Vec3& n, double max_angle) {
    const std::size_t m = ring.size();
    if (m < 5) return std::nullopt;
    const Frame fr = build_local_frame(n);
    double s2 = 0;
    for (const auto& v : ring.offsets) s2 += v.squaredNorm();
    const double scale = std::sqrt(s2 / double(m));
    using Vec5 = Eigen::Matrix<double, 5, 1>;
    Eigen::Matrix<double, 5, 5> N = Eigen::Matrix<double, 5, 5>::Zero();
    Vec5 rhs = Vec5::Zero();
    for (std::size_t j = 0; j < m; ++j) {
        const Vec3 p = fr.local(ring[j]) / scale;
        const Vec5 row(p.x(), p.y(), p.x() * p.x(), 2.0 * p.x() * p.y(), p.y() * p.y());
        N.selfadjointView<Eigen::Lower>().rankUpdate(row);
        rhs += p.z() * row;
    }
    const Eigen::LDLT<Eigen::Matrix<double, 5, 5>> ldlt(N.selfadjointView<Eigen::Lower>());
    const Vec5 diag = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || !(diag.minCoeff() > 1e-10 * diag.maxCoeff())) return std::nullopt;
    const Vec5 w = ldlt.solve(rhs);
    const Vec3 out = (fr.n - w(0) * fr.x - w(1) * fr.y).normalized();
    if (!out.allFinite() || detail::corner_angle(out, n) > max_angle) return std::nullopt;
    return out;
}

/// Monomial vector (1, x^2, 2xy, y^2).
inline Vec4 monomials(double x, double y) { return {1.0, x * x, 2.0 * x * y, y * y}; }

/// Matrix Xi with monomials(X v) = monomials(v) * Xi for X = [[xj, xk], [yj, yk]]
/// (row-vector convention).
inline Mat4 xi_matrix(double xj, double yj, double xk, double yk) {
    Mat4 m = Mat4::Zero();
    m(0, 0) = 1;
    m(1, 1) = xj * xj, m(1, 2) = 2 * xj * yj, m(1, 3) = yj * yj;
    m(2, 1) = xj * xk, m(2, 2) = xk * yj + xj * yk, m(2, 3) = yj * yk;
    m(3, 1) = xk * xk, m(3, 2) = 2 * xk * yk, m(3, 3) = yk * yk;
    return m;
}

struct MomentMatrices {
    Mat4 A;
    Eigen::Matrix<double, 4, 2> B;
    Eigen::Matrix2d C;
};

/// Integrals over the reference triangle of s s^T, s alpha^T and alpha alpha^T,
/// where s = monomials(alpha, beta) and alpha = (alpha, beta).
inline const MomentMatrices& moment_matrices() {
    static const MomentMatrices m = [] {
        MomentMatrices r;
        r.A << 90, 15, 15, 15, 15, 6, 3, 1, 15, 3, 4, 3, 15, 1, 3, 6;
        r.A /= 180.0;
        r.B << 10, 10, 3, 1, 2, 2, 1, 3;
        r.B /= 60.0;
        r.C << 2, 1, 1, 2;
        r.C /= 24.0;
        return r;
    }();
    return m;
}

namespace detail {

struct LocalRing {
    std::vector<Vec3> p;  // local coordinates, scaled
    std::vector<char> live;
    double scale = 1.0;
};

inline LocalRing to_local(const OneRing& ring, const Frame& frame) {
    LocalRing lr;
    double s2 = 0;
    for (const auto& v : ring.offsets) s2 += v.squaredNorm();
    lr.scale = std::sqrt(s2 / double(ring.size()));
    for (const auto& v : ring.offsets) lr.p.push_back(frame.local(v) / lr.scale);
    lr.live = live_ring_faces(ring);
    return lr;
}

inline double area2d(const Vec3& a, const Vec3& b) { return std::abs(a.x() * b.y() - b.x() * a.y()); }

/// 1-norm condition number; infinite unless M is positive definite.
inline double condition_of(const Mat4& M) {
    const Eigen::LDLT<Mat4> ldlt(M);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0)) return kInf;
    const Mat4 inv = ldlt.solve(Mat4::Identity());
    return M.cwiseAbs().colwise().sum().maxCoeff() * inv.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace detail

/// Normal equations of the triangle-integrated least-squares functional,
/// in coordinates divided by the RMS ring radius.
inline FitSystem assemble_fit_system(const OneRing& ring, const Frame& frame) {
    detail::require_ring(ring);
    const auto lr = detail::to_local(ring, frame);
    const auto& mm = moment_matrices();
    FitSystem sys;
    sys.scale = lr.scale;
    const std::size_t n = ring.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (!lr.live[j]) continue;
        const Vec3& p = lr.p[j];
        const Vec3& q = lr.p[(j + 1) % n];
        const double X = detail::area2d(p, q);
        // Xi = diag(1, S): expand the products blockwise
        const Mat3 S = xi_matrix(p.x(), p.y(), q.x(), q.y()).bottomRightCorner<3, 3>();
        const Mat3 St = X * S.transpose();
        sys.M(0, 0) += X * mm.A(0, 0);
        const Vec3 cross = St * mm.A.block<3, 1>(1, 0);
        sys.M.block<3, 1>(1, 0) += cross;
        sys.M.block<1, 3>(0, 1) += cross.transpose();
        sys.M.bottomRightCorner<3, 3>() += St * mm.A.bottomRightCorner<3, 3>() * S;
        Eigen::Matrix<double, 4, 2> XB;
        XB.row(0) = X * mm.B.row(0);
        XB.bottomRows<3>() = St * mm.B.bottomRows<3>();
        sys.rhs += XB * Eigen::Vector2d(p.z(), q.z());
        sys.paraboloid_rhs += XB * Eigen::Vector2d(p.x() * p.x() + p.y() * p.y(), q.x() * q.x() + q.y() * q.y());
        sys.lift_rhs += XB * Eigen::Vector2d(1.0, 1.0);
    }
    sys.M = 0.5 * (sys.M + sys.M.transpose()).eval();
    sys.condition_estimate = detail::condition_of(sys.M);
    return sys;
}

/// Value of the fitting functional for a given w (physical units).
inline double fit_energy(const OneRing& ring, const Frame& frame, const Vec4& w) {
    const auto& mm = moment_matrices();
    const auto live = detail::live_ring_faces(ring);
    const std::size_t n = ring.size();
    double E = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!live[j]) continue;
        const Vec3 p = frame.local(ring[j]), q = frame.local(ring[j + 1]);
        const double X = detail::area2d(p, q);
        const Mat4 Xi = xi_matrix(p.x(), p.y(), q.x(), q.y());
        const Vec4 xw = Xi * w;
        const Eigen::Vector2d z(p.z(), q.z());
        E += X * (xw.dot(mm.A * xw) - 2.0 * xw.dot(mm.B * z) + z.dot(mm.C * z));
    }
    return E;
}

inline ShapeCoefficients fit_quadratic(const OneRing& ring, const Frame& frame, const FitOptions& opts = {}) {
    const FitSystem sys = assemble_fit_system(ring, frame);
    if (!(sys.condition_estimate <= opts.max_condition))
        throw DifferentialError("curvature fit system is numerically singular (condition " +
                                    std::to_string(sys.condition_estimate) + ")",
                                ring.center);
    const Eigen::LDLT<Mat4> ldlt(sys.M);
    const Vec4 ws = ldlt.solve(sys.rhs);
    ShapeCoefficients out;
    // back to physical units: a scales with length, d/e/f with 1/length
    out.a = ws(0) * sys.scale, out.d = ws(1) / sys.scale, out.e = ws(2) / sys.scale, out.f = ws(3) / sys.scale;
    out.frame = frame;
    if (opts.calibrate) {
        const Vec4 u = ldlt.solve(sys.paraboloid_rhs);  // scale-free
        out.consistency = std::clamp(0.5 * (u(1) + u(3)), 0.5, 1.5);
    }
    const Vec4 l = ldlt.solve(sys.lift_rhs);
    out.stiffness = (l(1) + l(3)) / (out.consistency * sys.scale * sys.scale);
    return out;
}

/// Mean curvature, positive where the surface bends away from its normal
/// (a sphere with outward normals has 1/r).
inline double mean_curvature(const ShapeCoefficients& w) { return -(w.d + w.f) / w.consistency; }

/// Sum over ring edges of the cotan weight times (x_0 - x_j). Points along
/// the outward normal of a convex surface, length about 2 kappa times the
/// vertex area.
inline Vec3 cotan_curvature_normal(const OneRing& ring) {
    detail::require_ring(ring);
    const std::size_t n = ring.size();
    auto cot_at = [&](const Vec3& apex_to_a, const Vec3& apex_to_b) {
        const double c = apex_to_a.cross(apex_to_b).norm();
        if (!(c > 0)) throw DifferentialError("zero-area triangle in cotan weights", ring.center);
        return apex_to_a.dot(apex_to_b) / c;
    };
    Vec3 sum = Vec3::Zero();
    for (std::size_t j = 0; j < n; ++j) {
        const Vec3& vj = ring[j];
        const Vec3& prev = ring[j + n - 1];
        const Vec3& next = ring[j + 1];
        const double w = 0.5 * (cot_at(-prev, vj - prev) + cot_at(-next, vj - next));
        sum -= w * vj;
    }
    return sum;
}

struct VertexFitDiagnostic {
    int rank = 0;
    std::optional<Vec4> w;         // unique minimizer, only when rank == 4
    Vec4 min_norm = Vec4::Zero();  // minimum-norm minimizer
    Eigen::MatrixXd null_space;    // 4 x (4 - rank)
};

/// Plain least squares of the quadratic form against the ring vertices.
/// Reported for comparison only: on symmetric rings the system loses rank.
inline VertexFitDiagnostic vertex_fit_diagnostic(const OneRing& ring, const Frame& frame) {
    detail::require_ring(ring);
    const auto lr = detail::to_local(ring, frame);
    const auto n = static_cast<Eigen::Index>(ring.size());
    Eigen::MatrixXd D(n, 4);
    Eigen::VectorXd z(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Vec3& p = lr.p[j];
        D.row(j) = monomials(p.x(), p.y()).transpose();
        z(j) = p.z();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeFullV | Eigen::ComputeThinU);
    svd.setThreshold(1e-10);
    VertexFitDiagnostic out;
    out.rank = static_cast<int>(svd.rank());
    const Vec4 ws = svd.solve(z);
    const double s = lr.scale;
    const Vec4 unscale(s, 1 / s, 1 / s, 1 / s);
    out.min_norm = ws.cwiseProduct(unscale);
    if (out.rank == 4) out.w = out.min_norm;
    out.null_space = Eigen::MatrixXd(4, 4 - out.rank);
    for (int k = out.rank; k < 4; ++k) {
        Vec4 v = svd.matrixV().col(k).cwiseProduct(unscale);
        out.null_space.col(k - out.rank) = v.normalized();
    }
    return out;
}

/// Residual sum of squares of the vertex fit for a given w.
inline double vertex_fit_energy(const OneRing& ring, const Frame& frame, const Vec4& w) {
    double E = 0;
    for (const auto& v : ring.offsets) {
        const Vec3 p = frame.local(v);
        const double r = monomials(p.x(), p.y()).dot(w) - p.z();
        E += r * r;
    }
    return E;
}

/// Normal and curvature of one vertex, as cached by the flow.
struct CurvatureSample {
    NormalEstimate normal;
    Vec3 direction = Vec3::Zero();  // normal the fit used
    ShapeCoefficients shape;
    double kappa = 0;
    double min_edge = 0;
    double mean_edge = 0;
};

inline CurvatureSample sample_curvature(const OneRing& ring, const FitOptions& opts = {}) {
    CurvatureSample s;
    s.normal = estimate_normal(ring);
    s.direction = s.normal.direction;
    if (opts.refine_normal && s.normal.branch == NormalBranch::FaceAverage)
        if (const auto r = refine_normal(ring, s.direction, opts.max_refine_angle)) s.direction = *r;
    s.shape = fit_quadratic(ring, build_local_frame(s.direction), opts);
    s.kappa = mean_curvature(s.shape);
    s.min_edge = kInf;
    for (const auto& v : ring.offsets) {
        s.min_edge = std::min(s.min_edge, v.norm());
        s.mean_edge += v.norm() / double(ring.size());
    }
    return s;
}

}  // namespace mcfsound
