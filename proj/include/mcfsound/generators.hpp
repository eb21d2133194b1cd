#pragma once

#include "mcfsound/mesh_io.hpp"

#include <map>
#include <numbers>

namespace mcfsound {

/// Regular tetrahedron inscribed in the sphere of radius sqrt(3) * scale.
inline SurfaceMesh tetrahedron(double scale = 1.0) {
    std::vector<Vec3> p{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    for (auto& x : p) x *= scale;
    return build_closed_mesh(p, {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}});
}

inline SurfaceMesh octahedron(double r = 1.0) {
    std::vector<Vec3> p{{r, 0, 0}, {-r, 0, 0}, {0, r, 0}, {0, -r, 0}, {0, 0, r}, {0, 0, -r}};
    return build_closed_mesh(p, {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}});
}

inline SurfaceMesh icosahedron(double r = 1.0) {
    const double t = std::numbers::phi;
    std::vector<Vec3> p{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& x : p) x = r * x.normalized();
    std::vector<Triangle> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                            {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                            {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    return build_closed_mesh(p, f);
}

/// Icosahedron refined by repeated 1:4 midpoint subdivision with the new
/// vertices pushed onto the sphere. Level 4 has 2562 vertices.
inline SurfaceMesh icosphere(int subdivisions, double r = 1.0, const Vec3& center = Vec3::Zero()) {
    if (subdivisions < 0) throw MeshError("subdivision level must be non-negative");
    const SurfaceMesh base = icosahedron(1.0);
    std::vector<Vec3> p;
    for (VertexId v : base.live_vertices()) p.push_back(base.position(v));
    std::vector<Triangle> f;
    for (FaceId i : base.live_faces()) f.push_back(base.face(i));
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<VertexId, VertexId>, VertexId> mid;
        auto midpoint = [&](VertexId a, VertexId b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            p.push_back((p[a] + p[b]).normalized());
            return mid[key] = static_cast<VertexId>(p.size() - 1);
        };
        std::vector<Triangle> next;
        next.reserve(4 * f.size());
        for (const auto& t : f) {
            const VertexId ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    for (auto& x : p) x = center + r * x;
    return build_closed_mesh(p, f);
}

/// Closed pyramid: apex at (0,0,h), rectangular base with corners (+-p, +-q, 0).
inline SurfaceMesh rectangular_pyramid(double p, double q, double h) {
    std::vector<Vec3> v{{0, 0, h}, {p, q, 0}, {-p, q, 0}, {-p, -q, 0}, {p, -q, 0}};
    return build_closed_mesh(v, {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}, {1, 3, 2}, {1, 4, 3}});
}

/// Disjoint union; vertices of later meshes are appended after earlier ones.
inline SurfaceMesh disjoint_union(const std::vector<SurfaceMesh>& parts) {
    std::vector<Vec3> p;
    std::vector<Triangle> f;
    for (const auto& m : parts) {
        const auto [c, remap] = m.compacted();
        const auto off = static_cast<VertexId>(p.size());
        for (VertexId v : c.live_vertices()) p.push_back(c.position(v));
        for (FaceId i : c.live_faces()) {
            auto t = c.face(i);
            for (auto& x : t) x += off;
            f.push_back(t);
        }
    }
    return build_closed_mesh(p, f);
}

inline SurfaceMesh translated(const SurfaceMesh& m, const Vec3& d) {
    SurfaceMesh out = m;
    for (VertexId v : out.live_vertices()) out.position(v) += d;
    return out;
}

struct DumbbellParams {
    double bulb_radius = 1.0;
    double bulb_offset = 1.15;  // bulb centers at z = +-offset
    double neck_radius = 0.15;
    double neck_flare = 0.5;    // neck profile neck_radius + flare * z^2
    double blend = 0.05;        // smooth-max width
    double edge_length = 0.08;
};

/// Radius of the dumbbell surface of revolution at height z. The neck curve
/// is shifted so that the smooth maximum still passes through neck_radius at z = 0.
inline double dumbbell_profile(const DumbbellParams& d, double z) {
    const double s = std::abs(z) - d.bulb_offset;
    const double bulb = std::sqrt(std::max(0.0, d.bulb_radius * d.bulb_radius - s * s));
    const double r0 = (4 * d.neck_radius * d.neck_radius - d.blend * d.blend) / (4 * d.neck_radius);
    const double neck = s < 0 ? r0 + d.neck_flare * z * z : 0.0;
    const double taper = std::max(0.0, 1.0 - (z / d.bulb_offset) * (z / d.bulb_offset));
    const double delta = d.blend * taper * taper;  // blend vanishes at the bulb centers
    const double gap = bulb - neck;
    return 0.5 * (bulb + neck + std::sqrt(gap * gap + delta * delta));
}

/// Two spherical bulbs joined by a thin hourglass neck, meshed as
/// staggered rings of near-uniform edge length around the z axis.
inline SurfaceMesh dumbbell(const DumbbellParams& d = {}) {
    const double zmax = d.bulb_offset + d.bulb_radius;
    // dense profile with clustering near the poles
    const int dense = 20000;
    std::vector<double> zs(dense + 1), rs(dense + 1), arc(dense + 1, 0.0);
    for (int i = 0; i <= dense; ++i) {
        const double u = double(i) / dense;
        zs[i] = -zmax + 2 * zmax * 0.5 * (1 - std::cos(std::numbers::pi * u));
        rs[i] = i == 0 || i == dense ? 0.0 : dumbbell_profile(d, zs[i]);
        if (i > 0) arc[i] = arc[i - 1] + std::hypot(zs[i] - zs[i - 1], rs[i] - rs[i - 1]);
    }
    const double L = arc.back();
    const int K = std::max(4, int(std::lround(L / d.edge_length)));
    auto at_arc = [&](double s) {
        const auto it = std::lower_bound(arc.begin(), arc.end(), s);
        const auto i = std::clamp<long>(it - arc.begin(), 1, dense);
        const double t = (s - arc[i - 1]) / (arc[i] - arc[i - 1]);
        return std::pair{zs[i - 1] + t * (zs[i] - zs[i - 1]), rs[i - 1] + t * (rs[i] - rs[i - 1])};
    };

    std::vector<Vec3> p;
    std::vector<Triangle> f;
    p.emplace_back(0, 0, -zmax);  // south pole
    struct Ring {
        VertexId first;
        int n;
        double offset;
    };
    std::vector<Ring> rings;
    for (int i = 1; i < K; ++i) {
        const auto [z, rho] = at_arc(L * i / K);
        const int n = std::max(6, int(std::lround(2 * std::numbers::pi * rho / d.edge_length)));
        const double off = 0.5 * (i % 2);
        rings.push_back({VertexId(p.size()), n, off});
        for (int k = 0; k < n; ++k) {
            const double phi = 2 * std::numbers::pi * (k + off) / n;
            p.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
        }
    }
    p.emplace_back(0, 0, zmax);
    const auto north = static_cast<VertexId>(p.size() - 1);

    auto angle = [](const Ring& r, int k) { return 2 * std::numbers::pi * (k + r.offset) / r.n; };
    const Ring& first = rings.front();
    for (int k = 0; k < first.n; ++k) f.push_back({0, first.first + (k + 1) % first.n, first.first + k});
    for (std::size_t i = 0; i + 1 < rings.size(); ++i) {
        const Ring& A = rings[i];
        const Ring& B = rings[i + 1];
        // start B at the vertex angularly closest to A[0]
        const double a0 = angle(A, 0);
        int m0 = 0;
        double best = kInf;
        for (int m = 0; m < B.n; ++m) {
            double diff = std::remainder(angle(B, m) - a0, 2 * std::numbers::pi);
            if (std::abs(diff) < best) best = std::abs(diff), m0 = m;
        }
        const double b0 = a0 + std::remainder(angle(B, m0) - a0, 2 * std::numbers::pi);
        auto va = [&](int k) { return A.first + (k % A.n); };
        auto vb = [&](int m) { return B.first + ((m0 + m) % B.n); };
        int ia = 0, ib = 0;
        while (ia < A.n || ib < B.n) {
            const double next_a = a0 + 2 * std::numbers::pi * (ia + 1) / A.n;
            const double next_b = b0 + 2 * std::numbers::pi * (ib + 1) / B.n;
            const bool advance_a = ib == B.n || (ia < A.n && next_a <= next_b);
            if (advance_a) {
                f.push_back({va(ia), va(ia + 1), vb(ib)});
                ++ia;
            } else {
                f.push_back({va(ia), vb(ib + 1), vb(ib)});
                ++ib;
            }
        }
    }
    const Ring& last = rings.back();
    for (int k = 0; k < last.n; ++k) f.push_back({last.first + k, last.first + (k + 1) % last.n, north});
    SurfaceMesh m = build_closed_mesh(p, f);
    if (!(m.signed_volume() > 0)) throw MeshError("dumbbell generator produced an inverted surface");
    return m;
}

}  // namespace mcfsound
