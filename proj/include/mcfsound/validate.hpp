#pragma once

#include "mcfsound/components.hpp"
#include "mcfsound/one_ring.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>

namespace mcfsound {

using Edge = std::pair<VertexId, VertexId>;

/// Result of the closed-manifold checks. Each list names the offending
/// entities; an empty report means the mesh is a closed, consistently
/// oriented 2-manifold.
struct MeshReport {
    std::vector<Edge> boundary_edges;
    std::vector<Edge> nonmanifold_edges;
    std::vector<Edge> orientation_conflicts;
    std::vector<VertexId> nondisk_vertices;
    std::vector<VertexId> isolated_vertices;
    std::vector<FaceId> degenerate_faces;
    int component_count = 0;
    std::vector<long> euler_characteristics;  // per component, V - E + F

    bool closed_manifold() const {
        return boundary_edges.empty() && nonmanifold_edges.empty() && orientation_conflicts.empty() &&
               nondisk_vertices.empty() && isolated_vertices.empty();
    }

    std::string summary() const {
        std::ostringstream os;
        os << "components=" << component_count << " boundary_edges=" << boundary_edges.size()
           << " nonmanifold_edges=" << nonmanifold_edges.size()
           << " orientation_conflicts=" << orientation_conflicts.size()
           << " nondisk_vertices=" << nondisk_vertices.size() << " isolated_vertices=" << isolated_vertices.size()
           << " degenerate_faces=" << degenerate_faces.size();
        return os.str();
    }
};

namespace detail {

inline std::uint64_t edge_key(VertexId a, VertexId b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

struct EdgeUse {
    int count = 0;
    int forward = 0;  // faces traversing the edge from the smaller to the larger index
};

inline std::unordered_map<std::uint64_t, EdgeUse> edge_uses(const SurfaceMesh& mesh) {
    std::unordered_map<std::uint64_t, EdgeUse> uses;
    uses.reserve(mesh.face_count() * 2);
    for (FaceId f : mesh.live_faces()) {
        const auto& t = mesh.face(f);
        for (int i = 0; i < 3; ++i) {
            VertexId a = t[i], b = t[(i + 1) % 3];
            auto& u = uses[edge_key(a, b)];
            ++u.count;
            if (a < b) ++u.forward;
        }
    }
    return uses;
}

inline Edge unkey(std::uint64_t k) { return {VertexId(k >> 32), VertexId(k & 0xffffffffu)}; }

}  // namespace detail

inline MeshReport validate(const SurfaceMesh& mesh) {
    MeshReport r;
    const auto uses = detail::edge_uses(mesh);
    for (const auto& [k, u] : uses) {
        if (u.count == 1)
            r.boundary_edges.push_back(detail::unkey(k));
        else if (u.count > 2)
            r.nonmanifold_edges.push_back(detail::unkey(k));
        else if (u.forward != 1)
            r.orientation_conflicts.push_back(detail::unkey(k));
    }
    std::sort(r.boundary_edges.begin(), r.boundary_edges.end());
    std::sort(r.nonmanifold_edges.begin(), r.nonmanifold_edges.end());
    std::sort(r.orientation_conflicts.begin(), r.orientation_conflicts.end());

    const double area_floor = 1e-14 * mesh.mean_face_area();
    for (FaceId f : mesh.live_faces())
        if (mesh.face_area(f) <= area_floor) r.degenerate_faces.push_back(f);

    for (VertexId v : mesh.live_vertices()) {
        if (mesh.faces_of(v).empty()) {
            r.isolated_vertices.push_back(v);
            continue;
        }
        bool disk = false;
        try {
            disk = is_disk_like(mesh, v);
        } catch (const MeshError&) {
            disk = false;
        }
        if (!disk) r.nondisk_vertices.push_back(v);
    }

    const auto labels = connected_components(mesh);
    r.component_count = labels.component_count;
    std::vector<long> V(labels.component_count, 0), E(labels.component_count, 0), F(labels.component_count, 0);
    for (VertexId v : mesh.live_vertices()) ++V[labels.label[v]];
    for (FaceId f : mesh.live_faces()) ++F[labels.label[mesh.face(f)[0]]];
    for (const auto& [k, u] : uses) ++E[labels.label[detail::unkey(k).first]];
    for (int c = 0; c < labels.component_count; ++c) r.euler_characteristics.push_back(V[c] - E[c] + F[c]);
    return r;
}

}  // namespace mcfsound
