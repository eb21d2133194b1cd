#pragma once

#include "mcfsound/mesh.hpp"

#include <algorithm>
#include <tuple>
#include <variant>

namespace mcfsound {

/// Cyclically ordered neighborhood of a vertex, counterclockwise seen from
/// outside, with neighbor positions relative to the center.
struct OneRing {
    VertexId center = kNoVertex;
    std::vector<VertexId> neighbors;
    std::vector<Vec3> offsets;

    std::size_t size() const noexcept { return offsets.size(); }
    const Vec3& operator[](std::size_t j) const { return offsets[j % offsets.size()]; }

    /// Ring detached from any mesh, for evaluating estimators on synthetic fans.
    static OneRing from_offsets(std::vector<Vec3> offsets) {
        OneRing r;
        r.neighbors.resize(offsets.size());
        for (std::size_t j = 0; j < offsets.size(); ++j) r.neighbors[j] = static_cast<VertexId>(j);
        r.offsets = std::move(offsets);
        return r;
    }
};

/// One closed walk through the link of a vertex. faces[j] is the face
/// (center, neighbors[j], neighbors[j+1]).
struct LinkCycle {
    std::vector<VertexId> neighbors;
    std::vector<FaceId> faces;
};

/// A vertex whose link is not a single simple cycle: the fan is split into
/// the maximal cyclically orderable subsets.
struct TopologyFault {
    VertexId center = kNoVertex;
    std::vector<LinkCycle> cycles;
};

/// Decompose the link of v into simple directed cycles.
///
/// Every face (v, a, b) contributes the link edge a->b. On an oriented
/// surface every link vertex has equal in and out degree, so the edges split
/// into closed walks; a walk that revisits a vertex is cut there, so each
/// returned cycle visits its neighbors once. Traversal always takes the
/// smallest available vertex so the result is deterministic.
inline std::vector<LinkCycle> link_cycles(const SurfaceMesh& mesh, VertexId v) {
    struct Arc {
        VertexId from, to;
        FaceId face;
        bool used;
    };
    std::vector<Arc> arcs;
    arcs.reserve(mesh.faces_of(v).size());
    for (FaceId f : mesh.faces_of(v)) {
        const auto& t = mesh.face(f);
        int k = t[0] == v ? 0 : (t[1] == v ? 1 : 2);
        arcs.push_back({t[(k + 1) % 3], t[(k + 2) % 3], f, false});
    }
    std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) {
        return std::tie(x.from, x.to, x.face) < std::tie(y.from, y.to, y.face);
    });
    std::size_t remaining = arcs.size();

    auto next_arc = [&](VertexId a) -> Arc* {
        auto it = std::lower_bound(arcs.begin(), arcs.end(), a, [](const Arc& x, VertexId key) { return x.from < key; });
        for (; it != arcs.end() && it->from == a; ++it)
            if (!it->used) return &*it;
        return nullptr;
    };

    std::vector<LinkCycle> cycles;
    while (remaining > 0) {
        VertexId start = kNoVertex;
        for (const auto& arc : arcs)
            if (!arc.used) {
                start = arc.from;
                break;
            }
        std::vector<VertexId> path{start};
        std::vector<FaceId> path_faces;
        while (!path.empty()) {
            Arc* arc = next_arc(path.back());
            if (!arc) {
                if (path.size() == 1) break;
                throw MeshError("vertex link is not a union of closed cycles (boundary or corrupt fan)", v);
            }
            arc->used = true;
            --remaining;
            path_faces.push_back(arc->face);
            auto hit = std::find(path.begin(), path.end(), arc->to);
            if (hit == path.end()) {
                path.push_back(arc->to);
                continue;
            }
            const auto pos = static_cast<std::size_t>(hit - path.begin());
            LinkCycle c;
            c.neighbors.assign(path.begin() + pos, path.end());
            c.faces.assign(path_faces.begin() + pos, path_faces.end());
            path.resize(pos + 1);
            path_faces.resize(pos);
            // canonical rotation: start at the smallest neighbor
            auto mn = std::min_element(c.neighbors.begin(), c.neighbors.end()) - c.neighbors.begin();
            std::rotate(c.neighbors.begin(), c.neighbors.begin() + mn, c.neighbors.end());
            std::rotate(c.faces.begin(), c.faces.begin() + mn, c.faces.end());
            cycles.push_back(std::move(c));
            if (path.size() == 1 && !next_arc(path.back())) break;
        }
    }
    std::sort(cycles.begin(), cycles.end(),
              [](const LinkCycle& a, const LinkCycle& b) { return a.neighbors < b.neighbors; });
    return cycles;
}

/// True when the link of v is a single simple cycle through every neighbor.
inline bool is_disk_like(const SurfaceMesh& mesh, VertexId v) {
    if (mesh.faces_of(v).size() < 3) return false;
    const auto cycles = link_cycles(mesh, v);
    return cycles.size() == 1 && cycles.front().neighbors.size() == mesh.faces_of(v).size();
}

/// Ordered neighborhood of v, or the orderable subsets when the neighborhood
/// is not a topological disk.
inline std::variant<OneRing, TopologyFault> ordered_one_ring(const SurfaceMesh& mesh, VertexId v) {
    if (!mesh.vertex_alive(v)) throw MeshError("one-ring of a dead vertex", v);
    if (mesh.faces_of(v).size() < 3) throw MeshError("vertex has valence <= 2", v);
    auto cycles = link_cycles(mesh, v);
    if (cycles.size() != 1) return TopologyFault{v, std::move(cycles)};

    OneRing ring;
    ring.center = v;
    ring.neighbors = std::move(cycles.front().neighbors);
    ring.offsets.reserve(ring.neighbors.size());
    const Vec3& c = mesh.position(v);
    for (VertexId w : ring.neighbors) ring.offsets.push_back(mesh.position(w) - c);
    return ring;
}

}  // namespace mcfsound
