#pragma once

#include "mcfsound/core.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace mcfsound {

/// Per-vertex state. Caches are owned by the flow; the mesh only stores them.
struct VertexRecord {
    Vec3 position = Vec3::Zero();
    std::optional<Vec3> normal_cache;
    std::optional<double> curvature_cache;
    double expiry_time = -kInf;
    double refresh_time = -kInf;
    // Largest step this vertex's cached data allows.
    double step_limit = kInf;
    // Index of this vertex's ancestor in the previously emitted snapshot.
    VertexId parent_id = kNoVertex;
    bool alive = true;
};

using Triangle = std::array<VertexId, 3>;

/// Indexed triangle mesh with vertex->face incidence.
///
/// Vertex and face indices are stable handles: removal tombstones the slot
/// and compaction happens only through `compacted()`. Edge adjacency is
/// derived from the incidence lists on demand.
class SurfaceMesh {
  public:
    SurfaceMesh() = default;

    SurfaceMesh(const std::vector<Vec3>& positions, const std::vector<Triangle>& faces) {
        vertices_.reserve(positions.size());
        for (const auto& p : positions) add_vertex(p);
        faces_.reserve(faces.size());
        for (const auto& t : faces) add_face(t);
    }

    VertexId add_vertex(const Vec3& p) {
        VertexRecord r;
        r.position = p;
        vertices_.push_back(std::move(r));
        incidence_.emplace_back();
        ++live_vertices_;
        return static_cast<VertexId>(vertices_.size() - 1);
    }

    VertexId add_vertex(const VertexRecord& record) {
        vertices_.push_back(record);
        vertices_.back().alive = true;
        incidence_.emplace_back();
        ++live_vertices_;
        return static_cast<VertexId>(vertices_.size() - 1);
    }

    FaceId add_face(const Triangle& t) {
        check_triangle(t);
        const auto f = static_cast<FaceId>(faces_.size());
        faces_.push_back(t);
        face_alive_.push_back(true);
        for (VertexId v : t) incidence_[v].push_back(f);
        ++live_faces_;
        return f;
    }

    void remove_face(FaceId f) {
        if (!face_alive(f)) return;
        for (VertexId v : faces_[f]) {
            auto& inc = incidence_[v];
            inc.erase(std::remove(inc.begin(), inc.end(), f), inc.end());
        }
        face_alive_[f] = false;
        --live_faces_;
    }

    /// Replace the vertices of a live face, keeping its handle.
    void set_face(FaceId f, const Triangle& t) {
        check_triangle(t);
        for (VertexId v : faces_[f]) {
            auto& inc = incidence_[v];
            inc.erase(std::remove(inc.begin(), inc.end(), f), inc.end());
        }
        faces_[f] = t;
        for (VertexId v : t) incidence_[v].push_back(f);
    }

    void flip_face(FaceId f) { std::swap(faces_[f][1], faces_[f][2]); }

    void remove_vertex(VertexId v) {
        if (!vertex_alive(v)) return;
        if (!incidence_[v].empty()) throw MeshError("cannot remove a vertex that still has faces", v);
        vertices_[v].alive = false;
        --live_vertices_;
    }

    std::size_t vertex_slots() const noexcept { return vertices_.size(); }
    std::size_t face_slots() const noexcept { return faces_.size(); }
    std::size_t vertex_count() const noexcept { return live_vertices_; }
    std::size_t face_count() const noexcept { return live_faces_; }
    bool empty() const noexcept { return live_vertices_ == 0; }

    bool vertex_alive(VertexId v) const {
        return v >= 0 && static_cast<std::size_t>(v) < vertices_.size() && vertices_[v].alive;
    }
    bool face_alive(FaceId f) const {
        return f >= 0 && static_cast<std::size_t>(f) < faces_.size() && face_alive_[f];
    }

    VertexRecord& vertex(VertexId v) { return vertices_[v]; }
    const VertexRecord& vertex(VertexId v) const { return vertices_[v]; }
    const Vec3& position(VertexId v) const { return vertices_[v].position; }
    Vec3& position(VertexId v) { return vertices_[v].position; }
    const Triangle& face(FaceId f) const { return faces_[f]; }
    const std::vector<FaceId>& faces_of(VertexId v) const { return incidence_[v]; }

    std::vector<VertexId> live_vertices() const {
        std::vector<VertexId> out;
        out.reserve(live_vertices_);
        for (std::size_t v = 0; v < vertices_.size(); ++v)
            if (vertices_[v].alive) out.push_back(static_cast<VertexId>(v));
        return out;
    }

    std::vector<FaceId> live_faces() const {
        std::vector<FaceId> out;
        out.reserve(live_faces_);
        for (std::size_t f = 0; f < faces_.size(); ++f)
            if (face_alive_[f]) out.push_back(static_cast<FaceId>(f));
        return out;
    }

    /// Sorted, unique neighbor vertices of v.
    std::vector<VertexId> neighbors(VertexId v) const {
        std::vector<VertexId> out;
        for (FaceId f : incidence_[v])
            for (VertexId w : faces_[f])
                if (w != v) out.push_back(w);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::vector<FaceId> edge_faces(VertexId a, VertexId b) const {
        std::vector<FaceId> out;
        for (FaceId f : incidence_[a]) {
            const auto& t = faces_[f];
            if (t[0] == b || t[1] == b || t[2] == b) out.push_back(f);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// All undirected edges as (min, max) pairs, sorted.
    std::vector<std::pair<VertexId, VertexId>> edges() const {
        std::vector<std::pair<VertexId, VertexId>> out;
        out.reserve(3 * live_faces_ / 2 + 1);
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            if (!face_alive_[f]) continue;
            const auto& t = faces_[f];
            for (int i = 0; i < 3; ++i) {
                VertexId a = t[i], b = t[(i + 1) % 3];
                out.emplace_back(std::min(a, b), std::max(a, b));
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::size_t edge_count() const { return edges().size(); }

    // --- geometry -------------------------------------------------------

    /// Unnormalized face normal (p1-p0)x(p2-p0); its norm is twice the area.
    Vec3 face_cross(FaceId f) const {
        const auto& t = faces_[f];
        return (position(t[1]) - position(t[0])).cross(position(t[2]) - position(t[0]));
    }

    double face_area(FaceId f) const { return 0.5 * face_cross(f).norm(); }

    double total_area() const {
        double a = 0.0;
        for (std::size_t f = 0; f < faces_.size(); ++f)
            if (face_alive_[f]) a += face_area(static_cast<FaceId>(f));
        return a;
    }

    double mean_face_area() const { return live_faces_ ? total_area() / double(live_faces_) : 0.0; }

    /// Sum of det(p_i, p_j, p_k)/6 over the given faces (all live faces by default).
    double signed_volume() const {
        double vol = 0.0;
        for (std::size_t f = 0; f < faces_.size(); ++f)
            if (face_alive_[f]) vol += face_volume(static_cast<FaceId>(f));
        return vol;
    }

    double face_volume(FaceId f) const {
        const auto& t = faces_[f];
        return position(t[0]).dot(position(t[1]).cross(position(t[2]))) / 6.0;
    }

    double mean_edge_length() const {
        const auto es = edges();
        if (es.empty()) return 0.0;
        double s = 0.0;
        for (const auto& [a, b] : es) s += (position(a) - position(b)).norm();
        return s / double(es.size());
    }

    double bbox_diagonal() const {
        if (live_vertices_ == 0) return 0.0;
        Eigen::AlignedBox3d box;
        for (const auto& r : vertices_)
            if (r.alive) box.extend(r.position);
        return box.diagonal().norm();
    }

    Vec3 centroid(const std::vector<VertexId>& vs) const {
        Vec3 c = Vec3::Zero();
        for (VertexId v : vs) c += position(v);
        return vs.empty() ? c : Vec3(c / double(vs.size()));
    }

    /// Copy with tombstones dropped. Returns the mesh and the old->new index
    /// map (kNoVertex for dead slots). Face order follows face handle order.
    std::pair<SurfaceMesh, std::vector<VertexId>> compacted() const {
        SurfaceMesh out;
        std::vector<VertexId> remap(vertices_.size(), kNoVertex);
        for (std::size_t v = 0; v < vertices_.size(); ++v) {
            if (!vertices_[v].alive) continue;
            remap[v] = out.add_vertex(vertices_[v]);
        }
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            if (!face_alive_[f]) continue;
            const auto& t = faces_[f];
            out.add_face({remap[t[0]], remap[t[1]], remap[t[2]]});
        }
        return {std::move(out), std::move(remap)};
    }

  private:
    void check_triangle(const Triangle& t) const {
        for (VertexId v : t)
            if (!vertex_alive(v)) throw MeshError("face references a missing vertex", v);
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw MeshError("degenerate face with repeated vertex index", t[0]);
    }

    std::vector<VertexRecord> vertices_;
    std::vector<std::vector<FaceId>> incidence_;
    std::vector<Triangle> faces_;
    std::vector<bool> face_alive_;
    std::size_t live_vertices_ = 0;
    std::size_t live_faces_ = 0;
};

}  // namespace mcfsound
