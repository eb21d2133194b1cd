#pragma once

#include "mcfsound/components.hpp"
#include "mcfsound/differential.hpp"
#include "mcfsound/parallel.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <variant>

namespace mcfsound {

enum class MergeTrigger { SmallEdge, SmallAngle, SmallFace, SingularFit };

inline const char* to_string(MergeTrigger t) {
    switch (t) {
    case MergeTrigger::SmallEdge: return "small-edge";
    case MergeTrigger::SmallAngle: return "small-angle";
    case MergeTrigger::SmallFace: return "small-face";
    case MergeTrigger::SingularFit: return "singular-fit";
    }
    return "?";
}

struct MergeEvent {
    double time = 0;
    VertexId survivor = kNoVertex;
    VertexId removed = kNoVertex;
    MergeTrigger trigger = MergeTrigger::SmallEdge;
    Vec3 position = Vec3::Zero();
};

struct SplitCopy {
    VertexId vertex = kNoVertex;
    std::vector<VertexId> neighbors;
};

struct VertexSplit {
    VertexId original = kNoVertex;
    std::vector<SplitCopy> copies;  // first entry is the original's own fan
};

/// One cascade of vertex splits started by a single surgery.
struct TopologyEvent {
    double time = 0;
    std::vector<VertexSplit> splits;
    int components_before = 0;
    int components_after = 0;
    int component_delta() const { return components_after - components_before; }
};

struct VanishEvent {
    double time = 0;
    Vec3 centroid = Vec3::Zero();
    std::size_t vertices = 0;
    double area = 0;
};

using FlowEvent = std::variant<MergeEvent, TopologyEvent, VanishEvent>;

namespace detail {

inline std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

inline std::string fmt_vec(const Vec3& v) {
    return "(" + fmt("%.9g", v.x()) + "," + fmt("%.9g", v.y()) + "," + fmt("%.9g", v.z()) + ")";
}

}  // namespace detail

inline double event_time(const FlowEvent& e) {
    return std::visit([](const auto& x) { return x.time; }, e);
}

/// One event-log line: "t=<time> <MERGE|SPLIT|VANISH> <details>".
inline std::string format_event(const FlowEvent& e) {
    std::string out = "t=" + detail::fmt("%.10g", event_time(e)) + " ";
    if (const auto* m = std::get_if<MergeEvent>(&e)) {
        out += "MERGE survivor=" + std::to_string(m->survivor) + " removed=" + std::to_string(m->removed) +
               " trigger=" + to_string(m->trigger) + " position=" + detail::fmt_vec(m->position);
    } else if (const auto* s = std::get_if<TopologyEvent>(&e)) {
        out += "SPLIT";
        for (const auto& sp : s->splits) {
            out += " " + std::to_string(sp.original) + "->";
            for (std::size_t i = 0; i < sp.copies.size(); ++i) {
                out += (i ? "," : "") + std::to_string(sp.copies[i].vertex) + "[";
                for (std::size_t j = 0; j < sp.copies[i].neighbors.size(); ++j)
                    out += (j ? " " : "") + std::to_string(sp.copies[i].neighbors[j]);
                out += "]";
            }
        }
        out += " components=" + std::to_string(s->components_before) + "->" + std::to_string(s->components_after);
    } else {
        const auto& v = std::get<VanishEvent>(e);
        out += "VANISH vertices=" + std::to_string(v.vertices) + " area=" + detail::fmt("%.6g", v.area) +
               " centroid=" + detail::fmt_vec(v.centroid);
    }
    return out;
}

struct SurgeryThresholds {
    double edge_fraction = 0.05;   // of the current mean edge length
    double angle_degrees = 2.0;
    double face_fraction = 1e-4;   // of the current mean face area
};

struct FlowConfig {
    double cs = 0.5;
    double checkpoint_interval = 0.005;
    double dt_max = 0.005;            // expiry interval for (nearly) flat vertices
    double accuracy_fraction = 0.25;  // of the shortest edge over |kappa|
    double diffusion_number = 0.4;    // dt * (fit stiffness) bound; 0 disables
    double diffusion_expiry = 2.0;    // expiry horizon in units of the diffusive limit
    SurgeryThresholds thresholds;
    double vanish_area_fraction = 1e-10;  // of the initial area
    int vanish_min_vertices = 4;
    long max_steps = 1000000;
    unsigned threads = 1;
    FitOptions fit;
    int max_surgery_passes = 100;
};

struct FlowStats {
    long steps = 0;
    long refreshes = 0;
    long merges = 0;
    long splits = 0;         // SPLIT events
    long vertex_splits = 0;  // vertices duplicated by them
    long vanishes = 0;
    long forced_merges = 0;
    long stale_moves = 0;  // vertex moves with an expired cache; stays 0
};

struct FlowState {
    SurfaceMesh mesh;
    double clock = 0;
    double initial_area = 0;
    std::vector<FlowEvent> events;
    FlowStats stats;
    std::optional<ComponentLabeling> labels;  // cleared whenever connectivity changes

    const ComponentLabeling& components() {
        if (!labels) labels = connected_components(mesh);
        return *labels;
    }

    /// Compacts the mesh and makes every vertex its own parent.
    static FlowState from_mesh(const SurfaceMesh& m) {
        FlowState s;
        s.mesh = m.compacted().first;
        for (VertexId v : s.mesh.live_vertices()) {
            auto& r = s.mesh.vertex(v);
            r.parent_id = v;
            r.normal_cache.reset();
            r.curvature_cache.reset();
            r.expiry_time = -kInf;
            r.refresh_time = -kInf;
        }
        s.initial_area = s.mesh.total_area();
        return s;
    }
};

// --- staleness scheduling ---------------------------------------------------

/// Validity horizon of freshly computed data: cs times the shortest ring
/// edge over |kappa|, or dt_max where kappa is below kappa_floor.
inline double expiration_interval(double min_edge, double kappa, double cs, double dt_max, double kappa_floor) {
    if (std::abs(kappa) < kappa_floor) return dt_max;
    return cs * min_edge / std::abs(kappa);
}

inline double expiration_interval(const OneRing& ring, double kappa, double cs, double dt_max, double kappa_floor) {
    double min_edge = kInf;
    for (const auto& v : ring.offsets) min_edge = std::min(min_edge, v.norm());
    return expiration_interval(min_edge, kappa, cs, dt_max, kappa_floor);
}

struct RefreshResult {
    enum class Status { Ok, TopologyFault, Singular };
    VertexId vertex = kNoVertex;
    Status status = Status::Ok;
    Vec3 normal = Vec3::UnitZ();
    double kappa = 0;
    double interval = 0;  // expiration interval
    double step_limit = kInf;
};

struct StepPlan {
    double dt = 0;
    std::vector<VertexId> refresh_set;
    std::vector<RefreshResult> refreshed;  // parallel to refresh_set
    std::vector<VertexId> singular;        // need a forced merge before replanning
    std::vector<VertexId> faulty;          // need topology resolution before replanning

    bool ok() const { return singular.empty() && faulty.empty(); }
};

inline RefreshResult refresh_vertex(const SurfaceMesh& mesh, VertexId v, const FlowConfig& cfg, double kappa_floor) {
    RefreshResult r;
    r.vertex = v;
    std::variant<OneRing, TopologyFault> ring_or;
    try {
        ring_or = ordered_one_ring(mesh, v);
    } catch (const MeshError&) {
        r.status = RefreshResult::Status::Singular;
        return r;
    }
    if (std::holds_alternative<TopologyFault>(ring_or)) {
        r.status = RefreshResult::Status::TopologyFault;
        return r;
    }
    const auto& ring = std::get<OneRing>(ring_or);
    try {
        const CurvatureSample s = sample_curvature(ring, cfg.fit);
        r.normal = s.direction;
        r.kappa = s.kappa;
        const double exp = expiration_interval(s.min_edge, s.kappa, cfg.cs, cfg.dt_max, kappa_floor);
        const double stiff = s.shape.stiffness;
        const double diffusive = cfg.diffusion_number > 0 && stiff > 0 ? cfg.diffusion_number / stiff : kInf;
        r.interval = std::min(exp, cfg.diffusion_expiry * diffusive);
        r.step_limit = std::min(cfg.accuracy_fraction * exp / cfg.cs, diffusive);
    } catch (const DifferentialError&) {
        r.status = RefreshResult::Status::Singular;
    }
    return r;
}

/// Chooses the next step without modifying the state. Refreshes expired
/// vertices, then those that would expire inside the tentative step, and
/// takes the largest dt that keeps every cache valid and respects the
/// accuracy cap and the next checkpoint.
inline StepPlan plan_step(const FlowState& state, double checkpoint, double accuracy_cap, const FlowConfig& cfg) {
    const SurfaceMesh& mesh = state.mesh;
    const double clock = state.clock;
    if (!(checkpoint > clock)) throw FlowError("checkpoint is not in the future", clock);
    const double kappa_floor = 1e-12 / std::max(mesh.bbox_diagonal(), 1e-300);
    std::vector<double> expiry(mesh.vertex_slots(), kInf), limit(mesh.vertex_slots(), kInf);
    const auto live = mesh.live_vertices();
    for (VertexId v : live) {
        const auto& r = mesh.vertex(v);
        expiry[v] = r.curvature_cache ? r.expiry_time : -kInf;
        limit[v] = r.curvature_cache ? r.step_limit : kInf;
    }

    StepPlan plan;
    auto refresh = [&](const std::vector<VertexId>& set) {
        std::vector<RefreshResult> res(set.size());
        parallel_for(set.size(), cfg.threads, [&](std::size_t i) { res[i] = refresh_vertex(mesh, set[i], cfg, kappa_floor); });
        for (auto& r : res) {
            if (r.status == RefreshResult::Status::TopologyFault) plan.faulty.push_back(r.vertex);
            if (r.status == RefreshResult::Status::Singular) plan.singular.push_back(r.vertex);
            if (r.status != RefreshResult::Status::Ok) continue;
            expiry[r.vertex] = clock + r.interval;
            limit[r.vertex] = r.step_limit;
        }
        plan.refresh_set.insert(plan.refresh_set.end(), set.begin(), set.end());
        plan.refreshed.insert(plan.refreshed.end(), res.begin(), res.end());
    };

    std::vector<VertexId> first;
    std::vector<char> in_first(mesh.vertex_slots(), 0);
    for (VertexId v : live)
        if (expiry[v] <= clock) first.push_back(v), in_first[v] = 1;
    refresh(first);
    if (!plan.ok()) return plan;

    auto caps = [&] {
        double dt = std::min(accuracy_cap, checkpoint - clock);
        for (VertexId v : live) dt = std::min(dt, limit[v]);
        return dt;
    };
    double tentative = caps();
    for (VertexId v : first) tentative = std::min(tentative, expiry[v] - clock);

    std::vector<VertexId> second;
    for (VertexId v : live)
        if (expiry[v] < clock + tentative && !in_first[v])
            second.push_back(v);
    refresh(second);
    if (!plan.ok()) return plan;

    double dt = caps();
    for (VertexId v : live) dt = std::min(dt, expiry[v] - clock);
    plan.dt = dt;
    return plan;
}

/// Stores the plan's refreshed caches, then moves every vertex by
/// -dt kappa n using its cached data.
inline void advance(FlowState& state, const StepPlan& plan) {
    if (!plan.ok()) throw FlowError("advance called with an unresolved plan", state.clock);
    SurfaceMesh& mesh = state.mesh;
    for (const auto& r : plan.refreshed) {
        auto& rec = mesh.vertex(r.vertex);
        rec.normal_cache = r.normal;
        rec.curvature_cache = r.kappa;
        rec.refresh_time = state.clock;
        rec.expiry_time = state.clock + r.interval;
        rec.step_limit = r.step_limit;
    }
    state.stats.refreshes += static_cast<long>(plan.refreshed.size());
    const double dt = plan.dt;
    if (dt > 0) {
        const double horizon = state.clock + dt * (1 - 1e-12);
        for (VertexId v : mesh.live_vertices()) {
            auto& rec = mesh.vertex(v);
            if (!rec.curvature_cache) throw FlowError("vertex moved without curvature data", state.clock, v);
            if (rec.expiry_time < horizon) ++state.stats.stale_moves;
            rec.position -= dt * (*rec.curvature_cache) * (*rec.normal_cache);
        }
    }
    state.clock += dt;
    ++state.stats.steps;
}

// --- surgery ------------------------------------------------------------------

struct MergeCandidate {
    VertexId a = kNoVertex, b = kNoVertex;  // a < b
    MergeTrigger trigger = MergeTrigger::SmallEdge;
    double length = 0;
};

struct ResolvedThresholds {
    double edge = 0, angle = 0, face = 0;  // absolute values
};

/// Edge thresholds scale with the mean length of face sides, which equals
/// the mean edge length on a closed manifold mesh.
inline ResolvedThresholds resolve_thresholds(const SurfaceMesh& mesh, const SurgeryThresholds& t) {
    double sides = 0, area = 0;
    std::size_t n = 0;
    for (FaceId f : mesh.live_faces()) {
        const auto& tri = mesh.face(f);
        for (int i = 0; i < 3; ++i) sides += (mesh.position(tri[i]) - mesh.position(tri[(i + 1) % 3])).norm();
        area += mesh.face_area(f);
        ++n;
    }
    const double mean_side = n ? sides / double(3 * n) : 0.0, mean_area = n ? area / double(n) : 0.0;
    return {t.edge_fraction * mean_side, t.angle_degrees * std::numbers::pi / 180.0, t.face_fraction * mean_area};
}

namespace detail {

/// Shortest edge of face f and whether the face is a sliver or too small.
struct FaceCheck {
    VertexId a, b;
    double shortest;
    bool small_angle, small_area;
};

inline FaceCheck check_face(const SurfaceMesh& mesh, FaceId f, const ResolvedThresholds& th) {
    const auto& t = mesh.face(f);
    FaceCheck c{kNoVertex, kNoVertex, kInf, false, false};
    for (int i = 0; i < 3; ++i) {
        const VertexId p = t[i], q = t[(i + 1) % 3], r = t[(i + 2) % 3];
        const double len = (mesh.position(p) - mesh.position(q)).norm();
        if (len < c.shortest) c.shortest = len, c.a = std::min(p, q), c.b = std::max(p, q);
        const Vec3 u = mesh.position(q) - mesh.position(p), w = mesh.position(r) - mesh.position(p);
        if (corner_angle(u, w) < th.angle) c.small_angle = true;
    }
    c.small_area = mesh.face_area(f) < th.face;
    return c;
}

}  // namespace detail

/// Vertex pairs to merge, sorted by edge length then index.
inline std::vector<MergeCandidate> detect_degeneracies(const SurfaceMesh& mesh, const ResolvedThresholds& th) {
    std::map<std::pair<VertexId, VertexId>, MergeCandidate> found;
    const double sin_angle = std::sin(th.angle);
    for (FaceId f : mesh.live_faces()) {
        const auto& t = mesh.face(f);
        Vec3 e[3];
        double len[3];
        for (int i = 0; i < 3; ++i) {
            e[i] = mesh.position(t[(i + 1) % 3]) - mesh.position(t[i]);
            len[i] = e[i].norm();
        }
        const double twice_area = e[0].cross(e[1]).norm();
        int shortest = 0;
        for (int i = 0; i < 3; ++i) {
            const VertexId a = std::min(t[i], t[(i + 1) % 3]), b = std::max(t[i], t[(i + 1) % 3]);
            if (len[i] < th.edge) found.try_emplace({a, b}, MergeCandidate{a, b, MergeTrigger::SmallEdge, len[i]});
            if (len[i] < len[shortest]) shortest = i;
        }
        // corner i sits between e[i] and -e[i-1]; small when acute with a small sine
        bool small_angle = false;
        for (int i = 0; i < 3; ++i) {
            const Vec3& u = e[i];
            const Vec3& w = e[(i + 2) % 3];
            const double denom = len[i] * len[(i + 2) % 3];
            if (!(denom > 0) || (-u.dot(w) > 0 && twice_area < sin_angle * denom)) small_angle = true;
        }
        const bool small_area = 0.5 * twice_area < th.face;
        if (!small_angle && !small_area) continue;
        const VertexId a = std::min(t[shortest], t[(shortest + 1) % 3]);
        const VertexId b = std::max(t[shortest], t[(shortest + 1) % 3]);
        found.try_emplace({a, b}, MergeCandidate{a, b, small_angle ? MergeTrigger::SmallAngle : MergeTrigger::SmallFace,
                                                 len[shortest]});
    }
    std::vector<MergeCandidate> out;
    for (auto& [k, c] : found) out.push_back(c);
    std::sort(out.begin(), out.end(), [](const MergeCandidate& x, const MergeCandidate& y) {
        return std::tie(x.length, x.a, x.b) < std::tie(y.length, y.a, y.b);
    });
    return out;
}

inline std::vector<MergeCandidate> detect_degeneracies(const SurfaceMesh& mesh, const SurgeryThresholds& t) {
    return detect_degeneracies(mesh, resolve_thresholds(mesh, t));
}

/// True if the candidate still describes a degenerate edge of the mesh.
inline bool still_degenerate(const SurfaceMesh& mesh, const MergeCandidate& c, const ResolvedThresholds& th) {
    if (!mesh.vertex_alive(c.a) || !mesh.vertex_alive(c.b)) return false;
    const auto faces = mesh.edge_faces(c.a, c.b);
    if (faces.empty()) return false;
    if ((mesh.position(c.a) - mesh.position(c.b)).norm() < th.edge) return true;
    for (FaceId f : faces) {
        const auto fc = detail::check_face(mesh, f, th);
        if ((fc.small_angle || fc.small_area) && fc.a == c.a && fc.b == c.b) return true;
    }
    return false;
}

namespace detail {

/// Removes pairs of faces spanning the same three vertices near the given
/// vertices, then tombstones vertices left without faces.
inline void remove_pillows(SurfaceMesh& mesh, std::set<VertexId> around) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (VertexId x : around) {
            if (!mesh.vertex_alive(x)) continue;
            const auto faces = mesh.faces_of(x);
            for (std::size_t i = 0; i < faces.size() && !changed; ++i)
                for (std::size_t j = i + 1; j < faces.size() && !changed; ++j) {
                    auto s = mesh.face(faces[i]), t = mesh.face(faces[j]);
                    std::sort(s.begin(), s.end());
                    std::sort(t.begin(), t.end());
                    if (s != t) continue;
                    for (VertexId v : s) around.insert(v);
                    mesh.remove_face(faces[i]);
                    mesh.remove_face(faces[j]);
                    changed = true;
                }
            if (changed) break;
        }
    }
    for (VertexId x : around)
        if (mesh.vertex_alive(x) && mesh.faces_of(x).empty()) mesh.remove_vertex(x);
}

inline void expire(FlowState& s, VertexId v) {
    if (!s.mesh.vertex_alive(v)) return;
    auto& r = s.mesh.vertex(v);
    r.expiry_time = s.clock;
}

}  // namespace detail

/// Collapses edge (a, b) to its midpoint. The smaller index survives and
/// keeps its lineage. Returns the vertices whose links changed.
inline std::vector<VertexId> merge_vertices(FlowState& state, VertexId a, VertexId b, MergeTrigger trigger) {
    SurfaceMesh& mesh = state.mesh;
    if (a == b || !mesh.vertex_alive(a) || !mesh.vertex_alive(b))
        throw FlowError("merge of invalid vertex pair", state.clock, std::max(a, b));
    const VertexId keep = std::min(a, b), drop = std::max(a, b);
    const Vec3 mid = 0.5 * (mesh.position(a) + mesh.position(b));
    std::set<VertexId> touched{keep};
    for (VertexId w : mesh.neighbors(keep)) touched.insert(w);
    for (VertexId w : mesh.neighbors(drop)) touched.insert(w);
    const auto faces = mesh.faces_of(drop);
    for (FaceId f : faces) {
        Triangle t = mesh.face(f);
        if (std::find(t.begin(), t.end(), keep) != t.end()) {
            mesh.remove_face(f);
            continue;
        }
        for (auto& x : t)
            if (x == drop) x = keep;
        mesh.set_face(f, t);
    }
    mesh.remove_vertex(drop);
    state.labels.reset();
    touched.erase(drop);
    mesh.position(keep) = mid;
    detail::remove_pillows(mesh, touched);
    std::vector<VertexId> affected;
    for (VertexId v : touched)
        if (mesh.vertex_alive(v)) {
            detail::expire(state, v);
            affected.push_back(v);
        }
    state.events.push_back(MergeEvent{state.clock, keep, drop, trigger, mid});
    ++state.stats.merges;
    return affected;
}

/// Splits every vertex among `seeds` (and, transitively, its neighbors)
/// whose link is not a single cycle: each extra cycle gets its own copy of
/// the vertex at the same position. Processes vertices in index order.
/// Records one TopologyEvent if anything was split; returns whether it did.
inline bool resolve_topology(FlowState& state, const std::vector<VertexId>& seeds) {
    SurfaceMesh& mesh = state.mesh;
    auto faulty = [&](VertexId v) {
        if (!mesh.vertex_alive(v) || mesh.faces_of(v).empty()) return false;
        try {
            return link_cycles(mesh, v).size() > 1;
        } catch (const MeshError& e) {
            throw FlowError("cannot partition vertex fan: " + e.message(), state.clock, v);
        }
    };
    std::set<VertexId> work;
    for (VertexId v : seeds)
        if (faulty(v)) work.insert(v);
    if (work.empty()) return false;

    TopologyEvent ev;
    ev.time = state.clock;
    ev.components_before = state.components().component_count;
    while (!work.empty()) {
        const VertexId x = *work.begin();
        work.erase(work.begin());
        if (!faulty(x)) continue;
        const auto cycles = link_cycles(mesh, x);
        VertexSplit split;
        split.original = x;
        split.copies.push_back({x, cycles.front().neighbors});
        std::set<VertexId> around{x};
        for (std::size_t i = 1; i < cycles.size(); ++i) {
            VertexRecord rec = mesh.vertex(x);
            const VertexId copy = mesh.add_vertex(rec);
            for (FaceId f : cycles[i].faces) {
                Triangle t = mesh.face(f);
                for (auto& y : t)
                    if (y == x) y = copy;
                mesh.set_face(f, t);
            }
            split.copies.push_back({copy, cycles[i].neighbors});
            around.insert(copy);
        }
        for (const auto& c : cycles)
            for (VertexId w : c.neighbors) around.insert(w);
        detail::remove_pillows(mesh, around);
        for (VertexId w : around) {
            detail::expire(state, w);
            if (w != x) work.insert(w);
        }
        state.labels.reset();
        ev.splits.push_back(std::move(split));
        ++state.stats.vertex_splits;
    }
    ++state.stats.splits;
    ev.components_after = connected_components(mesh).component_count;
    state.events.push_back(std::move(ev));
    return true;
}

inline bool resolve_topology(FlowState& state, VertexId v) { return resolve_topology(state, std::vector<VertexId>{v}); }

namespace detail {

inline void vanish_component(FlowState& state, const std::vector<VertexId>& vs) {
    SurfaceMesh& mesh = state.mesh;
    std::set<FaceId> faces;
    for (VertexId v : vs)
        for (FaceId f : mesh.faces_of(v)) faces.insert(f);
    double area = 0;
    for (FaceId f : faces) area += mesh.face_area(f);
    state.events.push_back(VanishEvent{state.clock, mesh.centroid(vs), vs.size(), area});
    for (FaceId f : faces) mesh.remove_face(f);
    for (VertexId v : vs) mesh.remove_vertex(v);
    ++state.stats.vanishes;
    state.labels.reset();
}

}  // namespace detail

/// Deletes components that are too small to carry on.
inline void remove_vanished(FlowState& state, const FlowConfig& cfg) {
    SurfaceMesh& mesh = state.mesh;
    if (mesh.empty()) return;
    const ComponentLabeling& labels = state.components();
    std::vector<double> area(labels.component_count, 0.0);
    std::vector<int> count(labels.component_count, 0);
    for (FaceId f : mesh.live_faces()) area[labels.label[mesh.face(f)[0]]] += mesh.face_area(f);
    for (int l : labels.label)
        if (l >= 0) ++count[l];
    const double floor = cfg.vanish_area_fraction * state.initial_area;
    std::vector<int> doomed;
    for (int c = 0; c < labels.component_count; ++c)
        if (count[c] < cfg.vanish_min_vertices || area[c] < floor) doomed.push_back(c);
    if (doomed.empty()) return;
    const auto groups = labels.groups();
    for (int c : doomed) detail::vanish_component(state, groups[c]);
}

/// Merges flagged pairs until none remain, resolving topology after each
/// merge, then removes vanished components.
inline void surgery(FlowState& state, const FlowConfig& cfg) {
    for (int pass = 0; pass < cfg.max_surgery_passes && !state.mesh.empty(); ++pass) {
        const auto th = resolve_thresholds(state.mesh, cfg.thresholds);
        const auto cands = detect_degeneracies(state.mesh, th);
        if (cands.empty()) break;
        bool merged = false;
        for (const auto& c : cands) {
            if (!still_degenerate(state.mesh, c, th)) continue;
            // a merge that would leave the component below the vertex floor vanishes it instead
            const auto& labels = state.components();
            const int comp = labels.label[c.a];
            if (std::count(labels.label.begin(), labels.label.end(), comp) <= cfg.vanish_min_vertices) {
                detail::vanish_component(state, labels.groups()[comp]);
                merged = true;
                continue;
            }
            const auto affected = merge_vertices(state, c.a, c.b, c.trigger);
            resolve_topology(state, affected);
            merged = true;
        }
        remove_vanished(state, cfg);
        if (!merged) break;
    }
    remove_vanished(state, cfg);
}

/// Merge a vertex whose data cannot be computed into its nearest neighbor.
inline void force_merge(FlowState& state, VertexId v) {
    if (!state.mesh.vertex_alive(v)) return;
    const auto nbrs = state.mesh.neighbors(v);
    if (nbrs.empty()) throw FlowError("vertex without neighbors", state.clock, v);
    VertexId best = nbrs.front();
    double dist = kInf;
    for (VertexId w : nbrs) {
        const double d = (state.mesh.position(w) - state.mesh.position(v)).norm();
        if (d < dist) dist = d, best = w;
    }
    const auto affected = merge_vertices(state, v, best, MergeTrigger::SingularFit);
    ++state.stats.forced_merges;
    resolve_topology(state, affected);
}

// --- driver -------------------------------------------------------------------

struct Snapshot {
    int index = 0;
    double time = 0;
    SurfaceMesh mesh;              // compacted
    std::vector<VertexId> parents;  // child -> index in the previous snapshot (empty for the first)
    int components = 0;
};

struct FlowResult {
    bool completed = false;
    std::string message;
    double extinction_time = kNaN;
    int snapshots = 0;
    std::vector<FlowEvent> events;
    FlowStats stats;
};

/// Compacted copy of the current mesh with its parent map; afterwards every
/// live vertex's parent is its index in this snapshot.
inline Snapshot take_snapshot(FlowState& state, int index, bool with_parents) {
    Snapshot snap;
    snap.index = index;
    snap.time = state.clock;
    auto [mesh, remap] = state.mesh.compacted();
    snap.mesh = std::move(mesh);
    if (with_parents)
        for (VertexId v : snap.mesh.live_vertices()) snap.parents.push_back(snap.mesh.vertex(v).parent_id);
    for (VertexId v : state.mesh.live_vertices()) state.mesh.vertex(v).parent_id = remap[v];
    snap.components = snap.mesh.empty() ? 0 : connected_components(snap.mesh).component_count;
    return snap;
}

using SnapshotSink = std::function<void(const Snapshot&)>;

/// Flows the surface until nothing is left, emitting a snapshot at t = 0,
/// at every checkpoint and once more at extinction.
inline FlowResult run_to_extinction(const SurfaceMesh& initial, const FlowConfig& cfg, const SnapshotSink& sink) {
    if (!(cfg.checkpoint_interval > 0)) throw FlowError("checkpoint interval must be positive", 0.0);
    FlowState state = FlowState::from_mesh(initial);
    FlowResult result;
    int index = 0;
    sink(take_snapshot(state, index++, false));
    remove_vanished(state, cfg);
    long k = 1;
    double next_checkpoint = cfg.checkpoint_interval;
    double last_emitted = 0;
    try {
        while (!state.mesh.empty()) {
            if (state.stats.steps >= cfg.max_steps)
                throw FlowError("step limit of " + std::to_string(cfg.max_steps) + " reached", state.clock);
            StepPlan plan = plan_step(state, next_checkpoint, cfg.dt_max, cfg);
            if (!plan.ok()) {
                resolve_topology(state, plan.faulty);
                for (VertexId v : plan.singular) force_merge(state, v);
                remove_vanished(state, cfg);
                continue;
            }
            advance(state, plan);
            surgery(state, cfg);
            if (state.clock >= next_checkpoint - 1e-12 * cfg.checkpoint_interval) {
                state.clock = std::max(state.clock, next_checkpoint);
                sink(take_snapshot(state, index++, true));
                last_emitted = state.clock;
                ++k;
                next_checkpoint = double(k) * cfg.checkpoint_interval;
            }
        }
        if (last_emitted != state.clock || index == 1) {
            sink(take_snapshot(state, index++, true));
        }
        result.completed = true;
        result.extinction_time = state.clock;
    } catch (const Error& e) {
        result.message = e.what();
    }
    result.snapshots = index;
    result.events = std::move(state.events);
    result.stats = state.stats;
    return result;
}

inline std::vector<Snapshot> run_to_extinction(const SurfaceMesh& initial, const FlowConfig& cfg, FlowResult* result = nullptr) {
    std::vector<Snapshot> snaps;
    FlowResult r = run_to_extinction(initial, cfg, [&](const Snapshot& s) { snaps.push_back(s); });
    if (result) *result = std::move(r);
    return snaps;
}

}  // namespace mcfsound
