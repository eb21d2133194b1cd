#include "mcfsound/flow.hpp"
#include "mcfsound/generators.hpp"
#include "mcfsound/validate.hpp"
#include "test_util.hpp"

using namespace mcfsound;

namespace {

double mean_radius(const SurfaceMesh& m) {
    const auto live = m.live_vertices();
    const Vec3 c = m.centroid(live);
    double r = 0;
    for (VertexId v : live) r += (m.position(v) - c).norm();
    return r / double(live.size());
}

/// Two tetrahedra glued at one vertex (index 0), the second a point
/// reflection of the first.
SurfaceMesh bowtie() {
    const auto tet = tetrahedron();
    const Vec3 o = tet.position(0);
    std::vector<Vec3> p{Vec3::Zero()};
    for (VertexId v = 1; v < 4; ++v) p.push_back(tet.position(v) - o);
    for (VertexId v = 1; v < 4; ++v) p.push_back(o - tet.position(v));
    std::vector<Triangle> f;
    for (FaceId i : tet.live_faces()) {
        const auto& a = tet.face(i);
        f.push_back(a);
        Triangle b = a;
        for (auto& x : b)
            if (x != 0) x += 3;
        std::swap(b[1], b[2]);
        f.push_back(b);
    }
    return SurfaceMesh(p, f);
}

FlowConfig quick_config() {
    FlowConfig cfg;
    cfg.checkpoint_interval = 0.025;
    return cfg;
}

}  // namespace

TEST(ExpirationInterval, ProportionalToEdgeOverCurvature) {
    EXPECT_DOUBLE_EQ(expiration_interval(0.1, 2.0, 0.5, 1.0, 1e-12), 0.025);
    EXPECT_DOUBLE_EQ(expiration_interval(0.1, -2.0, 0.5, 1.0, 1e-12), 0.025);
    EXPECT_DOUBLE_EQ(expiration_interval(0.1, 0.0, 0.5, 1.0, 1e-12), 1.0);
    const OneRing ring = OneRing::from_offsets(testutil::regular_fan(5, 0.2));
    EXPECT_DOUBLE_EQ(expiration_interval(ring, 4.0, 0.5, 1.0, 1e-12), 0.5 * 0.2 / 4.0);
}

TEST(RefreshVertex, SphereVertex) {
    const auto m = icosphere(3);
    const FlowConfig cfg;
    for (VertexId v : {VertexId(0), VertexId(100)}) {
        const auto r = refresh_vertex(m, v, cfg, 1e-12);
        ASSERT_EQ(r.status, RefreshResult::Status::Ok);
        EXPECT_NEAR(r.kappa, 1.0, 0.02);
        EXPECT_GT(r.normal.dot(m.position(v).normalized()), 0.9999);
        EXPECT_GT(r.interval, 0.0);
        EXPECT_LE(r.step_limit, cfg.accuracy_fraction * r.interval / cfg.cs + 1e-15);
    }
}

TEST(RefreshVertex, ReportsTopologyFaults) {
    const auto r = refresh_vertex(bowtie(), 0, FlowConfig{}, 1e-12);
    EXPECT_EQ(r.status, RefreshResult::Status::TopologyFault);
}

TEST(PlanStep, FirstPlanRefreshesEveryVertexAndLeavesTheStateAlone) {
    FlowState s = FlowState::from_mesh(icosphere(2));
    const FlowConfig cfg;
    const auto before = s.mesh.position(5);
    const auto plan = plan_step(s, 0.01, cfg.dt_max, cfg);
    ASSERT_TRUE(plan.ok());
    EXPECT_EQ(plan.refresh_set.size(), s.mesh.vertex_count());
    EXPECT_GT(plan.dt, 0.0);
    EXPECT_LE(plan.dt, 0.01);
    for (const auto& r : plan.refreshed) {
        EXPECT_LE(plan.dt, r.interval);
        EXPECT_LE(plan.dt, r.step_limit);
    }
    EXPECT_EQ(s.mesh.position(5), before);
    EXPECT_FALSE(s.mesh.vertex(5).curvature_cache.has_value());
}

TEST(PlanStep, StopsAtTheCheckpoint) {
    FlowState s = FlowState::from_mesh(icosphere(1));
    FlowConfig cfg;
    const auto plan = plan_step(s, 1e-6, cfg.dt_max, cfg);
    EXPECT_DOUBLE_EQ(plan.dt, 1e-6);
    EXPECT_THROW(plan_step(s, 0.0, cfg.dt_max, cfg), FlowError);
}

TEST(PlanStep, FreshCachesAreReused) {
    FlowState s = FlowState::from_mesh(icosphere(2));
    const FlowConfig cfg;
    advance(s, plan_step(s, 1.0, cfg.dt_max, cfg));
    const auto plan = plan_step(s, 1.0, cfg.dt_max, cfg);
    // everything was refreshed a moment ago; only vertices about to expire come back
    EXPECT_LT(plan.refresh_set.size(), s.mesh.vertex_count());
}

TEST(Advance, MovesAlongMinusKappaNormal) {
    FlowState s = FlowState::from_mesh(icosphere(2));
    const FlowConfig cfg;
    const auto plan = plan_step(s, 0.01, cfg.dt_max, cfg);
    std::vector<Vec3> old;
    for (VertexId v : s.mesh.live_vertices()) old.push_back(s.mesh.position(v));
    advance(s, plan);
    EXPECT_DOUBLE_EQ(s.clock, plan.dt);
    EXPECT_EQ(s.stats.steps, 1);
    EXPECT_EQ(s.stats.refreshes, long(plan.refreshed.size()));
    for (const auto& r : plan.refreshed) {
        const Vec3 moved = s.mesh.position(r.vertex) - old[r.vertex];
        EXPECT_LT((moved + plan.dt * r.kappa * r.normal).norm(), 1e-15);
        EXPECT_EQ(*s.mesh.vertex(r.vertex).curvature_cache, r.kappa);
        EXPECT_DOUBLE_EQ(s.mesh.vertex(r.vertex).expiry_time, r.interval);
    }
    EXPECT_EQ(s.stats.stale_moves, 0);
}

TEST(Advance, RejectsAnUnresolvedPlan) {
    FlowState s = FlowState::from_mesh(icosphere(1));
    StepPlan plan;
    plan.faulty.push_back(0);
    EXPECT_THROW(advance(s, plan), FlowError);
}

TEST(Degeneracies, NoneOnAUniformSphere) {
    EXPECT_TRUE(detect_degeneracies(icosphere(2), SurgeryThresholds{}).empty());
}

TEST(Degeneracies, ShortEdgeIsFlagged) {
    auto m = icosphere(2);
    const VertexId a = 0, b = m.neighbors(0).front();
    m.position(b) = m.position(a) + 0.01 * (m.position(b) - m.position(a));
    const auto c = detect_degeneracies(m, SurgeryThresholds{});
    ASSERT_FALSE(c.empty());
    EXPECT_EQ(c.front().a, std::min(a, b));
    EXPECT_EQ(c.front().b, std::max(a, b));
    EXPECT_EQ(c.front().trigger, MergeTrigger::SmallEdge);
}

TEST(Degeneracies, SliverIsFlaggedByAngle) {
    // pull a vertex onto the segment of two neighbors: a flat, long, thin face
    auto m = icosphere(1);
    const auto& t = m.face(m.faces_of(0).front());
    const VertexId p = t[0] == 0 ? t[1] : t[0], q = t[2] == 0 ? t[1] : t[2];
    m.position(0) = 0.5 * (m.position(p) + m.position(q)) + 1e-3 * m.position(0).normalized();
    bool angle = false;
    for (const auto& c : detect_degeneracies(m, SurgeryThresholds{})) angle |= c.trigger == MergeTrigger::SmallAngle;
    EXPECT_TRUE(angle);
}

TEST(MergeVertices, CollapsesAnEdgeToItsMidpoint) {
    FlowState s = FlowState::from_mesh(icosphere(2));
    const VertexId a = 7, b = s.mesh.neighbors(7).back();
    const Vec3 mid = 0.5 * (s.mesh.position(a) + s.mesh.position(b));
    const auto V = s.mesh.vertex_count(), F = s.mesh.face_count();
    const auto affected = merge_vertices(s, a, b, MergeTrigger::SmallEdge);
    const VertexId keep = std::min(a, b);
    EXPECT_EQ(s.mesh.vertex_count(), V - 1);
    EXPECT_EQ(s.mesh.face_count(), F - 2);
    EXPECT_EQ(s.mesh.position(keep), mid);
    EXPECT_FALSE(s.mesh.vertex_alive(std::max(a, b)));
    EXPECT_TRUE(validate(s.mesh).closed_manifold());
    ASSERT_EQ(s.events.size(), 1u);
    const auto& ev = std::get<MergeEvent>(s.events[0]);
    EXPECT_EQ(ev.survivor, keep);
    EXPECT_EQ(ev.removed, std::max(a, b));
    EXPECT_EQ(s.stats.merges, 1);
    for (VertexId v : affected) EXPECT_LE(s.mesh.vertex(v).expiry_time, s.clock);
    EXPECT_THROW(merge_vertices(s, keep, keep, MergeTrigger::SmallEdge), FlowError);
}

TEST(MergeVertices, TetrahedronCollapsesToNothingClean) {
    // collapsing a tetrahedron edge leaves a doubled triangle, which is removed
    FlowState s = FlowState::from_mesh(tetrahedron());
    merge_vertices(s, 0, 1, MergeTrigger::SmallEdge);
    EXPECT_EQ(s.mesh.face_count(), 0u);
    EXPECT_TRUE(s.mesh.empty());
}

TEST(ResolveTopology, SplitsAPinchedVertex) {
    const auto m = bowtie();
    ASSERT_FALSE(validate(m).closed_manifold());
    FlowState s = FlowState::from_mesh(m);
    EXPECT_EQ(s.components().component_count, 1);
    EXPECT_TRUE(resolve_topology(s, 0));
    EXPECT_EQ(s.mesh.vertex_count(), 8u);
    const auto report = validate(s.mesh);
    EXPECT_TRUE(report.closed_manifold()) << report.summary();
    EXPECT_EQ(report.component_count, 2);
    ASSERT_EQ(s.events.size(), 1u);
    const auto& ev = std::get<TopologyEvent>(s.events[0]);
    EXPECT_EQ(ev.components_before, 1);
    EXPECT_EQ(ev.components_after, 2);
    EXPECT_EQ(ev.component_delta(), 1);
    ASSERT_EQ(ev.splits.size(), 1u);
    EXPECT_EQ(ev.splits[0].original, 0);
    EXPECT_EQ(ev.splits[0].copies.size(), 2u);
    EXPECT_EQ(s.mesh.position(ev.splits[0].copies[1].vertex), Vec3::Zero());
    EXPECT_EQ(s.stats.splits, 1);
    EXPECT_EQ(s.stats.vertex_splits, 1);
    EXPECT_EQ(format_event(s.events[0]).rfind("t=0 SPLIT 0->0[", 0), 0u) << format_event(s.events[0]);
    EXPECT_FALSE(resolve_topology(s, 0));
}

TEST(ResolveTopology, NothingToDoOnAManifold) {
    FlowState s = FlowState::from_mesh(icosphere(1));
    EXPECT_FALSE(resolve_topology(s, s.mesh.live_vertices()));
    EXPECT_TRUE(s.events.empty());
}

TEST(RemoveVanished, DropsTinyComponents) {
    const auto m = disjoint_union({icosphere(1), translated(tetrahedron(1e-4), Vec3(5, 0, 0))});
    FlowState s = FlowState::from_mesh(m);
    FlowConfig cfg;
    cfg.vanish_area_fraction = 1e-6;
    remove_vanished(s, cfg);
    EXPECT_EQ(s.mesh.vertex_count(), 42u);
    ASSERT_EQ(s.events.size(), 1u);
    const auto& ev = std::get<VanishEvent>(s.events[0]);
    EXPECT_EQ(ev.vertices, 4u);
    EXPECT_NEAR(ev.centroid.x(), 5.0, 1e-3);
    EXPECT_EQ(format_event(s.events[0]).rfind("t=0 VANISH vertices=4", 0), 0u);
}

TEST(RemoveVanished, DropsComponentsBelowTheVertexFloor) {
    FlowState s = FlowState::from_mesh(tetrahedron());
    FlowConfig cfg;
    cfg.vanish_min_vertices = 5;
    remove_vanished(s, cfg);
    EXPECT_TRUE(s.mesh.empty());
    EXPECT_EQ(s.stats.vanishes, 1);
}

TEST(ForceMerge, MergesIntoTheNearestNeighbor) {
    FlowState s = FlowState::from_mesh(icosphere(2));
    const VertexId v = 20;
    const auto nb = s.mesh.neighbors(v);
    s.mesh.position(nb[2]) = 0.9 * s.mesh.position(nb[2]) + 0.1 * s.mesh.position(v);
    force_merge(s, v);
    ASSERT_EQ(s.events.size(), 1u);
    const auto& ev = std::get<MergeEvent>(s.events[0]);
    EXPECT_EQ(ev.trigger, MergeTrigger::SingularFit);
    EXPECT_EQ(std::minmax(ev.survivor, ev.removed), std::minmax(v, nb[2]));
    EXPECT_EQ(s.stats.forced_merges, 1);
}

TEST(RunToExtinction, ShrinkingSphereMatchesTheRadiusLaw) {
    FlowResult res;
    const auto snaps = run_to_extinction(icosphere(3), quick_config(), &res);
    ASSERT_TRUE(res.completed) << res.message;
    EXPECT_NEAR(res.extinction_time, 0.5, 0.025);
    EXPECT_EQ(res.stats.stale_moves, 0);
    const double edge0 = snaps.front().mesh.mean_edge_length();
    for (const auto& s : snaps) {
        if (s.mesh.empty()) continue;
        const double r = std::sqrt(std::max(0.0, 1.0 - 2.0 * s.time));
        if (r > 10 * edge0) {
            EXPECT_NEAR(mean_radius(s.mesh) / r, 1.0, 0.02) << "t=" << s.time;
        }
    }
}

TEST(RunToExtinction, ExtinctionTimeScalesWithRadiusSquared) {
    FlowConfig cfg = quick_config();
    cfg.checkpoint_interval = 0.1;
    cfg.dt_max = 0.02;
    FlowResult res;
    run_to_extinction(icosphere(2, 2.0), cfg, &res);
    ASSERT_TRUE(res.completed) << res.message;
    EXPECT_NEAR(res.extinction_time, 2.0, 0.1);
}

TEST(RunToExtinction, SnapshotsAndParentMaps) {
    FlowResult res;
    const auto snaps = run_to_extinction(icosphere(2), quick_config(), &res);
    ASSERT_TRUE(res.completed);
    ASSERT_EQ(int(snaps.size()), res.snapshots);
    EXPECT_EQ(snaps.front().time, 0.0);
    EXPECT_TRUE(snaps.front().parents.empty());
    EXPECT_TRUE(snaps.back().mesh.empty());
    EXPECT_EQ(snaps.back().time, res.extinction_time);
    for (std::size_t i = 1; i < snaps.size(); ++i) {
        const auto& s = snaps[i];
        EXPECT_EQ(s.index, int(i));
        if (i + 1 < snaps.size()) {
            EXPECT_NEAR(s.time, 0.025 * double(i), 1e-12);
        }
        EXPECT_EQ(s.parents.size(), s.mesh.vertex_count());
        for (VertexId p : s.parents) {
            EXPECT_GE(p, 0);
            EXPECT_LT(std::size_t(p), snaps[i - 1].mesh.vertex_count());
        }
        if (!s.mesh.empty()) {
            EXPECT_TRUE(validate(s.mesh).closed_manifold());
            EXPECT_EQ(s.components, 1);
        }
    }
}

TEST(RunToExtinction, Deterministic) {
    FlowResult a, b;
    const auto sa = run_to_extinction(icosphere(2), quick_config(), &a);
    const auto sb = run_to_extinction(icosphere(2), quick_config(), &b);
    EXPECT_EQ(a.extinction_time, b.extinction_time);
    EXPECT_EQ(a.stats.steps, b.stats.steps);
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) EXPECT_EQ(format_event(a.events[i]), format_event(b.events[i]));
    ASSERT_EQ(sa.size(), sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i)
        for (VertexId v : sa[i].mesh.live_vertices()) ASSERT_EQ(sa[i].mesh.position(v), sb[i].mesh.position(v));
}

TEST(RunToExtinction, ThreadCountDoesNotChangeTheResult) {
    FlowConfig one = quick_config(), four = quick_config();
    four.threads = 4;
    FlowResult a, b;
    const auto sa = run_to_extinction(icosphere(2), one, &a);
    const auto sb = run_to_extinction(icosphere(2), four, &b);
    EXPECT_EQ(a.extinction_time, b.extinction_time);
    ASSERT_EQ(sa.size(), sb.size());
    for (VertexId v : sa[5].mesh.live_vertices()) EXPECT_EQ(sa[5].mesh.position(v), sb[5].mesh.position(v));
}

TEST(RunToExtinction, TwoSpheresVanishInOrder) {
    const auto m = disjoint_union({icosphere(2), translated(icosphere(2, 0.5), Vec3(4, 0, 0))});
    FlowResult res;
    const auto snaps = run_to_extinction(m, quick_config(), &res);
    ASSERT_TRUE(res.completed) << res.message;
    EXPECT_EQ(snaps.front().components, 2);
    int vanishes = 0;
    double first = kInf;
    for (const auto& e : res.events)
        if (const auto* v = std::get_if<VanishEvent>(&e)) {
            ++vanishes;
            first = std::min(first, v->time);
        }
    EXPECT_EQ(vanishes, 2);
    EXPECT_NEAR(first, 0.125, 0.01);
    EXPECT_NEAR(res.extinction_time, 0.5, 0.025);
}

TEST(RunToExtinction, StepLimitIsReported) {
    FlowConfig cfg = quick_config();
    cfg.max_steps = 3;
    FlowResult res;
    run_to_extinction(icosphere(1), cfg, &res);
    EXPECT_FALSE(res.completed);
    EXPECT_NE(res.message.find("step limit"), std::string::npos);
}

TEST(RunToExtinction, RejectsANonPositiveInterval) {
    FlowConfig cfg;
    cfg.checkpoint_interval = 0;
    EXPECT_THROW(run_to_extinction(icosphere(1), cfg), FlowError);
}
