#include "mcfsound/flow.hpp"
#include "mcfsound/generators.hpp"
#include "mcfsound/sound.hpp"
#include "mcfsound/wav.hpp"
#include "test_util.hpp"

#include <complex>

using namespace mcfsound;

namespace {

constexpr double kPi = std::numbers::pi;

EigenPairSet full_pairs(const SurfaceMesh& m) {
    const auto L = assemble_laplacian(m);
    return smallest_eigenpairs(L.spectral_operator(MassNormalization::Lumped), L.dimension());
}

/// Magnitude spectrum |X_k|, k = 0..n/2, by direct summation.
std::vector<double> dft_magnitude(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> s = 0;
        const std::complex<double> w = std::polar(1.0, -2 * kPi * double(k) / double(n));
        std::complex<double> z = 1;
        for (std::size_t i = 0; i < n; ++i, z *= w) s += x[i] * z;
        out[k] = std::abs(s);
    }
    return out;
}

std::size_t argmax(const std::vector<double>& v) { return std::max_element(v.begin(), v.end()) - v.begin(); }

WaveTrack constant_track(int mode, double lambda, double amp, double t1) {
    return {mode, {{0.0, lambda, amp}, {t1, lambda, amp}}};
}

/// Classical RK4 for u'' = -fs^2 A u.
WaveState rk4(const Eigen::MatrixXd& A, double fs, WaveState s, double T, int steps) {
    const double h = T / steps;
    auto acc = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd { return -fs * fs * (A * u); };
    for (int i = 0; i < steps; ++i) {
        const Eigen::VectorXd k1u = s.ut, k1v = acc(s.u);
        const Eigen::VectorXd k2u = s.ut + 0.5 * h * k1v, k2v = acc(s.u + 0.5 * h * k1u);
        const Eigen::VectorXd k3u = s.ut + 0.5 * h * k2v, k3v = acc(s.u + 0.5 * h * k2u);
        const Eigen::VectorXd k4u = s.ut + h * k3v, k4v = acc(s.u + h * k3u);
        s.u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
        s.ut += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    return s;
}

}  // namespace

// --- pluck and modal algebra ----------------------------------------------------------

TEST(Pluck, IndicatorAtRest) {
    const auto s = pluck(tetrahedron(), 0);
    EXPECT_EQ(s.u, Eigen::Vector4d(1, 0, 0, 0));
    EXPECT_EQ(s.ut, Eigen::Vector4d::Zero());
    EXPECT_THROW(pluck(tetrahedron(), 9), SoundError);
}

TEST(Pluck, FollowsLiveOrderOnSparseMeshes) {
    FlowState st = FlowState::from_mesh(icosphere(1));
    merge_vertices(st, 3, 11, MergeTrigger::SmallEdge);
    const auto s = pluck(st.mesh, 12);
    EXPECT_EQ(s.u.size(), 41);
    EXPECT_EQ(s.u(11), 1.0);
    EXPECT_THROW(pluck(st.mesh, 11), SoundError);
}

TEST(Decompose, CompleteBasisReconstructsThePluck) {
    const auto m = icosahedron();
    const auto pairs = full_pairs(m);
    const auto w = pluck(m, 4);
    const auto back = reconstruct(decompose(w, pairs, 3.0));
    EXPECT_LT((back.u - w.u).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(back.ut.cwiseAbs().maxCoeff(), 1e-12);
    // Parseval
    EXPECT_NEAR((pairs.vectors.transpose() * w.u).squaredNorm(), w.u.squaredNorm(), 1e-10);
}

TEST(Decompose, RestStateHasNoVelocityComponents) {
    const auto m = icosahedron();
    const auto ms = decompose(pluck(m, 0), full_pairs(m), 2.0);
    for (Eigen::Index k = 0; k < ms.size(); ++k) {
        if (ms.zero[k]) {
            EXPECT_EQ(ms.rate(k), 0.0);
        } else {
            EXPECT_EQ(ms.c_plus(k).imag(), 0.0);
        }
    }
}

TEST(Decompose, EigenvectorDisplacement) {
    const auto m = icosahedron();
    const auto pairs = full_pairs(m);
    const int k = 3;
    const auto ms = decompose({pairs.vectors.col(k), Eigen::VectorXd::Zero(12)}, pairs, 5.0);
    for (Eigen::Index j = 0; j < ms.size(); ++j) {
        const std::complex<double> expected = j == k ? 0.5 : 0.0;
        EXPECT_LT(std::abs(ms.c_plus(j) - expected), 1e-12) << j;
    }
}

TEST(Decompose, EigenvectorVelocity) {
    const auto m = icosahedron();
    const auto pairs = full_pairs(m);
    const int k = 5;
    const double fs = 5.0;
    const auto ms = decompose({Eigen::VectorXd::Zero(12), pairs.vectors.col(k)}, pairs, fs);
    // c+ = -i / (2 fs sqrt(lambda)); c- is its conjugate
    const std::complex<double> expected(0.0, -1.0 / (2 * fs * std::sqrt(pairs.values(k))));
    EXPECT_LT(std::abs(ms.c_plus(k) - expected), 1e-12);
}

TEST(Decompose, ZeroModeIsAffine) {
    const auto m = icosahedron();
    const auto pairs = full_pairs(m);
    const auto ms = decompose({0.3 * pairs.vectors.col(0), Eigen::VectorXd::Zero(12)}, pairs, 1.0);
    ASSERT_TRUE(ms.zero[0]);
    EXPECT_NEAR(ms.offset(0), 0.3, 1e-14);
    EXPECT_EQ(ms.rate(0), 0.0);
    const auto drift = decompose({Eigen::VectorXd::Zero(12), pairs.vectors.col(0)}, pairs, 1.0);
    const auto later = evolve_modes(drift, 2.0);
    EXPECT_LT((later.u - 2.0 * pairs.vectors.col(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Decompose, RejectsMismatchedSnapshots) {
    EXPECT_THROW(decompose(pluck(tetrahedron(), 0), full_pairs(icosahedron()), 1.0), SoundError);
}

TEST(EvolveModes, ZeroStepIsTheIdentity) {
    const auto m = icosahedron();
    const auto pairs = full_pairs(m);
    WaveState w{Eigen::VectorXd::LinSpaced(12, -1, 1), Eigen::VectorXd::LinSpaced(12, 2, 0)};
    const auto back = evolve_modes(decompose(w, pairs, 7.0), 0.0);
    EXPECT_LT((back.u - w.u).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((back.ut - w.ut).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(advance_modes(decompose(w, pairs, 7.0), -1.0), SoundError);
}

TEST(EvolveModes, SingleModeReturnsAfterOnePeriod) {
    const auto m = icosahedron();
    const auto pairs = full_pairs(m);
    const double fs = 3.0;
    const int k = 7;
    const WaveState w{pairs.vectors.col(k), 0.4 * pairs.vectors.col(k)};
    const double period = 2 * kPi / (fs * std::sqrt(pairs.values(k)));
    const auto back = evolve_modes(decompose(w, pairs, fs), period);
    EXPECT_LT((back.u - w.u).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((back.ut - w.ut).cwiseAbs().maxCoeff(), 1e-10);
    const auto half = evolve_modes(decompose(w, pairs, fs), period / 2);
    EXPECT_LT((half.u + w.u).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EvolveModes, ConservesModalEnergy) {
    const auto m = icosphere(1);
    const auto pairs = full_pairs(m);
    const auto ms = decompose(pluck(m, 9), pairs, 11.0);
    const Eigen::VectorXd e0 = modal_energy(ms);
    for (double dt : {0.01, 0.37, 5.0, 123.4}) {
        const Eigen::VectorXd e = modal_energy(advance_modes(ms, dt));
        EXPECT_LT((e - e0).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_NEAR(e.sum(), e0.sum(), 1e-10);
    }
}

TEST(EvolveModes, MatchesAnIndependentIntegratorOnATetrahedron) {
    const auto m = tetrahedron();
    const auto L = assemble_laplacian(m);
    const Eigen::MatrixXd A(L.spectral_operator(MassNormalization::Lumped));
    const auto pairs = smallest_eigenpairs(L.spectral_operator(MassNormalization::Lumped), 4);
    const double fs = 2.0;
    const double period = 2 * kPi / (fs * std::sqrt(pairs.values(1)));
    const WaveState w0 = pluck(m, 2);
    const auto exact = evolve_modes(decompose(w0, pairs, fs), 10 * period);
    const auto numeric = rk4(A, fs, w0, 10 * period, 20000);
    EXPECT_LT((exact.u - numeric.u).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((exact.ut - numeric.ut).cwiseAbs().maxCoeff(), 1e-6 * fs * std::sqrt(pairs.values(1)));
}

// --- projection --------------------------------------------------------------------

TEST(Project, IdentityTransition) {
    const Eigen::Vector3d v(0.1, 0.2, 0.3);
    EXPECT_EQ(project(v, {0, 1, 2}), v);
}

TEST(Project, ChildrenCopyTheirParent) {
    const Eigen::Vector3d v(0.1, 0.2, 0.3);
    EXPECT_EQ(project(v, {2, 2, 0, 1}), Eigen::Vector4d(0.3, 0.3, 0.1, 0.2));
    EXPECT_THROW(project(v, {0, 3}), SoundError);
    EXPECT_THROW(project(v, {-1}), SoundError);
}

TEST(Project, MergedPairKeepsTheSurvivorsValue) {
    FlowState st = FlowState::from_mesh(icosphere(1));
    take_snapshot(st, 0, false);
    const VertexId a = 4, b = st.mesh.neighbors(4).back();
    merge_vertices(st, a, b, MergeTrigger::SmallEdge);
    const auto snap = take_snapshot(st, 1, true);
    Eigen::VectorXd values = Eigen::VectorXd::Zero(42);
    values(a) = 0.2;
    values(b) = 0.6;
    const auto out = project(values, snap.parents);
    ASSERT_EQ(out.size(), 41);
    const VertexId keep = std::min(a, b);
    EXPECT_EQ(out(keep), values(keep));
    EXPECT_EQ((out.array() == values(std::max(a, b))).count(), 0);
}

TEST(Project, SplitCopiesInheritTheSameValue) {
    // bowtie: two tetrahedra sharing vertex 0
    const auto tet = tetrahedron();
    std::vector<Vec3> p{Vec3::Zero()};
    for (VertexId v = 1; v < 4; ++v) p.push_back(tet.position(v) - tet.position(0));
    for (VertexId v = 1; v < 4; ++v) p.push_back(tet.position(0) - tet.position(v));
    std::vector<Triangle> f;
    for (FaceId i : tet.live_faces()) {
        Triangle a = tet.face(i), b = a;
        for (auto& x : b)
            if (x != 0) x += 3;
        std::swap(b[1], b[2]);
        f.push_back(a);
        f.push_back(b);
    }
    FlowState st = FlowState::from_mesh(SurfaceMesh(p, f));
    take_snapshot(st, 0, false);
    ASSERT_TRUE(resolve_topology(st, 0));
    const auto snap = take_snapshot(st, 1, true);
    Eigen::VectorXd values = Eigen::VectorXd::LinSpaced(7, 1, 7);
    const auto out = project(values, snap.parents);
    ASSERT_EQ(out.size(), 8);
    EXPECT_EQ(out(0), 1.0);
    EXPECT_EQ(out(7), 1.0);
}

// --- tracks --------------------------------------------------------------------------

TEST(WaveTracks, ConstantEigenvalue) {
    std::vector<ModalSample> h(3);
    for (int i = 0; i < 3; ++i) h[i] = {double(i), Eigen::Vector2d(0, 2), Eigen::Vector2d(0, 0.5)};
    const auto tracks = build_wavetracks(h, 2.0);
    ASSERT_EQ(tracks.size(), 2u);
    TrackCursor c(tracks[1]);
    for (double t : {0.0, 0.3, 1.7}) EXPECT_EQ(c.at(t).first, 2.0);
    EXPECT_EQ(tracks[1].nodes.back().amplitude, 0.0);  // faded at the end
}

TEST(WaveTracks, LinearInterpolation) {
    std::vector<ModalSample> h{{0.0, Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 1.0)},
                               {1.0, Eigen::VectorXd::Constant(1, 4.0), Eigen::VectorXd::Constant(1, 3.0)}};
    const auto tracks = build_wavetracks(h, 2.0);
    TrackCursor c(tracks[0]);
    const auto [lambda, amp] = c.at(0.5);
    EXPECT_DOUBLE_EQ(lambda, 2.5);
    EXPECT_DOUBLE_EQ(amp, 2.0);
    // faded to zero over [1, 2]
    EXPECT_DOUBLE_EQ(c.at(1.5).second, 1.5);
    EXPECT_EQ(c.at(2.5).second, 0.0);
}

TEST(WaveTracks, JumpIsBridgedOverOneInterval) {
    std::vector<ModalSample> h;
    for (int i = 0; i < 4; ++i)
        h.push_back({0.1 * i, Eigen::VectorXd::Constant(1, i < 2 ? 1.0 : 9.0), Eigen::VectorXd::Constant(1, 1.0)});
    const auto tracks = build_wavetracks(h, 0.3);
    TrackCursor c(tracks[0]);
    EXPECT_DOUBLE_EQ(c.at(0.1).first, 1.0);
    EXPECT_NEAR(c.at(0.15).first, 5.0, 1e-12);
    EXPECT_DOUBLE_EQ(c.at(0.2).first, 9.0);
}

TEST(WaveTracks, DisappearingModeFadesOut) {
    std::vector<ModalSample> h{{0.0, Eigen::Vector3d(0, 1, 2), Eigen::Vector3d(0, 1, 1)},
                               {1.0, Eigen::Vector3d(0, 1, 2), Eigen::Vector3d(0, 1, 1)},
                               {2.0, Eigen::Vector2d(0, 1), Eigen::Vector2d(0, 1)}};
    const auto tracks = build_wavetracks(h, 3.0);
    ASSERT_EQ(tracks.size(), 3u);
    const auto& t = tracks[2];
    EXPECT_EQ(t.end(), 2.0);
    EXPECT_EQ(t.nodes.back().amplitude, 0.0);
    EXPECT_EQ(t.nodes.back().lambda, 2.0);
}

TEST(WaveTracks, NodeTimesIncreaseAndEigenvaluesAreNonNegative) {
    std::vector<ModalSample> h{{0.0, Eigen::Vector2d(-1e-14, 1), Eigen::Vector2d(0, 1)},
                               {0.5, Eigen::Vector2d(-1e-15, 2), Eigen::Vector2d(0, 1)}};
    for (const auto& t : build_wavetracks(h, 1.0)) {
        for (std::size_t i = 1; i < t.nodes.size(); ++i) EXPECT_GT(t.nodes[i].t, t.nodes[i - 1].t);
        for (const auto& n : t.nodes) EXPECT_GE(n.lambda, 0.0);
    }
    EXPECT_THROW(build_wavetracks({}, 1.0), SoundError);
    EXPECT_THROW(build_wavetracks({h[1], h[0]}, 1.0), SoundError);
}

// --- synthesis ---------------------------------------------------------------------------

TEST(Synthesize, PureToneLandsInTheRightBin) {
    WaveformConfig cfg;
    cfg.sample_rate = 8000;
    cfg.fs = 1.0;
    const double omega = 2 * kPi * 1234.5;
    const std::size_t n = 4096;
    const double duration = double(n - 1) / cfg.sample_rate;
    const auto syn = synthesize({constant_track(1, omega * omega, 1.0, duration + 1)}, cfg, duration);
    ASSERT_EQ(syn.samples.size(), n);
    const auto mag = dft_magnitude(syn.samples);
    const double bin = 1234.5 * double(n) / cfg.sample_rate;
    EXPECT_LE(std::abs(double(argmax(mag)) - bin), 1.0);
    EXPECT_NEAR(*std::max_element(syn.samples.begin(), syn.samples.end()), 0.9, 1e-3);
    EXPECT_NEAR(syn.raw_peak, 1.0, 1e-3);
}

TEST(Synthesize, TwoEqualTracksGiveEqualPeaks) {
    WaveformConfig cfg;
    cfg.sample_rate = 8000;
    cfg.fs = 2.0;
    const std::size_t n = 4000;
    const double duration = double(n - 1) / cfg.sample_rate;
    // both frequencies sit exactly on bins: 500 Hz and 1500 Hz
    auto lam = [&](double hz) { return std::pow(2 * kPi * hz / cfg.fs, 2); };
    const auto syn = synthesize({constant_track(1, lam(500), 0.5, 1), constant_track(2, lam(1500), 0.5, 1)}, cfg,
                                duration);
    const auto mag = dft_magnitude(syn.samples);
    const double a = mag[250], b = mag[750];
    EXPECT_NEAR(a / b, 1.0, 0.01);
    for (std::size_t k = 0; k < mag.size(); ++k)
        if (k != 250 && k != 750) {
            EXPECT_LT(mag[k], 0.05 * a);
        }
}

TEST(Synthesize, ZeroAmplitudeIsSilent) {
    WaveformConfig cfg;
    const auto syn = synthesize({constant_track(1, 1.0, 0.0, 1.0)}, cfg, 0.01);
    EXPECT_TRUE(syn.silent);
    EXPECT_EQ(syn.samples.size(), 442u);
    for (double s : syn.samples) EXPECT_EQ(s, 0.0);
    EXPECT_TRUE(synthesize({}, cfg, 0.01).silent);
}

TEST(Synthesize, PartialsAboveNyquistAreMuted) {
    WaveformConfig cfg;
    cfg.sample_rate = 1000;
    cfg.fs = 1.0;
    const double above = std::pow(2 * kPi * 600, 2);
    EXPECT_TRUE(synthesize({constant_track(1, above, 1.0, 1.0)}, cfg, 0.5).silent);
}

TEST(Synthesize, GlidingTrackFollowsTheIntegratedPhase) {
    // Lambda rising linearly: phase = fs * integral sqrt(Lambda), compare with the closed form
    WaveformConfig cfg;
    cfg.sample_rate = 20000;
    cfg.fs = 100.0;
    cfg.peak = 1.0;
    const WaveTrack t{1, {{0.0, 1.0, 1.0}, {1.0, 4.0, 1.0}}};
    const auto syn = synthesize({t, WaveTrack{2, {{0.0, 0.0, 0.0}, {2.0, 0.0, 0.0}}}}, cfg, 1.0);
    auto phase = [&](double s) {
        // integral of sqrt(1 + 3 s) = (2 / 9) ((1 + 3 s)^1.5 - 1)
        return cfg.fs * 2.0 / 9.0 * (std::pow(1 + 3 * s, 1.5) - 1);
    };
    double worst = 0;
    for (std::size_t i = 0; i + 1 < syn.samples.size(); i += 97)
        worst = std::max(worst, std::abs(syn.samples[i] * syn.raw_peak - std::sin(phase(double(i) / cfg.sample_rate))));
    EXPECT_LT(worst, 1e-4);
}

TEST(Synthesize, RejectsBadConfigs) {
    WaveformConfig cfg;
    cfg.fs = 0;
    EXPECT_THROW(synthesize({}, cfg, 1.0), SoundError);
    cfg = {};
    cfg.peak = 1.5;
    EXPECT_THROW(synthesize({}, cfg, 1.0), SoundError);
    cfg = {};
    cfg.modes = 0;
    EXPECT_THROW(cfg.check(), SoundError);
    EXPECT_THROW(synthesize({}, WaveformConfig{}, -1.0), SoundError);
}

// --- streaming evolution -----------------------------------------------------------------

TEST(WaveEvolution, FrozenSurfaceMatchesDirectEvolution) {
    const auto m = icosphere(1);
    const auto pairs = full_pairs(m);
    WaveformConfig cfg;
    cfg.fs = 3.0;
    cfg.pluck_vertex = 5;
    WaveEvolution ev(cfg);
    ev.begin(m, pairs, 0.0);
    std::vector<VertexId> identity(42);
    std::iota(identity.begin(), identity.end(), 0);
    for (int i = 1; i <= 4; ++i) ev.step(m, identity, pairs, 0.1 * i);
    const auto direct = evolve_modes(decompose(pluck(m, 5), pairs, 3.0), 0.4);
    const auto stepped = reconstruct(ev.state());
    EXPECT_LT((direct.u - stepped.u).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(ev.history().size(), 5u);
    ev.step(SurfaceMesh{}, {}, {}, 0.5);
    EXPECT_EQ(ev.end_time(), 0.5);
    EXPECT_THROW(ev.step(m, identity, pairs, 0.2), SoundError);
    WaveEvolution fresh(cfg);
    EXPECT_THROW(fresh.step(m, identity, pairs, 0.1), SoundError);
}

// --- WAV -------------------------------------------------------------------------------

TEST(Wav, OneSecondOfSilence) {
    const auto bytes = wav_bytes(std::vector<double>(44100, 0.0), 44100);
    EXPECT_EQ(bytes.size(), 44u + 88200u);
    EXPECT_EQ(bytes.substr(0, 4), "RIFF");
    EXPECT_EQ(bytes.substr(8, 8), "WAVEfmt ");
    EXPECT_EQ(bytes.substr(36, 4), "data");
}

TEST(Wav, QuantizationRule) {
    EXPECT_EQ(to_pcm16(1.0), 32767);
    EXPECT_EQ(to_pcm16(-1.0), -32767);
    EXPECT_EQ(to_pcm16(0.5 / 32767), 1);
    EXPECT_EQ(to_pcm16(-0.5 / 32767), -1);
    EXPECT_EQ(to_pcm16(0.49 / 32767), 0);
    EXPECT_THROW(to_pcm16(1.0001), SoundError);
    EXPECT_THROW(to_pcm16(std::nan("")), SoundError);
}

TEST(Wav, HeaderFields) {
    const auto b = wav_bytes({0.0, 1.0, -1.0}, 22050);
    auto u32 = [&](std::size_t at) {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + i]);
        return v;
    };
    EXPECT_EQ(u32(4), 36u + 6u);
    EXPECT_EQ(u32(16), 16u);
    EXPECT_EQ(u32(24), 22050u);
    EXPECT_EQ(u32(28), 44100u);
    EXPECT_EQ(u32(40), 6u);
    EXPECT_EQ(static_cast<unsigned char>(b[46]), 0xff);
    EXPECT_EQ(static_cast<unsigned char>(b[47]), 0x7f);
}

TEST(Wav, RoundTrip) {
    const auto dir = testutil::scratch_dir();
    std::vector<double> x;
    for (int i = 0; i < 1000; ++i) x.push_back(std::sin(0.01 * i * i) * 0.99);
    write_wav(x, 44100, (dir / "a.wav").string());
    const auto w = read_wav((dir / "a.wav").string());
    EXPECT_EQ(w.sample_rate, 44100);
    const auto y = w.samples();
    ASSERT_EQ(y.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_LE(std::abs(y[i] - x[i]), 1.0 / 32768);
        EXPECT_EQ(w.pcm[i], to_pcm16(x[i]));
    }
    // writing the decoded samples again reproduces the file bit for bit
    write_wav(y, 44100, (dir / "b.wav").string());
    EXPECT_EQ(testutil::slurp(dir / "a.wav"), testutil::slurp(dir / "b.wav"));
}

TEST(Wav, ReadRejectsOtherFiles) {
    const auto dir = testutil::scratch_dir();
    testutil::write(dir / "x.wav", "RIFF not really");
    EXPECT_THROW(read_wav((dir / "x.wav").string()), SoundError);
    EXPECT_THROW(read_wav((dir / "missing.wav").string()), SoundError);
    EXPECT_THROW(write_wav({0.0}, 8000, (dir / "no" / "such" / "dir.wav").string()), SoundError);
}
