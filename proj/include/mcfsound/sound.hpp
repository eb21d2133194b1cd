#pragma once

#include "mcfsound/mesh.hpp"
#include "mcfsound/parallel.hpp"
#include "mcfsound/spectrum.hpp"

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <vector>

namespace mcfsound {

struct WaveformConfig {
    double fs = 2 * std::numbers::pi * 440;  // lambda = 1 sounds at 440 Hz
    int modes = 50;
    int sample_rate = 44100;
    VertexId pluck_vertex = 0;
    double peak = 0.9;
    unsigned threads = 1;

    void check() const {
        if (!(fs > 0)) throw SoundError("frequency scale must be positive");
        if (modes < 1) throw SoundError("mode count must be at least 1");
        if (sample_rate < 1) throw SoundError("sample rate must be positive");
        if (!(peak >= 0 && peak <= 1)) throw SoundError("peak normalization must lie in [0, 1]");
    }
};

/// Displacement and velocity, one entry per live vertex in index order.
struct WaveState {
    Eigen::VectorXd u, ut;
};

/// Unit displacement at v, zero elsewhere, at rest.
inline WaveState pluck(const SurfaceMesh& mesh, VertexId v) {
    if (!mesh.vertex_alive(v)) throw SoundError("pluck vertex " + std::to_string(v) + " is not a live vertex", v);
    const auto live = mesh.live_vertices();
    WaveState s;
    s.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(live.size()));
    s.ut = s.u;
    s.u(std::lower_bound(live.begin(), live.end(), v) - live.begin()) = 1.0;
    return s;
}

/// Modal coefficients of a wave on one snapshot. Oscillatory modes carry
/// c+ (c- is its conjugate); zero modes evolve as offset + rate (t - time).
struct ModalState {
    double time = 0;
    double fs = 1;
    Eigen::VectorXd lambda;
    Eigen::MatrixXd basis;  // columns are the eigenvectors
    Eigen::VectorXcd c_plus;
    std::vector<bool> zero;
    Eigen::VectorXd offset, rate;

    Eigen::Index size() const { return lambda.size(); }
    double omega(Eigen::Index k) const { return fs * std::sqrt(std::max(lambda(k), 0.0)); }
};

inline ModalState decompose(const WaveState& w, const EigenPairSet& pairs, double fs, double time = 0) {
    if (w.u.size() != pairs.vectors.rows() || w.ut.size() != pairs.vectors.rows())
        throw SoundError("wave state and eigenvectors live on different snapshots");
    const double tol = zero_mode_tolerance(pairs);
    ModalState m;
    m.time = time;
    m.fs = fs;
    m.lambda = pairs.values;
    m.basis = pairs.vectors;
    const Eigen::Index n = pairs.values.size();
    const Eigen::VectorXd a = pairs.vectors.transpose() * w.u;
    const Eigen::VectorXd b = pairs.vectors.transpose() * w.ut;
    m.c_plus = Eigen::VectorXcd::Zero(n);
    m.offset = Eigen::VectorXd::Zero(n);
    m.rate = Eigen::VectorXd::Zero(n);
    m.zero.assign(n, false);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (pairs.values(k) < tol) {
            m.zero[k] = true;
            m.offset(k) = a(k);
            m.rate(k) = b(k);
            continue;
        }
        // [[1, 1], [i omega, -i omega]] (c+, c-) = (a, b)
        m.c_plus(k) = {0.5 * a(k), -0.5 * b(k) / m.omega(k)};
    }
    return m;
}

/// Exact modal evolution by dt.
inline ModalState advance_modes(const ModalState& m, double dt) {
    if (!(dt >= 0)) throw SoundError("negative evolution step");
    ModalState out = m;
    out.time = m.time + dt;
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        if (m.zero[k]) {
            out.offset(k) = m.offset(k) + m.rate(k) * dt;
            continue;
        }
        out.c_plus(k) = m.c_plus(k) * std::polar(1.0, m.omega(k) * dt);
    }
    return out;
}

/// Modal amplitudes of displacement and velocity at the state's time.
inline void modal_values(const ModalState& m, Eigen::VectorXd& a, Eigen::VectorXd& b) {
    a.resize(m.size());
    b.resize(m.size());
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        if (m.zero[k]) {
            a(k) = m.offset(k);
            b(k) = m.rate(k);
        } else {
            a(k) = 2 * m.c_plus(k).real();
            b(k) = -2 * m.omega(k) * m.c_plus(k).imag();
        }
    }
}

inline WaveState reconstruct(const ModalState& m) {
    Eigen::VectorXd a, b;
    modal_values(m, a, b);
    return {m.basis * a, m.basis * b};
}

inline WaveState evolve_modes(const ModalState& m, double dt) { return reconstruct(advance_modes(m, dt)); }

/// lambda a^2 + b^2 / fs^2 per mode.
inline Eigen::VectorXd modal_energy(const ModalState& m) {
    Eigen::VectorXd a, b;
    modal_values(m, a, b);
    return (m.lambda.array().max(0.0) * a.array().square() + b.array().square() / (m.fs * m.fs)).matrix();
}

/// Carries per-vertex values to the next snapshot: child i takes the value
/// of its parent.
inline Eigen::VectorXd project(const Eigen::VectorXd& values, const std::vector<VertexId>& parents) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(parents.size()));
    for (std::size_t i = 0; i < parents.size(); ++i) {
        const VertexId p = parents[i];
        if (p < 0 || p >= values.size())
            throw SoundError("vertex " + std::to_string(i) + " has no parent in the previous snapshot",
                             static_cast<long>(i));
        out(static_cast<Eigen::Index>(i)) = values(p);
    }
    return out;
}

inline WaveState project(const WaveState& w, const std::vector<VertexId>& parents) {
    return {project(w.u, parents), project(w.ut, parents)};
}

// --- tracks -------------------------------------------------------------------

/// Modal data recorded at one snapshot.
struct ModalSample {
    double time = 0;
    Eigen::VectorXd lambda;
    Eigen::VectorXd amplitude;  // 2 |c+|, zero for zero modes
};

inline ModalSample sample_of(const ModalState& m) {
    ModalSample s;
    s.time = m.time;
    s.lambda = m.lambda;
    s.amplitude = Eigen::VectorXd::Zero(m.size());
    for (Eigen::Index k = 0; k < m.size(); ++k)
        if (!m.zero[k]) s.amplitude(k) = 2 * std::abs(m.c_plus(k));
    return s;
}

struct TrackNode {
    double t, lambda, amplitude;
};

/// Piecewise-linear eigenvalue and amplitude of the k-th smallest mode.
struct WaveTrack {
    int mode = 0;
    std::vector<TrackNode> nodes;

    double start() const { return nodes.front().t; }
    double end() const { return nodes.back().t; }
};

/// Index-matched tracks over a run. A track whose mode disappears (or
/// whose run ends at end_time) fades to zero over one snapshot interval.
inline std::vector<WaveTrack> build_wavetracks(const std::vector<ModalSample>& history, double end_time) {
    if (history.empty()) throw SoundError("no modal history to build tracks from");
    for (std::size_t i = 1; i < history.size(); ++i)
        if (!(history[i].time > history[i - 1].time)) throw SoundError("modal history times must increase");
    Eigen::Index modes = 0;
    for (const auto& h : history) modes = std::max(modes, h.lambda.size());
    std::vector<WaveTrack> tracks;
    for (Eigen::Index k = 0; k < modes; ++k) {
        WaveTrack tr;
        tr.mode = static_cast<int>(k);
        for (std::size_t i = 0; i < history.size(); ++i) {
            const auto& h = history[i];
            const bool has = k < h.lambda.size();
            if (has) {
                tr.nodes.push_back({h.time, std::max(h.lambda(k), 0.0), h.amplitude(k)});
                continue;
            }
            if (!tr.nodes.empty()) {
                tr.nodes.push_back({h.time, tr.nodes.back().lambda, 0.0});
                break;
            }
        }
        if (tr.nodes.empty()) continue;
        if (tr.nodes.back().amplitude != 0 || tr.nodes.size() == 1) {
            if (end_time > tr.nodes.back().t)
                tr.nodes.push_back({end_time, tr.nodes.back().lambda, 0.0});
            else
                tr.nodes.back().amplitude = 0;
        }
        tracks.push_back(std::move(tr));
    }
    return tracks;
}

/// Linear interpolation cursor over a track, for increasing query times.
class TrackCursor {
  public:
    explicit TrackCursor(const WaveTrack& t) : nodes_(t.nodes) {}

    /// (lambda, amplitude) at time t; zero amplitude outside the track.
    std::pair<double, double> at(double t) {
        if (nodes_.empty() || t < nodes_.front().t || t > nodes_.back().t)
            return {nodes_.empty() ? 0.0 : (t < nodes_.front().t ? nodes_.front().lambda : nodes_.back().lambda), 0.0};
        while (i_ + 1 < nodes_.size() && nodes_[i_ + 1].t < t) ++i_;
        if (i_ + 1 == nodes_.size()) return {nodes_.back().lambda, nodes_.back().amplitude};
        const auto& a = nodes_[i_];
        const auto& b = nodes_[i_ + 1];
        const double s = (t - a.t) / (b.t - a.t);
        return {a.lambda + s * (b.lambda - a.lambda), a.amplitude + s * (b.amplitude - a.amplitude)};
    }

  private:
    const std::vector<TrackNode>& nodes_;
    std::size_t i_ = 0;
};

struct Synthesis {
    std::vector<double> samples;
    double raw_peak = 0;
    bool silent = false;
};

/// W(t) = sum_k C_k(t) sin(fs * integral of sqrt(Lambda_k)), sampled on
/// [0, duration]. The phase integral uses the trapezoid rule per sample.
/// Partials above the Nyquist frequency are muted. The result is scaled to
/// the configured peak.
inline Synthesis synthesize(const std::vector<WaveTrack>& tracks, const WaveformConfig& cfg, double duration) {
    cfg.check();
    if (!(duration >= 0)) throw SoundError("negative duration");
    const auto n = static_cast<std::size_t>(std::floor(duration * cfg.sample_rate * (1 + 1e-12))) + 1;
    const double h = 1.0 / cfg.sample_rate;
    const double nyquist = std::numbers::pi * cfg.sample_rate;  // rad/s
    std::vector<std::vector<double>> partial(tracks.size());
    parallel_for(tracks.size(), cfg.threads, [&](std::size_t j) {
        auto& buf = partial[j];
        buf.assign(n, 0.0);
        TrackCursor cur(tracks[j]);
        double phase = 0, prev_rate = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto [lambda, amp] = cur.at(double(i) * h);
            const double rate = cfg.fs * std::sqrt(lambda);
            if (i > 0) phase += 0.5 * (prev_rate + rate) * h;
            prev_rate = rate;
            if (amp != 0 && rate < nyquist) buf[i] = amp * std::sin(phase);
        }
    });
    Synthesis out;
    out.samples.assign(n, 0.0);
    for (const auto& buf : partial)
        for (std::size_t i = 0; i < n; ++i) out.samples[i] += buf[i];
    for (double s : out.samples) out.raw_peak = std::max(out.raw_peak, std::abs(s));
    if (!(out.raw_peak > 0)) {
        out.silent = true;
        return out;
    }
    const double g = cfg.peak / out.raw_peak;
    for (double& s : out.samples) s *= g;
    return out;
}

// --- streaming evolution over snapshots -----------------------------------------

/// Carries a plucked wave through a sequence of snapshots: evolve to the
/// next snapshot time, project through the parent map, decompose again.
class WaveEvolution {
  public:
    explicit WaveEvolution(WaveformConfig cfg) : cfg_(std::move(cfg)) { cfg_.check(); }

    void begin(const SurfaceMesh& mesh, const EigenPairSet& pairs, double time) {
        state_ = decompose(pluck(mesh, cfg_.pluck_vertex), pairs, cfg_.fs, time);
        history_.push_back(sample_of(state_));
    }

    /// Next snapshot; an empty mesh ends the evolution.
    void step(const SurfaceMesh& mesh, const std::vector<VertexId>& parents, const EigenPairSet& pairs, double time) {
        if (history_.empty()) throw SoundError("wave evolution has not been started");
        if (!(time > state_.time)) throw SoundError("snapshot times must increase");
        if (mesh.empty()) {
            end_time_ = time;
            return;
        }
        const WaveState moved = project(evolve_modes(state_, time - state_.time), parents);
        state_ = decompose(moved, pairs, cfg_.fs, time);
        history_.push_back(sample_of(state_));
    }

    const ModalState& state() const { return state_; }
    const std::vector<ModalSample>& history() const { return history_; }
    double end_time() const { return std::max(end_time_, history_.empty() ? 0.0 : history_.back().time); }

  private:
    WaveformConfig cfg_;
    ModalState state_;
    std::vector<ModalSample> history_;
    double end_time_ = 0;
};

}  // namespace mcfsound
