#pragma once

#include "mcfsound/flow.hpp"
#include "mcfsound/mesh_io.hpp"
#include "mcfsound/sound.hpp"
#include "mcfsound/spectrum.hpp"
#include "mcfsound/wav.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace mcfsound {

namespace fs = std::filesystem;

struct RunConfig {
    fs::path input;
    MeshFormat format = MeshFormat::Auto;
    fs::path out_dir = "mcfsound_out";
    FlowConfig flow;
    SpectrumOptions spectrum;
    WaveformConfig wave;

    void check() const {
        if (!(flow.checkpoint_interval > 0)) throw Error("cli", "checkpoint_interval must be positive");
        if (!(flow.cs > 0)) throw Error("cli", "cs must be positive");
        if (!(flow.dt_max > 0)) throw Error("cli", "dt_max must be positive");
        if (!(flow.accuracy_fraction > 0)) throw Error("cli", "accuracy_fraction must be positive");
        if (flow.diffusion_number < 0) throw Error("cli", "diffusion_number must be non-negative");
        if (!(flow.diffusion_expiry > 0)) throw Error("cli", "diffusion_expiry must be positive");
        const auto& t = flow.thresholds;
        if (!(t.edge_fraction > 0 && t.angle_degrees > 0 && t.face_fraction > 0))
            throw Error("cli", "merge thresholds must be positive");
        if (!(flow.vanish_area_fraction > 0)) throw Error("cli", "vanish_area_frac must be positive");
        if (flow.max_steps < 1) throw Error("cli", "max_steps must be positive");
        if (spectrum.modes < 1) throw Error("cli", "modes must be at least 1");
        wave.check();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw Error("cli", "setting '" + key + "' expects a number, got '" + v + "'");
    return x;
}

inline long parse_long(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long x = 0;
    try {
        x = std::stol(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw Error("cli", "setting '" + key + "' expects an integer, got '" + v + "'");
    return x;
}

}  // namespace detail

/// Setting names accepted in config files (and, with dashes, as flags).
inline const std::vector<std::string>& setting_keys() {
    static const std::vector<std::string> keys = {
        "input",          "format",          "out_dir",          "checkpoint_interval", "cs",
        "edge_frac",      "angle_deg",       "face_frac",        "modes",               "fs",
        "sample_rate",    "pluck_vertex",    "max_steps",        "seed",                "threads",
        "dt_max",         "accuracy_fraction", "diffusion_number", "diffusion_expiry",  "vanish_area_frac",
        "vanish_min_vertices", "mass",       "peak"};
    return keys;
}

inline void apply_setting(RunConfig& c, std::string key, const std::string& value) {
    std::replace(key.begin(), key.end(), '-', '_');
    const auto num = [&] { return detail::parse_double(key, value); };
    const auto integer = [&] { return detail::parse_long(key, value); };
    if (key == "input") c.input = value;
    else if (key == "format") c.format = parse_mesh_format(value);
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "checkpoint_interval") c.flow.checkpoint_interval = num();
    else if (key == "cs") c.flow.cs = num();
    else if (key == "edge_frac") c.flow.thresholds.edge_fraction = num();
    else if (key == "angle_deg") c.flow.thresholds.angle_degrees = num();
    else if (key == "face_frac") c.flow.thresholds.face_fraction = num();
    else if (key == "modes") c.spectrum.modes = c.wave.modes = static_cast<int>(integer());
    else if (key == "fs") c.wave.fs = num();
    else if (key == "sample_rate") c.wave.sample_rate = static_cast<int>(integer());
    else if (key == "pluck_vertex") c.wave.pluck_vertex = static_cast<VertexId>(integer());
    else if (key == "max_steps") c.flow.max_steps = integer();
    else if (key == "seed") c.spectrum.seed = static_cast<std::uint64_t>(integer());
    else if (key == "threads") {
        const long t = integer();
        if (t < 1) throw Error("cli", "threads must be at least 1");
        c.flow.threads = c.wave.threads = static_cast<unsigned>(t);
    }
    else if (key == "dt_max") c.flow.dt_max = num();
    else if (key == "accuracy_fraction") c.flow.accuracy_fraction = num();
    else if (key == "diffusion_number") c.flow.diffusion_number = num();
    else if (key == "diffusion_expiry") c.flow.diffusion_expiry = num();
    else if (key == "vanish_area_frac") c.flow.vanish_area_fraction = num();
    else if (key == "vanish_min_vertices") c.flow.vanish_min_vertices = static_cast<int>(integer());
    else if (key == "mass") c.spectrum.normalization = parse_mass_normalization(value);
    else if (key == "peak") c.wave.peak = num();
    else throw Error("cli", "unknown setting '" + key + "'");
}

/// key = value lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cli", "cannot read config file '" + path.string() + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("cli", path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return out;
}

inline nlohmann::ordered_json config_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["input"] = c.input.string();
    j["out_dir"] = c.out_dir.string();
    j["checkpoint_interval"] = c.flow.checkpoint_interval;
    j["cs"] = c.flow.cs;
    j["edge_frac"] = c.flow.thresholds.edge_fraction;
    j["angle_deg"] = c.flow.thresholds.angle_degrees;
    j["face_frac"] = c.flow.thresholds.face_fraction;
    j["dt_max"] = c.flow.dt_max;
    j["accuracy_fraction"] = c.flow.accuracy_fraction;
    j["diffusion_number"] = c.flow.diffusion_number;
    j["diffusion_expiry"] = c.flow.diffusion_expiry;
    j["vanish_area_frac"] = c.flow.vanish_area_fraction;
    j["vanish_min_vertices"] = c.flow.vanish_min_vertices;
    j["max_steps"] = c.flow.max_steps;
    j["modes"] = c.spectrum.modes;
    j["mass"] = c.spectrum.normalization == MassNormalization::Lumped ? "lumped" : "none";
    j["seed"] = c.spectrum.seed;
    j["fs"] = c.wave.fs;
    j["sample_rate"] = c.wave.sample_rate;
    j["pluck_vertex"] = c.wave.pluck_vertex;
    j["peak"] = c.wave.peak;
    j["threads"] = c.flow.threads;
    return j;
}

// --- file names -----------------------------------------------------------------

inline std::string numbered(const char* pattern, int i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, i);
    return buf;
}

inline fs::path frame_path(const fs::path& dir, int i) { return dir / numbered("frame_%06d.obj", i); }
inline fs::path parents_path(const fs::path& dir, int i) { return dir / numbered("frame_%06d.parents", i); }
inline fs::path track_path(const fs::path& dir, int k) { return dir / "tracks" / numbered("track_%03d.csv", k); }

inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// --- flow stage -----------------------------------------------------------------

struct FrameInfo {
    int index = 0;
    double time = 0;
    std::size_t vertices = 0, faces = 0;
    int components = 0;
};

struct FlowSummary {
    FlowResult result;
    std::vector<FrameInfo> frames;
};

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cli", "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("cli", "write failed for '" + path.string() + "'");
}

/// Flows the mesh and writes the frames, their parent maps, frames.csv and
/// events.log into dir.
inline FlowSummary run_flow_stage(const SurfaceMesh& input, const RunConfig& cfg, std::ostream* progress = nullptr) {
    fs::create_directories(cfg.out_dir);
    FlowSummary out;
    out.result = run_to_extinction(input, cfg.flow, [&](const Snapshot& s) {
        export_obj(s.mesh, frame_path(cfg.out_dir, s.index));
        if (s.index > 0) {
            std::string text;
            for (VertexId p : s.parents) text += std::to_string(p) + "\n";
            write_text(parents_path(cfg.out_dir, s.index), text);
        }
        out.frames.push_back({s.index, s.time, s.mesh.vertex_count(), s.mesh.face_count(), s.components});
        if (progress)
            *progress << "frame " << s.index << " t=" << s.time << " vertices=" << s.mesh.vertex_count()
                      << " components=" << s.components << "\n";
    });
    std::string csv = "frame,t,vertices,faces,components\n";
    for (const auto& f : out.frames)
        csv += std::to_string(f.index) + "," + g17(f.time) + "," + std::to_string(f.vertices) + "," +
               std::to_string(f.faces) + "," + std::to_string(f.components) + "\n";
    write_text(cfg.out_dir / "frames.csv", csv);
    std::string log;
    for (const auto& e : out.result.events) log += format_event(e) + "\n";
    write_text(cfg.out_dir / "events.log", log);
    return out;
}

inline std::vector<FrameInfo> read_frames_csv(const fs::path& dir) {
    std::ifstream in(dir / "frames.csv");
    if (!in) throw Error("cli", "missing " + (dir / "frames.csv").string() + " (run the flow stage first)");
    std::vector<FrameInfo> frames;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::istringstream ls(line);
        FrameInfo f;
        char c1, c2, c3, c4;
        if (!(ls >> f.index >> c1 >> f.time >> c2 >> f.vertices >> c3 >> f.faces >> c4 >> f.components))
            throw Error("cli", "malformed frames.csv line '" + line + "'");
        frames.push_back(f);
    }
    if (frames.empty()) throw Error("cli", "frames.csv lists no frames");
    return frames;
}

inline std::vector<VertexId> read_parents(const fs::path& path, std::size_t expected) {
    std::ifstream in(path);
    if (!in) throw Error("cli", "missing parent map " + path.string());
    std::vector<VertexId> parents;
    long p;
    while (in >> p) parents.push_back(static_cast<VertexId>(p));
    if (parents.size() != expected)
        throw Error("cli", path.string() + " has " + std::to_string(parents.size()) + " entries for " +
                               std::to_string(expected) + " vertices");
    return parents;
}

// --- spectra and sound ------------------------------------------------------------

inline std::string eigen_header(int modes) {
    std::string h = "frame,t,components,zero_modes";
    for (int k = 1; k <= modes; ++k) h += ",lambda_" + std::to_string(k);
    return h + "\n";
}

inline std::string eigen_row(int frame, double t, int components, const EigenPairSet& pairs, int modes) {
    std::string row = std::to_string(frame) + "," + g17(t) + "," + std::to_string(components) + "," +
                      std::to_string(pairs.size() ? zero_mode_count(pairs) : 0);
    for (int k = 0; k < modes; ++k) row += "," + (k < pairs.size() ? g17(pairs.values(k)) : std::string("nan"));
    return row + "\n";
}

/// Spectra of the saved frames in order. Each solve starts from the
/// previous frame's eigenvectors carried over by the parent map.
class SpectrumSeries {
  public:
    SpectrumSeries(fs::path dir, SpectrumOptions opts) : dir_(std::move(dir)), opts_(opts) {}

    struct Item {
        FrameInfo info;
        SurfaceMesh mesh;
        std::vector<VertexId> parents;
        EigenPairSet pairs;
    };

    Item next(const FrameInfo& info) {
        Item it;
        it.info = info;
        it.mesh = load_obj_verbatim(frame_path(dir_, info.index));
        if (it.mesh.vertex_count() != info.vertices)
            throw Error("cli", "frame " + std::to_string(info.index) + " does not match frames.csv");
        if (started_) it.parents = read_parents(parents_path(dir_, info.index), it.mesh.vertex_count());
        Eigen::MatrixXd warm;
        if (started_ && previous_.rows() > 0 && !it.mesh.empty()) {
            warm.resize(static_cast<Eigen::Index>(it.parents.size()), previous_.cols());
            for (std::size_t i = 0; i < it.parents.size(); ++i) warm.row(i) = previous_.row(it.parents[i]);
        }
        it.pairs = mesh_spectrum(it.mesh, opts_, warm);
        previous_ = it.pairs.vectors;
        started_ = true;
        return it;
    }

  private:
    fs::path dir_;
    SpectrumOptions opts_;
    Eigen::MatrixXd previous_;
    bool started_ = false;
};

struct AnalysisSummary {
    std::size_t samples = 0;
    double duration = 0;
    double raw_peak = 0;
    bool silent = false;
    int tracks = 0;
};

/// Which analysis outputs to produce from saved frames.
struct AnalysisTargets {
    bool eigenvalues = true;
    bool sound = true;
};

/// Computes the spectra of the saved frames and carries the plucked wave
/// through them; writes eigenvalues.csv, the track files and song.wav.
inline AnalysisSummary run_analysis_stage(const RunConfig& cfg, AnalysisTargets targets = {},
                                          std::ostream* progress = nullptr) {
    const auto frames = read_frames_csv(cfg.out_dir);
    SpectrumSeries series(cfg.out_dir, cfg.spectrum);
    WaveformConfig wcfg = cfg.wave;
    WaveEvolution wave(wcfg);
    std::string csv = eigen_header(cfg.spectrum.modes);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        auto it = series.next(frames[i]);
        if (targets.eigenvalues) csv += eigen_row(it.info.index, it.info.time, it.info.components, it.pairs, cfg.spectrum.modes);
        if (targets.sound) {
            if (i == 0)
                wave.begin(it.mesh, it.pairs, it.info.time);
            else
                wave.step(it.mesh, it.parents, it.pairs, it.info.time);
        }
        if (progress)
            *progress << "spectrum frame " << it.info.index << " modes=" << it.pairs.size()
                      << " iterations=" << it.pairs.iterations << "\n";
    }
    if (targets.eigenvalues) write_text(cfg.out_dir / "eigenvalues.csv", csv);
    AnalysisSummary out;
    if (!targets.sound) return out;

    const double end = frames.back().time;
    const auto tracks = build_wavetracks(wave.history(), std::max(end, wave.end_time()));
    fs::create_directories(cfg.out_dir / "tracks");
    for (const auto& tr : tracks) {
        std::string text = "t,lambda_" + std::to_string(tr.mode + 1) + ",amplitude_" + std::to_string(tr.mode + 1) + "\n";
        for (const auto& n : tr.nodes) text += g17(n.t) + "," + g17(n.lambda) + "," + g17(n.amplitude) + "\n";
        write_text(track_path(cfg.out_dir, tr.mode + 1), text);
    }
    const Synthesis syn = synthesize(tracks, wcfg, std::max(end, wave.end_time()));
    if (syn.silent) std::cerr << "warning: synthesized signal is silent\n";
    write_wav(syn.samples, wcfg.sample_rate, (cfg.out_dir / "song.wav").string());
    out.samples = syn.samples.size();
    out.duration = std::max(end, wave.end_time());
    out.raw_peak = syn.raw_peak;
    out.silent = syn.silent;
    out.tracks = static_cast<int>(tracks.size());
    return out;
}

inline nlohmann::ordered_json flow_json(const FlowSummary& f) {
    nlohmann::ordered_json j;
    j["completed"] = f.result.completed;
    if (!f.result.message.empty()) j["error"] = f.result.message;
    if (f.result.completed) j["extinction_time"] = f.result.extinction_time;
    j["frames"] = f.frames.size();
    const auto& s = f.result.stats;
    j["events"] = {{"merge", s.merges}, {"split", s.splits}, {"vanish", s.vanishes}};
    j["steps"] = s.steps;
    j["refreshes"] = s.refreshes;
    j["forced_merges"] = s.forced_merges;
    return j;
}

inline nlohmann::ordered_json analysis_json(const AnalysisSummary& a) {
    nlohmann::ordered_json j;
    j["tracks"] = a.tracks;
    j["samples"] = a.samples;
    j["duration"] = a.duration;
    j["raw_peak"] = a.raw_peak;
    j["silent"] = a.silent;
    return j;
}

}  // namespace mcfsound
