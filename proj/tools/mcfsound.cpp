#include "mcfsound/generators.hpp"
#include "mcfsound/pipeline.hpp"
#include "mcfsound/validate.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>

using namespace mcfsound;

namespace {

/// Settings given on the command line, applied after the config file.
struct SettingFlags {
    std::optional<std::string> config;
    std::map<std::string, std::string> values;

    void add_to(CLI::App* app) {
        app->add_option("--config", config, "key = value settings file (flags take precedence)");
        for (const auto& key : setting_keys()) {
            std::string flag = "--" + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            app->add_option_function<std::string>(
                flag, [this, key](const std::string& v) { values[key] = v; }, "see README");
        }
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (config)
            for (const auto& [k, v] : read_config_file(*config)) apply_setting(cfg, k, v);
        for (const auto& [k, v] : values) apply_setting(cfg, k, v);
        cfg.check();
        return cfg;
    }
};

SurfaceMesh load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw Error("cli", "no input mesh (use --input)");
    return load_mesh(cfg.input, cfg.format);
}

int report(const nlohmann::ordered_json& j, const fs::path& path) {
    write_text(path, j.dump(2) + "\n");
    return 0;
}

int cmd_run(const SettingFlags& flags, bool quiet) {
    const RunConfig cfg = flags.resolve();
    const SurfaceMesh mesh = load_input(cfg);
    std::ostream* progress = quiet ? nullptr : &std::cerr;
    const FlowSummary flow = run_flow_stage(mesh, cfg, progress);
    nlohmann::ordered_json j;
    j["config"] = config_json(cfg);
    j["flow"] = flow_json(flow);
    if (!flow.result.completed) {
        report(j, cfg.out_dir / "run.json");
        std::cerr << "error: " << flow.result.message << "\n";
        return 1;
    }
    j["sound"] = analysis_json(run_analysis_stage(cfg, {}, progress));
    report(j, cfg.out_dir / "run.json");
    std::cout << "extinction at t=" << flow.result.extinction_time << ", " << flow.frames.size() << " frames, "
              << flow.result.stats.merges << " merges, " << flow.result.stats.splits << " splits, "
              << flow.result.stats.vanishes << " vanishes\n";
    return 0;
}

int cmd_flow(const SettingFlags& flags, bool quiet) {
    const RunConfig cfg = flags.resolve();
    const SurfaceMesh mesh = load_input(cfg);
    const FlowSummary flow = run_flow_stage(mesh, cfg, quiet ? nullptr : &std::cerr);
    nlohmann::ordered_json j;
    j["config"] = config_json(cfg);
    j["flow"] = flow_json(flow);
    report(j, cfg.out_dir / "flow.json");
    if (!flow.result.completed) {
        std::cerr << "error: " << flow.result.message << "\n";
        return 1;
    }
    std::cout << "extinction at t=" << flow.result.extinction_time << ", " << flow.frames.size() << " frames\n";
    return 0;
}

int cmd_spectrum(const SettingFlags& flags, const std::optional<std::string>& out, bool quiet) {
    RunConfig cfg = flags.resolve();
    if (cfg.input.empty()) {
        // every saved frame of a flow run
        run_analysis_stage(cfg, {true, false}, quiet ? nullptr : &std::cerr);
        std::cout << "wrote " << (cfg.out_dir / "eigenvalues.csv").string() << "\n";
        return 0;
    }
    const SurfaceMesh mesh = load_input(cfg);
    const EigenPairSet pairs = mesh_spectrum(mesh, cfg.spectrum);
    int frame = -1;
    double t = kNaN;
    const std::string stem = cfg.input.stem().string();
    if (stem.rfind("frame_", 0) == 0) {
        frame = std::stoi(stem.substr(6));
        try {
            for (const auto& f : read_frames_csv(cfg.input.parent_path()))
                if (f.index == frame) t = f.time;
        } catch (const Error&) {
        }
    }
    const int components = connected_components(mesh).component_count;
    const std::string text = eigen_header(cfg.spectrum.modes) + eigen_row(frame, t, components, pairs, cfg.spectrum.modes);
    if (out)
        write_text(*out, text);
    else
        std::cout << text;
    return 0;
}

int cmd_sound(const SettingFlags& flags, bool quiet) {
    const RunConfig cfg = flags.resolve();
    const AnalysisSummary a = run_analysis_stage(cfg, {false, true}, quiet ? nullptr : &std::cerr);
    std::cout << "wrote " << (cfg.out_dir / "song.wav").string() << " (" << a.samples << " samples, " << a.tracks
              << " tracks)\n";
    return 0;
}

int cmd_validate(const std::string& input, const std::string& format) {
    const auto data = read_indexed(input, parse_mesh_format(format));
    const SurfaceMesh mesh = verbatim_mesh(data);
    const MeshReport r = validate(mesh);
    std::cout << "vertices=" << mesh.vertex_count() << " faces=" << mesh.face_count() << " " << r.summary() << "\n";
    for (const auto& [a, b] : r.boundary_edges) std::cout << "boundary edge " << a << "-" << b << "\n";
    for (const auto& [a, b] : r.nonmanifold_edges) std::cout << "non-manifold edge " << a << "-" << b << "\n";
    for (const auto& [a, b] : r.orientation_conflicts) std::cout << "orientation conflict " << a << "-" << b << "\n";
    for (VertexId v : r.nondisk_vertices) std::cout << "non-disk vertex " << v << "\n";
    for (VertexId v : r.isolated_vertices) std::cout << "isolated vertex " << v << "\n";
    for (FaceId f : r.degenerate_faces) std::cout << "degenerate face " << f << "\n";
    for (std::size_t c = 0; c < r.euler_characteristics.size(); ++c)
        std::cout << "component " << c << " euler=" << r.euler_characteristics[c] << "\n";
    return r.closed_manifold() ? 0 : 2;
}

int cmd_generate(const std::string& shape, int subdivisions, double radius, const std::string& output) {
    SurfaceMesh mesh;
    if (shape == "icosphere")
        mesh = icosphere(subdivisions, radius);
    else if (shape == "dumbbell")
        mesh = dumbbell();
    else if (shape == "tetrahedron")
        mesh = tetrahedron(radius);
    else if (shape == "octahedron")
        mesh = octahedron(radius);
    else if (shape == "icosahedron")
        mesh = icosahedron(radius);
    else
        throw Error("cli", "unknown shape '" + shape + "'");
    const fs::path out(output);
    const auto ext = out.extension().string();
    if (ext == ".obj")
        export_obj(mesh, out, 17);
    else if (ext == ".stl")
        write_stl_binary(to_soup(mesh), out);
    else
        throw Error("cli", "output must end in .obj or .stl");
    std::cout << shape << ": " << mesh.vertex_count() << " vertices, " << mesh.face_count() << " faces -> " << output
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean curvature flow of closed surfaces and the sound of their shrinking spectra"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "no progress output");

    SettingFlags run_flags, flow_flags, spectrum_flags, sound_flags;
    auto* run = app.add_subcommand("run", "flow to extinction, then spectra and sound");
    run_flags.add_to(run);
    auto* flow = app.add_subcommand("flow", "flow to extinction and save frames");
    flow_flags.add_to(flow);
    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of a mesh file, or of every saved frame");
    spectrum_flags.add_to(spectrum);
    std::optional<std::string> spectrum_out;
    spectrum->add_option("--out", spectrum_out, "CSV destination for a single mesh (default stdout)");
    auto* sound = app.add_subcommand("sound", "resynthesize song.wav from saved frames");
    sound_flags.add_to(sound);

    std::string v_input, v_format = "auto";
    auto* val = app.add_subcommand("validate", "closed-manifold checks");
    val->add_option("--input", v_input, "mesh file")->required();
    val->add_option("--format", v_format, "auto, obj, stl-ascii or stl-binary");

    std::string g_shape = "icosphere", g_output;
    int g_subdiv = 4;
    double g_radius = 1.0;
    auto* gen = app.add_subcommand("generate", "write a test surface");
    gen->add_option("--shape", g_shape, "icosphere, dumbbell, tetrahedron, octahedron or icosahedron");
    gen->add_option("--subdivisions", g_subdiv, "icosphere subdivision level");
    gen->add_option("--radius", g_radius, "radius or scale");
    gen->add_option("--output", g_output, ".obj or .stl path")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(run_flags, quiet);
        if (*flow) return cmd_flow(flow_flags, quiet);
        if (*spectrum) return cmd_spectrum(spectrum_flags, spectrum_out, quiet);
        if (*sound) return cmd_sound(sound_flags, quiet);
        if (*val) return cmd_validate(v_input, v_format);
        if (*gen) return cmd_generate(g_shape, g_subdiv, g_radius, g_output);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
