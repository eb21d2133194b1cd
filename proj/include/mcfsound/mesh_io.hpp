#pragma once

#include "mcfsound/validate.hpp"

#include <bit>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <unordered_map>

namespace mcfsound {

enum class MeshFormat { Auto, StlBinary, StlAscii, Obj };

inline MeshFormat parse_mesh_format(const std::string& s) {
    if (s.empty() || s == "auto") return MeshFormat::Auto;
    if (s == "stl-binary") return MeshFormat::StlBinary;
    if (s == "stl-ascii") return MeshFormat::StlAscii;
    if (s == "obj") return MeshFormat::Obj;
    throw MeshError("unknown mesh format '" + s + "' (expected auto, stl-binary, stl-ascii, obj)");
}

struct LoadOptions {
    // Weld tolerance for STL triangle soup, relative to the bounding-box diagonal.
    double weld_relative_tolerance = 1e-9;
};

using TriangleSoup = std::vector<std::array<Vec3, 3>>;

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MeshError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t le_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

inline float le_f32(const unsigned char* p) { return std::bit_cast<float>(le_u32(p)); }

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline bool looks_binary_stl(const std::string& data) {
    if (data.size() < 84) return false;
    const auto n = le_u32(reinterpret_cast<const unsigned char*>(data.data()) + 80);
    return data.size() == 84 + 50ull * n;
}

inline TriangleSoup parse_stl_binary(const std::string& data) {
    if (data.size() < 84) throw MeshError("binary STL shorter than its 84-byte header");
    const auto* p = reinterpret_cast<const unsigned char*>(data.data());
    const std::uint32_t n = le_u32(p + 80);
    if (data.size() < 84 + 50ull * n)
        throw MeshError("binary STL truncated: header declares " + std::to_string(n) + " facets");
    TriangleSoup soup(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const unsigned char* rec = p + 84 + 50ull * i + 12;  // skip the stored normal
        for (int k = 0; k < 3; ++k)
            soup[i][k] = Vec3(le_f32(rec + 12 * k), le_f32(rec + 12 * k + 4), le_f32(rec + 12 * k + 8));
    }
    return soup;
}

inline TriangleSoup parse_stl_ascii(const std::string& data) {
    std::istringstream in(data);
    std::string tok;
    in >> tok;
    if (tok != "solid") throw MeshError("ASCII STL must start with 'solid'");
    std::vector<Vec3> corners;
    while (in >> tok) {
        if (tok != "vertex") continue;
        Vec3 v;
        if (!(in >> v.x() >> v.y() >> v.z())) throw MeshError("malformed 'vertex' record in ASCII STL");
        corners.push_back(v);
    }
    if (corners.size() % 3 != 0) throw MeshError("ASCII STL vertex count is not a multiple of 3");
    if (corners.empty()) throw MeshError("ASCII STL contains no facets");
    TriangleSoup soup(corners.size() / 3);
    for (std::size_t i = 0; i < soup.size(); ++i) soup[i] = {corners[3 * i], corners[3 * i + 1], corners[3 * i + 2]};
    return soup;
}

/// Weld soup corners that coincide within `tol` (first occurrence wins).
inline std::pair<std::vector<Vec3>, std::vector<Triangle>> weld(const TriangleSoup& soup, double tol) {
    std::vector<Vec3> positions;
    std::vector<Triangle> faces;
    const double cell = tol > 0 ? tol : 1.0;
    struct KeyHash {
        std::size_t operator()(const std::array<long long, 3>& k) const {
            std::size_t h = 1469598103934665603ull;
            for (auto x : k) h = (h ^ std::size_t(x)) * 1099511628211ull;
            return h;
        }
    };
    std::unordered_map<std::array<long long, 3>, std::vector<VertexId>, KeyHash> grid;
    auto key_of = [&](const Vec3& p) {
        return std::array<long long, 3>{(long long)std::floor(p.x() / cell), (long long)std::floor(p.y() / cell),
                                        (long long)std::floor(p.z() / cell)};
    };
    auto find_or_add = [&](const Vec3& p) -> VertexId {
        const auto k = key_of(p);
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = -1; dy <= 1; ++dy)
                for (long long dz = -1; dz <= 1; ++dz) {
                    auto it = grid.find({k[0] + dx, k[1] + dy, k[2] + dz});
                    if (it == grid.end()) continue;
                    for (VertexId v : it->second)
                        if ((positions[v] - p).norm() <= tol) return v;
                }
        const auto id = static_cast<VertexId>(positions.size());
        positions.push_back(p);
        grid[k].push_back(id);
        return id;
    };
    for (const auto& tri : soup) {
        Triangle t{find_or_add(tri[0]), find_or_add(tri[1]), find_or_add(tri[2])};
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;  // collapsed by welding
        faces.push_back(t);
    }
    return {std::move(positions), std::move(faces)};
}

inline std::pair<std::vector<Vec3>, std::vector<Triangle>> parse_obj(const std::string& data) {
    std::vector<Vec3> positions;
    std::vector<Triangle> faces;
    std::istringstream in(data);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z())) throw MeshError("malformed OBJ vertex", lineno);
            positions.push_back(p);
        } else if (tag == "f") {
            std::vector<long> idx;
            std::string item;
            while (ls >> item) {
                long i = 0;
                try {
                    i = std::stol(item.substr(0, item.find('/')));
                } catch (const std::exception&) {
                    throw MeshError("malformed OBJ face index '" + item + "'", lineno);
                }
                if (i < 0) i = long(positions.size()) + 1 + i;
                if (i < 1 || i > long(positions.size())) throw MeshError("OBJ face index out of range", lineno);
                idx.push_back(i - 1);
            }
            if (idx.size() != 3) throw MeshError("OBJ face is not a triangle", lineno);
            faces.push_back({VertexId(idx[0]), VertexId(idx[1]), VertexId(idx[2])});
        }
    }
    return {std::move(positions), std::move(faces)};
}

}  // namespace detail

/// Make face orientation consistent within each component by breadth-first
/// propagation, then flip any component with negative signed volume so that
/// normals point outward. Requires every edge to have exactly two faces.
inline void orient_outward(SurfaceMesh& mesh) {
    std::vector<char> visited(mesh.face_slots(), 0);
    for (FaceId seed : mesh.live_faces()) {
        if (visited[seed]) continue;
        std::vector<FaceId> component;
        std::deque<FaceId> queue{seed};
        visited[seed] = 1;
        while (!queue.empty()) {
            const FaceId f = queue.front();
            queue.pop_front();
            component.push_back(f);
            const Triangle t = mesh.face(f);
            for (int i = 0; i < 3; ++i) {
                const VertexId a = t[i], b = t[(i + 1) % 3];
                for (FaceId g : mesh.edge_faces(a, b)) {
                    if (g == f) continue;
                    const auto& u = mesh.face(g);
                    bool same_direction = false;
                    for (int j = 0; j < 3; ++j)
                        if (u[j] == a && u[(j + 1) % 3] == b) same_direction = true;
                    if (!visited[g]) {
                        if (same_direction) mesh.flip_face(g);
                        visited[g] = 1;
                        queue.push_back(g);
                    } else if (same_direction) {
                        throw MeshError("mesh is not orientable (conflict across edge " + std::to_string(a) + "-" +
                                            std::to_string(b) + ")",
                                        g);
                    }
                }
            }
        }
        double vol = 0.0;
        for (FaceId f : component) vol += mesh.face_volume(f);
        if (vol < 0)
            for (FaceId f : component) mesh.flip_face(f);
    }
}

/// Build a mesh from indexed data, rejecting boundary and non-manifold
/// edges, and orient it outward.
inline SurfaceMesh build_closed_mesh(const std::vector<Vec3>& positions, const std::vector<Triangle>& faces) {
    SurfaceMesh mesh;
    for (const auto& p : positions) mesh.add_vertex(p);
    for (const auto& t : faces) {
        for (VertexId v : t)
            if (v < 0 || std::size_t(v) >= positions.size()) throw MeshError("face index out of range", v);
        mesh.add_face(t);
    }
    const auto uses = detail::edge_uses(mesh);
    std::vector<std::uint64_t> keys;
    for (const auto& [k, u] : uses) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (auto k : keys) {
        const auto& u = uses.at(k);
        const auto [a, b] = detail::unkey(k);
        const std::string e = std::to_string(a) + "-" + std::to_string(b);
        if (u.count == 1) throw MeshError("boundary edge " + e + " (surface is not closed)", a);
        if (u.count > 2) throw MeshError("non-manifold edge " + e + " with " + std::to_string(u.count) + " faces", a);
    }
    for (VertexId v : mesh.live_vertices())
        if (mesh.faces_of(v).empty()) throw MeshError("isolated vertex", v);
    orient_outward(mesh);
    return mesh;
}

struct IndexedMesh {
    std::vector<Vec3> positions;
    std::vector<Triangle> faces;
};

/// Parsed (and for STL, welded) vertex and face lists, without any
/// topological checks.
inline IndexedMesh read_indexed(const std::filesystem::path& path, MeshFormat format = MeshFormat::Auto,
                                const LoadOptions& opts = {}) {
    const std::string data = detail::read_file(path);
    if (format == MeshFormat::Auto) {
        auto ext = path.extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".obj")
            format = MeshFormat::Obj;
        else if (detail::looks_binary_stl(data))
            format = MeshFormat::StlBinary;
        else if (data.rfind("solid", 0) == 0)
            format = MeshFormat::StlAscii;
        else
            throw MeshError("cannot detect mesh format of '" + path.string() + "'");
    }
    if (format == MeshFormat::Obj) {
        auto [positions, faces] = detail::parse_obj(data);
        return {std::move(positions), std::move(faces)};
    }
    const TriangleSoup soup =
        format == MeshFormat::StlBinary ? detail::parse_stl_binary(data) : detail::parse_stl_ascii(data);
    Eigen::AlignedBox3d box;
    for (const auto& tri : soup)
        for (const auto& p : tri) box.extend(p);
    const double tol = soup.empty() ? 0.0 : opts.weld_relative_tolerance * box.diagonal().norm();
    auto [positions, faces] = detail::weld(soup, tol);
    return {std::move(positions), std::move(faces)};
}

/// Mesh holding exactly the given vertices and faces, in order.
inline SurfaceMesh verbatim_mesh(const IndexedMesh& data) {
    SurfaceMesh mesh;
    for (const auto& p : data.positions) mesh.add_vertex(p);
    for (const auto& t : data.faces) {
        for (VertexId v : t)
            if (v < 0 || std::size_t(v) >= data.positions.size()) throw MeshError("face index out of range", v);
        mesh.add_face(t);
    }
    return mesh;
}

/// Loads a closed surface and orients it outward.
inline SurfaceMesh load_mesh(const std::filesystem::path& path, MeshFormat format = MeshFormat::Auto,
                             const LoadOptions& opts = {}) {
    const auto data = read_indexed(path, format, opts);
    return build_closed_mesh(data.positions, data.faces);
}

namespace detail {

inline std::string format_g(double x, int digits = 9) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x == 0.0 ? 0.0 : x);  // no "-0"
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw MeshError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw MeshError("write failed for '" + path.string() + "'");
}

}  // namespace detail

/// OBJ text for the live part of the mesh: "v x y z" in compacted index
/// order, then "f a b c" (1-based) in face-handle order. 17 digits make the
/// coordinates round-trip exactly.
inline std::string obj_text(const SurfaceMesh& mesh, int digits = 9) {
    std::vector<VertexId> remap(mesh.vertex_slots(), kNoVertex);
    std::string out;
    VertexId next = 0;
    for (VertexId v : mesh.live_vertices()) {
        remap[v] = next++;
        const Vec3& p = mesh.position(v);
        out += "v " + detail::format_g(p.x(), digits) + " " + detail::format_g(p.y(), digits) + " " +
               detail::format_g(p.z(), digits) + "\n";
    }
    for (FaceId f : mesh.live_faces()) {
        const auto& t = mesh.face(f);
        out += "f " + std::to_string(remap[t[0]] + 1) + " " + std::to_string(remap[t[1]] + 1) + " " +
               std::to_string(remap[t[2]] + 1) + "\n";
    }
    return out;
}

inline void export_obj(const SurfaceMesh& mesh, const std::filesystem::path& path, int digits = 9) {
    detail::write_file(path, obj_text(mesh, digits));
}

/// Reads an OBJ written by export_obj back with its exact indexing and
/// orientation. Coincident vertices stay distinct.
inline SurfaceMesh load_obj_verbatim(const std::filesystem::path& path) {
    return verbatim_mesh(read_indexed(path, MeshFormat::Obj));
}

inline TriangleSoup to_soup(const SurfaceMesh& mesh) {
    TriangleSoup soup;
    for (FaceId f : mesh.live_faces()) {
        const auto& t = mesh.face(f);
        soup.push_back({mesh.position(t[0]), mesh.position(t[1]), mesh.position(t[2])});
    }
    return soup;
}

inline void write_stl_ascii(const TriangleSoup& soup, const std::filesystem::path& path) {
    std::ostringstream os;
    os.precision(17);
    os << "solid mcfsound\n";
    for (const auto& tri : soup) {
        Vec3 n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
        if (n.norm() > 0) n.normalize();
        os << "  facet normal " << n.x() << " " << n.y() << " " << n.z() << "\n    outer loop\n";
        for (const auto& p : tri) os << "      vertex " << p.x() << " " << p.y() << " " << p.z() << "\n";
        os << "    endloop\n  endfacet\n";
    }
    os << "endsolid mcfsound\n";
    detail::write_file(path, os.str());
}

inline void write_stl_binary(const TriangleSoup& soup, const std::filesystem::path& path) {
    std::string out(80, '\0');
    const std::string tag = "mcfsound binary stl";
    std::copy(tag.begin(), tag.end(), out.begin());
    detail::put_u32(out, std::uint32_t(soup.size()));
    auto put_vec = [&](const Vec3& v) {
        for (int k = 0; k < 3; ++k) detail::put_u32(out, std::bit_cast<std::uint32_t>(float(v[k])));
    };
    for (const auto& tri : soup) {
        Vec3 n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
        if (n.norm() > 0) n.normalize();
        put_vec(n);
        for (const auto& p : tri) put_vec(p);
        out.push_back('\0');
        out.push_back('\0');
    }
    detail::write_file(path, out);
}

}  // namespace mcfsound
