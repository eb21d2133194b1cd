#pragma once

#include "mcfsound/mesh.hpp"

#include <vector>

namespace mcfsound {

struct ComponentLabeling {
    // -1 for dead vertex slots.
    std::vector<int> label;
    int component_count = 0;

    std::vector<std::vector<VertexId>> groups() const {
        std::vector<std::vector<VertexId>> out(static_cast<std::size_t>(component_count));
        for (std::size_t v = 0; v < label.size(); ++v)
            if (label[v] >= 0) out[static_cast<std::size_t>(label[v])].push_back(static_cast<VertexId>(v));
        return out;
    }
};

/// Label live vertices by edge-connected component. Labels are assigned in
/// order of the smallest vertex index of each component.
inline ComponentLabeling connected_components(const SurfaceMesh& mesh) {
    ComponentLabeling out;
    out.label.assign(mesh.vertex_slots(), -1);
    std::vector<VertexId> stack;
    for (std::size_t s = 0; s < mesh.vertex_slots(); ++s) {
        const auto seed = static_cast<VertexId>(s);
        if (!mesh.vertex_alive(seed) || out.label[s] >= 0) continue;
        const int id = out.component_count++;
        out.label[s] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (FaceId f : mesh.faces_of(v))
                for (VertexId w : mesh.face(f))
                    if (out.label[w] < 0) {
                        out.label[w] = id;
                        stack.push_back(w);
                    }
        }
    }
    return out;
}

}  // namespace mcfsound
