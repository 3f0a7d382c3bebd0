#include "rotopt/mesh.hpp"

#include <cmath>

namespace rotopt {

void MachineGeometry::validate() const {
    if (pole_pairs < 1) throw std::invalid_argument("geometry: pole_pairs must be >= 1");
    if (slot_count <= 0 || slot_count % (2 * pole_pairs) != 0)
        throw std::invalid_argument("geometry: slot_count must be a positive multiple of 2*pole_pairs");
    const double r[] = {rotor_inner_radius, shaft_radius,        ring_inner_radius,
                        rotor_outer_radius, interface_radius,    stator_inner_radius,
                        stator_outer_radius};
    const char* names[] = {"rotor_inner_radius", "shaft_radius",        "ring_inner_radius",
                           "rotor_outer_radius", "interface_radius",    "stator_inner_radius",
                           "stator_outer_radius"};
    if (!(r[0] > 0.0)) throw std::invalid_argument("geometry: rotor_inner_radius must be positive");
    for (int i = 0; i + 1 < 7; ++i) {
        if (!(r[i] < r[i + 1]))
            throw std::invalid_argument(std::string("geometry: radius ordering violated: ") +
                                        names[i] + " >= " + names[i + 1]);
    }
    if (!(axial_length > 0.0)) throw std::invalid_argument("geometry: axial_length must be positive");
    if (!(slot_inner_offset > 0.0) || !(slot_depth > 0.0))
        throw std::invalid_argument("geometry: slot radii invalid");
    if (stator_inner_radius + slot_inner_offset + slot_depth >= stator_outer_radius)
        throw std::invalid_argument("geometry: slots do not fit inside the stator");
    if (!(slot_width_frac > 0.0) || !(slot_width_frac < 1.0))
        throw std::invalid_argument("geometry: slot_width_frac must be in (0,1)");
}

double triangle_area(const Mesh& mesh, int tri) {
    const auto t = mesh.tris.row(tri);
    const Vec2 a = mesh.nodes.row(t[0]);
    const Vec2 b = mesh.nodes.row(t[1]);
    const Vec2 c = mesh.nodes.row(t[2]);
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double region_measure(const Mesh& mesh, int region_id) {
    if (region_id < 0 || region_id >= kRegionCount)
        throw std::invalid_argument("region_measure: unknown region id " + std::to_string(region_id));
    double total = 0.0;
    for (int e = 0; e < mesh.num_tris(); ++e)
        if (mesh.region[e] == region_id) total += triangle_area(mesh, e);
    return total;
}

ElementCache build_element_cache(const Eigen::Matrix<double, Eigen::Dynamic, 2>& nodes,
                                 const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris) {
    ElementCache cache;
    const int ne = static_cast<int>(tris.rows());
    cache.area.resize(ne);
    cache.grad.resize(ne);
    cache.centroid.resize(ne, 2);
    for (int e = 0; e < ne; ++e) {
        const auto t = tris.row(e);
        const Vec2 p0 = nodes.row(t[0]);
        const Vec2 p1 = nodes.row(t[1]);
        const Vec2 p2 = nodes.row(t[2]);
        const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) -
                           (p2.x() - p0.x()) * (p1.y() - p0.y());
        cache.area[e] = 0.5 * det;
        Eigen::Matrix<double, 2, 3> g;
        g.col(0) = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / det;
        g.col(1) = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / det;
        g.col(2) = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / det;
        cache.grad[e] = g;
        cache.centroid.row(e) = ((p0 + p1 + p2) / 3.0).transpose();
    }
    return cache;
}

SubMesh extract_rotor_submesh(const Mesh& mesh) {
    SubMesh sub;
    sub.parent_node_index = Eigen::VectorXi::Constant(mesh.num_nodes(), -1);
    for (int e = 0; e < mesh.num_tris(); ++e) {
        const Region r = static_cast<Region>(mesh.region[e]);
        if (r != Region::Design && r != Region::RotorRing) continue;
        sub.elem_to_parent.push_back(e);
        for (int v = 0; v < 3; ++v) {
            const int n = mesh.tris(e, v);
            if (sub.parent_node_index[n] < 0) {
                sub.parent_node_index[n] = static_cast<int>(sub.node_to_parent.size());
                sub.node_to_parent.push_back(n);
            }
        }
    }
    sub.nodes.resize(static_cast<int>(sub.node_to_parent.size()), 2);
    for (size_t i = 0; i < sub.node_to_parent.size(); ++i)
        sub.nodes.row(static_cast<int>(i)) = mesh.nodes.row(sub.node_to_parent[i]);
    sub.tris.resize(static_cast<int>(sub.elem_to_parent.size()), 3);
    for (size_t i = 0; i < sub.elem_to_parent.size(); ++i)
        for (int v = 0; v < 3; ++v)
            sub.tris(static_cast<int>(i), v) = sub.parent_node_index[mesh.tris(sub.elem_to_parent[i], v)];
    for (const auto& [p, q] : mesh.periodic_pairs) {
        if (sub.parent_node_index[p] >= 0 && sub.parent_node_index[q] >= 0)
            sub.periodic_pairs.emplace_back(sub.parent_node_index[p], sub.parent_node_index[q]);
    }
    auto map_edges = [&](const EdgeList& edges) {
        EdgeList out;
        for (const auto& [a, b] : edges)
            if (sub.parent_node_index[a] >= 0 && sub.parent_node_index[b] >= 0)
                out.emplace_back(sub.parent_node_index[a], sub.parent_node_index[b]);
        return out;
    };
    sub.gamma_sh_edges = map_edges(mesh.gamma_sh_edges);
    sub.gamma_r_edges = map_edges(mesh.gamma_r_edges);
    return sub;
}

Mesh build_annulus_mesh(double r_inner, double r_outer, double span, int rows, int intervals,
                        Region label) {
    if (!(r_inner > 0.0) || !(r_outer > r_inner) || rows < 1 || intervals < 1)
        throw std::invalid_argument("build_annulus_mesh: invalid parameters");
    Mesh mesh;
    const int ncirc = rows + 1;
    const int ncols = intervals + 1;
    mesh.nodes.resize(ncirc * ncols, 2);
    for (int i = 0; i < ncirc; ++i) {
        const double r = r_inner + (r_outer - r_inner) * i / rows;
        for (int j = 0; j < ncols; ++j) {
            const double th = span * j / intervals;
            mesh.nodes.row(i * ncols + j) << r * std::cos(th), r * std::sin(th);
        }
    }
    mesh.tris.resize(2 * rows * intervals, 3);
    int e = 0;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < intervals; ++j) {
            const int a = i * ncols + j, b = a + 1, c = a + ncols, d = c + 1;
            if ((i + j) % 2 == 0) {
                mesh.tris.row(e++) << a, c, d;
                mesh.tris.row(e++) << a, d, b;
            } else {
                mesh.tris.row(e++) << a, c, b;
                mesh.tris.row(e++) << b, c, d;
            }
        }
    }
    mesh.region = Eigen::VectorXi::Constant(mesh.num_tris(), static_cast<int>(label));
    mesh.rotor_node_count = mesh.num_nodes();
    for (int i = 0; i < ncirc; ++i)
        mesh.periodic_pairs.emplace_back(i * ncols, i * ncols + intervals);
    for (int j = 0; j < intervals; ++j) {
        mesh.gamma_sh_edges.emplace_back(j, j + 1);
        mesh.gamma_r_edges.emplace_back(rows * ncols + j, rows * ncols + j + 1);
    }
    if (label == Region::Design) {
        mesh.design_elem_index = Eigen::VectorXi::Constant(mesh.num_tris(), -1);
        mesh.design_node_index = Eigen::VectorXi::Constant(mesh.num_nodes(), -1);
        for (int t = 0; t < mesh.num_tris(); ++t) {
            mesh.design_elem_index[t] = t;
            mesh.design_elems.push_back(t);
        }
        for (int n = 0; n < mesh.num_nodes(); ++n) {
            mesh.design_node_index[n] = n;
            mesh.design_nodes.push_back(n);
        }
    } else {
        mesh.design_elem_index = Eigen::VectorXi::Constant(mesh.num_tris(), -1);
        mesh.design_node_index = Eigen::VectorXi::Constant(mesh.num_nodes(), -1);
    }
    return mesh;
}

}  // namespace rotopt
