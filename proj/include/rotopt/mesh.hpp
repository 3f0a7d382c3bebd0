#pragma once

#include "rotopt/geometry.hpp"

#include <utility>

namespace rotopt {

enum class Region : int {
    Shaft = 0,
    Design = 1,
    RotorRing = 2,
    AirgapRotor = 3,
    AirgapStator = 4,
    StatorIron = 5,
    SlotAPlus = 6,
    SlotCMinus = 7,
    SlotBPlus = 8,
};
inline constexpr int kRegionCount = 9;

using EdgeList = std::vector<std::pair<int, int>>;

/// Triangulated one-pole cross section. The rotor sub-mesh lives in the rotor
/// (material) frame, the stator sub-mesh in the lab frame; both meet at the
/// duplicated sliding-interface circle. Immutable after construction.
struct Mesh {
    Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;
    Eigen::Matrix<int, Eigen::Dynamic, 3> tris;
    Eigen::VectorXi region;  // Region per triangle

    // nodes [0, rotor_node_count) belong to the rotor stack
    int rotor_node_count = 0;

    // matched nodes on the radial cuts, (theta = 0, theta = pole span)
    std::vector<std::pair<int, int>> periodic_pairs;

    // sliding-interface circles ordered by angle, both include the end nodes
    // at theta = 0 and theta = pole span (interface_intervals + 1 entries)
    std::vector<int> rotor_interface;
    std::vector<int> stator_interface;
    int interface_intervals = 0;

    std::vector<int> gamma_s_nodes;  // outer stator boundary (Dirichlet)
    EdgeList gamma_sh_edges;         // shaft interface circle r = shaft_radius
    EdgeList gamma_r_edges;          // outer rotor rim r = rotor_outer_radius

    // design-domain element/node sets with inverse maps (-1 where absent)
    std::vector<int> design_elems;
    std::vector<int> design_nodes;
    Eigen::VectorXi design_elem_index;
    Eigen::VectorXi design_node_index;

    // per-circle angular interval count of the stator stack (for the
    // sixth-period shift used in the energy-balance diagnostics)
    int stator_intervals = 0;

    // per-node column index and interval count of the node's circle
    Eigen::VectorXi node_col;
    Eigen::VectorXi node_intervals;

    MachineGeometry geometry;

    int num_nodes() const { return static_cast<int>(nodes.rows()); }
    int num_tris() const { return static_cast<int>(tris.rows()); }
    double interface_spacing() const { return geometry.pole_span() / interface_intervals; }
};

double triangle_area(const Mesh& mesh, int tri);

/// Sum of triangle areas for one region label. Throws on ids outside the
/// Region enum.
double region_measure(const Mesh& mesh, int region_id);

/// Per-element geometry used by every assembly routine.
struct ElementCache {
    Vec area;                                    // signed (positive) areas
    std::vector<Eigen::Matrix<double, 2, 3>> grad;  // shape-function gradients
    Eigen::Matrix<double, Eigen::Dynamic, 2> centroid;
};

ElementCache build_element_cache(const Eigen::Matrix<double, Eigen::Dynamic, 2>& nodes,
                                 const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris);
inline ElementCache build_element_cache(const Mesh& mesh) {
    return build_element_cache(mesh.nodes, mesh.tris);
}

/// Sub-mesh extraction (thermal/elastic problems live on D union D_RI).
struct SubMesh {
    Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;
    Eigen::Matrix<int, Eigen::Dynamic, 3> tris;
    std::vector<int> elem_to_parent;
    std::vector<int> node_to_parent;
    Eigen::VectorXi parent_node_index;  // -1 where absent
    std::vector<std::pair<int, int>> periodic_pairs;  // local indices
    EdgeList gamma_sh_edges;
    EdgeList gamma_r_edges;

    int num_nodes() const { return static_cast<int>(nodes.rows()); }
    int num_tris() const { return static_cast<int>(tris.rows()); }
};

SubMesh extract_rotor_submesh(const Mesh& mesh);

inline ElementCache build_element_cache(const SubMesh& sub) {
    return build_element_cache(sub.nodes, sub.tris);
}

/// Structured annulus-sector test mesh (single region label), used by the
/// analytic oracles. `intervals` angular intervals over `span` radians,
/// `rows` radial element rows.
Mesh build_annulus_mesh(double r_inner, double r_outer, double span, int rows,
                        int intervals, Region label = Region::Design);

}  // namespace rotopt
