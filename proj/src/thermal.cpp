#include "rotopt/thermal.hpp"

#include <Eigen/SparseCholesky>

#include "rotopt/fem.hpp"

namespace rotopt {

ThermalOperator build_thermal_operator(const Mesh& mesh, const MaterialSet& materials,
                                       const Eigen::VectorXi& design_labels) {
    ThermalOperator op;
    op.mesh = &mesh;
    op.materials = &materials;
    op.sub = extract_rotor_submesh(mesh);
    op.cache = build_element_cache(op.sub);

    const int ne = op.sub.num_tris();
    op.lambda_elem.resize(ne);
    op.elem_material.resize(ne);
    for (int e = 0; e < ne; ++e) {
        const MaterialId m = element_material(mesh, design_labels, op.sub.elem_to_parent[e]);
        op.elem_material[e] = m;
        op.lambda_elem[e] = materials.lambda[static_cast<int>(m)];
        if (!(op.lambda_elem[e] > 0.0))
            throw std::invalid_argument("thermal: non-positive conductivity");
    }

    // temperature is pole-symmetric: periodic (not antiperiodic) radial cuts
    SignedUnionFind uf(op.sub.num_nodes());
    for (const auto& [p, q] : op.sub.periodic_pairs) uf.link(q, p, 1.0);
    op.map = build_dof_map(uf);

    std::vector<Triplet> trip;
    add_tensor_stiffness(trip, op.sub.tris, op.cache, [&](int e) {
        return Mat2(op.lambda_elem[e] * Mat2::Identity());
    });
    op.robin_rhs = Vec::Zero(op.sub.num_nodes());
    add_robin_edges(trip, op.robin_rhs, op.sub.nodes, op.sub.gamma_sh_edges, materials.beta_shaft,
                    materials.ambient);
    add_robin_edges(trip, op.robin_rhs, op.sub.nodes, op.sub.gamma_r_edges, materials.beta_airgap,
                    materials.ambient);
    SpMat K(op.sub.num_nodes(), op.sub.num_nodes());
    K.setFromTriplets(trip.begin(), trip.end());
    op.stiffness_red = op.map.reduce(K);
    return op;
}

ThermalField solve_heat(const ThermalOperator& op, const Vec& source_per_element) {
    Vec f = op.robin_rhs;
    Vec sub_source = Vec::Zero(op.sub.num_tris());
    for (int e = 0; e < op.sub.num_tris(); ++e) {
        const double s = source_per_element[op.sub.elem_to_parent[e]];
        if (s < 0.0) throw std::invalid_argument("thermal: source must be non-negative");
        sub_source[e] = s;
    }
    add_element_source(f, op.sub.tris, op.cache, sub_source);

    Eigen::SimplicialLDLT<SpMat> solver(op.stiffness_red);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("thermal: factorization failed");
    const Vec u = solver.solve(op.map.reduce_vec(f));

    ThermalField field;
    field.theta = op.map.expand(u);
    field.ambient = op.materials->ambient;
    field.beta_shaft = op.materials->beta_shaft;
    field.beta_airgap = op.materials->beta_airgap;
    return field;
}

double max_magnet_temperature(const ThermalOperator& op, const ThermalField& field) {
    double best = op.materials->ambient;
    bool found = false;
    for (int e = 0; e < op.sub.num_tris(); ++e) {
        const MaterialId m = op.elem_material[e];
        if (m != MaterialId::MagnetOne && m != MaterialId::MagnetTwo) continue;
        found = true;
        for (int v = 0; v < 3; ++v) best = std::max(best, field.theta[op.sub.tris(e, v)]);
    }
    return found ? best : op.materials->ambient;
}

namespace {

double robin_edge_outflow(const Eigen::Matrix<double, Eigen::Dynamic, 2>& nodes,
                          const EdgeList& edges, const Vec& theta, double beta, double ambient) {
    double acc = 0.0;
    for (const auto& [a, b] : edges) {
        const double len = (nodes.row(a) - nodes.row(b)).norm();
        acc += beta * len * 0.5 * ((theta[a] - ambient) + (theta[b] - ambient));
    }
    return acc;
}

}  // namespace

double robin_outflow(const ThermalOperator& op, const ThermalField& field) {
    return robin_edge_outflow(op.sub.nodes, op.sub.gamma_sh_edges, field.theta,
                              op.materials->beta_shaft, op.materials->ambient) +
           robin_edge_outflow(op.sub.nodes, op.sub.gamma_r_edges, field.theta,
                              op.materials->beta_airgap, op.materials->ambient);
}

double source_integral(const ThermalOperator& op, const Vec& source_per_element) {
    double acc = 0.0;
    for (int e = 0; e < op.sub.num_tris(); ++e)
        acc += source_per_element[op.sub.elem_to_parent[e]] * op.cache.area[e];
    return acc;
}

}  // namespace rotopt
