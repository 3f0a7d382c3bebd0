#include "rotopt/elasticity.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace rotopt {

Mat3 plane_stress_stiffness(double young, double poisson) {
    Mat3 c = Mat3::Zero();
    const double f = young / (1.0 - poisson * poisson);
    c(0, 0) = c(1, 1) = f;
    c(0, 1) = c(1, 0) = f * poisson;
    c(2, 2) = f * (1.0 - poisson) / 2.0;
    return c;
}

namespace {

// 3x6 strain-displacement matrix (Voigt, engineering shear)
Eigen::Matrix<double, 3, 6> b_matrix(const ElementCache& cache, int e) {
    Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
    const auto& g = cache.grad[e];
    for (int v = 0; v < 3; ++v) {
        B(0, 2 * v) = g(0, v);
        B(1, 2 * v + 1) = g(1, v);
        B(2, 2 * v) = g(1, v);
        B(2, 2 * v + 1) = g(0, v);
    }
    return B;
}

}  // namespace

ElasticOperator build_elastic_operator(const Mesh& mesh, const MaterialSet& materials,
                                       const Eigen::VectorXi& design_labels) {
    ElasticOperator op;
    op.mesh = &mesh;
    op.materials = &materials;
    op.sub = extract_rotor_submesh(mesh);
    op.cache = build_element_cache(op.sub);

    const int ne = op.sub.num_tris();
    op.elem_material.resize(ne);
    op.c_voigt.resize(ne);
    op.rho_elem.resize(ne);
    for (int e = 0; e < ne; ++e) {
        const MaterialId m = element_material(mesh, design_labels, op.sub.elem_to_parent[e]);
        op.elem_material[e] = m;
        const double young = materials.young[static_cast<int>(m)];
        if (!(young > 0.0))
            throw std::invalid_argument("elasticity: Young modulus must be positive everywhere");
        op.c_voigt[e] = plane_stress_stiffness(young, materials.poisson);
        op.rho_elem[e] = materials.rho[static_cast<int>(m)];
    }

    // clamped shaft circle; rotated periodicity u|G2 = R_span u|G1
    VectorConstraintSet cs;
    cs.n_nodes = op.sub.num_nodes();
    std::vector<char> clamped(op.sub.num_nodes(), 0);
    for (const auto& [a, b] : op.sub.gamma_sh_edges) {
        clamped[a] = 1;
        clamped[b] = 1;
    }
    for (int i = 0; i < op.sub.num_nodes(); ++i)
        if (clamped[i]) cs.fixed_nodes.push_back(i);
    const double span = mesh.geometry.pole_span();
    Mat2 rot;
    rot << std::cos(span), -std::sin(span), std::sin(span), std::cos(span);
    for (const auto& [g1, g2] : op.sub.periodic_pairs) {
        if (clamped[g1] || clamped[g2]) continue;
        cs.pairs.push_back({g2, g1, rot});
    }
    op.map = build_vector_dof_map(cs);

    std::vector<Triplet> trip;
    for (int e = 0; e < ne; ++e) {
        const auto B = b_matrix(op.cache, e);
        const Eigen::Matrix<double, 6, 6> Ke = op.cache.area[e] * B.transpose() * op.c_voigt[e] * B;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) {
                const int gi = 2 * op.sub.tris(e, i / 2) + i % 2;
                const int gj = 2 * op.sub.tris(e, j / 2) + j % 2;
                trip.emplace_back(gi, gj, Ke(i, j));
            }
    }
    SpMat K(2 * op.sub.num_nodes(), 2 * op.sub.num_nodes());
    K.setFromTriplets(trip.begin(), trip.end());
    op.stiffness_red = op.map.reduce(K);
    return op;
}

Vec centrifugal_load_unit(const ElasticOperator& op) {
    Vec f = Vec::Zero(2 * op.sub.num_nodes());
    for (int e = 0; e < op.sub.num_tris(); ++e) {
        const double rho = op.rho_elem[e];
        if (rho == 0.0) continue;
        const double area = op.cache.area[e];
        Vec2 x[3];
        for (int v = 0; v < 3; ++v) x[v] = op.sub.nodes.row(op.sub.tris(e, v));
        const Vec2 xb = (x[0] + x[1] + x[2]) / 3.0;
        for (int v = 0; v < 3; ++v) {
            // exact P1 moment: int phi_v x dx = A (3 xb + x_v) / 12
            const Vec2 mom = area * (3.0 * xb + x[v]) / 12.0;
            f[2 * op.sub.tris(e, v)] += rho * mom.x();
            f[2 * op.sub.tris(e, v) + 1] += rho * mom.y();
        }
    }
    return f;
}

Vec3 element_strain(const ElasticOperator& op, const Vec& u, int elem) {
    const auto B = b_matrix(op.cache, elem);
    Eigen::Matrix<double, 6, 1> ue;
    for (int v = 0; v < 3; ++v) {
        ue[2 * v] = u[2 * op.sub.tris(elem, v)];
        ue[2 * v + 1] = u[2 * op.sub.tris(elem, v) + 1];
    }
    return B * ue;
}

ElasticField solve_elasticity(const ElasticOperator& op, double speed) {
    if (speed < 0.0) throw std::invalid_argument("elasticity: speed must be non-negative");
    ElasticField field;
    field.speed = speed;
    const Vec f = speed * speed * centrifugal_load_unit(op);
    Eigen::SimplicialLDLT<SpMat> solver(op.stiffness_red);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("elasticity: factorization failed");
    const Vec ur = solver.solve(op.map.reduce_vec(f));
    field.u = op.map.expand(ur);
    field.stress.resize(op.sub.num_tris(), 3);
    for (int e = 0; e < op.sub.num_tris(); ++e) {
        const Vec3 s = op.c_voigt[e] * element_strain(op, field.u, e);
        field.stress.row(e) = s.transpose();
    }
    return field;
}

double von_mises_sq_of(double sxx, double syy, double sxy) {
    const double frob2 = sxx * sxx + syy * syy + 2.0 * sxy * sxy;
    const double tr = sxx + syy;
    return 0.5 * (3.0 * frob2 - tr * tr);
}

Vec von_mises_sq(const ElasticField& field) {
    Vec s(field.stress.rows());
    for (int e = 0; e < field.stress.rows(); ++e)
        s[e] = von_mises_sq_of(field.stress(e, 0), field.stress(e, 1), field.stress(e, 2));
    return s;
}

std::pair<double, double> virtual_work(const ElasticOperator& op, const ElasticField& field) {
    double strain_energy = 0.0;
    for (int e = 0; e < op.sub.num_tris(); ++e) {
        const Vec3 eps = element_strain(op, field.u, e);
        const Vec3 sig = op.c_voigt[e] * eps;
        strain_energy += op.cache.area[e] * sig.dot(eps);
    }
    const Vec f = field.speed * field.speed * centrifugal_load_unit(op);
    return {strain_energy, f.dot(field.u)};
}

}  // namespace rotopt
