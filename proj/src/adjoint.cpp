#include "rotopt/adjoint.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace rotopt {

namespace {
constexpr double kSpin = -1.0;
}

MqsAdjointField solve_mqs_adjoint(const MqsOperator& op, const PeriodicField& field,
                                  const std::vector<Vec>& objective_gradients) {
    const int N = op.grid.n_steps;
    if (static_cast<int>(objective_gradients.size()) != N)
        throw std::invalid_argument("adjoint: need one gradient per step");
    MqsAdjointField adj;
    adj.p.resize(N);

    const bool with_mass = field.with_eddies && op.sigma_mass.nonZeros() > 0;
    if (!with_mass) {
        // steps decouple; the per-step tangent is symmetric
        for (int n = 0; n < N; ++n) {
            const DofMap& map = op.maps[n];
            SpMat K_red = map.reduce(step_tangent(op, field.a[n]));
            Eigen::SimplicialLDLT<SpMat> solver(K_red);
            if (solver.info() != Eigen::Success)
                throw std::runtime_error("adjoint: factorization failed");
            const Vec rhs = -map.reduce_vec(objective_gradients[n]);
            adj.p[n] = map.expand(solver.solve(rhs));
        }
        return adj;
    }

    const double inv_tau = 1.0 / op.grid.tau();
    std::vector<int> offset(N + 1, 0);
    for (int n = 0; n < N; ++n) offset[n + 1] = offset[n] + op.maps[n].n_reduced;
    const int total = offset[N];

    // transpose of the primal Jacobian: diagonal blocks unchanged (they are
    // symmetric), the sub-diagonal coupling moves to the super-diagonal
    std::vector<Triplet> trip;
    for (int n = 0; n < N; ++n) {
        const int next = (n + 1) % N;
        SpMat diag =
            op.maps[n].reduce(SpMat(step_tangent(op, field.a[n]) + inv_tau * op.sigma_mass));
        for (int k = 0; k < diag.outerSize(); ++k)
            for (SpMat::InnerIterator it(diag, k); it; ++it)
                trip.emplace_back(offset[n] + it.row(), offset[n] + it.col(), it.value());
        SpMat off = op.maps[n].P.transpose() * (inv_tau * op.sigma_mass) * op.maps[next].P;
        for (int k = 0; k < off.outerSize(); ++k)
            for (SpMat::InnerIterator it(off, k); it; ++it)
                trip.emplace_back(offset[n] + it.row(), offset[next] + it.col(), -it.value());
    }
    SpMat Jt(total, total);
    Jt.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SpMat> solver;
    solver.compute(Jt);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("adjoint: monolithic factorization failed");
    Vec rhs(total);
    for (int n = 0; n < N; ++n)
        rhs.segment(offset[n], op.maps[n].n_reduced) =
            -op.maps[n].reduce_vec(objective_gradients[n]);
    const Vec q = solver.solve(rhs);
    for (int n = 0; n < N; ++n)
        adj.p[n] = op.maps[n].expand(q.segment(offset[n], op.maps[n].n_reduced));
    return adj;
}

std::vector<Vec> torque_objective_gradients(const MqsOperator& op, const PeriodicField& field,
                                            double weight) {
    const Mesh& mesh = *op.mesh;
    const int N = op.grid.n_steps;
    const double kappa = weight / N * kSpin * 2.0 * mesh.geometry.pole_pairs *
                         mesh.geometry.interface_radius * mesh.geometry.axial_length;
    std::vector<Vec> grads(N);
    for (int n = 0; n < N; ++n) {
        Vec g = Vec::Zero(mesh.num_nodes());
        const Vec& a = field.a[n];
        const Vec& lambda = field.lambda[n];

        // nodal flux trace c_p and its embedding
        Vec c_hat = Vec::Zero(mesh.num_nodes());
        const int n_if = mesh.interface_intervals;
        for (int p = 0; p <= n_if; ++p) {
            const auto& elems = op.stator_if_adjacency[p];
            if (elems.empty()) continue;
            const int node = mesh.stator_interface[p];
            const Vec2 er = Vec2(mesh.nodes.row(node)).normalized();
            double acc = 0.0;
            for (int e : elems) {
                Vec2 grad = Vec2::Zero();
                for (int v = 0; v < 3; ++v)
                    grad += op.cache->grad[e].col(v) * a[mesh.tris(e, v)];
                acc += rot90cw(grad).dot(er);
            }
            c_hat[node] = acc / static_cast<double>(elems.size());
        }
        // d(lambda)/da applied to c: the stator tangent is symmetric
        g += stator_tangent(op, a) * c_hat;
        // d(c)/da applied to lambda
        for (int p = 0; p <= n_if; ++p) {
            const auto& elems = op.stator_if_adjacency[p];
            if (elems.empty()) continue;
            const int node = mesh.stator_interface[p];
            const Vec2 er = Vec2(mesh.nodes.row(node)).normalized();
            const double w = lambda[p] / static_cast<double>(elems.size());
            for (int e : elems)
                for (int v = 0; v < 3; ++v)
                    g[mesh.tris(e, v)] += w * rot90cw(op.cache->grad[e].col(v)).dot(er);
        }
        grads[n] = kappa * g;
    }
    return grads;
}

std::vector<Vec> ec_source_gradients(const MqsOperator& op, const PeriodicField& field,
                                     const Vec& weight_elem) {
    const Mesh& mesh = *op.mesh;
    const ElementCache& cache = *op.cache;
    const int N = op.grid.n_steps;
    const double tau = op.grid.tau();

    std::vector<Vec> grads(N, Vec::Zero(mesh.num_nodes()));
    for (int mag = 0; mag < 2; ++mag) {
        const MaterialId id = mag == 0 ? MaterialId::MagnetOne : MaterialId::MagnetTwo;
        std::vector<int> elems;
        double area = 0.0;
        for (int e = 0; e < mesh.num_tris(); ++e)
            if (mesh.region[e] == static_cast<int>(Region::Design) && op.elem_material[e] == id) {
                elems.push_back(e);
                area += cache.area[e];
            }
        if (elems.empty()) continue;
        const double c_sigma = op.materials->sigma[static_cast<int>(id)] / (N * tau * tau);
        for (int n = 0; n < N; ++n) {
            const Vec inc = element_increments(op, field, n);
            double mean = 0.0, wsum = 0.0;
            for (int e : elems) mean += inc[e] * cache.area[e];
            mean /= area;
            // d/d(inc_e) of sum_e w_e A_e c (inc_e - mean)^2 with the mean
            // itself depending on every increment of the group
            for (int e : elems) wsum += weight_elem[e] * cache.area[e] * (inc[e] - mean);
            for (int e : elems) {
                const double d_inc = 2.0 * c_sigma *
                                     (weight_elem[e] * cache.area[e] * (inc[e] - mean) -
                                      cache.area[e] / area * wsum);
                const int prev = (n + N - 1) % N;
                for (int v = 0; v < 3; ++v) {
                    grads[n][mesh.tris(e, v)] += d_inc / 3.0;
                    grads[prev][mesh.tris(e, v)] -= d_inc / 3.0;
                }
            }
        }
    }
    return grads;
}

Vec thermal_adjoint(const ThermalOperator& op, const Vec& dF_dtheta_sub) {
    Eigen::SimplicialLDLT<SpMat> solver(op.stiffness_red);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("thermal adjoint: factorization failed");
    const Vec q = solver.solve(-op.map.reduce_vec(dF_dtheta_sub));
    return op.map.expand(q);
}

Vec elastic_adjoint(const ElasticOperator& op, const Vec& dF_du) {
    Eigen::SimplicialLDLT<SpMat> solver(op.stiffness_red);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("elastic adjoint: factorization failed");
    const Vec w = solver.solve(-op.map.reduce_vec(dF_du));
    return op.map.expand(w);
}

double mqs_material_directional_derivative(const MqsOperator& op, const PeriodicField& field,
                                           const MqsAdjointField& adjoint, const Vec& eta_elem) {
    const Mesh& mesh = *op.mesh;
    const ElementCache& cache = *op.cache;
    double acc = 0.0;
    for (int n = 0; n < op.grid.n_steps; ++n) {
        const Vec& a = field.a[n];
        const Vec& p = adjoint.p[n];
        for (int e = 0; e < mesh.num_tris(); ++e) {
            if (eta_elem[e] == 0.0) continue;
            Vec2 ga = Vec2::Zero(), gp = Vec2::Zero();
            for (int v = 0; v < 3; ++v) {
                ga += cache.grad[e].col(v) * a[mesh.tris(e, v)];
                gp += cache.grad[e].col(v) * p[mesh.tris(e, v)];
            }
            const Vec2 h = h_field(*op.materials, op.elem_material[e], rot90cw(ga));
            acc += eta_elem[e] * cache.area[e] * h.dot(rot90cw(gp));
        }
    }
    return acc;
}

}  // namespace rotopt
