#include "rotopt/topder.hpp"

#include <cmath>

namespace rotopt {

int td_column(MaterialId current, MaterialId target) {
    const int i = static_cast<int>(current), j = static_cast<int>(target);
    if (i == j) throw std::invalid_argument("td_column: target equals current material");
    return j < i ? j : j - 1;
}

MaterialId td_target(MaterialId current, int column) {
    const int i = static_cast<int>(current);
    return static_cast<MaterialId>(column < i ? column : column + 1);
}

namespace {

Vec2 elem_grad(const Mesh& mesh, const ElementCache& cache, const Vec& field, int e) {
    Vec2 g = Vec2::Zero();
    for (int v = 0; v < 3; ++v) g += cache.grad[e].col(v) * field[mesh.tris(e, v)];
    return g;
}

double elem_mean(const Mesh& mesh, const Vec& field, int e) {
    return (field[mesh.tris(e, 0)] + field[mesh.tris(e, 1)] + field[mesh.tris(e, 2)]) / 3.0;
}

// EC loss density the element would carry under a hypothetical material,
// with the group means frozen at the current configuration
double ec_density_as(const MqsOperator& op, const PeriodicField& field, int elem,
                     MaterialId as_material) {
    if (as_material != MaterialId::MagnetOne && as_material != MaterialId::MagnetTwo) return 0.0;
    const Mesh& mesh = *op.mesh;
    const ElementCache& cache = *op.cache;
    const int N = op.grid.n_steps;
    const double tau = op.grid.tau();
    const double sigma = op.materials->sigma[static_cast<int>(as_material)];
    // frozen group mean over the existing region of the target magnet
    double area = 0.0;
    std::vector<int> group;
    for (int e = 0; e < mesh.num_tris(); ++e)
        if (mesh.region[e] == static_cast<int>(Region::Design) &&
            op.elem_material[e] == as_material) {
            group.push_back(e);
            area += cache.area[e];
        }
    double p = 0.0;
    const double c = sigma / (N * tau * tau);
    for (int n = 0; n < N; ++n) {
        const Vec inc = element_increments(op, field, n);
        double mean = 0.0;
        if (area > 0.0) {
            for (int e : group) mean += inc[e] * cache.area[e];
            mean /= area;
        }
        const double d = inc[elem] - mean;
        p += c * d * d;
    }
    return p;
}

}  // namespace

TDField topological_derivative_field(const TdContext& ctx) {
    const Mesh& mesh = *ctx.mesh;
    const ElementCache& cache = *ctx.cache;
    const MaterialSet& mat = *ctx.materials;
    const int nd = static_cast<int>(mesh.design_elems.size());
    const Mat2 Rt = (Mat2() << 0.0, -1.0, 1.0, 0.0).finished();  // transpose of curl map

    TDField td;
    td.values = MatX::Zero(nd, kMaterialCount - 1);

    // thermal co-state averaged onto parent elements
    Vec q_elem;
    if (ctx.thermal_op && ctx.thermal_costate) {
        q_elem = Vec::Zero(mesh.num_tris());
        const SubMesh& sub = ctx.thermal_op->sub;
        for (int se = 0; se < sub.num_tris(); ++se) {
            double q = 0.0;
            for (int v = 0; v < 3; ++v) q += (*ctx.thermal_costate)[sub.tris(se, v)];
            q_elem[sub.elem_to_parent[se]] = q / 3.0;
        }
    }

    for (int d = 0; d < nd; ++d) {
        const int ge = mesh.design_elems[d];
        const MaterialId cur = static_cast<MaterialId>((*ctx.labels)[d]);
        for (int col = 0; col < kMaterialCount - 1; ++col) {
            const MaterialId tgt = td_target(cur, col);
            double delta = 0.0;

            // magnetoquasistatic contrast over every state/adjoint pair
            auto mqs_contrast = [&](const TdContext::MqsBlock& blk) {
                if (!blk.op || !blk.field || !blk.adjoint) return 0.0;
                double acc = 0.0;
                const int N = blk.op->grid.n_steps;
                for (int n = 0; n < N; ++n) {
                    const Vec2 ga = elem_grad(mesh, cache, blk.field->a[n], ge);
                    const Vec2 gp = elem_grad(mesh, cache, blk.adjoint->p[n], ge);
                    const double s = ga.squaredNorm();
                    const double nu_i = reluctivity_at(mat, cur, s);
                    const double nu_j = reluctivity_at(mat, tgt, s);
                    const double pol = 2.0 * nu_i / (nu_i + nu_j);
                    acc += pol * (nu_j - nu_i) * ga.dot(gp);
                    const Vec2 dh = magnet_source(mat, tgt) - magnet_source(mat, cur);
                    acc -= pol * (Rt * dh).dot(gp);
                }
                return acc;
            };
            for (const auto& blk : ctx.torque_blocks) delta += mqs_contrast(blk);

            if (ctx.eddy_block.op) {
                delta += mqs_contrast(ctx.eddy_block);
                // conductivity contrast in the eddy mass term
                const MqsOperator& eop = *ctx.eddy_block.op;
                const double dsigma = mat.sigma[static_cast<int>(tgt)] -
                                      mat.sigma[static_cast<int>(cur)];
                if (dsigma != 0.0) {
                    const double inv_tau = 1.0 / eop.grid.tau();
                    for (int n = 0; n < eop.grid.n_steps; ++n) {
                        const Vec inc = element_increments(eop, *ctx.eddy_block.field, n);
                        delta += dsigma * inv_tau * inc[ge] *
                                 elem_mean(mesh, ctx.eddy_block.adjoint->p[n], ge);
                    }
                }
                // EC source support change under the co-state
                if (q_elem.size() > 0) {
                    const double p_i = ec_density_as(eop, *ctx.eddy_block.field, ge, cur);
                    const double p_j = ec_density_as(eop, *ctx.eddy_block.field, ge, tgt);
                    delta -= q_elem[ge] * (p_j - p_i);
                }
            }

            td.values(d, col) = delta;
        }
    }

    // thermal and elastic contrasts need sub-mesh indexed states; add them in
    // a second pass over the sub elements
    if (ctx.thermal_op && ctx.thermal_field && ctx.thermal_costate) {
        const SubMesh& sub = ctx.thermal_op->sub;
        const ElementCache& scache = ctx.thermal_op->cache;
        for (int se = 0; se < sub.num_tris(); ++se) {
            const int ge = sub.elem_to_parent[se];
            const int d = mesh.design_elem_index[ge];
            if (d < 0) continue;
            const MaterialId cur = static_cast<MaterialId>((*ctx.labels)[d]);
            Vec2 gt = Vec2::Zero(), gq = Vec2::Zero();
            double hinge_sq = 0.0;
            for (int v = 0; v < 3; ++v) {
                gt += scache.grad[se].col(v) * ctx.thermal_field->theta[sub.tris(se, v)];
                gq += scache.grad[se].col(v) * (*ctx.thermal_costate)[sub.tris(se, v)];
                const double hinge =
                    std::max(0.0, ctx.thermal_field->theta[sub.tris(se, v)] / ctx.theta_star - 1.0);
                hinge_sq += hinge * hinge / 3.0;
            }
            for (int col = 0; col < kMaterialCount - 1; ++col) {
                const MaterialId tgt = td_target(cur, col);
                const double l_i = mat.lambda[static_cast<int>(cur)];
                const double l_j = mat.lambda[static_cast<int>(tgt)];
                double delta = 2.0 * l_i / (l_i + l_j) * (l_j - l_i) * gt.dot(gq);
                const bool mag_i =
                    cur == MaterialId::MagnetOne || cur == MaterialId::MagnetTwo;
                const bool mag_j =
                    tgt == MaterialId::MagnetOne || tgt == MaterialId::MagnetTwo;
                delta += ctx.w_t * hinge_sq * ((mag_j ? 1.0 : 0.0) - (mag_i ? 1.0 : 0.0));
                td.values(d, col) += delta;
            }
        }
    }

    if (ctx.elastic_op && ctx.elastic_field && ctx.elastic_costate) {
        const SubMesh& sub = ctx.elastic_op->sub;
        const double omega2 = ctx.elastic_field->speed * ctx.elastic_field->speed;
        for (int se = 0; se < sub.num_tris(); ++se) {
            const int ge = sub.elem_to_parent[se];
            const int d = mesh.design_elem_index[ge];
            if (d < 0) continue;
            const MaterialId cur = static_cast<MaterialId>((*ctx.labels)[d]);
            const Vec3 eps_u = element_strain(*ctx.elastic_op, ctx.elastic_field->u, se);
            const Vec3 eps_w = element_strain(*ctx.elastic_op, *ctx.elastic_costate, se);
            Vec2 x[3], wbar = Vec2::Zero();
            for (int v = 0; v < 3; ++v) {
                x[v] = sub.nodes.row(sub.tris(se, v));
                wbar += Vec2((*ctx.elastic_costate)[2 * sub.tris(se, v)],
                             (*ctx.elastic_costate)[2 * sub.tris(se, v) + 1]);
            }
            const Vec2 xbar = (x[0] + x[1] + x[2]) / 3.0;
            for (int col = 0; col < kMaterialCount - 1; ++col) {
                const MaterialId tgt = td_target(cur, col);
                const Mat3 dC = plane_stress_stiffness(mat.young[static_cast<int>(tgt)],
                                                       mat.poisson) -
                                plane_stress_stiffness(mat.young[static_cast<int>(cur)],
                                                       mat.poisson);
                double delta = (dC * eps_u).dot(eps_w);
                const double drho = mat.rho[static_cast<int>(tgt)] -
                                    mat.rho[static_cast<int>(cur)];
                if (drho != 0.0) {
                    double load = 0.0;
                    for (int v = 0; v < 3; ++v) {
                        const Vec2 mom = (3.0 * xbar + x[v]) / 12.0;
                        load += mom.x() * (*ctx.elastic_costate)[2 * sub.tris(se, v)] +
                                mom.y() * (*ctx.elastic_costate)[2 * sub.tris(se, v) + 1];
                    }
                    delta -= drho * omega2 * load;
                }
                td.values(d, col) += delta;
            }
        }
    }
    return td;
}

MatX map_td_to_nodes(const Mesh& mesh, const ElementCache& cache, const TDField& td,
                     const Eigen::VectorXi& labels, const SimplexGeometry& simplex) {
    const int nn = static_cast<int>(mesh.design_nodes.size());
    MatX mapped = MatX::Zero(nn, simplex.m - 1);
    Vec weight = Vec::Zero(nn);
    for (size_t d = 0; d < mesh.design_elems.size(); ++d) {
        const int ge = mesh.design_elems[d];
        const int label = labels[static_cast<int>(d)];
        const Vec mapped_elem =
            simplex.n_inverse[label] * td.values.row(static_cast<int>(d)).transpose();
        const double area = cache.area[ge];
        for (int v = 0; v < 3; ++v) {
            const int dn = mesh.design_node_index[mesh.tris(ge, v)];
            mapped.row(dn) += area * mapped_elem.transpose();
            weight[dn] += area;
        }
    }
    for (int i = 0; i < nn; ++i)
        if (weight[i] > 0.0) mapped.row(i) /= weight[i];
    return mapped;
}

double flip_objective_delta(const std::function<double(const Eigen::VectorXi&)>& objective,
                            const Eigen::VectorXi& labels, int design_elem, MaterialId target,
                            double base_value) {
    Eigen::VectorXi flipped = labels;
    flipped[design_elem] = static_cast<int>(target);
    return objective(flipped) - base_value;
}

}  // namespace rotopt
