#include "rotopt/mqs.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>

namespace rotopt {

namespace {

// rotor spins clockwise, chasing the field wave of the A+/C-/B+ belt layout
constexpr double kSpin = -1.0;

Mat2 curl_rotation() {
    Mat2 r;
    r << 0.0, 1.0, -1.0, 0.0;
    return r;
}

MaterialId fixed_region_material(Region r) {
    switch (r) {
        case Region::Shaft:
        case Region::AirgapRotor:
        case Region::AirgapStator:
        case Region::SlotAPlus:
        case Region::SlotCMinus:
        case Region::SlotBPlus:
            return MaterialId::Air;
        case Region::RotorRing:
        case Region::StatorIron:
            return MaterialId::Iron;
        case Region::Design:
            break;
    }
    throw std::logic_error("fixed_region_material: design region has no fixed material");
}

}  // namespace

MaterialId element_material(const Mesh& mesh, const Eigen::VectorXi& labels, int elem) {
    const Region r = static_cast<Region>(mesh.region[elem]);
    if (r == Region::Design) {
        const int d = mesh.design_elem_index[elem];
        return static_cast<MaterialId>(labels[d]);
    }
    return fixed_region_material(r);
}

MqsOperator build_mqs_operator(const Mesh& mesh, const ElementCache& cache,
                               const MaterialSet& materials, const Eigen::VectorXi& design_labels,
                               const TimeGrid& grid) {
    MqsOperator op;
    op.mesh = &mesh;
    op.cache = &cache;
    op.materials = &materials;
    op.grid = grid;
    op.grid.pole_pairs = mesh.geometry.pole_pairs;
    op.coupling = rotation_coupling(mesh, grid.n_steps);

    const int ne = mesh.num_tris();
    const int nn = mesh.num_nodes();
    op.elem_material.resize(ne);
    op.sigma_elem = Vec::Zero(ne);
    for (int e = 0; e < ne; ++e) {
        op.elem_material[e] = element_material(mesh, design_labels, e);
        const Region r = static_cast<Region>(mesh.region[e]);
        if (r == Region::Design) {
            const MaterialId m = op.elem_material[e];
            if (m == MaterialId::MagnetOne || m == MaterialId::MagnetTwo)
                op.sigma_elem[e] = materials.sigma[static_cast<int>(m)];
        }
        switch (r) {
            case Region::AirgapStator:
            case Region::StatorIron:
            case Region::SlotAPlus:
            case Region::SlotCMinus:
            case Region::SlotBPlus:
                op.stator_elems.push_back(e);
                break;
            case Region::AirgapRotor:
                op.rotor_gap_elems.push_back(e);
                break;
            default:
                break;
        }
        if (r == Region::SlotAPlus) op.phase_elems[0].push_back(e);
        if (r == Region::SlotCMinus) op.phase_elems[1].push_back(e);
        if (r == Region::SlotBPlus) op.phase_elems[2].push_back(e);
    }
    op.area_aplus = 0.0;
    for (int e : op.phase_elems[0]) op.area_aplus += cache.area[e];
    if (op.area_aplus <= 0.0) throw std::runtime_error("mqs: mesh has no A+ winding region");

    {
        std::vector<Triplet> trip;
        add_scaled_mass(trip, mesh.tris, cache, [&](int e) { return op.sigma_elem[e]; });
        op.sigma_mass.resize(nn, nn);
        op.sigma_mass.setFromTriplets(trip.begin(), trip.end());
    }

    op.rotor_if_index = Eigen::VectorXi::Constant(nn, -1);
    op.stator_if_index = Eigen::VectorXi::Constant(nn, -1);
    for (size_t j = 0; j < mesh.rotor_interface.size(); ++j)
        op.rotor_if_index[mesh.rotor_interface[j]] = static_cast<int>(j);
    for (size_t j = 0; j < mesh.stator_interface.size(); ++j)
        op.stator_if_index[mesh.stator_interface[j]] = static_cast<int>(j);
    op.stator_if_adjacency.assign(mesh.stator_interface.size(), {});
    for (int e = 0; e < ne; ++e) {
        if (mesh.region[e] != static_cast<int>(Region::AirgapStator)) continue;
        for (int v = 0; v < 3; ++v) {
            const int idx = op.stator_if_index[mesh.tris(e, v)];
            if (idx >= 0) op.stator_if_adjacency[idx].push_back(e);
        }
    }

    op.maps.resize(grid.n_steps);
    for (int n = 0; n < grid.n_steps; ++n) {
        SignedUnionFind uf(nn);
        for (const auto& [p, q] : mesh.periodic_pairs) uf.link(q, p, -1.0);
        for (size_t j = 0; j < mesh.rotor_interface.size(); ++j) {
            const auto [p, s] = op.coupling.partner_of_rotor(static_cast<int>(j), n);
            uf.link(mesh.rotor_interface[j], mesh.stator_interface[p], s);
        }
        for (int d : mesh.gamma_s_nodes) uf.fix_zero(d);
        op.maps[n] = build_dof_map(uf);
    }
    return op;
}

Vec current_density(const Mesh& mesh, const ElementCache& cache, const CurrentExcitation& exc,
                    const TimeGrid& grid, double step, double area_aplus) {
    (void)cache;
    Vec j = Vec::Zero(mesh.num_tris());
    if (exc.amplitude == 0.0) return j;
    const double jhat = exc.turns_per_slot * exc.amplitude / area_aplus;
    const double g = grid.elec_angle(step) + exc.angle;
    const double wa = std::sin(g);
    const double wc = -std::sin(g - 2.0 * kPi / 3.0);
    const double wb = std::sin(g - 4.0 * kPi / 3.0);
    for (int e = 0; e < mesh.num_tris(); ++e) {
        switch (static_cast<Region>(mesh.region[e])) {
            case Region::SlotAPlus: j[e] = jhat * wa; break;
            case Region::SlotCMinus: j[e] = jhat * wc; break;
            case Region::SlotBPlus: j[e] = jhat * wb; break;
            default: break;
        }
    }
    return j;
}

Vec current_density(const MqsOperator& op, const CurrentExcitation& exc, double step) {
    return current_density(*op.mesh, *op.cache, exc, op.grid, step, op.area_aplus);
}

Vec step_residual(const MqsOperator& op, const CurrentExcitation& exc, int step,
                  const Vec& a_full) {
    const Mesh& mesh = *op.mesh;
    const ElementCache& cache = *op.cache;
    Vec r = Vec::Zero(mesh.num_nodes());
    for (int e = 0; e < mesh.num_tris(); ++e) {
        const auto& g = cache.grad[e];
        Vec2 grad = Vec2::Zero();
        for (int v = 0; v < 3; ++v) grad += g.col(v) * a_full[mesh.tris(e, v)];
        const Vec2 b = rot90cw(grad);
        const Vec2 h = h_field(*op.materials, op.elem_material[e], b);
        const double area = cache.area[e];
        for (int v = 0; v < 3; ++v) r[mesh.tris(e, v)] += area * h.dot(rot90cw(g.col(v)));
    }
    const Vec j = current_density(op, exc, step);
    Vec f = Vec::Zero(mesh.num_nodes());
    add_element_source(f, mesh.tris, cache, j);
    return r - f;
}

namespace {

SpMat tangent_over(const MqsOperator& op, const Vec& a_full, const std::vector<int>* subset) {
    const Mesh& mesh = *op.mesh;
    const ElementCache& cache = *op.cache;
    const Mat2 R = curl_rotation();
    std::vector<Triplet> trip;
    auto add_elem = [&](int e) {
        const auto& g = cache.grad[e];
        Vec2 grad = Vec2::Zero();
        for (int v = 0; v < 3; ++v) grad += g.col(v) * a_full[mesh.tris(e, v)];
        const Vec2 b = rot90cw(grad);
        const Mat2 J = differential_reluctivity(*op.materials, op.elem_material[e], b);
        const Mat2 G = R.transpose() * J * R;
        const double area = cache.area[e];
        for (int i = 0; i < 3; ++i) {
            const Vec2 Ggi = G * g.col(i);
            for (int jv = 0; jv < 3; ++jv)
                trip.emplace_back(mesh.tris(e, jv), mesh.tris(e, i), area * Ggi.dot(g.col(jv)));
        }
    };
    if (subset) {
        for (int e : *subset) add_elem(e);
    } else {
        for (int e = 0; e < mesh.num_tris(); ++e) add_elem(e);
    }
    SpMat K(mesh.num_nodes(), mesh.num_nodes());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

}  // namespace

SpMat step_tangent(const MqsOperator& op, const Vec& a_full) {
    return tangent_over(op, a_full, nullptr);
}

SpMat stator_tangent(const MqsOperator& op, const Vec& a_full) {
    return tangent_over(op, a_full, &op.stator_elems);
}

namespace {

// stator-side residual restricted to the h-term and slot sources; its values
// at the interface rows are the weak multiplier lambda
Vec stator_residual(const MqsOperator& op, const CurrentExcitation& exc, int step,
                    const Vec& a_full) {
    const Mesh& mesh = *op.mesh;
    const ElementCache& cache = *op.cache;
    Vec r = Vec::Zero(mesh.num_nodes());
    for (int e : op.stator_elems) {
        const auto& g = cache.grad[e];
        Vec2 grad = Vec2::Zero();
        for (int v = 0; v < 3; ++v) grad += g.col(v) * a_full[mesh.tris(e, v)];
        const Vec2 b = rot90cw(grad);
        const Vec2 h = h_field(*op.materials, op.elem_material[e], b);
        const double area = cache.area[e];
        for (int v = 0; v < 3; ++v) r[mesh.tris(e, v)] += area * h.dot(rot90cw(g.col(v)));
    }
    const Vec j = current_density(op, exc, step);
    for (int phase = 0; phase < 3; ++phase)
        for (int e : op.phase_elems[phase]) {
            const double w = j[e] * cache.area[e] / 3.0;
            for (int v = 0; v < 3; ++v) r[mesh.tris(e, v)] -= w;
        }
    return r;
}

Vec extract_lambda(const MqsOperator& op, const CurrentExcitation& exc, int step,
                   const Vec& a_full) {
    const Vec rs = stator_residual(op, exc, step, a_full);
    const auto& nodes = op.mesh->stator_interface;
    Vec lambda(static_cast<int>(nodes.size()));
    for (size_t p = 0; p < nodes.size(); ++p) lambda[static_cast<int>(p)] = rs[nodes[p]];
    return lambda;
}

struct StepSolveResult {
    Vec a_full;
    int newton_iters = 0;
};

// magnitude of the terms the residual is assembled from; the attainable
// residual is limited by cancellation relative to this scale
double residual_scale(const MqsOperator& op, const CurrentExcitation& exc, int step,
                      const Vec& a_full) {
    const Mesh& mesh = *op.mesh;
    const ElementCache& cache = *op.cache;
    Vec s = Vec::Zero(mesh.num_nodes());
    for (int e = 0; e < mesh.num_tris(); ++e) {
        const auto& g = cache.grad[e];
        Vec2 grad = Vec2::Zero();
        for (int v = 0; v < 3; ++v) grad += g.col(v) * a_full[mesh.tris(e, v)];
        const Vec2 b = rot90cw(grad);
        const Vec2 h = h_field(*op.materials, op.elem_material[e], b);
        const double area = cache.area[e];
        for (int v = 0; v < 3; ++v)
            s[mesh.tris(e, v)] += std::abs(area * h.dot(rot90cw(g.col(v))));
    }
    const Vec j = current_density(op, exc, step);
    for (int e = 0; e < mesh.num_tris(); ++e) {
        if (j[e] == 0.0) continue;
        const double w = std::abs(j[e]) * cache.area[e] / 3.0;
        for (int v = 0; v < 3; ++v) s[mesh.tris(e, v)] += w;
    }
    return s.norm();
}

// convex stored-energy functional of one step; its gradient is the step
// residual, so Newton with an energy line search converges globally
double magnetic_energy(const MqsOperator& op, const Vec& f_full, const Vec& a_full,
                       const Vec* prev_full, double inv_tau) {
    const Mesh& mesh = *op.mesh;
    const ElementCache& cache = *op.cache;
    const MaterialSet& mat = *op.materials;
    double w = 0.0;
    for (int e = 0; e < mesh.num_tris(); ++e) {
        const auto& g = cache.grad[e];
        Vec2 grad = Vec2::Zero();
        for (int v = 0; v < 3; ++v) grad += g.col(v) * a_full[mesh.tris(e, v)];
        const Vec2 b = rot90cw(grad);
        double phi;
        switch (op.elem_material[e]) {
            case MaterialId::Air: phi = kNu0 * b.squaredNorm(); break;
            case MaterialId::Iron: phi = mat.iron.nu_integral(b.squaredNorm()); break;
            default: {
                const double a = mat.magnet_angle[op.elem_material[e] == MaterialId::MagnetOne ? 0 : 1];
                const Vec2 br = mat.remanence * Vec2(std::cos(a), std::sin(a));
                phi = mat.nu_magnet * (b - br).squaredNorm();
            }
        }
        w += 0.5 * cache.area[e] * phi;
    }
    w -= f_full.dot(a_full);
    if (prev_full) {
        const Vec diff = a_full - *prev_full;
        Vec md = Vec::Zero(diff.size());
        apply_scaled_mass(md, diff, mesh.tris, cache, [&](int e) { return op.sigma_elem[e]; },
                          0.5 * inv_tau);
        w += md.dot(diff);
    }
    return w;
}

// damped Newton for one decoupled step (optionally with the eddy mass term
// against a fixed previous snapshot)
StepSolveResult solve_single_step(const MqsOperator& op, const CurrentExcitation& exc, int step,
                                  const Vec& init_full, const Vec* prev_full,
                                  const MqsSolveOptions& opt) {
    const DofMap& map = op.maps[step];
    const double inv_tau = prev_full ? 1.0 / op.grid.tau() : 0.0;

    Vec f_full = Vec::Zero(map.n_full);
    add_element_source(f_full, op.mesh->tris, *op.cache, current_density(op, exc, step));

    auto residual_red = [&](const Vec& a_full) {
        Vec r = step_residual(op, exc, step, a_full);
        if (prev_full) {
            Vec diff = a_full - *prev_full;
            apply_scaled_mass(r, diff, op.mesh->tris, *op.cache,
                              [&](int e) { return op.sigma_elem[e]; }, inv_tau);
        }
        return map.reduce_vec(r);
    };

    const double ref = map.reduce_vec(step_residual(op, exc, step, Vec::Zero(map.n_full))).norm();
    // class-averaged reduced representation of the initial guess
    Vec u = Vec::Zero(map.n_reduced);
    {
        Vec colsum = Vec::Zero(map.n_reduced);
        for (int k = 0; k < map.P.outerSize(); ++k)
            for (SpMat::InnerIterator it(map.P, k); it; ++it) {
                u[k] += it.value() * init_full[it.row()];
                colsum[k] += 1.0;
            }
        for (int k = 0; k < map.n_reduced; ++k) u[k] = colsum[k] > 0 ? u[k] / colsum[k] : 0.0;
    }

    if (ref == 0.0) return {Vec::Zero(map.n_full), 0};

    Vec r = residual_red(map.expand(u));
    StepSolveResult out;
    for (int it = 0; it < opt.max_newton; ++it) {
        const double tol =
            opt.tol_rel * std::max(ref, residual_scale(op, exc, step, map.expand(u)));
        if (r.norm() <= tol) {
            out.a_full = map.expand(u);
            out.newton_iters = it;
            return out;
        }
        Vec a_full = map.expand(u);
        SpMat K = step_tangent(op, a_full);
        if (prev_full) {
            K = K + inv_tau * op.sigma_mass;
        }
        SpMat K_red = map.reduce(K);
        Eigen::SimplicialLDLT<SpMat> solver(K_red);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("mqs: factorization failed in static solve");
        Vec du = solver.solve(-r);
        // one step of iterative refinement keeps the direction usable on the
        // thin-element gap conditioning
        du += solver.solve(-r - K_red * du);
        // update at working precision: the discrete system is solved as far
        // as double arithmetic can express it
        if (du.norm() <= 1e-12 * std::max(u.norm(), 1e-30)) {
            out.a_full = map.expand(u);
            out.newton_iters = it;
            return out;
        }
        // hybrid damping: accept on residual decrease (terminal phase) or on
        // a decrease of the convex stored energy (global phase)
        const double w0 = magnetic_energy(op, f_full, a_full, prev_full, inv_tau);
        const double rnorm = r.norm();
        double alpha = 1.0;
        Vec r_try;
        while (true) {
            const Vec a_try = map.expand(u + alpha * du);
            r_try = residual_red(a_try);
            if (r_try.norm() < rnorm) break;
            if (magnetic_energy(op, f_full, a_try, prev_full, inv_tau) < w0) break;
            if (alpha < 1e-7) break;
            alpha *= 0.5;
        }
        u += alpha * du;
        r = std::move(r_try);
        if (opt.trace)
            std::fprintf(stderr, "  newton %2d: |r|=%.3e alpha=%.3g (tol %.3e)\n", it, r.norm(),
                         alpha, tol);
    }
    const double tol = opt.tol_rel * std::max(ref, residual_scale(op, exc, step, map.expand(u)));
    if (r.norm() <= tol) {
        out.a_full = map.expand(u);
        out.newton_iters = opt.max_newton;
        return out;
    }
    throw std::runtime_error("mqs: Newton did not converge in static step solve; residual=" +
                             std::to_string(r.norm()) + " (tol " + std::to_string(tol) + ")");
}

std::vector<Vec> solve_static_sequence(const MqsOperator& op, const CurrentExcitation& exc,
                                       const MqsSolveOptions& opt) {
    const int N = op.grid.n_steps;
    std::vector<Vec> a(N);
    Vec init = Vec::Zero(op.mesh->num_nodes());
    for (int n = 0; n < N; ++n) {
        a[n] = solve_single_step(op, exc, n, init, nullptr, opt).a_full;
        init = a[n];
    }
    return a;
}

std::vector<Vec> solve_monolithic_eddy(const MqsOperator& op, const CurrentExcitation& exc,
                                       const MqsSolveOptions& opt) {
    const int N = op.grid.n_steps;
    const double inv_tau = 1.0 / op.grid.tau();

    std::vector<Vec> a = solve_static_sequence(op, exc, opt);
    std::vector<int> offset(N + 1, 0);
    for (int n = 0; n < N; ++n) offset[n + 1] = offset[n] + op.maps[n].n_reduced;
    const int total = offset[N];

    auto gather = [&](const std::vector<Vec>& snaps) {
        Vec u(total);
        for (int n = 0; n < N; ++n) {
            // consistent reduced representation of the full snapshot
            const DofMap& map = op.maps[n];
            Vec acc = Vec::Zero(map.n_reduced), cnt = Vec::Zero(map.n_reduced);
            for (int k = 0; k < map.P.outerSize(); ++k)
                for (SpMat::InnerIterator it(map.P, k); it; ++it) {
                    acc[k] += it.value() * snaps[n][it.row()];
                    cnt[k] += 1.0;
                }
            for (int k = 0; k < map.n_reduced; ++k)
                u[offset[n] + k] = cnt[k] > 0 ? acc[k] / cnt[k] : 0.0;
        }
        return u;
    };
    auto scatter = [&](const Vec& u) {
        std::vector<Vec> snaps(N);
        for (int n = 0; n < N; ++n)
            snaps[n] = op.maps[n].expand(u.segment(offset[n], op.maps[n].n_reduced));
        return snaps;
    };

    auto residual = [&](const std::vector<Vec>& snaps) {
        Vec r(total);
        for (int n = 0; n < N; ++n) {
            Vec rn = step_residual(op, exc, n, snaps[n]);
            const Vec diff = snaps[n] - snaps[(n + N - 1) % N];
            apply_scaled_mass(rn, diff, op.mesh->tris, *op.cache,
                              [&](int e) { return op.sigma_elem[e]; }, inv_tau);
            r.segment(offset[n], op.maps[n].n_reduced) = op.maps[n].reduce_vec(rn);
        }
        return r;
    };

    double ref = 0.0;
    {
        std::vector<Vec> zero(N, Vec::Zero(op.mesh->num_nodes()));
        ref = residual(zero).norm();
    }
    if (ref == 0.0) return std::vector<Vec>(N, Vec::Zero(op.mesh->num_nodes()));
    for (int n = 0; n < N; ++n)
        ref = std::max(ref, residual_scale(op, exc, n, a[n]) * std::sqrt(static_cast<double>(N)));
    const double tol = opt.tol_rel * ref;

    Vec u = gather(a);
    std::vector<Vec> snaps = scatter(u);
    Vec r = residual(snaps);
    for (int it = 0; it < opt.max_newton; ++it) {
        if (r.norm() <= tol) return snaps;
        std::vector<Triplet> trip;
        for (int n = 0; n < N; ++n) {
            const int prev = (n + N - 1) % N;
            SpMat diag = op.maps[n].reduce(
                SpMat(step_tangent(op, snaps[n]) + inv_tau * op.sigma_mass));
            for (int k = 0; k < diag.outerSize(); ++k)
                for (SpMat::InnerIterator itd(diag, k); itd; ++itd)
                    trip.emplace_back(offset[n] + itd.row(), offset[n] + itd.col(), itd.value());
            SpMat off = op.maps[n].P.transpose() * (inv_tau * op.sigma_mass) * op.maps[prev].P;
            for (int k = 0; k < off.outerSize(); ++k)
                for (SpMat::InnerIterator ito(off, k); ito; ++ito)
                    trip.emplace_back(offset[n] + ito.row(), offset[prev] + ito.col(), -ito.value());
        }
        SpMat J(total, total);
        J.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<SpMat> solver;
        solver.compute(J);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("mqs: monolithic factorization failed");
        const Vec du = solver.solve(-r);
        if (du.norm() <= 1e-12 * std::max(u.norm(), 1e-30)) return snaps;
        const double rnorm = r.norm();
        double alpha = 1.0;
        while (true) {
            std::vector<Vec> snaps_try = scatter(u + alpha * du);
            Vec r_try = residual(snaps_try);
            if (r_try.norm() < rnorm || alpha < 1e-6) {
                u += alpha * du;
                snaps = std::move(snaps_try);
                r = std::move(r_try);
                break;
            }
            alpha *= 0.5;
        }
    }
    if (r.norm() <= tol) return snaps;
    throw std::runtime_error("mqs: monolithic Newton did not converge; residual=" +
                             std::to_string(r.norm()) + " (tol " + std::to_string(tol) + ")");
}

std::vector<Vec> solve_marching_eddy(const MqsOperator& op, const CurrentExcitation& exc,
                                     const MqsSolveOptions& opt) {
    const int N = op.grid.n_steps;
    std::vector<Vec> a = solve_static_sequence(op, exc, opt);
    double ref = 0.0;
    for (const Vec& an : a) ref = std::max(ref, an.norm());
    if (ref == 0.0) return a;
    for (int sweep = 0; sweep < opt.max_period_sweeps; ++sweep) {
        const Vec last_before = a[N - 1];
        for (int n = 0; n < N; ++n) {
            const Vec& prev = a[(n + N - 1) % N];
            a[n] = solve_single_step(op, exc, n, a[n], &prev, opt).a_full;
        }
        if ((a[N - 1] - last_before).norm() <= opt.periodic_tol * ref) return a;
    }
    throw std::runtime_error("mqs: marching mode did not reach the periodic state");
}

}  // namespace

PeriodicField solve_periodic_mqs(const MqsOperator& op, const CurrentExcitation& exc,
                                 bool with_eddies, const MqsSolveOptions& options) {
    PeriodicField field;
    field.grid = op.grid;
    field.excitation = exc;
    field.with_eddies = with_eddies;
    if (!with_eddies || op.sigma_mass.nonZeros() == 0) {
        field.a = solve_static_sequence(op, exc, options);
        field.with_eddies = with_eddies;
    } else if (options.marching_fallback) {
        field.a = solve_marching_eddy(op, exc, options);
    } else {
        field.a = solve_monolithic_eddy(op, exc, options);
    }
    field.lambda.resize(op.grid.n_steps);
    for (int n = 0; n < op.grid.n_steps; ++n)
        field.lambda[n] = extract_lambda(op, exc, n, field.a[n]);
    return field;
}

namespace {

// radial flux density at a stator interface node (nu0-side trace of b.n at
// the matched rotor position), averaged over the adjacent gap elements
double radial_flux_at_stator_node(const MqsOperator& op, const Vec& a_full, int if_index) {
    const Mesh& mesh = *op.mesh;
    const auto& elems = op.stator_if_adjacency[if_index];
    if (elems.empty()) return 0.0;
    const int node = mesh.stator_interface[if_index];
    const Vec2 pos = mesh.nodes.row(node);
    const Vec2 er = pos.normalized();
    double acc = 0.0;
    for (int e : elems) {
        const auto& g = op.cache->grad[e];
        Vec2 grad = Vec2::Zero();
        for (int v = 0; v < 3; ++v) grad += g.col(v) * a_full[mesh.tris(e, v)];
        acc += rot90cw(grad).dot(er);
    }
    return acc / static_cast<double>(elems.size());
}

}  // namespace

double torque_step(const MqsOperator& op, const PeriodicField& field, int step) {
    const Mesh& mesh = *op.mesh;
    const int n_if = mesh.interface_intervals;
    const Vec& lambda = field.lambda[step];
    double acc = 0.0;
    for (int p = 0; p <= n_if; ++p)
        acc += lambda[p] * radial_flux_at_stator_node(op, field.a[step], p);
    const double t_z = 2.0 * mesh.geometry.pole_pairs * mesh.geometry.interface_radius *
                       mesh.geometry.axial_length * acc;
    return kSpin * t_z;
}

double average_torque(const MqsOperator& op, const PeriodicField& field) {
    double acc = 0.0;
    for (int n = 0; n < op.grid.n_steps; ++n) acc += torque_step(op, field, n);
    return acc / op.grid.n_steps;
}

double maxwell_stress_torque(const MqsOperator& op, const Vec& a_full, double radius) {
    const Mesh& mesh = *op.mesh;
    const MachineGeometry& g = mesh.geometry;
    if (!(radius > g.rotor_outer_radius) || !(radius < g.stator_inner_radius))
        throw std::invalid_argument("maxwell_stress_torque: radius must lie inside the airgap");
    // Arkkio form: area average of r sigma_{r theta} over the airgap half
    // containing the radius (robust against the pointwise slot noise of the
    // piecewise-constant flux density)
    const bool rotor_side = radius < g.interface_radius;
    const double r_lo = rotor_side ? g.rotor_outer_radius : g.interface_radius;
    const double r_hi = rotor_side ? g.interface_radius : g.stator_inner_radius;
    double acc = 0.0;
    auto add_elem = [&](int e) {
        const Vec2 cen = op.cache->centroid.row(e);
        const double r = cen.norm();
        const auto& gr = op.cache->grad[e];
        Vec2 grad = Vec2::Zero();
        for (int v = 0; v < 3; ++v) grad += gr.col(v) * a_full[mesh.tris(e, v)];
        const Vec2 b = rot90cw(grad);
        const Vec2 er = cen / r;
        const Vec2 et(-er.y(), er.x());
        acc += op.cache->area[e] * r * b.dot(er) * b.dot(et);
    };
    if (rotor_side) {
        for (int e : op.rotor_gap_elems) add_elem(e);
    } else {
        for (int e : op.stator_elems)
            if (mesh.region[e] == static_cast<int>(Region::AirgapStator)) add_elem(e);
    }
    const double t_z = 2.0 * g.pole_pairs * g.axial_length * kNu0 * acc / (r_hi - r_lo);
    return kSpin * t_z;
}

double joule_losses(const CurrentExcitation& exc, double stator_resistance) {
    return stator_resistance * exc.amplitude * exc.amplitude / 2.0;
}

Vec element_increments(const MqsOperator& op, const PeriodicField& field, int step) {
    const Mesh& mesh = *op.mesh;
    const int N = op.grid.n_steps;
    const Vec& cur = field.a[step];
    const Vec& prev = field.a[(step + N - 1) % N];
    Vec inc = Vec::Zero(mesh.num_tris());
    for (int e = 0; e < mesh.num_tris(); ++e) {
        double d = 0.0;
        for (int v = 0; v < 3; ++v) {
            const int node = mesh.tris(e, v);
            d += cur[node] - prev[node];
        }
        inc[e] = d / 3.0;
    }
    return inc;
}

Vec ec_loss_density_from_increments(const Mesh& mesh, const ElementCache& cache,
                                    const std::vector<char>& in_region,
                                    const std::vector<Vec>& increments, double sigma, double tau) {
    const int N = static_cast<int>(increments.size());
    Vec p = Vec::Zero(mesh.num_tris());
    double area = 0.0;
    for (int e = 0; e < mesh.num_tris(); ++e)
        if (in_region[e]) area += cache.area[e];
    if (area <= 0.0) return p;  // empty region: zero losses, no mean
    const double c = sigma / (N * tau * tau);
    for (int n = 0; n < N; ++n) {
        double mean = 0.0;
        for (int e = 0; e < mesh.num_tris(); ++e)
            if (in_region[e]) mean += increments[n][e] * cache.area[e];
        mean /= area;
        for (int e = 0; e < mesh.num_tris(); ++e)
            if (in_region[e]) {
                const double d = increments[n][e] - mean;
                p[e] += c * d * d;
            }
    }
    return p;
}

Vec ec_loss_density(const MqsOperator& op, const PeriodicField& field, MaterialId magnet) {
    if (magnet != MaterialId::MagnetOne && magnet != MaterialId::MagnetTwo)
        throw std::invalid_argument("ec_loss_density: region must be one of the magnets");
    const Mesh& mesh = *op.mesh;
    std::vector<char> in_region(mesh.num_tris(), 0);
    for (int e = 0; e < mesh.num_tris(); ++e)
        if (mesh.region[e] == static_cast<int>(Region::Design) && op.elem_material[e] == magnet)
            in_region[e] = 1;
    std::vector<Vec> inc(op.grid.n_steps);
    for (int n = 0; n < op.grid.n_steps; ++n) inc[n] = element_increments(op, field, n);
    return ec_loss_density_from_increments(mesh, *op.cache, in_region, inc,
                                           op.materials->sigma[static_cast<int>(magnet)],
                                           op.grid.tau());
}

double ec_losses(const MqsOperator& op, const Vec& density) {
    double acc = 0.0;
    for (int e = 0; e < op.mesh->num_tris(); ++e) acc += density[e] * op.cache->area[e];
    return 2.0 * op.mesh->geometry.pole_pairs * op.mesh->geometry.axial_length * acc;
}

Vec stator_sixth_shift(const Mesh& mesh, const Vec& a_full) {
    Vec out = a_full;
    for (int node = mesh.rotor_node_count; node < mesh.num_nodes(); ++node) {
        const int intervals = mesh.node_intervals[node];
        const int shift = intervals / 3;
        int col = mesh.node_col[node] - shift;
        double sign = 1.0;
        if (col < 0) {
            col += intervals;
            sign = -1.0;
        }
        const int first = node - mesh.node_col[node];
        out[node] = sign * a_full[first + col];
    }
    return out;
}

EnergyBalance energy_balance(const MqsOperator& op, const PeriodicField& field) {
    const Mesh& mesh = *op.mesh;
    const int N = op.grid.n_steps;
    const double scale = 2.0 * mesh.geometry.pole_pairs * mesh.geometry.axial_length;
    EnergyBalance bal;
    for (int n = 0; n < N; ++n) {
        // midpoint currents keep the reactive energy swing out of the balance
        const Vec j = current_density(op, field.excitation, n - 0.5);
        const Vec& cur = field.a[n];
        const Vec prev = (n == 0) ? stator_sixth_shift(mesh, field.a[N - 1]) : field.a[n - 1];
        for (int phase = 0; phase < 3; ++phase)
            for (int e : op.phase_elems[phase]) {
                double d = 0.0;
                for (int v = 0; v < 3; ++v) {
                    const int node = mesh.tris(e, v);
                    d += cur[node] - prev[node];
                }
                bal.input += scale * j[e] * (d / 3.0) * op.cache->area[e];
            }
        bal.mechanical += op.grid.tau() * op.grid.mech_speed * torque_step(op, field, n);
    }
    Vec density = ec_loss_density(op, field, MaterialId::MagnetOne) +
                  ec_loss_density(op, field, MaterialId::MagnetTwo);
    bal.eddy = ec_losses(op, density) * op.grid.period_sixth();
    return bal;
}

}  // namespace rotopt
