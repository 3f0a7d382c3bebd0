#include "rotopt/mesh_builder.hpp"

#include <cmath>

namespace rotopt {

namespace {

struct Circle {
    double radius = 0.0;
    int intervals = 0;
    int first_node = 0;
};

struct Builder {
    std::vector<Vec2> nodes;
    std::vector<Eigen::Vector3i> tris;
    std::vector<int> regions;
    double span = 0.0;

    Circle add_circle(double radius, int intervals) {
        Circle c{radius, intervals, static_cast<int>(nodes.size())};
        for (int j = 0; j <= intervals; ++j) {
            const double th = span * j / intervals;
            nodes.emplace_back(radius * std::cos(th), radius * std::sin(th));
        }
        return c;
    }

    void add_tri(int a, int b, int c, Region region) {
        tris.emplace_back(a, b, c);
        regions.push_back(static_cast<int>(region));
    }

    int band_parity = 0;

    template <typename Labeler>
    void add_band(const Circle& lo, const Circle& hi, Labeler&& label) {
        auto emit = [&](int a, int b, int c) {
            const Vec2 cen = (nodes[a] + nodes[b] + nodes[c]) / 3.0;
            add_tri(a, b, c, label(cen));
        };
        ++band_parity;
        if (lo.intervals == hi.intervals) {
            // alternating diagonals keep the band mirror-symmetric on average
            for (int j = 0; j < lo.intervals; ++j) {
                const int a = lo.first_node + j, b = a + 1;
                const int c = hi.first_node + j, d = c + 1;
                if ((j + band_parity) % 2 == 0) {
                    emit(a, c, d);
                    emit(a, d, b);
                } else {
                    emit(a, c, b);
                    emit(b, c, d);
                }
            }
            return;
        }
        // zipper strip between two differently spaced circles
        int i = 0, j = 0;
        const auto ang_lo = [&](int m) { return span * m / lo.intervals; };
        const auto ang_hi = [&](int m) { return span * m / hi.intervals; };
        while (i < lo.intervals || j < hi.intervals) {
            bool advance_lower;
            if (i == lo.intervals)
                advance_lower = false;
            else if (j == hi.intervals)
                advance_lower = true;
            else
                advance_lower = ang_lo(i + 1) <= ang_hi(j + 1) + 1e-14;
            if (advance_lower) {
                emit(lo.first_node + i, hi.first_node + j, lo.first_node + i + 1);
                ++i;
            } else {
                emit(lo.first_node + i, hi.first_node + j, hi.first_node + j + 1);
                ++j;
            }
        }
    }
};

int rows_for(double thickness, double h) {
    return std::max(1, static_cast<int>(std::llround(thickness / h)));
}

}  // namespace

Mesh build_machine_mesh(const MachineGeometry& geometry, const MeshOptions& options) {
    geometry.validate();
    const double h = options.target_edge_length;
    if (!(h > 0.0)) throw std::invalid_argument("mesh: target_edge_length must be positive");
    if (options.n_steps < 1) throw std::invalid_argument("mesh: n_steps must be >= 1");
    if (2 * options.airgap_layers_per_half < 3)
        throw std::invalid_argument(
            "mesh: airgap resolved by fewer than 3 radial layers; "
            "increase airgap_layers_per_half to at least 2");

    const MachineGeometry& g = geometry;
    const double span = g.pole_span();

    // interface spacing must divide the per-step rotation of
    // span/3 / n_steps (15 deg mechanical for 4 pole pairs)
    const int if_base = 3 * options.n_steps;
    const double if_arc = span * g.interface_radius;
    const int k = std::max(1, static_cast<int>(std::llround(if_arc / h / if_base)));
    const int n_if = if_base * k;

    // stator spacing aligned to quarter slot pitches so the slot windows
    // land on mesh lines
    const int spp = g.slots_per_pole();
    const double pitch_arc = g.slot_pitch() * g.stator_inner_radius;
    const int m = 4 * std::max(1, static_cast<int>(std::llround(pitch_arc / h / 4.0)));
    const int n_st = spp * m;

    Builder b;
    b.span = span;

    Mesh mesh;
    mesh.geometry = g;
    mesh.interface_intervals = n_if;
    mesh.stator_intervals = n_st;

    std::vector<Circle> circles;
    auto fixed = [](Region r) {
        return [r](const Vec2&) { return r; };
    };

    // --- rotor stack (material frame) ---
    Circle cur = b.add_circle(g.rotor_inner_radius, n_if);
    circles.push_back(cur);
    Circle shaft_circle, rim_circle, rotor_if_circle;

    auto stack_band = [&](double r_to, int rows, int intervals, auto&& label) {
        for (int i = 1; i <= rows; ++i) {
            const double r = cur.radius + (r_to - cur.radius) * i / rows;
            Circle next = b.add_circle(r, intervals);
            b.add_band(cur, next, label);
            circles.push_back(next);
            cur = next;
        }
    };

    stack_band(g.shaft_radius, rows_for(g.shaft_radius - g.rotor_inner_radius, h), n_if,
               fixed(Region::Shaft));
    shaft_circle = cur;
    stack_band(g.ring_inner_radius, rows_for(g.ring_inner_radius - g.shaft_radius, h), n_if,
               fixed(Region::Design));
    stack_band(g.rotor_outer_radius, rows_for(g.rotor_outer_radius - g.ring_inner_radius, h),
               n_if, fixed(Region::RotorRing));
    rim_circle = cur;
    stack_band(g.interface_radius, options.airgap_layers_per_half, n_if,
               fixed(Region::AirgapRotor));
    rotor_if_circle = cur;
    mesh.rotor_node_count = static_cast<int>(b.nodes.size());

    // --- stator stack (lab frame), duplicated interface circle ---
    cur = b.add_circle(g.interface_radius, n_if);
    const Circle stator_if_circle = cur;
    circles.push_back(cur);
    stack_band(g.stator_inner_radius, options.airgap_layers_per_half, n_if,
               fixed(Region::AirgapStator));

    const double slot_in = g.stator_inner_radius + g.slot_inner_offset;
    const double slot_out = slot_in + g.slot_depth;
    // tooth-tip band carries the angular-resolution change
    stack_band(slot_in, 1, n_st, fixed(Region::StatorIron));

    const double pitch = g.slot_pitch();
    const double margin = 0.5 * (1.0 - g.slot_width_frac) * pitch;
    auto slot_label = [&](const Vec2& c) {
        const double th = std::atan2(c.y(), c.x());
        const int slot = static_cast<int>(th / pitch);
        const double local = th - slot * pitch;
        if (local < margin || local > pitch - margin) return Region::StatorIron;
        switch ((slot / 2) % 3) {
            case 0: return Region::SlotAPlus;
            case 1: return Region::SlotCMinus;
            default: return Region::SlotBPlus;
        }
    };
    stack_band(slot_out, rows_for(slot_out - slot_in, h), n_st, slot_label);
    stack_band(g.stator_outer_radius, rows_for(g.stator_outer_radius - slot_out, h), n_st,
               fixed(Region::StatorIron));
    const Circle outer_circle = cur;

    // --- pack ---
    mesh.nodes.resize(static_cast<int>(b.nodes.size()), 2);
    for (size_t i = 0; i < b.nodes.size(); ++i) mesh.nodes.row(static_cast<int>(i)) = b.nodes[i];
    mesh.node_col.resize(mesh.nodes.rows());
    mesh.node_intervals.resize(mesh.nodes.rows());
    for (const Circle& c : circles)
        for (int j = 0; j <= c.intervals; ++j) {
            mesh.node_col[c.first_node + j] = j;
            mesh.node_intervals[c.first_node + j] = c.intervals;
        }
    mesh.tris.resize(static_cast<int>(b.tris.size()), 3);
    for (size_t i = 0; i < b.tris.size(); ++i) mesh.tris.row(static_cast<int>(i)) = b.tris[i];
    mesh.region = Eigen::Map<Eigen::VectorXi>(b.regions.data(), static_cast<int>(b.regions.size()));

    for (const Circle& c : circles)
        mesh.periodic_pairs.emplace_back(c.first_node, c.first_node + c.intervals);

    mesh.rotor_interface.resize(n_if + 1);
    mesh.stator_interface.resize(n_if + 1);
    for (int j = 0; j <= n_if; ++j) {
        mesh.rotor_interface[j] = rotor_if_circle.first_node + j;
        mesh.stator_interface[j] = stator_if_circle.first_node + j;
    }
    for (int j = 0; j <= n_st; ++j) mesh.gamma_s_nodes.push_back(outer_circle.first_node + j);
    for (int j = 0; j < n_if; ++j) {
        mesh.gamma_sh_edges.emplace_back(shaft_circle.first_node + j, shaft_circle.first_node + j + 1);
        mesh.gamma_r_edges.emplace_back(rim_circle.first_node + j, rim_circle.first_node + j + 1);
    }

    mesh.design_elem_index = Eigen::VectorXi::Constant(mesh.num_tris(), -1);
    mesh.design_node_index = Eigen::VectorXi::Constant(mesh.num_nodes(), -1);
    for (int e = 0; e < mesh.num_tris(); ++e) {
        if (mesh.region[e] != static_cast<int>(Region::Design)) continue;
        mesh.design_elem_index[e] = static_cast<int>(mesh.design_elems.size());
        mesh.design_elems.push_back(e);
        for (int v = 0; v < 3; ++v) {
            const int n = mesh.tris(e, v);
            if (mesh.design_node_index[n] < 0) {
                mesh.design_node_index[n] = static_cast<int>(mesh.design_nodes.size());
                mesh.design_nodes.push_back(n);
            }
        }
    }

    for (int e = 0; e < mesh.num_tris(); ++e) {
        if (!(triangle_area(mesh, e) > 0.0))
            throw std::runtime_error(
                "mesh: non-positive triangle area produced (element " + std::to_string(e) +
                ", region " + std::to_string(mesh.region[e]) + ", area " +
                std::to_string(triangle_area(mesh, e)) + ")");
    }
    return mesh;
}

}  // namespace rotopt
