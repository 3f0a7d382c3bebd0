#include "rotopt/rotation.hpp"

#include <cmath>

namespace rotopt {

namespace {

// floor division and non-negative remainder for possibly negative shifts
std::pair<int, int> wrap(int idx, int period) {
    int q = idx / period;
    int r = idx % period;
    if (r < 0) {
        r += period;
        --q;
    }
    return {r, q};
}

}  // namespace

std::pair<int, double> RotationCoupling::partner_of_rotor(int j, int steps) const {
    // rotor turns clockwise with the stator field wave, so after `steps`
    // steps rotor node j sits at angular index j - steps*units_per_step
    const auto [p, q] = wrap(j - steps * units_per_step, intervals);
    const double sign = (q % 2 == 0) ? 1.0 : -1.0;
    return {p, sign};
}

std::pair<int, double> RotationCoupling::rotor_source_of_stator(int p, int steps) const {
    const auto [j, q] = wrap(p + steps * units_per_step, intervals);
    const double sign = (q % 2 == 0) ? 1.0 : -1.0;
    return {j, sign};
}

RotationCoupling rotation_coupling(const Mesh& mesh, int n_steps) {
    if (n_steps < 1) throw std::invalid_argument("rotation_coupling: n_steps must be >= 1");
    const int n_if = mesh.interface_intervals;
    if (n_if % (3 * n_steps) != 0)
        throw std::invalid_argument(
            "rotation_coupling: interface spacing does not divide the step angle; "
            "interface intervals (" + std::to_string(n_if) + ") must be a multiple of 3*n_steps (" +
            std::to_string(3 * n_steps) + ")");
    RotationCoupling rc;
    rc.n_steps = n_steps;
    rc.intervals = n_if;
    rc.units_per_step = n_if / (3 * n_steps);
    rc.step_angle = mesh.geometry.pole_span() / 3.0 / n_steps;
    return rc;
}

}  // namespace rotopt
