#include "rotopt/materials.hpp"

#include <cmath>

namespace rotopt {

namespace {

// attach the C1 rational tail nu(s) = nu0 - c1/(s - c2) where the core curve
// crosses half of nu0 (or at the end of the table)
void attach_tail(IronCurve& c, double s_j, double nu_j, double dnu_j) {
    if (!(nu_j < kNu0) || !(dnu_j > 0.0))
        throw std::invalid_argument("iron curve: junction value must be below nu0 with positive slope");
    c.s_junction = s_j;
    c.c1 = (kNu0 - nu_j) * (kNu0 - nu_j) / dnu_j;
    c.c2 = s_j - (kNu0 - nu_j) / dnu_j;
}

// PCHIP slopes (Fritsch-Carlson) for monotone data
Vec pchip_slopes(const Vec& x, const Vec& y) {
    const int n = static_cast<int>(x.size());
    Vec d(n);
    Vec delta(n - 1);
    for (int i = 0; i < n - 1; ++i) delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for (int i = 1; i < n - 1; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
            const double w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    return d;
}

}  // namespace

double IronCurve::nu(double s) const {
    if (s > s_junction) return kNu0 - c1 / (s - c2);
    if (from_table) {
        if (s <= table_s[0]) return table_nu[0];
        int i = 0;
        const int n = static_cast<int>(table_s.size());
        while (i + 2 < n && s > table_s[i + 1]) ++i;
        const double hseg = table_s[i + 1] - table_s[i];
        const double t = (s - table_s[i]) / hseg;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
        const double h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t);
        const double h11 = t * t * (t - 1);
        return h00 * table_nu[i] + hseg * h10 * table_d[i] + h01 * table_nu[i + 1] +
               hseg * h11 * table_d[i + 1];
    }
    return k1 * std::exp(k2 * s) + k3;
}

double IronCurve::dnu_ds(double s) const {
    if (s > s_junction) return c1 / ((s - c2) * (s - c2));
    if (from_table) {
        if (s <= table_s[0]) return 0.0;
        int i = 0;
        const int n = static_cast<int>(table_s.size());
        while (i + 2 < n && s > table_s[i + 1]) ++i;
        const double hseg = table_s[i + 1] - table_s[i];
        const double t = (s - table_s[i]) / hseg;
        const double dh00 = 6 * t * (t - 1) / hseg;
        const double dh10 = (1 - t) * (1 - 3 * t);
        const double dh01 = -6 * t * (t - 1) / hseg;
        const double dh11 = t * (3 * t - 2);
        return dh00 * table_nu[i] + dh10 * table_d[i] + dh01 * table_nu[i + 1] +
               dh11 * table_d[i + 1];
    }
    return k1 * k2 * std::exp(k2 * s);
}

namespace {

// antiderivatives of the cubic hermite basis on [0,1]
double int_h00(double t) { return t - t * t * t + t * t * t * t / 2.0; }
double int_h10(double t) { return t * t / 2.0 - 2.0 * t * t * t / 3.0 + t * t * t * t / 4.0; }
double int_h01(double t) { return t * t * t - t * t * t * t / 2.0; }
double int_h11(double t) { return -t * t * t / 3.0 + t * t * t * t / 4.0; }

}  // namespace

double IronCurve::nu_integral(double s) const {
    auto core_integral = [&](double x) {
        if (from_table) {
            double acc = table_nu[0] * std::min(x, table_s[0]);
            if (x <= table_s[0]) return acc;
            const int n = static_cast<int>(table_s.size());
            for (int i = 0; i + 1 < n; ++i) {
                if (x <= table_s[i]) break;
                const double hseg = table_s[i + 1] - table_s[i];
                const double t = std::min(1.0, (x - table_s[i]) / hseg);
                acc += hseg * (int_h00(t) * table_nu[i] + hseg * int_h10(t) * table_d[i] +
                               int_h01(t) * table_nu[i + 1] + hseg * int_h11(t) * table_d[i + 1]);
            }
            return acc;
        }
        return k1 / k2 * (std::exp(k2 * x) - 1.0) + k3 * x;
    };
    if (s <= s_junction) return core_integral(s);
    return core_integral(s_junction) + kNu0 * (s - s_junction) -
           c1 * std::log((s - c2) / (s_junction - c2));
}

IronCurve IronCurve::fit_brauer(double h1, double b1, double h2, double b2, double mu_r_initial) {
    if (!(b2 > b1) || !(h2 > h1) || !(b1 > 0.0) || !(mu_r_initial > 1.0))
        throw std::invalid_argument("iron curve: anchor points must be increasing and positive");
    const double s1 = b1 * b1, s2 = b2 * b2;
    const double nu1 = h1 / b1, nu2 = h2 / b2;
    const double nu_init = kNu0 / mu_r_initial;
    // k1 e^{k2 s1} + k3 = nu1, k1 e^{k2 s2} + k3 = nu2, k1 + k3 = nu_init
    // bisect on k2 using the ratio of exponential gaps
    const double g1 = nu1 - nu_init, g2 = nu2 - nu_init;
    if (!(g1 > 0.0) || !(g2 > g1))
        throw std::invalid_argument("iron curve: initial permeability inconsistent with anchors");
    auto ratio = [&](double k2) {
        return (std::exp(k2 * s2) - 1.0) / (std::exp(k2 * s1) - 1.0);
    };
    const double target = g2 / g1;
    double lo = 1e-9, hi = 50.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ratio(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    IronCurve c;
    c.k2 = 0.5 * (lo + hi);
    c.k1 = g1 / (std::exp(c.k2 * s1) - 1.0);
    c.k3 = nu_init - c.k1;
    // junction where the exponential reaches half of nu0
    const double s_j = std::log((0.5 * kNu0 - c.k3) / c.k1) / c.k2;
    const double nu_j = c.k1 * std::exp(c.k2 * s_j) + c.k3;
    const double dnu_j = c.k1 * c.k2 * std::exp(c.k2 * s_j);
    attach_tail(c, s_j, nu_j, dnu_j);
    return c;
}

IronCurve IronCurve::from_bh_table(const Vec& h_values, const Vec& b_values) {
    const int n = static_cast<int>(h_values.size());
    if (n < 3 || b_values.size() != n)
        throw std::invalid_argument("bh table: need at least 3 matching (H, B) samples");
    IronCurve c;
    c.from_table = true;
    c.table_s.resize(n);
    c.table_nu.resize(n);
    for (int i = 0; i < n; ++i) {
        if (!(h_values[i] > 0.0) || !(b_values[i] > 0.0))
            throw std::invalid_argument("bh table: samples must be positive");
        if (i > 0 && (!(h_values[i] > h_values[i - 1]) || !(b_values[i] > b_values[i - 1])))
            throw std::invalid_argument("bh table: H and B must be strictly increasing");
        c.table_s[i] = b_values[i] * b_values[i];
        c.table_nu[i] = h_values[i] / b_values[i];
        if (!(c.table_nu[i] < kNu0))
            throw std::invalid_argument("bh table: reluctivity exceeds nu0");
        if (i > 0 && c.table_nu[i] < c.table_nu[i - 1])
            throw std::invalid_argument("bh table: derived reluctivity must be non-decreasing");
    }
    c.table_d = pchip_slopes(c.table_s, c.table_nu);
    const int last = n - 1;
    double slope = c.table_d[last];
    if (!(slope > 0.0))
        slope = (c.table_nu[last] - c.table_nu[last - 1]) /
                (c.table_s[last] - c.table_s[last - 1]);
    if (!(slope > 0.0)) slope = 1.0;
    c.table_d[last] = slope;
    attach_tail(c, c.table_s[last], c.table_nu[last], slope);
    return c;
}

Vec2 h_field(const MaterialSet& mat, MaterialId id, const Vec2& b) {
    switch (id) {
        case MaterialId::Air:
            return kNu0 * b;
        case MaterialId::MagnetOne:
        case MaterialId::MagnetTwo: {
            const double phi = mat.magnet_angle[id == MaterialId::MagnetOne ? 0 : 1];
            const Vec2 br = mat.remanence * Vec2(std::cos(phi), std::sin(phi));
            return mat.nu_magnet * (b - br);
        }
        case MaterialId::Iron:
            return mat.iron.nu(b.squaredNorm()) * b;
    }
    throw std::invalid_argument("h_field: unknown material");
}

Mat2 differential_reluctivity(const MaterialSet& mat, MaterialId id, const Vec2& b) {
    switch (id) {
        case MaterialId::Air:
            return kNu0 * Mat2::Identity();
        case MaterialId::MagnetOne:
        case MaterialId::MagnetTwo:
            return mat.nu_magnet * Mat2::Identity();
        case MaterialId::Iron: {
            const double s = b.squaredNorm();
            return mat.iron.nu(s) * Mat2::Identity() +
                   2.0 * mat.iron.dnu_ds(s) * b * b.transpose();
        }
    }
    throw std::invalid_argument("differential_reluctivity: unknown material");
}

double reluctivity_at(const MaterialSet& mat, MaterialId id, double s) {
    switch (id) {
        case MaterialId::Air:
            return kNu0;
        case MaterialId::MagnetOne:
        case MaterialId::MagnetTwo:
            return mat.nu_magnet;
        case MaterialId::Iron:
            return mat.iron.nu(s);
    }
    throw std::invalid_argument("reluctivity_at: unknown material");
}

Vec2 magnet_source(const MaterialSet& mat, MaterialId id) {
    if (id == MaterialId::MagnetOne || id == MaterialId::MagnetTwo) {
        const double phi = mat.magnet_angle[id == MaterialId::MagnetOne ? 0 : 1];
        return mat.nu_magnet * mat.remanence * Vec2(std::cos(phi), std::sin(phi));
    }
    return Vec2::Zero();
}

}  // namespace rotopt
