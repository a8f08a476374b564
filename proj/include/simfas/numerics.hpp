// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "simfas/types.hpp"

namespace simfas {

// Controls the adaptive quadrature used by every analytical expression.
struct QuadratureSpec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_subdivisions = 400;
    // Upper integration limit in units of the integrand's Gaussian tail
    // scale. Must stay >= 6 so the truncated mass is below abs_tol.
    double tail_cutoff_sigma = 10.0;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
            throw ConfigError("QuadratureSpec: tolerances must be positive");
        if (max_subdivisions < 1)
            throw ConfigError("QuadratureSpec: max_subdivisions must be >= 1");
        if (!(tail_cutoff_sigma >= 6.0))
            throw ConfigError("QuadratureSpec: tail_cutoff_sigma must be >= 6");
    }
};

// Bessel function of the first kind, order zero. Relative error below
// 1e-12 for |x| <= 1e4.
double bessel_j0(double x);

// Exponentially scaled modified Bessel functions: e^{-x} I0(x), e^{-x} I1(x)
// for x >= 0. Overflow-safe for any representable x.
double bessel_i0_scaled(double x);
double bessel_i1_scaled(double x);

// First-order Marcum Q function Q1(a, b) and its complement 1 - Q1(a, b).
// Both are computed from all-positive series so each retains relative
// accuracy in its own tail. No intermediate overflow for a, b <= ~1e3.
double marcum_q1(double a, double b);
double marcum_q1c(double a, double b);

namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss rule (nodes/weights on
// [-1, 1], symmetric halves). Classic QUADPACK dqk15 constants.
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelResult {
    double value;
    double error;
};

// One Gauss-Kronrod panel on [a, b]; error estimate is the rescaled
// |K15 - G7| difference as in QUADPACK.
template <std::invocable<double> F>
PanelResult gauss_kronrod_panel(F&& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    double fc = f(center);
    double kronrod = kKronrodWeights[7] * fc;
    double gauss = kGaussWeights[3] * fc;
    double resabs = kKronrodWeights[7] * std::abs(fc);
    double fv[15];
    fv[14] = fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        fv[2 * i] = f1;
        fv[2 * i + 1] = f2;
        kronrod += kKronrodWeights[i] * (f1 + f2);
        resabs += kKronrodWeights[i] * (std::abs(f1) + std::abs(f2));
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * (f1 + f2);
    }
    const double mean = 0.5 * kronrod;
    double resasc = kKronrodWeights[7] * std::abs(fc - mean);
    for (int i = 0; i < 7; ++i)
        resasc += kKronrodWeights[i] *
                  (std::abs(fv[2 * i] - mean) + std::abs(fv[2 * i + 1] - mean));
    resasc *= half;

    double err = std::abs(kronrod - gauss) * half;
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double round = 50.0 * std::numeric_limits<double>::epsilon() * resabs * half;
    return {kronrod * half, std::max(err, round)};
}

} // namespace detail

// Adaptive Gauss-Kronrod quadrature of f over [0, r_max] with
// r_max = weight_scale * tail_cutoff_sigma. The integrand must decay like a
// Gaussian of scale weight_scale beyond the cutoff. interior_breaks lets the
// caller pre-split the domain at known structure (a density peak, say);
// breaks outside (0, r_max) are dropped.
template <std::invocable<double> F>
double integrate_semi_infinite(F&& f, double weight_scale, const QuadratureSpec& spec = {},
                               std::span<const double> interior_breaks = {}) {
    spec.validate();
    if (!(weight_scale > 0.0) || !std::isfinite(weight_scale))
        throw std::domain_error("integrate_semi_infinite: weight_scale must be positive");

    const double r_max = weight_scale * spec.tail_cutoff_sigma;

    // Initial grid: caller breaks plus a coarse uniform split, so narrow
    // structure cannot fall between the nodes of a single huge panel.
    std::vector<double> edges{0.0, r_max};
    for (double x : interior_breaks)
        if (x > 0.0 && x < r_max) edges.push_back(x);
    const int coarse = std::min<int>(8, std::max<int>(2, static_cast<int>(spec.tail_cutoff_sigma)));
    for (int i = 1; i < coarse; ++i) edges.push_back(r_max * i / coarse);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    struct Panel {
        double a, b, value, error;
    };
    std::vector<Panel> panels;
    panels.reserve(edges.size() + spec.max_subdivisions);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        auto r = detail::gauss_kronrod_panel(f, edges[i], edges[i + 1]);
        panels.push_back({edges[i], edges[i + 1], r.value, r.error});
    }

    auto totals = [&panels]() {
        double v = 0.0, e = 0.0;
        for (const auto& p : panels) {
            v += p.value;
            e += p.error;
        }
        return std::pair{v, e};
    };

    auto [value, error] = totals();
    for (int iter = 0; iter < spec.max_subdivisions; ++iter) {
        const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(value));
        if (error <= tol) return value;

        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].error > panels[worst].error) worst = i;

        Panel p = panels[worst];
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) break; // panel narrower than machine spacing
        auto left = detail::gauss_kronrod_panel(f, p.a, mid);
        auto right = detail::gauss_kronrod_panel(f, mid, p.b);
        panels[worst] = {p.a, mid, left.value, left.error};
        panels.push_back({mid, p.b, right.value, right.error});
        std::tie(value, error) = totals();
    }

    const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(value));
    if (error <= tol) return value;
    throw ConvergenceError("integrate_semi_infinite: tolerance not reached after " +
                               std::to_string(spec.max_subdivisions) + " subdivisions",
                           value, error);
}

} // namespace simfas
