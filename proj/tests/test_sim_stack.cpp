// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <complex>

#include "simfas/rng.hpp"
#include "simfas/sim_stack.hpp"
#include "oracles.hpp"

using namespace simfas;

namespace {

PhaseProfile random_phases(int layers, int atoms, std::uint64_t seed) {
    Rng rng(seed);
    PhaseProfile p = PhaseProfile::zeros(layers, atoms);
    for (int l = 0; l < layers; ++l)
        for (int m = 0; m < atoms; ++m) p.angles(l, m) = kTwoPi * rng.uniform();
    return p;
}

// Naive evaluation of the full stack as one dense matrix product.
CVector naive_forward(const PhaseProfile& phases, const CouplingSet& coupling) {
    const int layers = phases.num_layers();
    const int atoms = phases.atoms_per_layer();
    CMatrix total = CMatrix::Identity(atoms, atoms);
    for (int l = 0; l < layers; ++l) {
        CMatrix theta = CMatrix::Zero(atoms, atoms);
        for (int m = 0; m < atoms; ++m) theta(m, m) = std::polar(1.0, phases.angles(l, m));
        if (l > 0) total = theta * coupling.inter_layer[l - 1] * total;
        else total = theta;
    }
    return total * coupling.feed;
}

} // namespace

TEST_CASE("geometry validation and atom grid") {
    SimGeometry g = SimGeometry::make(3, 4, 4, 0.1);
    g.validate();
    CHECK(g.atoms_per_layer() == 16);
    CHECK(g.layer_spacing_m() == doctest::Approx(0.5 / 3.0));
    CHECK(g.atom_pitch_m == doctest::Approx(0.05));

    // centered grid: positions sum to the axis
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (int m = 0; m < 16; ++m) sum += g.atom_position(1, m);
    CHECK(sum.head<2>().norm() == doctest::Approx(0.0));
    CHECK(sum.z() == doctest::Approx(16.0 * g.layer_spacing_m()));
    // neighbor spacing along a row equals the pitch
    CHECK((g.atom_position(0, 1) - g.atom_position(0, 0)).norm() == doctest::Approx(0.05));

    SimGeometry bad = g;
    bad.total_thickness_m = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = g;
    bad.num_layers = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("build_coupling basics") {
    SUBCASE("single layer has no inter-layer blocks") {
        const CouplingSet c = build_coupling(SimGeometry::make(1, 4, 4, 0.1));
        CHECK(c.inter_layer.empty());
        CHECK(c.feed.norm() > 0.0);
    }
    SUBCASE("equal spacing makes all inter-layer blocks identical") {
        const CouplingSet c = build_coupling(SimGeometry::make(4, 3, 3, 0.1));
        REQUIRE(c.inter_layer.size() == 3);
        CHECK((c.inter_layer[0] - c.inter_layer[2]).norm() == 0.0);
    }
    SUBCASE("degenerate spacing rejected") {
        SimGeometry g = SimGeometry::make(3, 4, 4, 0.1);
        g.total_thickness_m = 0.0;
        CHECK_THROWS_AS(build_coupling(g), ConfigError);
    }
}

TEST_CASE("coupling entries match a per-pair scalar recomputation") {
    // independent re-derivation: positions, distances and the diffraction
    // coefficient evaluated pair by pair, then the same RMS calibration
    const SimGeometry g = SimGeometry::make(3, 4, 4, 0.05);
    const CouplingSet c = build_coupling(g);
    const int atoms = 16;
    const double area = g.atom_pitch_m * g.atom_pitch_m;
    const double dz = g.total_thickness_m / g.num_layers;

    auto pos = [&](int layer, int m) {
        const int row = m / 4, col = m % 4;
        return Eigen::Vector3d((col - 1.5) * g.atom_pitch_m, (row - 1.5) * g.atom_pitch_m,
                               layer * dz);
    };
    auto rs = [&](double d, double cos_chi) {
        const Complex j(0.0, 1.0);
        return (area * cos_chi / d) * (1.0 / (kTwoPi * d) - j / g.wavelength_m) *
               std::exp(j * kTwoPi * d / g.wavelength_m);
    };

    CMatrix raw(atoms, atoms);
    for (int m = 0; m < atoms; ++m)
        for (int mp = 0; mp < atoms; ++mp) {
            const double d = (pos(1, m) - pos(0, mp)).norm();
            raw(m, mp) = rs(d, dz / d);
        }
    const CMatrix expected = raw * (std::sqrt(double(atoms)) / raw.norm());
    CHECK((c.inter_layer[0] - expected).norm() < 1e-12 * expected.norm());

    // feed: one layer-spacing behind layer 0, on the axis, uncalibrated
    for (int m = 0; m < atoms; ++m) {
        const Eigen::Vector3d fp(0.0, 0.0, -dz);
        const double d = (pos(0, m) - fp).norm();
        const Complex expected_feed = rs(d, dz / d);
        CHECK(std::abs(c.feed[m] - expected_feed) < 1e-14);
    }
}

TEST_CASE("forward trivial cases") {
    const CouplingSet c1 = build_coupling(SimGeometry::make(1, 4, 4, 0.1));
    const SimField f1 = forward(PhaseProfile::zeros(1, 16), c1);
    CHECK((f1.g - c1.feed).norm() == 0.0);

    const CouplingSet c3 = build_coupling(SimGeometry::make(3, 4, 4, 0.1));
    const SimField f3 = forward(PhaseProfile::zeros(3, 16), c3);
    const CVector expected = c3.inter_layer[1] * (c3.inter_layer[0] * c3.feed);
    CHECK((f3.g - expected).norm() < 1e-12 * expected.norm());

    CHECK_THROWS_AS(forward(PhaseProfile::zeros(2, 16), c3), ConfigError);
    CHECK_THROWS_AS(forward(PhaseProfile::zeros(3, 9), c3), ConfigError);
}

TEST_CASE("forward matches the naive full matrix product") {
    const CouplingSet c = build_coupling(SimGeometry::make(3, 4, 4, 0.1));
    const PhaseProfile p = random_phases(3, 16, 42);
    const SimField f = forward(p, c);
    const CVector naive = naive_forward(p, c);
    CHECK((f.g - naive).norm() < 1e-12 * naive.norm());
    REQUIRE(f.layer_inputs.size() == 3);
    CHECK((f.layer_inputs[0] - c.feed).norm() == 0.0);
}

TEST_CASE("forward is 2pi-periodic in every angle") {
    const CouplingSet c = build_coupling(SimGeometry::make(2, 2, 2, 0.1));
    const PhaseProfile p = random_phases(2, 4, 7);
    const CVector base = forward(p, c).g;
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 4; ++m) {
            PhaseProfile shifted = p;
            shifted.angles(l, m) += kTwoPi;
            CHECK((forward(shifted, c).g - base).norm() < 1e-12 * base.norm());
        }
}

TEST_CASE("diagonal phase layers preserve norms") {
    const CouplingSet c = build_coupling(SimGeometry::make(3, 4, 4, 0.1));
    const PhaseProfile p = random_phases(3, 16, 3);
    const SimField f = forward(p, c);
    // ||Theta_l u_l|| = ||u_l||, and W_{l+1} Theta_l u_l reproduces u_{l+1}
    for (int l = 0; l + 1 < 3; ++l) {
        CVector phased(16);
        for (int m = 0; m < 16; ++m)
            phased[m] = std::polar(1.0, p.angles(l, m)) * f.layer_inputs[l][m];
        CHECK(phased.norm() == doctest::Approx(f.layer_inputs[l].norm()).epsilon(1e-13));
        const LayerFactors next = partial_fields(p, c, l + 1);
        CHECK((c.inter_layer[l] * phased - next.prefix).norm() < 1e-12 * next.prefix.norm());
    }
    // a common phase shift on any one layer rotates g without changing ||g||
    for (int l = 0; l < 3; ++l) {
        PhaseProfile shifted = p;
        for (int m = 0; m < 16; ++m) shifted.angles(l, m) += 0.37;
        CHECK(forward(shifted, c).g.norm() == doctest::Approx(f.g.norm()).epsilon(1e-12));
    }
}

TEST_CASE("partial_fields recomposition identity") {
    const CouplingSet c = build_coupling(SimGeometry::make(3, 4, 4, 0.1));
    const PhaseProfile p = random_phases(3, 16, 15);
    const SimField f = forward(p, c);

    for (int l = 0; l < 3; ++l) {
        const LayerFactors lf = partial_fields(p, c, l);
        CVector phased(16);
        for (int m = 0; m < 16; ++m)
            phased[m] = std::polar(1.0, p.angles(l, m)) * lf.prefix[m];
        const CVector recomposed = lf.suffix * phased;
        CHECK((recomposed - f.g).norm() < 1e-12 * f.g.norm());
    }

    CHECK((partial_fields(p, c, 2).suffix - CMatrix::Identity(16, 16)).norm() == 0.0);
    CHECK((partial_fields(p, c, 0).prefix - c.feed).norm() == 0.0);
    CHECK_THROWS_AS(partial_fields(p, c, 3), std::domain_error);
    CHECK_THROWS_AS(partial_fields(p, c, -1), std::domain_error);
}

TEST_CASE("field_derivative against central finite differences") {
    const CouplingSet c = build_coupling(SimGeometry::make(3, 2, 2, 0.1));
    const PhaseProfile p = random_phases(3, 4, 99);
    const double h = 1e-6;
    for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 4; ++m) {
            const CVector analytic = field_derivative(p, c, l, m);
            PhaseProfile up = p, down = p;
            up.angles(l, m) += h;
            down.angles(l, m) -= h;
            const CVector fd = (forward(up, c).g - forward(down, c).g) / (2.0 * h);
            CHECK((analytic - fd).norm() < 1e-6 * (fd.norm() + 1e-12));
        }
    CHECK_THROWS_AS(field_derivative(p, c, 0, 4), std::domain_error);
}

TEST_CASE("field_derivative single-layer closed form") {
    const CouplingSet c = build_coupling(SimGeometry::make(1, 2, 2, 0.1));
    const PhaseProfile p = PhaseProfile::zeros(1, 4);
    const CVector d = field_derivative(p, c, 0, 0);
    // j * w1[0] * e_0
    CHECK(std::abs(d[0] - Complex(0.0, 1.0) * c.feed[0]) < 1e-15);
    CHECK(std::abs(d[1]) == 0.0);
    CHECK(std::abs(d[2]) == 0.0);
    CHECK(std::abs(d[3]) == 0.0);
}

TEST_CASE("layer inputs upstream of a perturbed layer are unchanged") {
    const CouplingSet c = build_coupling(SimGeometry::make(3, 2, 2, 0.1));
    const PhaseProfile p = random_phases(3, 4, 5);
    PhaseProfile perturbed = p;
    perturbed.angles(2, 1) += 0.4; // touch the last layer

    for (int l = 0; l <= 2; ++l) {
        const LayerFactors before = partial_fields(p, c, l);
        const LayerFactors after = partial_fields(perturbed, c, l);
        CHECK((before.prefix - after.prefix).norm() == 0.0);
    }
}

TEST_CASE("wrap_angle") {
    CHECK(wrap_angle(kTwoPi + 0.3) == doctest::Approx(0.3));
    CHECK(wrap_angle(-0.1) == doctest::Approx(kTwoPi - 0.1));
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK_THROWS_AS(wrap_angle(std::nan("")), NumericError);
}
