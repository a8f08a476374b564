// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "simfas/optimizer.hpp"
#include "simfas/rng.hpp"
#include "oracles.hpp"

using namespace simfas;

namespace {

// Synthetic dense couplings: unlike the physical builder these are not
// norm-calibrated, so the sigma~^2 branch of the gradient is fully alive.
CouplingSet synthetic_coupling(int layers, int atoms, std::uint64_t seed) {
    Rng rng(seed);
    CouplingSet c;
    c.feed = rng.cgaussian_vector(atoms, 1.0);
    for (int l = 1; l < layers; ++l) {
        CMatrix w(atoms, atoms);
        for (int i = 0; i < atoms; ++i)
            for (int j = 0; j < atoms; ++j) w(i, j) = rng.cgaussian(1.0 / atoms);
        c.inter_layer.push_back(w);
    }
    return c;
}

ChannelStats synthetic_stats(int atoms, int ports, std::uint64_t seed, double k_factor = 2.0) {
    Rng rng(seed);
    ChannelStats s;
    s.path_loss_alpha = 1.0;
    s.rician_k = k_factor;
    s.los = CVector(atoms);
    for (int m = 0; m < atoms; ++m) s.los[m] = std::polar(1.0, kTwoPi * rng.uniform());
    s.fas.num_ports = ports;
    s.partition.blocks = {{ports, 0.8}};
    return s;
}

PhaseProfile random_phases(int layers, int atoms, std::uint64_t seed) {
    Rng rng(seed);
    PhaseProfile p = PhaseProfile::zeros(layers, atoms);
    for (int l = 0; l < layers; ++l)
        for (int m = 0; m < atoms; ++m) p.angles(l, m) = kTwoPi * rng.uniform();
    return p;
}

QuadratureSpec tight_quadrature() {
    QuadratureSpec q;
    q.abs_tol = 1e-12;
    q.rel_tol = 1e-12;
    return q;
}

double sigma_sq_of(const PhaseProfile& p, const CouplingSet& c, const ChannelStats& s) {
    return s.nlos_entry_variance() * forward(p, c).g.squaredNorm();
}

double delta_of(const PhaseProfile& p, const CouplingSet& c, const ChannelStats& s) {
    return s.los_amplitude() * std::abs(s.los.cwiseProduct(forward(p, c).g).sum());
}

} // namespace

TEST_CASE("dsigma2_dtheta: single atom single layer is flat") {
    const CouplingSet c = synthetic_coupling(1, 1, 3);
    const ChannelStats s = synthetic_stats(1, 2, 4);
    const RMatrix d = dsigma2_dtheta(PhaseProfile{RMatrix::Constant(1, 1, 0.7)}, c, s);
    CHECK(std::abs(d(0, 0)) < 1e-16);
}

TEST_CASE("dsigma2_dtheta matches finite differences") {
    const CouplingSet c = synthetic_coupling(3, 4, 11);
    const ChannelStats s = synthetic_stats(4, 2, 12);
    const PhaseProfile p = random_phases(3, 4, 13);
    const RMatrix analytic = dsigma2_dtheta(p, c, s);

    const double h = 1e-6;
    double max_abs = analytic.cwiseAbs().maxCoeff();
    for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 4; ++m) {
            PhaseProfile up = p, down = p;
            up.angles(l, m) += h;
            down.angles(l, m) -= h;
            const double fd = (sigma_sq_of(up, c, s) - sigma_sq_of(down, c, s)) / (2.0 * h);
            CHECK(std::abs(analytic(l, m) - fd) <= 1e-6 * std::max(std::abs(fd), 1e-3 * max_abs));
        }

    // 2pi shift leaves the derivative unchanged
    PhaseProfile shifted = p;
    shifted.angles(1, 2) += kTwoPi;
    CHECK((dsigma2_dtheta(shifted, c, s) - analytic).cwiseAbs().maxCoeff() < 1e-12 * max_abs);
}

TEST_CASE("ddelta_dtheta matches finite differences and limits") {
    const CouplingSet c = synthetic_coupling(3, 4, 21);
    const ChannelStats s = synthetic_stats(4, 2, 22);
    const PhaseProfile p = random_phases(3, 4, 23);

    bool degenerate = true;
    const RMatrix analytic = ddelta_dtheta(p, c, s, &degenerate);
    CHECK_FALSE(degenerate);

    const double h = 1e-6;
    const double max_abs = analytic.cwiseAbs().maxCoeff();
    for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 4; ++m) {
            PhaseProfile up = p, down = p;
            up.angles(l, m) += h;
            down.angles(l, m) -= h;
            const double fd = (delta_of(up, c, s) - delta_of(down, c, s)) / (2.0 * h);
            CHECK(std::abs(analytic(l, m) - fd) <= 1e-6 * std::max(std::abs(fd), 1e-3 * max_abs));
        }

    SUBCASE("zero rician factor kills the branch") {
        const ChannelStats rayleigh = synthetic_stats(4, 2, 22, 0.0);
        const RMatrix d = ddelta_dtheta(p, c, rayleigh, &degenerate);
        CHECK(d.cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("real positive delta reduces to the phasor-free form") {
        // rotate layer 0 by a common shift so h^T g lands on the positive
        // real axis; the modulus derivative then needs no phasor
        const SimField f = forward(p, c);
        const Complex delta = s.los_amplitude() * s.los.cwiseProduct(f.g).sum();
        PhaseProfile rotated = p;
        for (int m = 0; m < 4; ++m)
            rotated.angles(0, m) = wrap_angle(rotated.angles(0, m) - std::arg(delta));

        const RMatrix with_phasor = ddelta_dtheta(rotated, c, s);
        RMatrix bare(3, 4);
        for (int l = 0; l < 3; ++l) {
            const LayerFactors lf = partial_fields(rotated, c, l);
            for (int m = 0; m < 4; ++m) {
                const Complex sl = (lf.suffix.transpose() * s.los)(m);
                const Complex w =
                    std::polar(1.0, rotated.angles(l, m)) * lf.prefix[m] * sl;
                bare(l, m) = -s.los_amplitude() * w.imag();
            }
        }
        CHECK((with_phasor - bare).cwiseAbs().maxCoeff() <
              1e-11 * bare.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("scalar outage sensitivities match finite differences") {
    const QuadratureSpec q = tight_quadrature();
    BlockPartition partition;
    partition.blocks = {{2, 0.8}, {1, 0.5}};

    for (const EffectiveStats es :
         {EffectiveStats{0.9, 0.7, 0.6}, EffectiveStats{1.5, 0.2, 2.0},
          EffectiveStats{0.4, 1.5, 0.8}}) {
        const double ds = dpout_dsigma2(es, partition, q);
        const double dd = dpout_ddelta(es, partition, q);

        const double hs = 1e-6 * es.sigma_tilde_sq;
        EffectiveStats up = es, down = es;
        up.sigma_tilde_sq += hs;
        down.sigma_tilde_sq -= hs;
        const double fd_s = (outage_probability(up, partition, q) -
                             outage_probability(down, partition, q)) /
                            (2.0 * hs);
        CHECK(ds == doctest::Approx(fd_s).epsilon(1e-4).scale(std::abs(fd_s) + 1e-12));

        const double hd = 1e-6 * (es.delta_abs + 0.1);
        up = down = es;
        up.delta_abs += hd;
        down.delta_abs -= hd;
        const double fd_d = (outage_probability(up, partition, q) -
                             outage_probability(down, partition, q)) /
                            (2.0 * hd);
        CHECK(dd == doctest::Approx(fd_d).epsilon(1e-4).scale(std::abs(fd_d) + 1e-12));

        // more LoS power never hurts
        CHECK(dd <= 1e-12);
    }

    // gamma_th = 0: flat zero
    const EffectiveStats flat{1.0, 0.5, 0.0};
    CHECK(dpout_dsigma2(flat, partition, q) == 0.0);
    CHECK(dpout_ddelta(flat, partition, q) == 0.0);
}

TEST_CASE("joint scaling invariance (Euler identity)") {
    // P_out depends only on |delta|^2/sigma~^2 and gamma/sigma~^2, so the
    // derivative along (sigma~^2, |delta|, gamma) -> (c sigma~^2,
    // sqrt(c)|delta|, c gamma) vanishes at c = 1
    const QuadratureSpec q = tight_quadrature();
    BlockPartition partition;
    partition.blocks = {{3, 0.9}, {2, 0.6}};
    const EffectiveStats es{0.8, 0.9, 1.1};

    const double ds = dpout_dsigma2(es, partition, q);
    const double dd = dpout_ddelta(es, partition, q);
    const double hg = 1e-6 * es.gamma_th;
    EffectiveStats up = es, down = es;
    up.gamma_th += hg;
    down.gamma_th -= hg;
    const double dg = (outage_probability(up, partition, q) -
                       outage_probability(down, partition, q)) /
                      (2.0 * hg);

    const double euler =
        es.sigma_tilde_sq * ds + 0.5 * es.delta_abs * dd + es.gamma_th * dg;
    const double scale = std::abs(es.sigma_tilde_sq * ds) + std::abs(0.5 * es.delta_abs * dd) +
                         std::abs(es.gamma_th * dg);
    CHECK(std::abs(euler) <= 1e-5 * scale);
}

TEST_CASE("full gradient against finite differences on random configurations") {
    const QuadratureSpec q = tight_quadrature();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const int layers = 1 + static_cast<int>(seed % 3);
        const CouplingSet c = synthetic_coupling(layers, 3, 100 + seed);
        ChannelStats s = synthetic_stats(3, 3, 200 + seed);
        s.partition.blocks = {{2, 0.8}, {1, 0.4}};
        const PhaseProfile p = random_phases(layers, 3, 300 + seed);

        LinkBudget budget;
        budget.tx_power_w = 1.0;
        budget.noise_w = 1.0;
        // aim gamma at the diffuse scale so the outage is not saturated
        budget.target_rate =
            std::log2(1.0 + 2.0 * sigma_sq_of(p, c, s) / 1.0);

        const GradientReport rep = gradient(p, c, s, budget, q);
        // chain rule assembly holds exactly
        const RMatrix assembled = rep.d_pout_d_sigma_sq * rep.d_sigma_sq_d_theta +
                                  rep.d_pout_d_delta * rep.d_delta_d_theta;
        CHECK((rep.grad - assembled).cwiseAbs().maxCoeff() == 0.0);

        auto pout_of = [&](const PhaseProfile& phases) {
            const SimField f = forward(phases, c);
            return outage_probability(effective_stats(f.g, s, budget), s.partition, q);
        };
        const double h = 1e-5;
        const double max_abs = rep.grad.cwiseAbs().maxCoeff();
        for (int l = 0; l < layers; ++l)
            for (int m = 0; m < 3; ++m) {
                PhaseProfile up = p, down = p;
                up.angles(l, m) += h;
                down.angles(l, m) -= h;
                const double fd = (pout_of(up) - pout_of(down)) / (2.0 * h);
                CHECK(std::abs(rep.grad(l, m) - fd) <=
                      1e-4 * std::max(std::abs(fd), 1e-3 * max_abs + 1e-14));
            }
    }
}

TEST_CASE("gradient trivial branches") {
    const CouplingSet c = synthetic_coupling(2, 3, 31);
    const PhaseProfile p = random_phases(2, 3, 32);
    const QuadratureSpec q = tight_quadrature();

    SUBCASE("rayleigh: the delta branch is identically zero") {
        const ChannelStats s = synthetic_stats(3, 2, 33, 0.0);
        LinkBudget budget;
        budget.tx_power_w = 1.0;
        budget.noise_w = 0.5 * sigma_sq_of(p, c, s);
        budget.target_rate = 1.0;
        const GradientReport rep = gradient(p, c, s, budget, q);
        CHECK(rep.d_delta_d_theta.cwiseAbs().maxCoeff() == 0.0);
        CHECK(rep.grad.cwiseAbs().maxCoeff() > 0.0); // sigma branch alive
    }
    SUBCASE("zero threshold: flat outage") {
        const ChannelStats s = synthetic_stats(3, 2, 34);
        LinkBudget budget;
        budget.tx_power_w = 1e308;
        budget.noise_w = 1e-308;
        budget.target_rate = 1e-9; // gamma_th underflows to exactly 0
        const GradientReport rep = gradient(p, c, s, budget, q);
        CHECK(rep.pout == 0.0);
        CHECK(rep.grad.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("projection onto [0, 2pi)") {
    RMatrix raw(2, 2);
    raw << kTwoPi + 0.3, -0.1, 0.0, 7 * kPi;
    const PhaseProfile p = project(raw);
    CHECK(p.angles(0, 0) == doctest::Approx(0.3));
    CHECK(p.angles(0, 1) == doctest::Approx(kTwoPi - 0.1));
    CHECK(p.angles(1, 0) == 0.0);
    CHECK(p.angles(1, 1) == doctest::Approx(kPi));

    // idempotent
    const PhaseProfile pp = project(p.angles);
    CHECK((pp.angles - p.angles).cwiseAbs().maxCoeff() == 0.0);

    raw(0, 0) = std::nan("");
    CHECK_THROWS_AS(project(raw), NumericError);
}

TEST_CASE("optimize: stationary start returns immediately") {
    const CouplingSet c = synthetic_coupling(2, 3, 41);
    const ChannelStats s = synthetic_stats(3, 2, 42);
    LinkBudget budget;
    budget.tx_power_w = 1e308;
    budget.noise_w = 1e-308;
    budget.target_rate = 1e-9; // gamma_th = 0: gradient vanishes
    OptimizerConfig cfg;
    const OptimizeResult r =
        optimize(random_phases(2, 3, 43), c, s, budget, QuadratureSpec{}, cfg);
    CHECK(r.trace.size() == 1);
    CHECK(r.trace[0].pout == 0.0);
}

TEST_CASE("optimize: monotone descent and feasibility" * doctest::timeout(120)) {
    const CouplingSet c = synthetic_coupling(2, 4, 51);
    ChannelStats s = synthetic_stats(4, 4, 52);
    s.partition.blocks = {{2, 0.8}, {2, 0.5}};
    const PhaseProfile start = random_phases(2, 4, 53);

    LinkBudget budget;
    budget.tx_power_w = 1.0;
    budget.noise_w = 1.0;
    budget.target_rate = std::log2(1.0 + 1.5 * sigma_sq_of(start, c, s));

    OptimizerConfig cfg;
    cfg.max_iters = 40;
    const OptimizeResult r = optimize(start, c, s, budget, QuadratureSpec{}, cfg);
    REQUIRE(r.trace.size() >= 2);
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        CHECK(r.trace[i].pout <= r.trace[i - 1].pout + 1e-12);
    CHECK(r.trace.back().pout < r.trace.front().pout);
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 4; ++m) {
            CHECK(r.phases.angles(l, m) >= 0.0);
            CHECK(r.phases.angles(l, m) < kTwoPi);
        }
}

TEST_CASE("optimize: LoS-matched start is never made worse" * doctest::timeout(120)) {
    const CouplingSet c = synthetic_coupling(3, 4, 61);
    ChannelStats s = synthetic_stats(4, 3, 62);
    s.partition.blocks = {{3, 0.9}};

    OptimizerConfig cfg;
    cfg.init = OptimizerConfig::Init::kLosMatched;
    cfg.max_iters = 25;
    const PhaseProfile start = initial_phases(cfg, c, s);

    LinkBudget budget;
    budget.tx_power_w = 1.0;
    budget.noise_w = 1.0;
    budget.target_rate = std::log2(1.0 + sigma_sq_of(start, c, s));

    const OptimizeResult r = optimize(start, c, s, budget, QuadratureSpec{}, cfg);
    CHECK(r.trace.back().pout <= r.trace.front().pout);
}

TEST_CASE("initial phase policies") {
    const CouplingSet c = synthetic_coupling(2, 4, 71);
    const ChannelStats s = synthetic_stats(4, 2, 72);

    OptimizerConfig cfg;
    cfg.init = OptimizerConfig::Init::kZero;
    CHECK(initial_phases(cfg, c, s).angles.cwiseAbs().maxCoeff() == 0.0);

    cfg.init = OptimizerConfig::Init::kRandom;
    cfg.seed = 5;
    const PhaseProfile a = initial_phases(cfg, c, s);
    const PhaseProfile b = initial_phases(cfg, c, s);
    CHECK((a.angles - b.angles).cwiseAbs().maxCoeff() == 0.0); // same seed
    cfg.seed = 6;
    CHECK((initial_phases(cfg, c, s).angles - a.angles).cwiseAbs().maxCoeff() > 0.0);

    // the greedy alignment beats zero phases on the LoS projection
    cfg.init = OptimizerConfig::Init::kLosMatched;
    const PhaseProfile matched = initial_phases(cfg, c, s);
    const double aligned = std::abs(s.los.cwiseProduct(forward(matched, c).g).sum());
    const double zero =
        std::abs(s.los.cwiseProduct(forward(PhaseProfile::zeros(2, 4), c).g).sum());
    CHECK(aligned >= zero);
}
