// SPDX-License-Identifier: Apache-2.0

#include "simfas/optimizer.hpp"

#include <cmath>
#include <map>

#include "simfas/rng.hpp"

namespace simfas {

namespace {

// Per-layer factors the chain rule needs: the layer inputs u_l and the row
// vectors g^H D_l and h_bar^T D_l, propagated backward through the stack so
// no suffix matrix is ever formed.
struct StackFactors {
    CVector g;
    std::vector<CVector> inputs;     // u_l
    std::vector<CVector> g_rows;     // (g^H D_l)^T, entry m = g^H d_{l,m}
    std::vector<CVector> los_rows;   // (D_l^T h_bar), entry m = h_bar^T d_{l,m}
    Complex delta_complex;
};

StackFactors stack_factors(const PhaseProfile& phases, const CouplingSet& coupling,
                           const ChannelStats& stats) {
    const int layers = phases.num_layers();
    const int atoms = phases.atoms_per_layer();

    StackFactors f;
    SimField field = forward(phases, coupling);
    f.g = std::move(field.g);
    f.inputs = std::move(field.layer_inputs);
    f.delta_complex = stats.los_amplitude() * stats.los.cwiseProduct(f.g).sum();

    f.g_rows.assign(layers, CVector());
    f.los_rows.assign(layers, CVector());
    Eigen::RowVectorXcd g_row = f.g.adjoint();
    Eigen::RowVectorXcd los_row = stats.los.transpose();
    for (int l = layers - 1; l >= 0; --l) {
        f.g_rows[l] = g_row.transpose();
        f.los_rows[l] = los_row.transpose();
        if (l > 0) {
            Eigen::RowVectorXcd phased_g(atoms), phased_los(atoms);
            for (int m = 0; m < atoms; ++m) {
                const Complex ph = std::polar(1.0, phases.angles(l, m));
                phased_g[m] = g_row[m] * ph;
                phased_los[m] = los_row[m] * ph;
            }
            g_row = phased_g * coupling.inter_layer[l - 1];
            los_row = phased_los * coupling.inter_layer[l - 1];
        }
    }
    return f;
}

RMatrix dsigma2_from_factors(const StackFactors& f, const PhaseProfile& phases,
                             const ChannelStats& stats) {
    const int layers = phases.num_layers();
    const int atoms = phases.atoms_per_layer();
    const double scale = -2.0 * stats.nlos_entry_variance();
    RMatrix out(layers, atoms);
    for (int l = 0; l < layers; ++l)
        for (int m = 0; m < atoms; ++m) {
            const Complex w =
                std::polar(1.0, phases.angles(l, m)) * f.inputs[l][m] * f.g_rows[l][m];
            out(l, m) = scale * w.imag();
        }
    return out;
}

RMatrix ddelta_from_factors(const StackFactors& f, const PhaseProfile& phases,
                            const ChannelStats& stats, bool* degenerate) {
    const int layers = phases.num_layers();
    const int atoms = phases.atoms_per_layer();
    const double delta_abs = std::abs(f.delta_complex);
    if (degenerate) *degenerate = !(delta_abs > 0.0);
    if (!(delta_abs > 0.0)) return RMatrix::Zero(layers, atoms);

    const Complex phasor = std::conj(f.delta_complex) / delta_abs;
    const double scale = -stats.los_amplitude();
    RMatrix out(layers, atoms);
    for (int l = 0; l < layers; ++l)
        for (int m = 0; m < atoms; ++m) {
            const Complex w =
                std::polar(1.0, phases.angles(l, m)) * f.inputs[l][m] * f.los_rows[l][m] * phasor;
            out(l, m) = scale * w.imag();
        }
    return out;
}

// P_out plus both scalar sensitivities; duplicated blocks share one set of
// quadratures.
struct PoutDerivatives {
    double pout = 0.0;
    double d_sigma_sq = 0.0;
    double d_delta = 0.0;
};

PoutDerivatives pout_derivatives(const EffectiveStats& es, const BlockPartition& partition,
                                 const QuadratureSpec& spec) {
    PoutDerivatives out;
    if (es.gamma_th == 0.0) return out;

    std::map<std::pair<int, double>, int> groups;
    for (const auto& b : partition.blocks) ++groups[{b.size, b.mu}];

    double log_p = 0.0, sum_sigma = 0.0, sum_delta = 0.0;
    for (const auto& [key, count] : groups) {
        const BlockIntegrals ji = block_integral_derivatives(es, {key.first, key.second}, spec);
        if (ji.value == 0.0) return out; // P_out = 0 and flat
        log_p += count * std::log(ji.value);
        sum_sigma += count * ji.d_sigma_sq / ji.value;
        sum_delta += count * ji.d_delta / ji.value;
    }
    out.pout = std::exp(log_p);
    out.d_sigma_sq = out.pout * sum_sigma;
    out.d_delta = out.pout * sum_delta;
    return out;
}

} // namespace

RMatrix dsigma2_dtheta(const PhaseProfile& phases, const CouplingSet& coupling,
                       const ChannelStats& stats) {
    return dsigma2_from_factors(stack_factors(phases, coupling, stats), phases, stats);
}

RMatrix ddelta_dtheta(const PhaseProfile& phases, const CouplingSet& coupling,
                      const ChannelStats& stats, bool* degenerate) {
    return ddelta_from_factors(stack_factors(phases, coupling, stats), phases, stats, degenerate);
}

double dpout_dsigma2(const EffectiveStats& es, const BlockPartition& partition,
                     const QuadratureSpec& spec) {
    return pout_derivatives(es, partition, spec).d_sigma_sq;
}

double dpout_ddelta(const EffectiveStats& es, const BlockPartition& partition,
                    const QuadratureSpec& spec) {
    return pout_derivatives(es, partition, spec).d_delta;
}

GradientReport gradient(const PhaseProfile& phases, const CouplingSet& coupling,
                        const ChannelStats& stats, const LinkBudget& budget,
                        const QuadratureSpec& spec) {
    const StackFactors f = stack_factors(phases, coupling, stats);
    const EffectiveStats es = effective_stats(f.g, stats, budget);

    GradientReport report;
    report.d_sigma_sq_d_theta = dsigma2_from_factors(f, phases, stats);
    report.d_delta_d_theta = ddelta_from_factors(f, phases, stats, &report.delta_degenerate);

    const PoutDerivatives pd = pout_derivatives(es, stats.partition, spec);
    report.pout = pd.pout;
    report.d_pout_d_sigma_sq = pd.d_sigma_sq;
    report.d_pout_d_delta = pd.d_delta;
    report.grad = pd.d_sigma_sq * report.d_sigma_sq_d_theta + pd.d_delta * report.d_delta_d_theta;
    return report;
}

PhaseProfile project(const RMatrix& raw) {
    PhaseProfile out{RMatrix(raw.rows(), raw.cols())};
    for (Eigen::Index l = 0; l < raw.rows(); ++l)
        for (Eigen::Index m = 0; m < raw.cols(); ++m) out.angles(l, m) = wrap_angle(raw(l, m));
    return out;
}

PhaseProfile initial_phases(const OptimizerConfig& cfg, const CouplingSet& coupling,
                            const ChannelStats& stats) {
    const int layers = coupling.num_layers();
    const int atoms = coupling.atoms_per_layer();
    switch (cfg.init) {
    case OptimizerConfig::Init::kZero:
        return PhaseProfile::zeros(layers, atoms);
    case OptimizerConfig::Init::kRandom: {
        Rng rng(cfg.seed);
        PhaseProfile p = PhaseProfile::zeros(layers, atoms);
        for (int l = 0; l < layers; ++l)
            for (int m = 0; m < atoms; ++m) p.angles(l, m) = wrap_angle(kTwoPi * rng.uniform());
        return p;
    }
    case OptimizerConfig::Init::kLosMatched: {
        // One greedy pass: layer by layer, rotate each term of
        // h_bar^T g = sum_m e^{j theta} u_{l,m} s_{l,m} onto the real axis.
        PhaseProfile p = PhaseProfile::zeros(layers, atoms);
        for (int l = 0; l < layers; ++l) {
            const StackFactors f = stack_factors(p, coupling, stats);
            for (int m = 0; m < atoms; ++m) {
                const Complex term = f.inputs[l][m] * f.los_rows[l][m];
                if (std::abs(term) > 0.0) p.angles(l, m) = wrap_angle(-std::arg(term));
            }
        }
        return p;
    }
    }
    throw ConfigError("optimizer: unknown init policy");
}

OptimizeResult optimize(const PhaseProfile& initial, const CouplingSet& coupling,
                        const ChannelStats& stats, const LinkBudget& budget,
                        const QuadratureSpec& spec, const OptimizerConfig& cfg) {
    cfg.validate();

    auto evaluate = [&](const PhaseProfile& p) {
        const SimField field = forward(p, coupling);
        return outage_probability(effective_stats(field.g, stats, budget), stats.partition, spec);
    };

    OptimizeResult result;
    result.phases = project(initial.angles);
    double pout = evaluate(result.phases);
    double accepted_step = 0.0;

    for (int iter = 0; iter <= cfg.max_iters; ++iter) {
        if (!std::isfinite(pout))
            throw NumericError("optimize: non-finite outage at iteration " + std::to_string(iter));
        const GradientReport rep = gradient(result.phases, coupling, stats, budget, spec);
        const double grad_norm = rep.grad.norm();
        result.trace.push_back({iter, pout, accepted_step, grad_norm});

        if (grad_norm < cfg.grad_tol || iter == cfg.max_iters) break;

        // Backtrack until any strict decrease.
        double step = cfg.initial_step;
        bool improved = false;
        PhaseProfile candidate;
        double pout_candidate = pout;
        while (step >= cfg.min_step) {
            candidate = project(result.phases.angles - step * rep.grad);
            pout_candidate = evaluate(candidate);
            if (pout_candidate < pout) {
                improved = true;
                break;
            }
            step *= cfg.backtrack_factor;
        }
        if (!improved) break; // no decrease down to min_step: treat as stationary

        result.phases = std::move(candidate);
        pout = pout_candidate;
        accepted_step = step;
    }
    return result;
}

} // namespace simfas
