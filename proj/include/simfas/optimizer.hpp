// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "simfas/outage.hpp"
#include "simfas/sim_stack.hpp"
#include "simfas/types.hpp"

namespace simfas {

// Full derivative bundle of the outage probability with respect to the
// phase angles: grad = dP/dsigma~^2 * dsigma~^2/dtheta + dP/d|delta| *
// d|delta|/dtheta, entrywise.
struct GradientReport {
    RMatrix grad;
    double d_pout_d_sigma_sq = 0.0;
    double d_pout_d_delta = 0.0;
    RMatrix d_sigma_sq_d_theta;
    RMatrix d_delta_d_theta;
    double pout = 0.0;
    bool delta_degenerate = false; // |delta| = 0: zero subgradient used
};

struct OptimizerConfig {
    int max_iters = 200;
    double initial_step = 1.0;
    double backtrack_factor = 0.5;
    double min_step = 1e-8;
    double grad_tol = 1e-9;
    enum class Init { kZero, kRandom, kLosMatched } init = Init::kZero;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_iters < 1) throw ConfigError("optimizer: max_iters must be >= 1");
        if (!(initial_step > 0.0)) throw ConfigError("optimizer: initial_step must be positive");
        if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
            throw ConfigError("optimizer: backtrack_factor must lie in (0, 1)");
        if (!(min_step > 0.0)) throw ConfigError("optimizer: min_step must be positive");
        if (!(grad_tol > 0.0)) throw ConfigError("optimizer: grad_tol must be positive");
    }
};

struct IterationRecord {
    int iteration;
    double pout;
    double step;      // accepted step size (0 for the initial point)
    double grad_norm; // gradient norm at this iterate
};

struct OptimizeResult {
    PhaseProfile phases;
    std::vector<IterationRecord> trace;
};

// d sigma~^2 / d theta_{l,m} = -(2 alpha / (K+1)) Im{ e^{j theta} u_{l,m} (g^H d_{l,m}) }.
RMatrix dsigma2_dtheta(const PhaseProfile& phases, const CouplingSet& coupling,
                       const ChannelStats& stats);

// d |delta| / d theta_{l,m} = -sqrt(alpha K/(K+1)) Im{ e^{j theta} u_{l,m}
// s_{l,m} conj(delta)/|delta| }; the zero matrix (a subgradient) when
// |delta| = 0, reported through *degenerate.
RMatrix ddelta_dtheta(const PhaseProfile& phases, const CouplingSet& coupling,
                      const ChannelStats& stats, bool* degenerate = nullptr);

// dP_out/dsigma~^2 and dP_out/d|delta| = P_out sum_b (1/J_b) dJ_b/d(.).
double dpout_dsigma2(const EffectiveStats& es, const BlockPartition& partition,
                     const QuadratureSpec& spec);
double dpout_ddelta(const EffectiveStats& es, const BlockPartition& partition,
                    const QuadratureSpec& spec);

GradientReport gradient(const PhaseProfile& phases, const CouplingSet& coupling,
                        const ChannelStats& stats, const LinkBudget& budget,
                        const QuadratureSpec& spec);

// Projection onto the feasible set: wrap every angle into [0, 2pi).
PhaseProfile project(const RMatrix& raw);

// Starting point per the configured policy. LOS_MATCHED sweeps the layers
// once, aligning each layer's terms of h_bar^T g to a common phase.
PhaseProfile initial_phases(const OptimizerConfig& cfg, const CouplingSet& coupling,
                            const ChannelStats& stats);

// Projected gradient descent with backtracking line search; the trace of
// accepted iterates is non-increasing in P_out.
OptimizeResult optimize(const PhaseProfile& initial, const CouplingSet& coupling,
                        const ChannelStats& stats, const LinkBudget& budget,
                        const QuadratureSpec& spec, const OptimizerConfig& cfg);

} // namespace simfas
