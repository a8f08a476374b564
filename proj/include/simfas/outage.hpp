// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "simfas/channel_model.hpp"
#include "simfas/numerics.hpp"
#include "simfas/types.hpp"

namespace simfas {

struct LinkBudget {
    double tx_power_w = dbm_to_watt(20.0);
    double noise_w = dbm_to_watt(-96.0);
    double target_rate = 6.0; // bits/s/Hz

    // SNR threshold (2^R - 1) sigma^2 / P.
    double gamma_th() const { return (std::exp2(target_rate) - 1.0) * noise_w / tx_power_w; }

    void validate() const {
        if (!(tx_power_w > 0.0)) throw ConfigError("budget: tx power must be positive");
        if (!(noise_w > 0.0)) throw ConfigError("budget: noise power must be positive");
        if (!(target_rate > 0.0)) throw ConfigError("budget: target rate must be positive");
    }
};

// The two sufficient statistics of the outage expression plus the SNR
// threshold they are compared against.
struct EffectiveStats {
    double sigma_tilde_sq; // per-port diffuse power after precoding
    double delta_abs;      // deterministic LoS gain magnitude
    double gamma_th;
};

// sigma~^2 = alpha/(K+1) ||g||^2, |delta| = sqrt(alpha K/(K+1)) |h_bar^T g|.
EffectiveStats effective_stats(const CVector& g, const ChannelStats& stats,
                               const LinkBudget& budget);

// Rician density of the shared block envelope, scaled-Bessel stabilized.
double delta_density(double r_b, const EffectiveStats& es, double mu_b);

// P[C_k <= r_k | block envelope r_b] = 1 - Q1(c r_b, c r_k) with
// c = sqrt(2 / (sigma~^2 (1 - mu^2))).
double conditional_port_cdf(double r_k, double r_b, const EffectiveStats& es, double mu_b);

// J_b = E_{r_b}[ conditional CDF(sqrt(gamma_th))^{L_b} ] in [0, 1]. Blocks
// with mu^2 below 1e-6 use the point-mass limit instead of the integral.
double block_integral(const EffectiveStats& es, const Block& block, const QuadratureSpec& spec);

// Outage probability: product of block integrals, accumulated in the log
// domain. Identical blocks are evaluated once.
double outage_probability(const EffectiveStats& es, const BlockPartition& partition,
                          const QuadratureSpec& spec);

// Joint CDF of the per-port envelopes at thresholds r (length N, ports in
// block order). Reduces to outage_probability at r_k = sqrt(gamma_th).
double joint_cdf(const RVector& r, const EffectiveStats& es, const BlockPartition& partition,
                 const QuadratureSpec& spec);

// J_b together with its partial derivatives in sigma~^2 and |delta|,
// differentiated under the integral sign. Feeds the phase gradient.
struct BlockIntegrals {
    double value;
    double d_sigma_sq;
    double d_delta;
};
BlockIntegrals block_integral_derivatives(const EffectiveStats& es, const Block& block,
                                          const QuadratureSpec& spec);

} // namespace simfas
