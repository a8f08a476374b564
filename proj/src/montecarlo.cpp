// SPDX-License-Identifier: Apache-2.0

#include "simfas/montecarlo.hpp"

#include <cmath>

namespace simfas {

std::pair<int, double> select_port(const CVector& c) {
    if (c.size() == 0) throw std::domain_error("select_port: empty gain vector");
    int best = 0;
    double best_abs2 = std::norm(c[0]);
    for (Eigen::Index k = 1; k < c.size(); ++k) {
        const double a2 = std::norm(c[k]);
        if (a2 > best_abs2) { // strict: ties keep the lowest index
            best = static_cast<int>(k);
            best_abs2 = a2;
        }
    }
    return {best, best_abs2};
}

namespace {

// Per-trial post-selection gain max_k |h_k^T g|^2 under the block model.
// C_k = h_k^T g expands to delta + mu_b (htilde_b^T g) + sqrt(1-mu^2) (e_k^T g),
// which is evaluated directly without materializing h_k; the draw order
// matches draw_block_channels so both paths consume identical variates.
double bdma_trial_gain(const CVector& g, const ChannelStats& stats, const Complex& delta,
                       Rng& rng) {
    const Eigen::Index m = g.size();
    const double var = stats.nlos_entry_variance();
    double best = 0.0;
    for (const auto& block : stats.partition.blocks) {
        const Complex shared = rng.cgaussian_vector(m, var).cwiseProduct(g).sum();
        const double innovation_scale = std::sqrt(1.0 - block.mu * block.mu);
        for (int k = 0; k < block.size; ++k) {
            const Complex ek = rng.cgaussian_vector(m, var).cwiseProduct(g).sum();
            const double gain = std::norm(delta + block.mu * shared + innovation_scale * ek);
            if (gain > best) best = gain;
        }
    }
    return best;
}

double jakes_trial_gain(const CVector& g, const ChannelStats& stats, const CMatrix& sqrt_sigma,
                        Rng& rng) {
    const int n = stats.fas.num_ports;
    const Eigen::Index m = g.size();
    const double nlos_amp = std::sqrt(stats.nlos_entry_variance());
    const Complex delta = stats.los_amplitude() * stats.los.cwiseProduct(g).sum();

    CVector c = CVector::Constant(n, delta);
    for (Eigen::Index atom = 0; atom < m; ++atom) {
        const CVector z = rng.cgaussian_vector(n, 1.0);
        c.noalias() += (nlos_amp * g[atom]) * (sqrt_sigma * z);
    }
    double best = 0.0;
    for (int k = 0; k < n; ++k) best = std::max(best, std::norm(c[k]));
    return best;
}

} // namespace

std::vector<McResult> simulate_outage_thresholds(const CVector& g, const ChannelStats& stats,
                                                 std::span<const double> gamma_ths,
                                                 const McPlan& plan) {
    plan.validate();
    stats.validate();
    if (g.size() != stats.los.size())
        throw ConfigError("simulate_outage: field and LoS dimensions disagree");

    CMatrix sqrt_sigma;
    if (plan.model == ChannelModel::kFullJakes)
        sqrt_sigma = sigma_sqrt(build_sigma(stats.fas)).cast<Complex>();
    const Complex delta = stats.los_amplitude() * stats.los.cwiseProduct(g).sum();

    std::vector<std::uint64_t> outages(gamma_ths.size(), 0);
    std::uint64_t done = 0;
    for (std::uint64_t batch_index = 0; done < plan.trials; ++batch_index) {
        const std::uint64_t count = std::min<std::uint64_t>(plan.batch, plan.trials - done);
        Rng rng(plan.seed, batch_index);
        for (std::uint64_t t = 0; t < count; ++t) {
            const double gain = (plan.model == ChannelModel::kBdma)
                                    ? bdma_trial_gain(g, stats, delta, rng)
                                    : jakes_trial_gain(g, stats, sqrt_sigma, rng);
            for (std::size_t i = 0; i < gamma_ths.size(); ++i)
                if (gain < gamma_ths[i]) ++outages[i];
        }
        done += count;
    }

    std::vector<McResult> results;
    results.reserve(gamma_ths.size());
    for (std::size_t i = 0; i < gamma_ths.size(); ++i) {
        const double p = static_cast<double>(outages[i]) / static_cast<double>(plan.trials);
        results.push_back({p, std::sqrt(p * (1.0 - p) / static_cast<double>(plan.trials)),
                           plan.trials, plan.seed});
    }
    return results;
}

McResult simulate_outage(const CVector& g, const ChannelStats& stats, const LinkBudget& budget,
                         const McPlan& plan) {
    budget.validate();
    const double gamma_th = budget.gamma_th();
    return simulate_outage_thresholds(g, stats, {&gamma_th, 1}, plan).front();
}

} // namespace simfas
