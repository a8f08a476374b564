// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "simfas/channel_model.hpp"
#include "simfas/outage.hpp"
#include "simfas/types.hpp"

namespace simfas {

enum class ChannelModel { kBdma, kFullJakes };

struct McPlan {
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
    ChannelModel model = ChannelModel::kBdma;
    std::uint64_t batch = 8192;

    void validate() const {
        if (trials < 1) throw ConfigError("mc: trials must be >= 1");
        if (batch < 1) throw ConfigError("mc: batch must be >= 1");
    }
};

struct McResult {
    double empirical_outage;
    double std_error;
    std::uint64_t trials_used;
    std::uint64_t seed;
};

// Smallest index attaining max_k |C_k|, plus the winner's power gain.
std::pair<int, double> select_port(const CVector& c);

// Empirical outage of the selected port: fraction of trials with
// max_k |h_k^T g|^2 strictly below gamma_th. Deterministic given the seed;
// batches use independent substreams.
McResult simulate_outage(const CVector& g, const ChannelStats& stats, const LinkBudget& budget,
                         const McPlan& plan);

// Same draws evaluated against several thresholds at once (common random
// numbers across a power sweep): the k-th result reuses every trial of the
// first, so outage is exactly monotone in gamma_th per seed.
std::vector<McResult> simulate_outage_thresholds(const CVector& g, const ChannelStats& stats,
                                                 std::span<const double> gamma_ths,
                                                 const McPlan& plan);

} // namespace simfas
