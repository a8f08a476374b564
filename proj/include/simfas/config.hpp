// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simfas/channel_model.hpp"
#include "simfas/montecarlo.hpp"
#include "simfas/optimizer.hpp"
#include "simfas/sim_stack.hpp"

namespace simfas {

enum class SweepAxis { kTxPowerDbm, kNumLayers, kNumPorts };

// Fully resolved experiment description. Defaults follow the reference
// scenario: 3-layer 4x4 stack, lambda = 0.1 m, user 60 m out and 10 m below,
// 50-port receiver over 5 wavelengths, intra-block correlation 0.97, K = 2,
// -96 dBm noise, 6 bps/Hz target.
struct ExperimentConfig {
    SimGeometry geometry;

    double user_distance_m = 60.0;
    double user_height_drop_m = 10.0;
    double rician_k = 2.0;
    double path_loss_exponent = 3.5;
    double path_loss_ref_db = -30.0;

    FasConfig fas;
    double partition_mu_sq = 0.97;
    int partition_max_block = 0; // 0: no cap
    std::optional<BlockPartition> explicit_partition;

    double tx_power_dbm = 20.0;
    double noise_dbm = -96.0;
    double target_rate = 6.0;

    std::optional<SweepAxis> sweep_axis;
    std::vector<double> sweep_values;

    // Main-system composition. with_sim=false replaces the stack with the
    // direct single-feed path; with_fas=false pins the receiver to one port.
    bool with_sim = true;
    bool with_fas = true;

    std::uint64_t mc_trials = 100000;
    std::uint64_t mc_seed = 1;
    bool mc_bdma = true;
    bool mc_jakes = false;

    bool optimize_phases = false;
    OptimizerConfig optimizer;
    std::optional<RMatrix> initial_phases; // overrides optimizer.init when present

    QuadratureSpec quadrature;
    std::string output_path;

    void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Round-trippable dump of the resolved configuration (used verbatim in CSV
// header comments, and by the phase serializer).
std::string render_config(const ExperimentConfig& cfg);

std::string render_phases(const PhaseProfile& phases);

const char* sweep_axis_name(SweepAxis axis);

} // namespace simfas
