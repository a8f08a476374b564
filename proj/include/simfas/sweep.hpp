// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "simfas/config.hpp"
#include "simfas/montecarlo.hpp"
#include "simfas/optimizer.hpp"
#include "simfas/outage.hpp"

namespace simfas {

// Everything needed to evaluate one system instance: geometry, propagation,
// channel statistics, budget, and the resolved phase profile and field.
struct Scenario {
    SimGeometry geometry;
    CouplingSet coupling;
    ChannelStats stats;
    LinkBudget budget;
    PhaseProfile phases;
    CVector g;
};

// Partition from the explicit config list when given, otherwise from the
// greedy threshold rule on the Jakes Toeplitz matrix.
BlockPartition resolve_partition(const ExperimentConfig& cfg, const FasConfig& fas);

// Main-system scenario at the config point, honoring with_sim / with_fas
// and the phase initialization / optimization settings.
Scenario build_scenario(const ExperimentConfig& cfg);

struct SweepRow {
    double sweep_value;
    double pout_analytical;
    std::optional<McResult> mc_bdma;
    std::optional<McResult> mc_jakes;
    std::optional<double> pout_no_sim;
    std::optional<double> pout_no_fas;
    std::uint64_t seed;
};

// One row per sweep value. Benchmark columns are analytical and appear only
// when the main system actually includes the feature being removed.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

// Streaming variant: header plus each row is written and flushed as it
// completes; a failure leaves the finished rows plus an error marker row
// before the exception propagates.
void run_sweep_to_stream(const ExperimentConfig& cfg, std::ostream& out);
void run_sweep_to_file(const ExperimentConfig& cfg, const std::string& path);

std::string csv_header(const ExperimentConfig& cfg);
std::string csv_row(const SweepRow& row);

struct ValidatePoint {
    double sweep_value;
    double analytical;
    McResult mc;
    double z;
};

struct ValidationReport {
    std::vector<ValidatePoint> points;
    ChannelModel model;
    bool low_power = false; // trials below 1e5: intervals too wide to assert
    bool pass = true;
};

// Analytical-vs-Monte-Carlo agreement across the sweep. Under the exact
// Jakes model the gap is reported but never asserted.
ValidationReport run_validate(const ExperimentConfig& cfg, ChannelModel model);

struct GradCheckReport {
    double max_rel_error = 0.0;
    double grad_norm = 0.0;
    bool delta_branch_zero = false;
    bool vacuous = false; // gamma_th = 0: the gradient is identically zero
    bool pass = true;
};

// Analytical gradient against central finite differences at a seeded random
// phase profile, with quadrature tolerances tightened to 1e-12.
GradCheckReport run_gradient_check(const ExperimentConfig& cfg);

} // namespace simfas
