// SPDX-License-Identifier: Apache-2.0

#include "simfas/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace simfas {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

LinkBudget budget_from(const ExperimentConfig& cfg, double tx_power_dbm) {
    LinkBudget b;
    b.tx_power_w = dbm_to_watt(tx_power_dbm);
    b.noise_w = dbm_to_watt(cfg.noise_dbm);
    b.target_rate = cfg.target_rate;
    return b;
}

// Scalar direct-feed stand-in for the stack: g = 1, unit LoS, same fading
// statistics and receiver.
Scenario strip_sim(const Scenario& base) {
    Scenario s = base;
    s.g = CVector::Constant(1, Complex(1.0, 0.0));
    s.stats.los = CVector::Constant(1, Complex(1.0, 0.0));
    s.phases = PhaseProfile::zeros(1, 1);
    return s;
}

// Single-port receiver with the same transmit field.
Scenario strip_fas(const Scenario& s, double mu) {
    Scenario out = s;
    out.stats.fas.num_ports = 1;
    out.stats.partition.blocks = {{1, mu}};
    return out;
}

double analytic_outage(const Scenario& s, const QuadratureSpec& spec) {
    const EffectiveStats es = effective_stats(s.g, s.stats, s.budget);
    return outage_probability(es, s.stats.partition, spec);
}

McPlan plan_from(const ExperimentConfig& cfg, ChannelModel model) {
    McPlan plan;
    plan.trials = cfg.mc_trials;
    plan.seed = cfg.mc_seed;
    plan.model = model;
    return plan;
}

SweepRow make_row(const ExperimentConfig& cfg, const Scenario& scenario, double sweep_value) {
    SweepRow row;
    row.sweep_value = sweep_value;
    row.seed = cfg.mc_seed;
    row.pout_analytical = analytic_outage(scenario, cfg.quadrature);
    if (cfg.mc_bdma)
        row.mc_bdma = simulate_outage(scenario.g, scenario.stats, scenario.budget,
                                      plan_from(cfg, ChannelModel::kBdma));
    if (cfg.mc_jakes)
        row.mc_jakes = simulate_outage(scenario.g, scenario.stats, scenario.budget,
                                       plan_from(cfg, ChannelModel::kFullJakes));
    if (cfg.with_sim)
        row.pout_no_sim = analytic_outage(strip_sim(scenario), cfg.quadrature);
    if (cfg.with_fas)
        row.pout_no_fas =
            analytic_outage(strip_fas(scenario, std::sqrt(cfg.partition_mu_sq)), cfg.quadrature);
    return row;
}

} // namespace

BlockPartition resolve_partition(const ExperimentConfig& cfg, const FasConfig& fas) {
    if (cfg.explicit_partition) {
        BlockPartition p = *cfg.explicit_partition;
        p.validate(fas.num_ports);
        return p;
    }
    const int max_block = cfg.partition_max_block > 0 ? cfg.partition_max_block : fas.num_ports;
    return bdma_partition(build_sigma(fas), cfg.partition_mu_sq, max_block);
}

Scenario build_scenario(const ExperimentConfig& cfg) {
    cfg.validate();

    Scenario s;
    s.geometry = cfg.geometry;
    s.budget = budget_from(cfg, cfg.tx_power_dbm);

    s.stats.path_loss_alpha =
        path_loss(cfg.user_distance_m, cfg.path_loss_exponent, cfg.path_loss_ref_db);
    s.stats.rician_k = cfg.rician_k;
    s.stats.fas = cfg.fas;
    if (!cfg.with_fas) s.stats.fas.num_ports = 1;
    s.stats.partition = cfg.with_fas ? resolve_partition(cfg, s.stats.fas)
                                     : BlockPartition{{{1, std::sqrt(cfg.partition_mu_sq)}}};

    if (!cfg.with_sim) {
        s.stats.los = CVector::Constant(1, Complex(1.0, 0.0));
        s.g = CVector::Constant(1, Complex(1.0, 0.0));
        s.phases = PhaseProfile::zeros(1, 1);
        s.stats.validate();
        return s;
    }

    s.coupling = build_coupling(s.geometry);
    s.stats.los = los_vector(s.geometry, cfg.user_height_drop_m, cfg.user_distance_m);
    s.stats.validate();

    if (cfg.initial_phases)
        s.phases = project(*cfg.initial_phases);
    else
        s.phases = initial_phases(cfg.optimizer, s.coupling, s.stats);
    if (cfg.optimize_phases)
        s.phases = optimize(s.phases, s.coupling, s.stats, s.budget, cfg.quadrature, cfg.optimizer)
                       .phases;
    s.g = forward(s.phases, s.coupling).g;
    return s;
}

std::string csv_header(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "# simfas sweep\n";
    std::istringstream rendered(render_config(cfg));
    std::string line;
    while (std::getline(rendered, line)) out << "# " << line << "\n";
    out << "sweep_value,pout_analytical,pout_mc_bdma,pout_mc_bdma_stderr,"
           "pout_mc_jakes,pout_mc_jakes_stderr,pout_no_sim,pout_no_fas,seed\n";
    return out.str();
}

std::string csv_row(const SweepRow& row) {
    std::ostringstream out;
    out << fmt(row.sweep_value) << "," << fmt(row.pout_analytical) << ",";
    if (row.mc_bdma)
        out << fmt(row.mc_bdma->empirical_outage) << "," << fmt(row.mc_bdma->std_error);
    else
        out << ",";
    out << ",";
    if (row.mc_jakes)
        out << fmt(row.mc_jakes->empirical_outage) << "," << fmt(row.mc_jakes->std_error);
    else
        out << ",";
    out << ",";
    if (row.pout_no_sim) out << fmt(*row.pout_no_sim);
    out << ",";
    if (row.pout_no_fas) out << fmt(*row.pout_no_fas);
    out << "," << row.seed << "\n";
    return out.str();
}

namespace {

// Row production shared by the vector and streaming entry points. The
// power axis reuses one channel-draw set for every power value (common
// random numbers), so per-seed monotonicity in P is exact.
template <class Emit>
void sweep_rows(const ExperimentConfig& cfg, Emit&& emit) {
    if (!cfg.sweep_axis) throw ConfigError("sweep.axis: required for a sweep run");

    switch (*cfg.sweep_axis) {
    case SweepAxis::kTxPowerDbm: {
        const Scenario base = build_scenario(cfg);
        std::vector<double> gammas;
        gammas.reserve(cfg.sweep_values.size());
        for (double dbm : cfg.sweep_values)
            gammas.push_back(budget_from(cfg, dbm).gamma_th());

        std::vector<McResult> bdma, jakes;
        if (cfg.mc_bdma)
            bdma = simulate_outage_thresholds(base.g, base.stats, gammas,
                                              plan_from(cfg, ChannelModel::kBdma));
        if (cfg.mc_jakes)
            jakes = simulate_outage_thresholds(base.g, base.stats, gammas,
                                               plan_from(cfg, ChannelModel::kFullJakes));

        for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i) {
            Scenario point = base;
            point.budget = budget_from(cfg, cfg.sweep_values[i]);
            SweepRow row;
            row.sweep_value = cfg.sweep_values[i];
            row.seed = cfg.mc_seed;
            row.pout_analytical = analytic_outage(point, cfg.quadrature);
            if (cfg.mc_bdma) row.mc_bdma = bdma[i];
            if (cfg.mc_jakes) row.mc_jakes = jakes[i];
            if (cfg.with_sim) row.pout_no_sim = analytic_outage(strip_sim(point), cfg.quadrature);
            if (cfg.with_fas)
                row.pout_no_fas = analytic_outage(
                    strip_fas(point, std::sqrt(cfg.partition_mu_sq)), cfg.quadrature);
            emit(row);
        }
        return;
    }
    case SweepAxis::kNumLayers: {
        if (cfg.initial_phases)
            throw ConfigError("phases: explicit phases cannot drive a num_layers sweep");
        for (double value : cfg.sweep_values) {
            ExperimentConfig point_cfg = cfg;
            point_cfg.geometry.num_layers = static_cast<int>(value);
            const Scenario point = build_scenario(point_cfg);
            emit(make_row(point_cfg, point, value));
        }
        return;
    }
    case SweepAxis::kNumPorts: {
        // Geometry and phase design stay fixed; only the receiver grows.
        const Scenario base = build_scenario(cfg);
        for (double value : cfg.sweep_values) {
            ExperimentConfig point_cfg = cfg;
            point_cfg.fas.num_ports = static_cast<int>(value);
            Scenario point = base;
            point.stats.fas.num_ports = point_cfg.fas.num_ports;
            point.stats.partition = cfg.with_fas
                                        ? resolve_partition(point_cfg, point.stats.fas)
                                        : BlockPartition{{{1, std::sqrt(cfg.partition_mu_sq)}}};
            emit(make_row(point_cfg, point, value));
        }
        return;
    }
    }
}

} // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    std::vector<SweepRow> rows;
    sweep_rows(cfg, [&rows](const SweepRow& r) { rows.push_back(r); });
    return rows;
}

void run_sweep_to_stream(const ExperimentConfig& cfg, std::ostream& out) {
    out << csv_header(cfg);
    out.flush();
    try {
        sweep_rows(cfg, [&out](const SweepRow& r) {
            out << csv_row(r);
            out.flush();
        });
    } catch (const std::exception& e) {
        out << "# ERROR: " << e.what() << "\n";
        out.flush();
        throw;
    }
}

void run_sweep_to_file(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    run_sweep_to_stream(cfg, out);
}

ValidationReport run_validate(const ExperimentConfig& cfg, ChannelModel model) {
    ExperimentConfig mc_cfg = cfg;
    mc_cfg.mc_bdma = model == ChannelModel::kBdma;
    mc_cfg.mc_jakes = model == ChannelModel::kFullJakes;

    ValidationReport report;
    report.model = model;
    report.low_power = cfg.mc_trials < 100000;

    for (const SweepRow& row : run_sweep(mc_cfg)) {
        const McResult& mc = (model == ChannelModel::kBdma) ? *row.mc_bdma : *row.mc_jakes;
        const double p = row.pout_analytical;
        // Wide enough standard error even when the empirical count is 0.
        const double se = std::max({mc.std_error, std::sqrt(p * (1.0 - p) / double(mc.trials_used)),
                                    1.0 / double(mc.trials_used)});
        const double z = (mc.empirical_outage - p) / se;
        report.points.push_back({row.sweep_value, p, mc, z});
        // The BDMA closed form is only asserted against its own model, and
        // only when the trial count gives the z-score any power.
        if (model == ChannelModel::kBdma && !report.low_power && std::abs(z) > 4.0)
            report.pass = false;
    }
    return report;
}

GradCheckReport run_gradient_check(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentConfig point_cfg = cfg;
    point_cfg.optimize_phases = false;
    point_cfg.optimizer.init = OptimizerConfig::Init::kRandom;
    point_cfg.initial_phases.reset();
    if (!point_cfg.with_sim)
        throw ConfigError("grad-check: requires benchmark.with_sim = true");

    QuadratureSpec tight = cfg.quadrature;
    tight.abs_tol = std::min(tight.abs_tol, 1e-12);
    tight.rel_tol = std::min(tight.rel_tol, 1e-12);

    const Scenario s = build_scenario(point_cfg);
    const GradientReport rep =
        gradient(s.phases, s.coupling, s.stats, s.budget, tight);

    GradCheckReport out;
    out.grad_norm = rep.grad.norm();
    out.delta_branch_zero = rep.delta_degenerate || s.stats.rician_k == 0.0;

    if (s.budget.gamma_th() == 0.0) {
        out.vacuous = true;
        out.max_rel_error = 0.0;
        return out;
    }

    auto pout_at = [&](const RMatrix& angles) {
        const SimField f = forward(PhaseProfile{angles}, s.coupling);
        return outage_probability(effective_stats(f.g, s.stats, s.budget), s.stats.partition,
                                  tight);
    };

    const double h = 1e-5;
    RMatrix fd(rep.grad.rows(), rep.grad.cols());
    for (Eigen::Index l = 0; l < fd.rows(); ++l)
        for (Eigen::Index m = 0; m < fd.cols(); ++m) {
            RMatrix up = s.phases.angles, down = s.phases.angles;
            up(l, m) += h;
            down(l, m) -= h;
            fd(l, m) = (pout_at(up) - pout_at(down)) / (2.0 * h);
        }

    const double fd_max = fd.cwiseAbs().maxCoeff();
    const double an_max = rep.grad.cwiseAbs().maxCoeff();
    if (fd_max < 1e-10 && an_max < 1e-10) {
        // saturated outage (0 or 1 across the neighborhood): both gradients
        // are zero to roundoff and a relative comparison is meaningless
        out.vacuous = true;
        out.max_rel_error = (rep.grad - fd).cwiseAbs().maxCoeff();
        return out;
    }
    double worst = 0.0;
    for (Eigen::Index l = 0; l < fd.rows(); ++l)
        for (Eigen::Index m = 0; m < fd.cols(); ++m) {
            const double denom = std::max(std::abs(fd(l, m)), 1e-3 * fd_max + 1e-300);
            worst = std::max(worst, std::abs(rep.grad(l, m) - fd(l, m)) / denom);
        }
    out.max_rel_error = worst;
    out.pass = worst <= 1e-3;
    return out;
}

} // namespace simfas
