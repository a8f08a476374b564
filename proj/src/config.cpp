// SPDX-License-Identifier: Apache-2.0

#include "simfas/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace simfas {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

BlockPartition parse_blocks(const std::string& key, const std::string& value) {
    BlockPartition p;
    for (const std::string& item : split_list(value)) {
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError(key + ": blocks are size:mu pairs, got '" + item + "'");
        Block b;
        b.size = static_cast<int>(parse_int(key, item.substr(0, colon)));
        b.mu = parse_double(key, item.substr(colon + 1));
        p.blocks.push_back(b);
    }
    if (p.blocks.empty()) throw ConfigError(key + ": empty block list");
    return p;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

const char* sweep_axis_name(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::kTxPowerDbm: return "tx_power_dbm";
    case SweepAxis::kNumLayers: return "num_layers";
    case SweepAxis::kNumPorts: return "num_ports";
    }
    return "?";
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    bool thickness_set = false, pitch_set = false;
    std::map<int, std::vector<double>> phase_rows;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const std::size_t hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");

        if (key == "geometry.num_layers") cfg.geometry.num_layers = static_cast<int>(parse_int(key, value));
        else if (key == "geometry.grid_rows") cfg.geometry.grid_rows = static_cast<int>(parse_int(key, value));
        else if (key == "geometry.grid_cols") cfg.geometry.grid_cols = static_cast<int>(parse_int(key, value));
        else if (key == "geometry.wavelength_m") cfg.geometry.wavelength_m = parse_double(key, value);
        else if (key == "geometry.total_thickness_m") { cfg.geometry.total_thickness_m = parse_double(key, value); thickness_set = true; }
        else if (key == "geometry.atom_pitch_m") { cfg.geometry.atom_pitch_m = parse_double(key, value); pitch_set = true; }
        else if (key == "channel.user_distance_m") cfg.user_distance_m = parse_double(key, value);
        else if (key == "channel.user_height_drop_m") cfg.user_height_drop_m = parse_double(key, value);
        else if (key == "channel.rician_k") cfg.rician_k = parse_double(key, value);
        else if (key == "channel.path_loss_exponent") cfg.path_loss_exponent = parse_double(key, value);
        else if (key == "channel.path_loss_ref_db") cfg.path_loss_ref_db = parse_double(key, value);
        else if (key == "fas.num_ports") cfg.fas.num_ports = static_cast<int>(parse_int(key, value));
        else if (key == "fas.aperture_wavelengths") cfg.fas.aperture_wavelengths = parse_double(key, value);
        else if (key == "partition.mu_sq") cfg.partition_mu_sq = parse_double(key, value);
        else if (key == "partition.max_block") cfg.partition_max_block = static_cast<int>(parse_int(key, value));
        else if (key == "partition.blocks") cfg.explicit_partition = parse_blocks(key, value);
        else if (key == "budget.tx_power_dbm") cfg.tx_power_dbm = parse_double(key, value);
        else if (key == "budget.noise_dbm") cfg.noise_dbm = parse_double(key, value);
        else if (key == "budget.target_rate_bps_hz") cfg.target_rate = parse_double(key, value);
        else if (key == "sweep.axis") {
            if (value == "tx_power_dbm") cfg.sweep_axis = SweepAxis::kTxPowerDbm;
            else if (value == "num_layers") cfg.sweep_axis = SweepAxis::kNumLayers;
            else if (value == "num_ports") cfg.sweep_axis = SweepAxis::kNumPorts;
            else throw ConfigError("sweep.axis: expected tx_power_dbm|num_layers|num_ports, got '" + value + "'");
        } else if (key == "sweep.values") {
            cfg.sweep_values.clear();
            for (const std::string& item : split_list(value))
                cfg.sweep_values.push_back(parse_double(key, item));
        }
        else if (key == "benchmark.with_sim") cfg.with_sim = parse_bool(key, value);
        else if (key == "benchmark.with_fas") cfg.with_fas = parse_bool(key, value);
        else if (key == "mc.trials") cfg.mc_trials = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "mc.seed") cfg.mc_seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "mc.bdma") cfg.mc_bdma = parse_bool(key, value);
        else if (key == "mc.jakes") cfg.mc_jakes = parse_bool(key, value);
        else if (key == "optimizer.enabled") cfg.optimize_phases = parse_bool(key, value);
        else if (key == "optimizer.max_iters") cfg.optimizer.max_iters = static_cast<int>(parse_int(key, value));
        else if (key == "optimizer.initial_step") cfg.optimizer.initial_step = parse_double(key, value);
        else if (key == "optimizer.backtrack_factor") cfg.optimizer.backtrack_factor = parse_double(key, value);
        else if (key == "optimizer.min_step") cfg.optimizer.min_step = parse_double(key, value);
        else if (key == "optimizer.grad_tol") cfg.optimizer.grad_tol = parse_double(key, value);
        else if (key == "optimizer.seed") cfg.optimizer.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "optimizer.init") {
            if (value == "zero") cfg.optimizer.init = OptimizerConfig::Init::kZero;
            else if (value == "random") cfg.optimizer.init = OptimizerConfig::Init::kRandom;
            else if (value == "los_matched") cfg.optimizer.init = OptimizerConfig::Init::kLosMatched;
            else throw ConfigError("optimizer.init: expected zero|random|los_matched, got '" + value + "'");
        }
        else if (key == "quadrature.abs_tol") cfg.quadrature.abs_tol = parse_double(key, value);
        else if (key == "quadrature.rel_tol") cfg.quadrature.rel_tol = parse_double(key, value);
        else if (key == "quadrature.max_subdivisions") cfg.quadrature.max_subdivisions = static_cast<int>(parse_int(key, value));
        else if (key == "quadrature.tail_cutoff_sigma") cfg.quadrature.tail_cutoff_sigma = parse_double(key, value);
        else if (key == "output.path") cfg.output_path = value;
        else if (key.rfind("phases.row_", 0) == 0) {
            const int row = static_cast<int>(parse_int(key, key.substr(std::string("phases.row_").size())));
            std::vector<double> vals;
            for (const std::string& item : split_list(value)) vals.push_back(parse_double(key, item));
            phase_rows[row] = std::move(vals);
        }
        else throw ConfigError("unknown config key '" + key + "' (line " + std::to_string(line_no) + ")");
    }

    if (!thickness_set) cfg.geometry.total_thickness_m = 5.0 * cfg.geometry.wavelength_m;
    if (!pitch_set) cfg.geometry.atom_pitch_m = 0.5 * cfg.geometry.wavelength_m;

    if (!phase_rows.empty()) {
        const int layers = static_cast<int>(phase_rows.size());
        const int atoms = static_cast<int>(phase_rows.begin()->second.size());
        RMatrix m(layers, atoms);
        for (int l = 0; l < layers; ++l) {
            auto it = phase_rows.find(l);
            if (it == phase_rows.end())
                throw ConfigError("phases: rows must be numbered 0.." + std::to_string(layers - 1));
            if (static_cast<int>(it->second.size()) != atoms)
                throw ConfigError("phases.row_" + std::to_string(l) + ": inconsistent length");
            for (int a = 0; a < atoms; ++a) m(l, a) = it->second[a];
        }
        cfg.initial_phases = std::move(m);
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void ExperimentConfig::validate() const {
    geometry.validate();
    fas.validate();
    quadrature.validate();
    optimizer.validate();
    if (!(user_distance_m > 0.0)) throw ConfigError("channel.user_distance_m: must be positive");
    if (!(rician_k >= 0.0)) throw ConfigError("channel.rician_k: must be >= 0");
    if (!(partition_mu_sq >= 0.0 && partition_mu_sq < 1.0))
        throw ConfigError("partition.mu_sq: must lie in [0, 1)");
    if (partition_max_block < 0) throw ConfigError("partition.max_block: must be >= 0");
    if (!(target_rate > 0.0)) throw ConfigError("budget.target_rate_bps_hz: must be positive");
    if (mc_trials < 1) throw ConfigError("mc.trials: must be >= 1");
    if (sweep_axis && sweep_values.empty())
        throw ConfigError("sweep.values: required when sweep.axis is set");
    for (double v : sweep_values) {
        if (sweep_axis == SweepAxis::kNumLayers && (v < 1.0 || v != std::floor(v)))
            throw ConfigError("sweep.values: num_layers values must be positive integers");
        if (sweep_axis == SweepAxis::kNumPorts && (v < 1.0 || v != std::floor(v)))
            throw ConfigError("sweep.values: num_ports values must be positive integers");
    }
    if (explicit_partition) explicit_partition->validate(fas.num_ports);
    if (initial_phases) {
        if (initial_phases->rows() != geometry.num_layers ||
            initial_phases->cols() != geometry.atoms_per_layer())
            throw ConfigError("phases: shape must be num_layers x (grid_rows*grid_cols)");
        if (!initial_phases->allFinite()) throw ConfigError("phases: non-finite entry");
    }
}

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "geometry.num_layers = " << cfg.geometry.num_layers << "\n";
    out << "geometry.grid_rows = " << cfg.geometry.grid_rows << "\n";
    out << "geometry.grid_cols = " << cfg.geometry.grid_cols << "\n";
    out << "geometry.wavelength_m = " << format_double(cfg.geometry.wavelength_m) << "\n";
    out << "geometry.total_thickness_m = " << format_double(cfg.geometry.total_thickness_m) << "\n";
    out << "geometry.atom_pitch_m = " << format_double(cfg.geometry.atom_pitch_m) << "\n";
    out << "channel.user_distance_m = " << format_double(cfg.user_distance_m) << "\n";
    out << "channel.user_height_drop_m = " << format_double(cfg.user_height_drop_m) << "\n";
    out << "channel.rician_k = " << format_double(cfg.rician_k) << "\n";
    out << "channel.path_loss_exponent = " << format_double(cfg.path_loss_exponent) << "\n";
    out << "channel.path_loss_ref_db = " << format_double(cfg.path_loss_ref_db) << "\n";
    out << "fas.num_ports = " << cfg.fas.num_ports << "\n";
    out << "fas.aperture_wavelengths = " << format_double(cfg.fas.aperture_wavelengths) << "\n";
    out << "partition.mu_sq = " << format_double(cfg.partition_mu_sq) << "\n";
    out << "partition.max_block = " << cfg.partition_max_block << "\n";
    if (cfg.explicit_partition) {
        out << "partition.blocks =";
        for (const auto& b : cfg.explicit_partition->blocks)
            out << " " << b.size << ":" << format_double(b.mu);
        out << "\n";
    }
    out << "budget.tx_power_dbm = " << format_double(cfg.tx_power_dbm) << "\n";
    out << "budget.noise_dbm = " << format_double(cfg.noise_dbm) << "\n";
    out << "budget.target_rate_bps_hz = " << format_double(cfg.target_rate) << "\n";
    if (cfg.sweep_axis) {
        out << "sweep.axis = " << sweep_axis_name(*cfg.sweep_axis) << "\n";
        out << "sweep.values =";
        for (double v : cfg.sweep_values) out << " " << format_double(v);
        out << "\n";
    }
    out << "benchmark.with_sim = " << (cfg.with_sim ? "true" : "false") << "\n";
    out << "benchmark.with_fas = " << (cfg.with_fas ? "true" : "false") << "\n";
    out << "mc.trials = " << cfg.mc_trials << "\n";
    out << "mc.seed = " << cfg.mc_seed << "\n";
    out << "mc.bdma = " << (cfg.mc_bdma ? "true" : "false") << "\n";
    out << "mc.jakes = " << (cfg.mc_jakes ? "true" : "false") << "\n";
    out << "optimizer.enabled = " << (cfg.optimize_phases ? "true" : "false") << "\n";
    out << "optimizer.max_iters = " << cfg.optimizer.max_iters << "\n";
    out << "optimizer.initial_step = " << format_double(cfg.optimizer.initial_step) << "\n";
    out << "optimizer.backtrack_factor = " << format_double(cfg.optimizer.backtrack_factor) << "\n";
    out << "optimizer.min_step = " << format_double(cfg.optimizer.min_step) << "\n";
    out << "optimizer.grad_tol = " << format_double(cfg.optimizer.grad_tol) << "\n";
    const char* init = cfg.optimizer.init == OptimizerConfig::Init::kZero       ? "zero"
                       : cfg.optimizer.init == OptimizerConfig::Init::kRandom   ? "random"
                                                                                : "los_matched";
    out << "optimizer.init = " << init << "\n";
    out << "optimizer.seed = " << cfg.optimizer.seed << "\n";
    out << "quadrature.abs_tol = " << format_double(cfg.quadrature.abs_tol) << "\n";
    out << "quadrature.rel_tol = " << format_double(cfg.quadrature.rel_tol) << "\n";
    out << "quadrature.max_subdivisions = " << cfg.quadrature.max_subdivisions << "\n";
    out << "quadrature.tail_cutoff_sigma = " << format_double(cfg.quadrature.tail_cutoff_sigma)
        << "\n";
    if (!cfg.output_path.empty()) out << "output.path = " << cfg.output_path << "\n";
    if (cfg.initial_phases) {
        for (Eigen::Index l = 0; l < cfg.initial_phases->rows(); ++l) {
            out << "phases.row_" << l << " =";
            for (Eigen::Index m = 0; m < cfg.initial_phases->cols(); ++m)
                out << " " << format_double((*cfg.initial_phases)(l, m));
            out << "\n";
        }
    }
    return out.str();
}

std::string render_phases(const PhaseProfile& phases) {
    std::ostringstream out;
    for (int l = 0; l < phases.num_layers(); ++l) {
        out << "phases.row_" << l << " =";
        for (int m = 0; m < phases.atoms_per_layer(); ++m)
            out << " " << format_double(phases.angles(l, m));
        out << "\n";
    }
    return out.str();
}

} // namespace simfas
