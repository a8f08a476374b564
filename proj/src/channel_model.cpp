// SPDX-License-Identifier: Apache-2.0

#include "simfas/channel_model.hpp"

#include <cmath>

#include "simfas/numerics.hpp"

namespace simfas {

void BlockPartition::validate(int expected_ports) const {
    if (blocks.empty()) throw ConfigError("partition: no blocks");
    for (const auto& b : blocks) {
        if (b.size < 1) throw ConfigError("partition: block size must be >= 1");
        if (!(b.mu >= 0.0) || !(b.mu * b.mu < 1.0))
            throw ConfigError("partition: block mu^2 must lie in [0, 1)");
    }
    if (total_ports() != expected_ports)
        throw ConfigError("partition: block sizes must sum to the port count");
}

void ChannelStats::validate() const {
    if (!(path_loss_alpha > 0.0)) throw ConfigError("channel: path loss must be positive");
    if (!(rician_k >= 0.0)) throw ConfigError("channel: rician_k must be >= 0");
    for (Eigen::Index m = 0; m < los.size(); ++m)
        if (std::abs(std::abs(los[m]) - 1.0) > 1e-9)
            throw ConfigError("channel: LoS entries must be unit modulus");
    fas.validate();
    partition.validate(fas.num_ports);
}

double jakes_correlation(int port_index, const FasConfig& fas) {
    fas.validate();
    if (port_index < 0 || port_index >= fas.num_ports)
        throw std::domain_error("jakes_correlation: port index out of range");
    if (fas.num_ports == 1) return 1.0;
    return bessel_j0(kTwoPi * port_index * fas.aperture_wavelengths / (fas.num_ports - 1));
}

RMatrix build_sigma(const FasConfig& fas) {
    fas.validate();
    const int n = fas.num_ports;
    RVector row(n);
    for (int k = 0; k < n; ++k) row[k] = jakes_correlation(k, fas);
    RMatrix sigma(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sigma(i, j) = row[std::abs(i - j)];
    return sigma;
}

BlockPartition bdma_partition(const RMatrix& sigma, double mu_sq, int max_block) {
    if (!(mu_sq >= 0.0) || !(mu_sq < 1.0))
        throw std::domain_error("bdma_partition: mu_sq must lie in [0, 1)");
    if (max_block < 1) throw std::domain_error("bdma_partition: max_block must be >= 1");
    const int n = static_cast<int>(sigma.rows());
    if (sigma.cols() != n || n < 1) throw std::domain_error("bdma_partition: sigma must be square");

    const double mu = std::sqrt(mu_sq);
    BlockPartition partition;
    int head = 0;
    while (head < n) {
        int end = head + 1;
        while (end < n && end - head < max_block) {
            const double c = sigma(head, end);
            if (c * c < mu_sq) break;
            ++end;
        }
        partition.blocks.push_back({end - head, mu});
        head = end;
    }
    return partition;
}

CVector los_vector(const SimGeometry& geometry, double user_height_drop_m,
                   double user_distance_m) {
    geometry.validate();
    if (!(user_distance_m > 0.0)) throw ConfigError("los_vector: distance must be positive");
    if (!(user_distance_m > std::abs(user_height_drop_m)))
        throw ConfigError("los_vector: straight-line distance must exceed the height drop");

    const int out_layer = geometry.num_layers - 1;
    const double z_out = (geometry.num_layers >= 2) ? out_layer * geometry.layer_spacing_m() : 0.0;
    const double horizontal =
        std::sqrt(user_distance_m * user_distance_m - user_height_drop_m * user_height_drop_m);
    const Eigen::Vector3d user(0.0, -user_height_drop_m, z_out + horizontal);

    const int atoms = geometry.atoms_per_layer();
    CVector h(atoms);
    for (int m = 0; m < atoms; ++m) {
        const double d = (geometry.atom_position(out_layer, m) - user).norm();
        h[m] = std::polar(1.0, kTwoPi * d / geometry.wavelength_m);
    }
    return h;
}

double path_loss(double distance_m, double exponent, double ref_gain_db) {
    if (!(distance_m > 0.0)) throw std::domain_error("path_loss: distance must be positive");
    return db_to_linear(ref_gain_db) * std::pow(distance_m, -exponent);
}

BlockChannelDraw draw_block_channels(const ChannelStats& stats, Rng& rng) {
    stats.validate();
    const Eigen::Index m = stats.los.size();
    const double var = stats.nlos_entry_variance();
    const double los_amp = stats.los_amplitude();

    BlockChannelDraw draw;
    draw.shared.reserve(stats.partition.blocks.size());
    draw.innovations.reserve(stats.fas.num_ports);
    draw.ports.reserve(stats.fas.num_ports);

    for (const auto& block : stats.partition.blocks) {
        const CVector shared = rng.cgaussian_vector(m, var);
        draw.shared.push_back(shared);
        const double innovation_scale = std::sqrt(1.0 - block.mu * block.mu);
        for (int k = 0; k < block.size; ++k) {
            const CVector e = rng.cgaussian_vector(m, var);
            draw.innovations.push_back(e);
            draw.ports.push_back(los_amp * stats.los + block.mu * shared + innovation_scale * e);
        }
    }
    return draw;
}

RMatrix sigma_sqrt(const RMatrix& sigma) {
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(sigma);
    if (eig.info() != Eigen::Success) throw NumericError("sigma_sqrt: eigendecomposition failed");
    RVector lambda = eig.eigenvalues();
    const double scale = std::max(1.0, lambda.maxCoeff());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < -1e-10 * scale)
            throw NumericError("sigma_sqrt: correlation matrix is indefinite beyond tolerance");
        lambda[i] = std::max(lambda[i], 0.0);
    }
    return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<CVector> draw_full_jakes_channels(const ChannelStats& stats, const RMatrix& sigma,
                                              Rng& rng) {
    return draw_full_jakes_channels_pre(stats, sigma_sqrt(sigma).cast<Complex>(), rng);
}

std::vector<CVector> draw_full_jakes_channels_pre(const ChannelStats& stats,
                                                  const CMatrix& sqrt_sigma, Rng& rng) {
    stats.validate();
    const int n = stats.fas.num_ports;
    const Eigen::Index m = stats.los.size();
    if (sqrt_sigma.rows() != n || sqrt_sigma.cols() != n)
        throw ConfigError("draw_full_jakes_channels: correlation size does not match port count");

    const double nlos_amp = std::sqrt(stats.nlos_entry_variance());
    const double los_amp = stats.los_amplitude();

    std::vector<CVector> ports(n, CVector(m));
    // Correlate across ports independently per meta-atom.
    for (Eigen::Index atom = 0; atom < m; ++atom) {
        const CVector z = rng.cgaussian_vector(n, 1.0);
        const CVector w = sqrt_sigma * z;
        for (int k = 0; k < n; ++k) ports[k][atom] = los_amp * stats.los[atom] + nlos_amp * w[k];
    }
    return ports;
}

} // namespace simfas
