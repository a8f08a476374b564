// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "simfas/rng.hpp"
#include "simfas/sim_stack.hpp"
#include "simfas/types.hpp"

namespace simfas {

// Fluid-antenna receiver: N switchable ports over an aperture of
// aperture_wavelengths carrier wavelengths.
struct FasConfig {
    int num_ports = 50;
    double aperture_wavelengths = 5.0;

    void validate() const {
        if (num_ports < 1) throw ConfigError("fas: num_ports must be >= 1");
        if (!(aperture_wavelengths > 0.0))
            throw ConfigError("fas: aperture_wavelengths must be positive");
    }
};

// One equicorrelated block of the block-diagonal port-correlation model.
struct Block {
    int size;
    double mu; // intra-block correlation coefficient, mu^2 in [0, 1)
};

struct BlockPartition {
    std::vector<Block> blocks;

    int total_ports() const {
        int n = 0;
        for (const auto& b : blocks) n += b.size;
        return n;
    }

    void validate(int expected_ports) const;
};

// Long-term channel statistics between the stack output and the receiver.
struct ChannelStats {
    double path_loss_alpha = 1.0; // linear power gain
    double rician_k = 2.0;
    CVector los; // unit-modulus steering entries, common across ports
    FasConfig fas;
    BlockPartition partition;

    double nlos_entry_variance() const { return path_loss_alpha / (rician_k + 1.0); }
    double los_amplitude() const {
        return std::sqrt(path_loss_alpha * rician_k / (rician_k + 1.0));
    }

    void validate() const;
};

// One realization of the block channel model: the shared per-block
// component, the per-port innovations, and the assembled port channels.
struct BlockChannelDraw {
    std::vector<CVector> shared;      // one per block
    std::vector<CVector> innovations; // one per port, block order
    std::vector<CVector> ports;       // assembled h_k
};

// Jakes spatial correlation between port 0 and the given port:
// J0(2 pi k W / (N-1)). Returns 1 for a single-port receiver.
double jakes_correlation(int port_index, const FasConfig& fas);

// Full N x N symmetric Toeplitz port-correlation matrix from the Jakes row.
RMatrix build_sigma(const FasConfig& fas);

// Greedy consecutive-port partition: a block keeps absorbing the next port
// while the squared correlation between the block head and that port stays
// >= mu_sq, capped at max_block ports. Every block gets mu = sqrt(mu_sq).
BlockPartition bdma_partition(const RMatrix& sigma, double mu_sq, int max_block);

// Unit-modulus steering vector from the output-layer atoms to a user at
// straight-line range user_distance_m, user_height_drop_m below the stack
// axis.
CVector los_vector(const SimGeometry& geometry, double user_height_drop_m,
                   double user_distance_m);

// Log-distance path loss: 10^(ref_gain_db/10) * distance^(-exponent).
double path_loss(double distance_m, double exponent, double ref_gain_db);

BlockChannelDraw draw_block_channels(const ChannelStats& stats, Rng& rng);

// Symmetric PSD square root with eigenvalue clipping; eigenvalues below
// -1e-10 (relative) are rejected as indefinite.
RMatrix sigma_sqrt(const RMatrix& sigma);

// Port channels under the exact Toeplitz correlation model. The overload
// taking the pre-factored square root is the Monte Carlo hot path.
std::vector<CVector> draw_full_jakes_channels(const ChannelStats& stats, const RMatrix& sigma,
                                              Rng& rng);
std::vector<CVector> draw_full_jakes_channels_pre(const ChannelStats& stats,
                                                  const CMatrix& sqrt_sigma, Rng& rng);

} // namespace simfas
