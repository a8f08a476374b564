// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "simfas/types.hpp"

namespace simfas {

// Physical layout of the L-layer, M-atom stack. Atoms of each layer form a
// centered rectangular grid in the x-y plane; layers are stacked along +z
// with equal spacing total_thickness_m / num_layers.
struct SimGeometry {
    int num_layers = 3;
    int grid_rows = 4;
    int grid_cols = 4;
    double wavelength_m = 0.1;
    double total_thickness_m = 0.5; // 5 wavelengths
    double atom_pitch_m = 0.05;     // wavelength / 2

    int atoms_per_layer() const { return grid_rows * grid_cols; }

    // Equal spacing between adjacent layers (meaningless for L = 1).
    double layer_spacing_m() const { return total_thickness_m / num_layers; }

    // The single RF feed sits on the stack axis behind layer 0, one layer
    // spacing away (half a wavelength for a single-layer stack).
    double feed_distance_m() const {
        return num_layers >= 2 ? layer_spacing_m() : 0.5 * wavelength_m;
    }

    // Atom m of the given layer, row-major over the grid, grid centered on
    // the stack axis.
    Eigen::Vector3d atom_position(int layer, int m) const;

    void validate() const;

    static SimGeometry make(int num_layers, int grid_rows, int grid_cols, double wavelength_m) {
        SimGeometry g;
        g.num_layers = num_layers;
        g.grid_rows = grid_rows;
        g.grid_cols = grid_cols;
        g.wavelength_m = wavelength_m;
        g.total_thickness_m = 5.0 * wavelength_m;
        g.atom_pitch_m = 0.5 * wavelength_m;
        return g;
    }
};

// Trainable phase angles, one per atom per layer, each wrapped into [0, 2pi).
struct PhaseProfile {
    RMatrix angles; // L x M

    int num_layers() const { return static_cast<int>(angles.rows()); }
    int atoms_per_layer() const { return static_cast<int>(angles.cols()); }

    static PhaseProfile zeros(int num_layers, int atoms_per_layer) {
        return PhaseProfile{RMatrix::Zero(num_layers, atoms_per_layer)};
    }
};

// Wraps a finite angle into [0, 2pi).
double wrap_angle(double theta);

// Deterministic propagation operators of a geometry: the inter-layer
// diffraction matrices (layer i-1 -> layer i, for i = 1..L-1) and the
// feed-to-layer-0 excitation vector.
struct CouplingSet {
    std::vector<CMatrix> inter_layer;
    CVector feed;

    int atoms_per_layer() const { return static_cast<int>(feed.size()); }
    int num_layers() const { return static_cast<int>(inter_layer.size()) + 1; }
};

// Transmit-side wave-domain vector together with the per-layer inputs
// u_l cached by forward() (u_0 is the feed vector).
struct SimField {
    CVector g;
    std::vector<CVector> layer_inputs;
};

// Rayleigh-Sommerfeld coupling coefficient between two points a distance
// apart, with cos_incidence the angle cosine to the destination layer
// normal and atom_area the radiating patch area.
Complex diffraction_coefficient(double distance_m, double cos_incidence, double atom_area_m2,
                                double wavelength_m);

CouplingSet build_coupling(const SimGeometry& geometry);

// g = (prod_{l=L-1..1} Theta_l W_l) Theta_0 w_feed, evaluated layer by layer.
SimField forward(const PhaseProfile& phases, const CouplingSet& coupling);

// Factorization g = D_l Theta_l u_l: the input u_l to layer l and the
// propagation D_l from layer l's output to free space (identity for the
// last layer).
struct LayerFactors {
    CVector prefix; // u_l
    CMatrix suffix; // D_l
};
LayerFactors partial_fields(const PhaseProfile& phases, const CouplingSet& coupling, int layer);

// d g / d theta_{l,m} = j e^{j theta} u_{l,m} d_{l,m}.
CVector field_derivative(const PhaseProfile& phases, const CouplingSet& coupling, int layer,
                         int atom);

} // namespace simfas
