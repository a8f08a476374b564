// SPDX-License-Identifier: Apache-2.0

#include "simfas/sim_stack.hpp"

#include <cmath>

namespace simfas {

void SimGeometry::validate() const {
    if (num_layers < 1) throw ConfigError("geometry: num_layers must be >= 1");
    if (grid_rows < 1 || grid_cols < 1)
        throw ConfigError("geometry: grid_rows and grid_cols must be >= 1");
    if (!(wavelength_m > 0.0)) throw ConfigError("geometry: wavelength_m must be positive");
    if (!(atom_pitch_m > 0.0)) throw ConfigError("geometry: atom_pitch_m must be positive");
    if (num_layers >= 2 && !(layer_spacing_m() > 0.0))
        throw ConfigError("geometry: zero layer spacing with multiple layers");
}

Eigen::Vector3d SimGeometry::atom_position(int layer, int m) const {
    const int row = m / grid_cols;
    const int col = m % grid_cols;
    const double x = (col - 0.5 * (grid_cols - 1)) * atom_pitch_m;
    const double y = (row - 0.5 * (grid_rows - 1)) * atom_pitch_m;
    const double z = (num_layers >= 2) ? layer * layer_spacing_m() : 0.0;
    return {x, y, z};
}

double wrap_angle(double theta) {
    if (!std::isfinite(theta)) throw NumericError("wrap_angle: non-finite angle");
    double w = std::fmod(theta, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0; // fmod rounding can land exactly on 2pi
    return w;
}

Complex diffraction_coefficient(double distance_m, double cos_incidence, double atom_area_m2,
                                double wavelength_m) {
    const Complex j(0.0, 1.0);
    const Complex radial = 1.0 / (kTwoPi * distance_m) - j / wavelength_m;
    const Complex phase = std::exp(j * (kTwoPi * distance_m / wavelength_m));
    return (atom_area_m2 * cos_incidence / distance_m) * radial * phase;
}

CouplingSet build_coupling(const SimGeometry& geometry) {
    geometry.validate();
    const int atoms = geometry.atoms_per_layer();
    const double area = geometry.atom_pitch_m * geometry.atom_pitch_m;

    CouplingSet coupling;

    // Feed on the stack axis behind layer 0.
    const Eigen::Vector3d feed_pos(0.0, 0.0, -geometry.feed_distance_m());
    coupling.feed.resize(atoms);
    for (int m = 0; m < atoms; ++m) {
        const Eigen::Vector3d p = geometry.atom_position(0, m);
        const double d = (p - feed_pos).norm();
        const double cos_chi = (p.z() - feed_pos.z()) / d;
        coupling.feed[m] = diffraction_coefficient(d, cos_chi, area, geometry.wavelength_m);
    }

    if (geometry.num_layers >= 2) {
        // Equal spacing makes every inter-layer block identical; build the
        // layer 0 -> 1 block and replicate.
        CMatrix w(atoms, atoms);
        const double spacing = geometry.layer_spacing_m();
        for (int m = 0; m < atoms; ++m) {
            const Eigen::Vector3d dst = geometry.atom_position(1, m);
            for (int mp = 0; mp < atoms; ++mp) {
                const Eigen::Vector3d src = geometry.atom_position(0, mp);
                const double d = (dst - src).norm();
                const double cos_chi = spacing / d;
                w(m, mp) = diffraction_coefficient(d, cos_chi, area, geometry.wavelength_m);
            }
        }
        // Power-calibrated hop: unit RMS singular value, so a hop carries an
        // average mode at unit power while the kernel's relative structure
        // (which modes focus, which decay) is untouched.
        w *= std::sqrt(static_cast<double>(atoms)) / w.norm();
        coupling.inter_layer.assign(geometry.num_layers - 1, w);
    }
    return coupling;
}

namespace {

void check_shapes(const PhaseProfile& phases, const CouplingSet& coupling) {
    if (phases.num_layers() != coupling.num_layers() ||
        phases.atoms_per_layer() != coupling.atoms_per_layer())
        throw ConfigError("sim_stack: phase profile and coupling set shapes disagree");
}

// e^{j theta} applied entrywise to a layer's input.
CVector apply_layer(const PhaseProfile& phases, int layer, const CVector& input) {
    const int atoms = static_cast<int>(input.size());
    CVector out(atoms);
    for (int m = 0; m < atoms; ++m)
        out[m] = std::polar(1.0, phases.angles(layer, m)) * input[m];
    return out;
}

} // namespace

SimField forward(const PhaseProfile& phases, const CouplingSet& coupling) {
    check_shapes(phases, coupling);
    const int layers = phases.num_layers();

    SimField field;
    field.layer_inputs.reserve(layers);
    CVector u = coupling.feed;
    for (int l = 0; l < layers; ++l) {
        if (l > 0) u = coupling.inter_layer[l - 1] * u;
        field.layer_inputs.push_back(u);
        u = apply_layer(phases, l, u);
    }
    field.g = std::move(u);
    return field;
}

LayerFactors partial_fields(const PhaseProfile& phases, const CouplingSet& coupling, int layer) {
    check_shapes(phases, coupling);
    const int layers = phases.num_layers();
    const int atoms = phases.atoms_per_layer();
    if (layer < 0 || layer >= layers) throw std::domain_error("partial_fields: layer out of range");

    LayerFactors out;
    out.prefix = coupling.feed;
    for (int l = 1; l <= layer; ++l)
        out.prefix = coupling.inter_layer[l - 1] * apply_layer(phases, l - 1, out.prefix);

    out.suffix = CMatrix::Identity(atoms, atoms);
    for (int l = layers - 1; l > layer; --l) {
        CMatrix step = coupling.inter_layer[l - 1];
        for (int m = 0; m < atoms; ++m) step.row(m) *= std::polar(1.0, phases.angles(l, m));
        out.suffix = out.suffix * step;
    }
    return out;
}

CVector field_derivative(const PhaseProfile& phases, const CouplingSet& coupling, int layer,
                         int atom) {
    if (atom < 0 || atom >= phases.atoms_per_layer())
        throw std::domain_error("field_derivative: atom out of range");
    const LayerFactors f = partial_fields(phases, coupling, layer);
    const Complex j(0.0, 1.0);
    return j * std::polar(1.0, phases.angles(layer, atom)) * f.prefix[atom] * f.suffix.col(atom);
}

} // namespace simfas
