// SPDX-License-Identifier: Apache-2.0

#include "simfas/outage.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace simfas {

namespace {

constexpr double kDegenerateMuSq = 1e-6;

void check_block(const Block& block) {
    if (block.size < 1) throw std::domain_error("outage: block size must be >= 1");
    if (!(block.mu >= 0.0) || !(block.mu * block.mu < 1.0))
        throw std::domain_error("outage: block mu^2 must lie in [0, 1)");
}

double clamp_probability(double v, const char* who) {
    if (!(v > -1e-8) || !(v < 1.0 + 1e-8))
        throw NumericError(std::string(who) + ": value escaped [0, 1]");
    return std::min(std::max(v, 0.0), 1.0);
}

// The block integrals are evaluated in the normalized envelope coordinate
// t = r / sigma~, which depends only on rho = |delta|/sigma~ and
// tau = gamma_th/sigma~^2. Every integrand is O(1) regardless of the
// absolute power scale, so the quadrature tolerances are meaningful; the
// physical-unit derivatives are recovered by exact scale factors.
struct NormalizedBlock {
    double rho;    // LoS gain over diffuse scale
    double tau;    // SNR threshold over diffuse power
    double mu;     // intra-block correlation
    double mu_sq;
    double c;      // sqrt(2 / (1 - mu^2))
    double b_th;   // c sqrt(tau), second Marcum argument
    int size;

    NormalizedBlock(const EffectiveStats& es, const Block& block) {
        check_block(block);
        const double sig = std::sqrt(es.sigma_tilde_sq);
        rho = es.delta_abs / sig;
        tau = es.gamma_th / es.sigma_tilde_sq;
        mu = block.mu;
        mu_sq = mu * mu;
        c = std::sqrt(2.0 / (1.0 - mu_sq));
        b_th = c * std::sqrt(tau);
        size = block.size;
    }

    // Rician density of the normalized shared envelope, scaled-Bessel form.
    double density(double t) const {
        const double diff = t - rho;
        return 2.0 * t / mu_sq * std::exp(-diff * diff / mu_sq) *
               bessel_i0_scaled(2.0 * t * rho / mu_sq);
    }

    double bracket(double t) const { return marcum_q1c(c * t, b_th); }

    // d bracket / d tau, all-positive (Marcum derivative identity).
    double bracket_dtau(double t) const {
        const double a = c * t;
        const double e = std::exp(-0.5 * (a - b_th) * (a - b_th));
        return 0.5 * c * c * e * bessel_i0_scaled(a * b_th);
    }

    // d bracket / d rho for the degenerate (point-mass) branch.
    double bracket_drho_at(double t) const {
        const double a = c * t;
        const double e = std::exp(-0.5 * (a - b_th) * (a - b_th));
        return -c * b_th * e * bessel_i1_scaled(a * b_th);
    }

    double weight_scale(const QuadratureSpec& spec) const {
        return mu + rho / spec.tail_cutoff_sigma;
    }

    std::vector<double> breaks() const {
        std::vector<double> b;
        for (double k : {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0}) b.push_back(rho + k * mu);
        return b;
    }
};

} // namespace

EffectiveStats effective_stats(const CVector& g, const ChannelStats& stats,
                               const LinkBudget& budget) {
    budget.validate();
    if (g.size() != stats.los.size())
        throw ConfigError("effective_stats: field and LoS dimensions disagree");
    const double norm_sq = g.squaredNorm();
    if (!(norm_sq > 0.0)) throw NumericError("effective_stats: degenerate zero field");

    EffectiveStats es;
    es.sigma_tilde_sq = stats.nlos_entry_variance() * norm_sq;
    es.delta_abs = stats.los_amplitude() * std::abs(stats.los.cwiseProduct(g).sum());
    es.gamma_th = budget.gamma_th();
    return es;
}

double delta_density(double r_b, const EffectiveStats& es, double mu_b) {
    if (!(mu_b > 0.0) || !(mu_b < 1.0))
        throw std::domain_error("delta_density: mu must lie in (0, 1)");
    if (r_b < 0.0) throw std::domain_error("delta_density: negative envelope");
    const double v = es.sigma_tilde_sq * mu_b * mu_b; // total block variance
    const double diff = r_b - es.delta_abs;
    // 2r/v exp(-(r^2+d^2)/v) I0(2rd/v) with the exponentials cancelled
    // against the scaled Bessel: exp(-(r-d)^2/v) e^{-x} I0(x).
    return 2.0 * r_b / v * std::exp(-diff * diff / v) *
           bessel_i0_scaled(2.0 * r_b * es.delta_abs / v);
}

double conditional_port_cdf(double r_k, double r_b, const EffectiveStats& es, double mu_b) {
    if (r_k < 0.0 || r_b < 0.0) throw std::domain_error("conditional_port_cdf: negative envelope");
    const double c = std::sqrt(2.0 / (es.sigma_tilde_sq * (1.0 - mu_b * mu_b)));
    return marcum_q1c(c * r_b, c * r_k);
}

double block_integral(const EffectiveStats& es, const Block& block, const QuadratureSpec& spec) {
    check_block(block);
    if (es.gamma_th == 0.0) return 0.0;

    const NormalizedBlock nb(es, block);
    if (nb.mu_sq < kDegenerateMuSq) {
        // Shared envelope collapses onto rho.
        return std::pow(nb.bracket(nb.rho), nb.size);
    }

    auto integrand = [&](double t) {
        return nb.density(t) * std::pow(nb.bracket(t), nb.size);
    };
    const double v =
        integrate_semi_infinite(integrand, nb.weight_scale(spec), spec, nb.breaks());
    return clamp_probability(v, "block_integral");
}

double outage_probability(const EffectiveStats& es, const BlockPartition& partition,
                          const QuadratureSpec& spec) {
    if (partition.blocks.empty()) throw std::domain_error("outage_probability: empty partition");
    if (es.gamma_th == 0.0) return 0.0;

    // log-domain product over distinct (size, mu) groups; duplicated blocks
    // share one quadrature.
    std::map<std::pair<int, double>, int> groups;
    for (const auto& b : partition.blocks) ++groups[{b.size, b.mu}];

    double log_p = 0.0;
    for (const auto& [key, count] : groups) {
        const double jb = block_integral(es, {key.first, key.second}, spec);
        if (jb == 0.0) return 0.0;
        log_p += count * std::log(jb);
    }
    return std::exp(log_p);
}

double joint_cdf(const RVector& r, const EffectiveStats& es, const BlockPartition& partition,
                 const QuadratureSpec& spec) {
    if (r.size() != partition.total_ports())
        throw std::domain_error("joint_cdf: threshold vector length must equal the port count");
    for (Eigen::Index k = 0; k < r.size(); ++k)
        if (r[k] < 0.0) throw std::domain_error("joint_cdf: negative threshold");

    const double sig = std::sqrt(es.sigma_tilde_sq);
    double log_p = 0.0;
    int port = 0;
    for (const auto& block : partition.blocks) {
        const auto thresholds = r.segment(port, block.size);
        port += block.size;
        if ((thresholds.array() == 0.0).any()) return 0.0;

        NormalizedBlock nb(es, block);
        double jb;
        if (nb.mu_sq < kDegenerateMuSq) {
            jb = 1.0;
            for (Eigen::Index k = 0; k < thresholds.size(); ++k)
                jb *= marcum_q1c(nb.c * nb.rho, nb.c * thresholds[k] / sig);
        } else {
            auto integrand = [&](double t) {
                double bracket = 1.0;
                for (Eigen::Index k = 0; k < thresholds.size(); ++k)
                    bracket *= marcum_q1c(nb.c * t, nb.c * thresholds[k] / sig);
                return nb.density(t) * bracket;
            };
            jb = clamp_probability(
                integrate_semi_infinite(integrand, nb.weight_scale(spec), spec, nb.breaks()),
                "joint_cdf");
        }
        if (jb == 0.0) return 0.0;
        log_p += std::log(jb);
    }
    return std::exp(log_p);
}

BlockIntegrals block_integral_derivatives(const EffectiveStats& es, const Block& block,
                                          const QuadratureSpec& spec) {
    check_block(block);
    if (es.gamma_th == 0.0) return {0.0, 0.0, 0.0};

    const NormalizedBlock nb(es, block);
    const int lb = nb.size;

    // Dimensionless sensitivities dJ/drho and dJ/dtau; the physical-unit
    // derivatives follow from rho = |delta|/sigma~, tau = gamma/sigma~^2:
    //   dJ/dsigma~^2 = -(rho/2 dJ/drho + tau dJ/dtau) / sigma~^2
    //   dJ/d|delta|  = dJ/drho / sigma~.
    double value, d_rho, d_tau;

    if (nb.mu_sq < kDegenerateMuSq) {
        const double bracket = nb.bracket(nb.rho);
        value = std::pow(bracket, lb);
        const double common = (bracket > 0.0) ? lb * std::pow(bracket, lb - 1) : 0.0;
        d_rho = common * nb.bracket_drho_at(nb.rho);
        d_tau = common * nb.bracket_dtau(nb.rho);
    } else {
        const double scale = nb.weight_scale(spec);
        const std::vector<double> breaks = nb.breaks();

        value = clamp_probability(
            integrate_semi_infinite(
                [&](double t) { return nb.density(t) * std::pow(nb.bracket(t), lb); }, scale,
                spec, breaks),
            "block_integral_derivatives");

        // The density's rho-derivative: the exponential contributes
        // -2 rho / mu^2, the Bessel term +2t/mu^2 I1/I0.
        d_rho = integrate_semi_infinite(
            [&](double t) {
                const double u = 2.0 * t * nb.rho / nb.mu_sq;
                const double ratio = bessel_i1_scaled(u) / bessel_i0_scaled(u);
                return nb.density(t) * (2.0 / nb.mu_sq) * (t * ratio - nb.rho) *
                       std::pow(nb.bracket(t), lb);
            },
            scale, spec, breaks);

        d_tau = integrate_semi_infinite(
            [&](double t) {
                const double br = nb.bracket(t);
                if (br <= 0.0) return 0.0;
                return nb.density(t) * lb * std::pow(br, lb - 1) * nb.bracket_dtau(t);
            },
            scale, spec, breaks);
    }

    BlockIntegrals out;
    out.value = value;
    out.d_sigma_sq = -(0.5 * nb.rho * d_rho + nb.tau * d_tau) / es.sigma_tilde_sq;
    out.d_delta = d_rho / std::sqrt(es.sigma_tilde_sq);
    return out;
}

} // namespace simfas
