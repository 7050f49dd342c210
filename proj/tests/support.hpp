#pragma once

#include "evoaaa/genome.hpp"
#include "evoaaa/neural.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace evoaaa::testing {

// Weights that make every variant's extra term visible next to the reconstruction loss.
inline VariantSettings amplified_variant_settings() {
    VariantSettings s;
    s.noise_stddev = 0.1;
    s.sparsity_target = 0.1;
    s.sparsity_weight = 0.2;
    s.contraction_weight = 0.05;
    s.correntropy_bandwidth = 0.5;
    s.kl_weight = 1.0;
    return s;
}

struct GradientReport {
    double max_relative_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t checked = 0;
    std::string worst;
};

// Relative error with a floor so that gradients that are zero up to rounding
// do not blow up the ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences of objective() for every parameter, with the noise held fixed.
inline GradientReport check_gradients(ModelParams params, const ArchitectureSpec& spec, const Matrix& batch,
                                      const NoiseDraw& noise, const VariantSettings& settings, double h = 1e-5,
                                      double floor = 1e-4) {
    const ForwardCache cache = forward(params, spec, batch, Mode::train, noise);
    const ModelParams grads = backward(params, spec, batch, cache, settings);
    auto f = [&](const ModelParams& p) {
        return objective(p, spec, batch, forward(p, spec, batch, Mode::train, noise), settings);
    };
    GradientReport report;
    auto pb = params.blocks();
    auto gb = grads.blocks();
    for (std::size_t b = 0; b < pb.size(); ++b) {
        for (std::size_t i = 0; i < pb[b].size(); ++i) {
            const double saved = pb[b][i];
            pb[b][i] = saved + h;
            const double up = f(params);
            pb[b][i] = saved - h;
            const double down = f(params);
            pb[b][i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double err = relative_error(gb[b][i], numeric, floor);
            ++report.checked;
            report.max_abs_error = std::max(report.max_abs_error, std::abs(gb[b][i] - numeric));
            if (err > report.max_relative_error) {
                report.max_relative_error = err;
                report.worst = "block " + std::to_string(b) + " index " + std::to_string(i) + ": analytic " +
                               std::to_string(gb[b][i]) + " numeric " + std::to_string(numeric);
            }
        }
    }
    return report;
}

inline bool has_kink(Activation a) {
    return a == Activation::relu || a == Activation::selu || a == Activation::elu;
}

// True when no pre-activation sits so close to a kink (relu/selu/elu at 0, MAE at
// target == output, BCE clamp edges) that a finite difference straddles it.
inline bool smooth_at(const ModelParams& params, const ArchitectureSpec& spec, const Matrix& batch,
                      const NoiseDraw& noise, double margin = 1e-3) {
    const ForwardCache cache = forward(params, spec, batch, Mode::train, noise);
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        if (!has_kink(params.layers[k].activation)) continue;
        if ((cache.pre[k].array().abs() < margin).any()) return false;
    }
    const Matrix& out = cache.output();
    if (spec.variant != AeVariant::robust) {
        if (spec.loss == LossKind::mae || spec.loss == LossKind::mape) {
            if (((out - batch).array().abs() < margin).any()) return false;
        }
        if (spec.loss == LossKind::bce) {
            if ((out.array().abs() < margin).any() || ((out.array() - 1.0).abs() < margin).any()) return false;
        }
    }
    if (spec.variant == AeVariant::sparse) {
        const Vector m = cache.post[params.coding_layer].colwise().mean().transpose();
        if ((m.array().abs() < margin).any() || ((m.array() - 1.0).abs() < margin).any()) return false;
    }
    return true;
}

// Random structurally valid spec with the given depth (hidden pairs) and feature count.
inline ArchitectureSpec random_spec(int features, int pairs, Rng& rng) {
    ArchitectureSpec s;
    s.feature_count = features;
    std::uniform_int_distribution<int> variant(1, kVariantOptions), act(1, kActivationOptions),
        out(1, kOutputActivationOptions), lossd(1, kLossOptions);
    s.variant = static_cast<AeVariant>(variant(rng));
    int upper = features;
    for (int i = 0; i < pairs; ++i) {
        std::uniform_int_distribution<int> u(1, upper);
        upper = u(rng);
        s.encoder_hidden_units.push_back(upper);
        s.encoder_activations.push_back(static_cast<Activation>(act(rng)));
        s.decoder_activations.push_back(static_cast<Activation>(act(rng)));
    }
    std::uniform_int_distribution<int> c(1, upper);
    s.coding_units = c(rng);
    s.coding_activation = static_cast<Activation>(act(rng));
    s.output_activation = output_activation_from_gene(out(rng));
    s.loss = static_cast<LossKind>(lossd(rng));
    return s;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

// Glorot weights plus random biases, so zero biases are not a special case.
inline ModelParams random_params(const ArchitectureSpec& spec, Rng& rng) {
    ModelParams p = init_params(spec, rng());
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (auto& l : p.layers) {
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = u(rng);
    }
    if (p.logvar_head) {
        for (Eigen::Index i = 0; i < p.logvar_head->bias.size(); ++i) p.logvar_head->bias(i) = u(rng);
    }
    return p;
}

} // namespace evoaaa::testing
