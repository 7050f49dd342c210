#pragma once

#include "evoaaa/genome.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evoaaa {

// Batches are row-per-sample.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

double activate(Activation id, double x);
double activation_derivative(Activation id, double x);
double activation_second_derivative(Activation id, double x);

// Guard used by BCE clamping, MAPE denominators and cosine norms.
inline constexpr double kLossEpsilon = 1e-7;

// Per-sample loss averaged over features (cosine: negative cosine similarity).
// Throws ShapeError on length mismatch.
double loss(LossKind id, std::span<const double> target, std::span<const double> output);
std::vector<double> loss_gradient(LossKind id, std::span<const double> target, std::span<const double> output);

struct DenseLayer {
    Matrix weights;  // out x in
    Vector bias;     // out
    Activation activation = Activation::linear;
};

// Layer order: encoder hidden layers, coding layer (the mean head for the variational
// variant), decoder hidden layers, output layer.
struct ModelParams {
    std::vector<DenseLayer> layers;
    std::size_t coding_layer = 0;
    std::optional<DenseLayer> logvar_head;

    // Every weight and bias tensor, in a fixed order.
    std::vector<std::span<double>> blocks();
    std::vector<std::span<const double>> blocks() const;
    std::size_t parameter_count() const;
    bool all_finite() const;
    // Zero-filled tensors of the same shapes.
    ModelParams zeros_like() const;
};

// Glorot-uniform weights, zero biases.
ModelParams init_params(const ArchitectureSpec& spec, std::uint64_t seed);

struct VariantSettings {
    double noise_stddev = 0.1;
    double sparsity_target = 0.1;
    double sparsity_weight = 0.01;
    double contraction_weight = 1e-4;
    double correntropy_bandwidth = 0.2;
    double kl_weight = 1.0;
};

struct RmsPropSettings {
    double learning_rate = 0.001;
    double decay = 0.9;
    double epsilon = 1e-7;
};

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    VariantSettings variant;
    RmsPropSettings optimizer;
    bool record_epoch_mse = false;

    void validate(std::size_t training_rows) const;
};

enum class Mode { train, evaluate };

// Random draws consumed by one training step. Empty matrices mean "unused".
struct NoiseDraw {
    Matrix input;   // added to the batch (denoising), already scaled
    Matrix latent;  // standard normal, one column per coding unit (variational)
};

NoiseDraw draw_noise(const ArchitectureSpec& spec, Eigen::Index rows, const VariantSettings& settings, Rng& rng);

struct ForwardCache {
    std::vector<Matrix> inputs;  // input fed to each layer
    std::vector<Matrix> pre;     // affine outputs
    std::vector<Matrix> post;    // activations
    Matrix logvar;               // variational only
    Matrix latent_noise;         // variational training only

    const Matrix& output() const { return post.back(); }
};

// Throws NumericOverflow naming the first layer that produced a non-finite value.
ForwardCache forward(const ModelParams& params, const ArchitectureSpec& spec, const Matrix& batch, Mode mode,
                     const NoiseDraw& noise = {});

// Total training objective for a finished forward pass: reconstruction term plus the
// variant penalty. `targets` is the clean batch.
double objective(const ModelParams& params, const ArchitectureSpec& spec, const Matrix& targets,
                 const ForwardCache& cache, const VariantSettings& settings);

// Gradients of objective() with respect to every parameter.
ModelParams backward(const ModelParams& params, const ArchitectureSpec& spec, const Matrix& targets,
                     const ForwardCache& cache, const VariantSettings& settings);

struct OptimizerState {
    ModelParams mean_square;
    RmsPropSettings settings;
};

OptimizerState make_optimizer(const ModelParams& params, const RmsPropSettings& settings = {});
void rmsprop_step(ModelParams& params, const ModelParams& grads, OptimizerState& state);

struct TrainResult {
    ModelParams params;
    double train_mse = 0.0;
    std::size_t steps = 0;
    std::vector<double> epoch_mse;
    bool failed = false;
    std::string failure;
};

// Plain MSE of evaluation-mode reconstructions.
double reconstruction_mse(const ModelParams& params, const ArchitectureSpec& spec, const Matrix& data);

// Non-finite values during training mark the result failed instead of throwing.
TrainResult train(const ArchitectureSpec& spec, const Matrix& data, const TrainConfig& cfg, std::uint64_t seed);

} // namespace evoaaa
