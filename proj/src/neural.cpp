#include "evoaaa/neural.hpp"

#include "evoaaa/errors.hpp"
#include "evoaaa/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evoaaa {

namespace {

constexpr double kSeluScale = 1.0507009873554805;
constexpr double kSeluAlpha = 1.6732632423543772;

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double sign(double x) {
    return static_cast<double>((x > 0.0) - (x < 0.0));
}

void check_lengths(std::span<const double> target, std::span<const double> output) {
    if (target.size() != output.size() || target.empty()) {
        throw ShapeError("loss needs equal, non-empty target and output lengths (got " +
                         std::to_string(target.size()) + " and " + std::to_string(output.size()) + ")");
    }
}

} // namespace

double activate(Activation id, double x) {
    switch (id) {
    case Activation::linear: return x;
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::selu: return x > 0.0 ? kSeluScale * x : kSeluScale * kSeluAlpha * std::expm1(x);
    case Activation::elu: return x > 0.0 ? x : std::expm1(x);
    case Activation::softplus: return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    case Activation::softsign: return x / (1.0 + std::abs(x));
    }
    return x;
}

double activation_derivative(Activation id, double x) {
    switch (id) {
    case Activation::linear: return 1.0;
    case Activation::sigmoid: {
        double s = sigmoid(x);
        return s * (1.0 - s);
    }
    case Activation::tanh: {
        double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::selu: return x > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(x);
    case Activation::elu: return x > 0.0 ? 1.0 : std::exp(x);
    case Activation::softplus: return sigmoid(x);
    case Activation::softsign: {
        double d = 1.0 + std::abs(x);
        return 1.0 / (d * d);
    }
    }
    return 1.0;
}

double activation_second_derivative(Activation id, double x) {
    switch (id) {
    case Activation::linear:
    case Activation::relu: return 0.0;
    case Activation::sigmoid: {
        double s = sigmoid(x);
        return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case Activation::tanh: {
        double t = std::tanh(x);
        return -2.0 * t * (1.0 - t * t);
    }
    case Activation::selu: return x > 0.0 ? 0.0 : kSeluScale * kSeluAlpha * std::exp(x);
    case Activation::elu: return x > 0.0 ? 0.0 : std::exp(x);
    case Activation::softplus: {
        double s = sigmoid(x);
        return s * (1.0 - s);
    }
    case Activation::softsign: {
        double d = 1.0 + std::abs(x);
        return -2.0 * sign(x) / (d * d * d);
    }
    }
    return 0.0;
}

double loss(LossKind id, std::span<const double> target, std::span<const double> output) {
    check_lengths(target, output);
    const auto n = static_cast<double>(target.size());
    double acc = 0.0;
    switch (id) {
    case LossKind::mse:
        for (std::size_t j = 0; j < target.size(); ++j) {
            double e = output[j] - target[j];
            acc += e * e;
        }
        return acc / n;
    case LossKind::mae:
        for (std::size_t j = 0; j < target.size(); ++j) acc += std::abs(output[j] - target[j]);
        return acc / n;
    case LossKind::mape:
        for (std::size_t j = 0; j < target.size(); ++j) {
            acc += std::abs(target[j] - output[j]) / std::max(std::abs(target[j]), kLossEpsilon);
        }
        return 100.0 * acc / n;
    case LossKind::bce:
        for (std::size_t j = 0; j < target.size(); ++j) {
            double y = std::clamp(output[j], kLossEpsilon, 1.0 - kLossEpsilon);
            acc += target[j] * std::log(y) + (1.0 - target[j]) * std::log(1.0 - y);
        }
        return -acc / n;
    case LossKind::cosine: {
        double dot = 0.0, tt = 0.0, yy = 0.0;
        for (std::size_t j = 0; j < target.size(); ++j) {
            dot += target[j] * output[j];
            tt += target[j] * target[j];
            yy += output[j] * output[j];
        }
        return -dot / (std::sqrt(std::max(tt, kLossEpsilon)) * std::sqrt(std::max(yy, kLossEpsilon)));
    }
    }
    return 0.0;
}

std::vector<double> loss_gradient(LossKind id, std::span<const double> target, std::span<const double> output) {
    check_lengths(target, output);
    const std::size_t n = target.size();
    const auto nd = static_cast<double>(n);
    std::vector<double> g(n, 0.0);
    switch (id) {
    case LossKind::mse:
        for (std::size_t j = 0; j < n; ++j) g[j] = 2.0 * (output[j] - target[j]) / nd;
        break;
    case LossKind::mae:
        for (std::size_t j = 0; j < n; ++j) g[j] = sign(output[j] - target[j]) / nd;
        break;
    case LossKind::mape:
        for (std::size_t j = 0; j < n; ++j) {
            g[j] = 100.0 * sign(output[j] - target[j]) / (std::max(std::abs(target[j]), kLossEpsilon) * nd);
        }
        break;
    case LossKind::bce:
        for (std::size_t j = 0; j < n; ++j) {
            double y = output[j];
            if (y <= kLossEpsilon || y >= 1.0 - kLossEpsilon) continue;
            g[j] = (-target[j] / y + (1.0 - target[j]) / (1.0 - y)) / nd;
        }
        break;
    case LossKind::cosine: {
        double dot = 0.0, tt = 0.0, yy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            dot += target[j] * output[j];
            tt += target[j] * target[j];
            yy += output[j] * output[j];
        }
        const double nt = std::sqrt(std::max(tt, kLossEpsilon));
        const double ny = std::sqrt(std::max(yy, kLossEpsilon));
        const bool norm_active = yy > kLossEpsilon;
        for (std::size_t j = 0; j < n; ++j) {
            g[j] = -target[j] / (nt * ny);
            if (norm_active) g[j] += dot * output[j] / (nt * ny * ny * ny);
        }
        break;
    }
    }
    return g;
}

std::vector<std::span<double>> ModelParams::blocks() {
    std::vector<std::span<double>> out;
    auto add = [&](DenseLayer& l) {
        out.emplace_back(l.weights.data(), static_cast<std::size_t>(l.weights.size()));
        out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    };
    for (auto& l : layers) add(l);
    if (logvar_head) add(*logvar_head);
    return out;
}

std::vector<std::span<const double>> ModelParams::blocks() const {
    std::vector<std::span<const double>> out;
    auto add = [&](const DenseLayer& l) {
        out.emplace_back(l.weights.data(), static_cast<std::size_t>(l.weights.size()));
        out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    };
    for (const auto& l : layers) add(l);
    if (logvar_head) add(*logvar_head);
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (auto b : blocks()) n += b.size();
    return n;
}

bool ModelParams::all_finite() const {
    for (auto b : blocks()) {
        for (double v : b) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z = *this;
    for (auto b : z.blocks()) std::fill(b.begin(), b.end(), 0.0);
    return z;
}

namespace {

DenseLayer glorot_layer(int in, int out, Activation act, Rng& rng) {
    DenseLayer l;
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    l.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = dist(rng);
    }
    l.bias = Vector::Zero(out);
    l.activation = act;
    return l;
}

std::vector<Activation> layer_activations(const ArchitectureSpec& spec) {
    std::vector<Activation> acts = spec.encoder_activations;
    acts.push_back(spec.coding_activation);
    acts.insert(acts.end(), spec.decoder_activations.begin(), spec.decoder_activations.end());
    acts.push_back(spec.output_activation);
    return acts;
}

void require_finite(const Matrix& m, std::size_t layer, const char* what) {
    if (!m.allFinite()) {
        throw NumericOverflow(layer, std::string("non-finite ") + what + " in layer " + std::to_string(layer));
    }
}

Matrix affine(const DenseLayer& l, const Matrix& in) {
    Matrix z = in * l.weights.transpose();
    z.rowwise() += l.bias.transpose();
    return z;
}

Matrix apply(Activation id, const Matrix& z) {
    return z.unaryExpr([id](double x) { return activate(id, x); });
}

Matrix derivative(Activation id, const Matrix& z) {
    return z.unaryExpr([id](double x) { return activation_derivative(id, x); });
}

bool is_variational(const ArchitectureSpec& spec) {
    return spec.variant == AeVariant::variational;
}

struct SparsityStats {
    Vector mean;    // mean coding activation per unit
    Vector active;  // 1 where the clamp is inactive
};

SparsityStats sparsity_stats(const Matrix& coding) {
    SparsityStats s;
    s.mean = coding.colwise().mean().transpose();
    s.active = Vector::Zero(s.mean.size());
    for (Eigen::Index j = 0; j < s.mean.size(); ++j) {
        double m = s.mean(j);
        if (m > kLossEpsilon && m < 1.0 - kLossEpsilon) {
            s.active(j) = 1.0;
        } else {
            s.mean(j) = std::clamp(m, kLossEpsilon, 1.0 - kLossEpsilon);
        }
    }
    return s;
}

// Jacobian of the coding activations with respect to the input for one sample, built
// forward through the encoder. partials[k] holds W_k * J_{k-1}; jacobians[k] = D_k * partials[k].
struct EncoderJacobian {
    std::vector<Matrix> partials;
    std::vector<Matrix> jacobians;
};

EncoderJacobian encoder_jacobian(const ModelParams& params, const ForwardCache& cache, Eigen::Index row) {
    EncoderJacobian j;
    const std::size_t last = params.coding_layer;
    Matrix current;
    for (std::size_t k = 0; k <= last; ++k) {
        const DenseLayer& l = params.layers[k];
        Matrix a = k == 0 ? l.weights : Matrix(l.weights * current);
        Vector d(a.rows());
        for (Eigen::Index u = 0; u < a.rows(); ++u) d(u) = activation_derivative(l.activation, cache.pre[k](row, u));
        current = d.asDiagonal() * a;
        j.partials.push_back(std::move(a));
        j.jacobians.push_back(current);
    }
    return j;
}

Matrix reconstruction_output_gradient(const ArchitectureSpec& spec, const Matrix& targets, const Matrix& out,
                                      const VariantSettings& settings) {
    const Eigen::Index rows = out.rows();
    const Eigen::Index cols = out.cols();
    const auto batch = static_cast<double>(rows);
    Matrix g(rows, cols);
    if (spec.variant == AeVariant::robust) {
        const double s2 = settings.correntropy_bandwidth * settings.correntropy_bandwidth;
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                double e = out(i, c) - targets(i, c);
                g(i, c) = std::exp(-e * e / (2.0 * s2)) * e / s2 / (batch * static_cast<double>(cols));
            }
        }
        return g;
    }
    Vector t(cols), y(cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        t = targets.row(i).transpose();
        y = out.row(i).transpose();
        std::vector<double> gi = loss_gradient(spec.loss, {t.data(), static_cast<std::size_t>(cols)},
                                               {y.data(), static_cast<std::size_t>(cols)});
        for (Eigen::Index c = 0; c < cols; ++c) g(i, c) = gi[static_cast<std::size_t>(c)] / batch;
    }
    return g;
}

} // namespace

ModelParams init_params(const ArchitectureSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<int> sizes = spec.layer_sizes();
    const std::vector<Activation> acts = layer_activations(spec);
    ModelParams p;
    p.coding_layer = static_cast<std::size_t>(spec.hidden_pairs());
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        p.layers.push_back(glorot_layer(sizes[k], sizes[k + 1], acts[k], rng));
        if (k == p.coding_layer && is_variational(spec)) {
            p.logvar_head = glorot_layer(sizes[k], sizes[k + 1], Activation::linear, rng);
        }
    }
    return p;
}

void TrainConfig::validate(std::size_t training_rows) const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1 || static_cast<std::size_t>(batch_size) > training_rows) {
        throw ConfigError("batch size must lie in [1, " + std::to_string(training_rows) + "]");
    }
}

NoiseDraw draw_noise(const ArchitectureSpec& spec, Eigen::Index rows, const VariantSettings& settings, Rng& rng) {
    NoiseDraw n;
    std::normal_distribution<double> normal(0.0, 1.0);
    if (spec.variant == AeVariant::denoising) {
        n.input.resize(rows, spec.feature_count);
        for (Eigen::Index i = 0; i < n.input.size(); ++i) n.input.data()[i] = settings.noise_stddev * normal(rng);
    }
    if (is_variational(spec)) {
        n.latent.resize(rows, spec.coding_units);
        for (Eigen::Index i = 0; i < n.latent.size(); ++i) n.latent.data()[i] = normal(rng);
    }
    return n;
}

ForwardCache forward(const ModelParams& params, const ArchitectureSpec& spec, const Matrix& batch, Mode mode,
                     const NoiseDraw& noise) {
    if (batch.cols() != spec.feature_count) {
        throw ShapeError("batch width " + std::to_string(batch.cols()) + " != feature count " +
                         std::to_string(spec.feature_count));
    }
    ForwardCache cache;
    const std::size_t n = params.layers.size();
    cache.inputs.reserve(n);
    cache.pre.reserve(n);
    cache.post.reserve(n);

    Matrix current = batch;
    if (mode == Mode::train && spec.variant == AeVariant::denoising && noise.input.size() > 0) {
        if (noise.input.rows() != batch.rows() || noise.input.cols() != batch.cols()) {
            throw ShapeError("input noise shape does not match the batch");
        }
        current += noise.input;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const DenseLayer& l = params.layers[k];
        cache.inputs.push_back(current);
        Matrix z = affine(l, current);
        require_finite(z, k, "pre-activation");
        Matrix h = apply(l.activation, z);
        require_finite(h, k, "activation");
        cache.pre.push_back(std::move(z));
        if (k == params.coding_layer && params.logvar_head) {
            cache.logvar = affine(*params.logvar_head, cache.inputs[k]);
            require_finite(cache.logvar, k, "log-variance");
            current = h;
            if (mode == Mode::train && noise.latent.size() > 0) {
                if (noise.latent.rows() != h.rows() || noise.latent.cols() != h.cols()) {
                    throw ShapeError("latent noise shape does not match the coding layer");
                }
                cache.latent_noise = noise.latent;
                current.array() += (0.5 * cache.logvar.array()).exp() * noise.latent.array();
                require_finite(current, k, "latent sample");
            }
        } else {
            current = h;
        }
        cache.post.push_back(std::move(h));
    }
    return cache;
}

double objective(const ModelParams& params, const ArchitectureSpec& spec, const Matrix& targets,
                 const ForwardCache& cache, const VariantSettings& settings) {
    const Matrix& out = cache.output();
    const Eigen::Index rows = out.rows();
    const Eigen::Index cols = out.cols();
    const auto batch = static_cast<double>(rows);
    double total = 0.0;

    if (spec.variant == AeVariant::robust) {
        const double s2 = settings.correntropy_bandwidth * settings.correntropy_bandwidth;
        const Matrix e = out - targets;
        total = -(e.array().square() / (-2.0 * s2)).exp().sum() / (batch * static_cast<double>(cols));
    } else {
        Vector t(cols), y(cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            t = targets.row(i).transpose();
            y = out.row(i).transpose();
            total += loss(spec.loss, {t.data(), static_cast<std::size_t>(cols)},
                          {y.data(), static_cast<std::size_t>(cols)});
        }
        total /= batch;
    }

    const Matrix& coding = cache.post[params.coding_layer];
    switch (spec.variant) {
    case AeVariant::sparse: {
        const double rho = settings.sparsity_target;
        SparsityStats s = sparsity_stats(coding);
        double kl = 0.0;
        for (Eigen::Index j = 0; j < s.mean.size(); ++j) {
            double m = s.mean(j);
            kl += rho * std::log(rho / m) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - m));
        }
        total += settings.sparsity_weight * kl;
        break;
    }
    case AeVariant::contractive: {
        double frob = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            frob += encoder_jacobian(params, cache, i).jacobians.back().squaredNorm();
        }
        total += settings.contraction_weight * frob / batch;
        break;
    }
    case AeVariant::variational: {
        const Matrix& lv = cache.logvar;
        double kl = -0.5 * (1.0 + lv.array() - coding.array().square() - lv.array().exp()).sum();
        total += settings.kl_weight * kl / batch;
        break;
    }
    default: break;
    }
    return total;
}

ModelParams backward(const ModelParams& params, const ArchitectureSpec& spec, const Matrix& targets,
                     const ForwardCache& cache, const VariantSettings& settings) {
    const std::size_t n = params.layers.size();
    if (cache.pre.size() != n || targets.rows() != cache.output().rows() || targets.cols() != cache.output().cols()) {
        throw ShapeError("backward: cache does not match parameters or targets");
    }
    const Eigen::Index rows = targets.rows();
    const auto batch = static_cast<double>(rows);
    const std::size_t coding = params.coding_layer;
    ModelParams grads = params.zeros_like();

    // Extra gradient terms injected at pre-activations (contractive penalty).
    std::vector<Matrix> extra_pre(n);
    if (spec.variant == AeVariant::contractive) {
        for (std::size_t k = 0; k <= coding; ++k) extra_pre[k] = Matrix::Zero(cache.pre[k].rows(), cache.pre[k].cols());
        const double scale = 2.0 * settings.contraction_weight / batch;
        for (Eigen::Index i = 0; i < rows; ++i) {
            EncoderJacobian jac = encoder_jacobian(params, cache, i);
            Matrix g = scale * jac.jacobians.back();
            for (std::size_t kk = coding + 1; kk-- > 0;) {
                const DenseLayer& l = params.layers[kk];
                const Matrix& a = jac.partials[kk];
                Vector r = (g.array() * a.array()).rowwise().sum();
                Vector d(a.rows());
                for (Eigen::Index u = 0; u < a.rows(); ++u) {
                    double z = cache.pre[kk](i, u);
                    extra_pre[kk](i, u) += r(u) * activation_second_derivative(l.activation, z);
                    d(u) = activation_derivative(l.activation, z);
                }
                Matrix da = d.asDiagonal() * g;
                if (kk == 0) {
                    grads.layers[kk].weights += da;
                } else {
                    grads.layers[kk].weights += da * jac.jacobians[kk - 1].transpose();
                    g = l.weights.transpose() * da;
                }
            }
        }
    }

    // Gradient with respect to the post-activation of the layer being processed.
    Matrix d_post = reconstruction_output_gradient(spec, targets, cache.output(), settings);
    for (std::size_t kk = n; kk-- > 0;) {
        const DenseLayer& l = params.layers[kk];
        if (kk == coding && spec.variant == AeVariant::sparse) {
            const double rho = settings.sparsity_target;
            SparsityStats s = sparsity_stats(cache.post[kk]);
            for (Eigen::Index j = 0; j < s.mean.size(); ++j) {
                if (s.active(j) == 0.0) continue;
                double m = s.mean(j);
                double dm = settings.sparsity_weight * (-rho / m + (1.0 - rho) / (1.0 - m));
                d_post.col(j).array() += dm / batch;
            }
        }
        Matrix d_input_extra;
        if (kk == coding && params.logvar_head) {
            // d_post currently holds the gradient with respect to the latent sample z.
            const Matrix& mu = cache.post[kk];
            const Matrix& lv = cache.logvar;
            const double w = settings.kl_weight / batch;
            Matrix d_lv = w * 0.5 * (lv.array().exp() - 1.0).matrix();
            if (cache.latent_noise.size() > 0) {
                d_lv.array() += d_post.array() * cache.latent_noise.array() * 0.5 * (0.5 * lv.array()).exp();
            }
            d_post += w * mu;
            grads.logvar_head->weights += d_lv.transpose() * cache.inputs[kk];
            grads.logvar_head->bias += d_lv.colwise().sum().transpose();
            d_input_extra = d_lv * params.logvar_head->weights;
        }
        Matrix delta = d_post.array() * derivative(l.activation, cache.pre[kk]).array();
        if (extra_pre[kk].size() > 0) delta += extra_pre[kk];
        grads.layers[kk].weights += delta.transpose() * cache.inputs[kk];
        grads.layers[kk].bias += delta.colwise().sum().transpose();
        if (kk > 0) {
            d_post = delta * l.weights;
            if (d_input_extra.size() > 0) d_post += d_input_extra;
        }
    }
    return grads;
}

OptimizerState make_optimizer(const ModelParams& params, const RmsPropSettings& settings) {
    return OptimizerState{params.zeros_like(), settings};
}

void rmsprop_step(ModelParams& params, const ModelParams& grads, OptimizerState& state) {
    auto p = params.blocks();
    auto g = grads.blocks();
    auto acc = state.mean_square.blocks();
    if (p.size() != g.size() || p.size() != acc.size()) {
        throw ShapeError("rmsprop_step: parameter, gradient and state shapes differ");
    }
    const RmsPropSettings& s = state.settings;
    for (std::size_t b = 0; b < p.size(); ++b) {
        if (p[b].size() != g[b].size() || p[b].size() != acc[b].size()) {
            throw ShapeError("rmsprop_step: tensor " + std::to_string(b) + " shape mismatch");
        }
        for (std::size_t i = 0; i < p[b].size(); ++i) {
            const double gi = g[b][i];
            acc[b][i] = s.decay * acc[b][i] + (1.0 - s.decay) * gi * gi;
            p[b][i] -= s.learning_rate * gi / (std::sqrt(acc[b][i]) + s.epsilon);
        }
    }
}

double reconstruction_mse(const ModelParams& params, const ArchitectureSpec& spec, const Matrix& data) {
    if (data.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
    ForwardCache cache = forward(params, spec, data, Mode::evaluate);
    return (cache.output() - data).array().square().mean();
}

TrainResult train(const ArchitectureSpec& spec, const Matrix& data, const TrainConfig& cfg, std::uint64_t seed) {
    const auto rows = static_cast<std::size_t>(data.rows());
    if (rows == 0) throw ConfigError("training matrix is empty");
    cfg.validate(rows);

    TrainResult result;
    result.params = init_params(spec, derive_seed(seed, 1));
    Rng rng(derive_seed(seed, 2));
    OptimizerState state = make_optimizer(result.params, cfg.optimizer);

    std::vector<Eigen::Index> order(rows);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
    Matrix batch;
    try {
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t start = 0; start < rows; start += batch_size) {
                const std::size_t count = std::min(batch_size, rows - start);
                batch.resize(static_cast<Eigen::Index>(count), data.cols());
                for (std::size_t r = 0; r < count; ++r) batch.row(static_cast<Eigen::Index>(r)) = data.row(order[start + r]);
                NoiseDraw noise = draw_noise(spec, batch.rows(), cfg.variant, rng);
                ForwardCache cache = forward(result.params, spec, batch, Mode::train, noise);
                ModelParams grads = backward(result.params, spec, batch, cache, cfg.variant);
                if (!grads.all_finite()) {
                    throw NumericOverflow(0, "non-finite gradient at step " + std::to_string(result.steps));
                }
                rmsprop_step(result.params, grads, state);
                ++result.steps;
            }
            if (cfg.record_epoch_mse) result.epoch_mse.push_back(reconstruction_mse(result.params, spec, data));
        }
        result.train_mse = reconstruction_mse(result.params, spec, data);
    } catch (const NumericOverflow& e) {
        result.failed = true;
        result.failure = e.what();
        return result;
    }
    if (!std::isfinite(result.train_mse)) {
        result.failed = true;
        result.failure = "non-finite training MSE";
    }
    return result;
}

} // namespace evoaaa
