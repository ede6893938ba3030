#include "feddc/learners.hpp"

#include <cmath>
#include <string>

namespace feddc {

namespace {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Stable logistic loss for labels in {0,1}: softplus(z) - y*z.
inline double logistic_loss(double z, int y) {
    return std::max(z, 0.0) - z * static_cast<double>(y) +
           std::log1p(std::exp(-std::abs(z)));
}

// Dot product with four accumulators; fixed summation order, decent ILP.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

// Layer sizes of the full network including input and the single output unit.
std::vector<std::size_t> full_sizes(const ModelShape& shape) {
    std::vector<std::size_t> sizes;
    sizes.push_back(shape.input_dim);
    for (auto h : shape.hidden_sizes) sizes.push_back(h);
    sizes.push_back(1);
    return sizes;
}

// Scratch buffers for one forward/backward pass, reused across the batch.
struct MlpWorkspace {
    std::vector<std::vector<double>> act;   // act[0] unused; act[l] post-ReLU
    std::vector<std::vector<double>> delta; // dLoss/dz per layer

    explicit MlpWorkspace(const std::vector<std::size_t>& sizes) {
        act.resize(sizes.size());
        delta.resize(sizes.size());
        for (std::size_t l = 1; l < sizes.size(); ++l) {
            act[l].resize(sizes[l]);
            delta[l].resize(sizes[l]);
        }
    }
};

// Forward pass; returns the pre-sigmoid output. Hidden activations are
// stored in the workspace for backprop and buffer reuse.
double mlp_forward(const ModelShape& shape, const double* params,
                   const double* input, MlpWorkspace& ws) {
    const auto sizes = full_sizes(shape);
    const std::size_t n_layers = sizes.size() - 1;
    const double* prev = input;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t n_in = sizes[l];
        const std::size_t n_out = sizes[l + 1];
        const double* w = params + offset;
        const double* b = w + n_in * n_out;
        double* out = ws.act[l + 1].data();
        const bool is_output = (l + 1 == n_layers);
        for (std::size_t r = 0; r < n_out; ++r) {
            double z = dot(w + r * n_in, prev, n_in) + b[r];
            out[r] = is_output ? z : (z > 0.0 ? z : 0.0);
        }
        prev = out;
        offset += n_in * n_out + n_out;
    }
    return ws.act[n_layers][0];
}

// Backward pass for one sample; accumulates raw (unaveraged) gradients.
void mlp_backward(const ModelShape& shape, const double* params,
                  const double* input, double out_delta, MlpWorkspace& ws,
                  double* grad) {
    const auto sizes = full_sizes(shape);
    const std::size_t n_layers = sizes.size() - 1;

    // Parameter offsets per layer.
    std::vector<std::size_t> offsets(n_layers);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
        offsets[l] = offset;
        offset += sizes[l] * sizes[l + 1] + sizes[l + 1];
    }

    ws.delta[n_layers][0] = out_delta;
    for (std::size_t l = n_layers; l-- > 0;) {
        const std::size_t n_in = sizes[l];
        const std::size_t n_out = sizes[l + 1];
        const double* w = params + offsets[l];
        double* gw = grad + offsets[l];
        double* gb = gw + n_in * n_out;
        const double* below =
            (l == 0) ? input : ws.act[l].data(); // post-ReLU activations
        const double* d = ws.delta[l + 1].data();

        for (std::size_t r = 0; r < n_out; ++r) {
            const double dr = d[r];
            double* gw_row = gw + r * n_in;
            for (std::size_t i = 0; i < n_in; ++i) gw_row[i] += dr * below[i];
            gb[r] += dr;
        }
        if (l > 0) {
            double* dprev = ws.delta[l].data();
            for (std::size_t i = 0; i < n_in; ++i) dprev[i] = 0.0;
            for (std::size_t r = 0; r < n_out; ++r) {
                const double dr = d[r];
                const double* w_row = w + r * n_in;
                for (std::size_t i = 0; i < n_in; ++i)
                    dprev[i] += dr * w_row[i];
            }
            // ReLU derivative: pass gradient only where the unit fired.
            for (std::size_t i = 0; i < n_in; ++i)
                if (below[i] <= 0.0) dprev[i] = 0.0;
        }
    }
}

} // namespace

void LearnerSpec::validate() const {
    require_config(learning_rate >= 0.0,
                   "learner: learning_rate must be nonnegative");
    require_config(batch_size >= 1, "learner: batch_size must be >= 1");
    require_config(prox_mu >= 0.0, "learner: prox_mu must be nonnegative");
    if (family == LearnerFamily::mlp)
        require_config(!hidden_sizes.empty(),
                       "learner: mlp needs at least one hidden layer");
    for (auto h : hidden_sizes)
        require_config(h >= 1, "learner: hidden layer size must be >= 1");
    if (decay_every > 0)
        require_config(decay_factor > 0.0 && decay_factor <= 1.0,
                       "learner: decay_factor must be in (0,1]");
}

double LearnerSpec::effective_learning_rate(std::size_t round) const {
    if (decay_every == 0) return learning_rate;
    return learning_rate *
           std::pow(decay_factor, static_cast<double>(round / decay_every));
}

std::size_t ModelShape::param_count() const {
    if (family == LearnerFamily::linear)
        return input_dim + (linear_bias ? 1 : 0);
    std::size_t count = 0;
    std::size_t prev = input_dim;
    for (auto h : hidden_sizes) {
        count += prev * h + h;
        prev = h;
    }
    count += prev + 1; // output unit
    return count;
}

Model init_model(const LearnerSpec& spec, std::size_t input_dim, Rng& rng) {
    spec.validate();
    require(input_dim >= 1, "init_model: input_dim must be >= 1");

    Model model;
    model.shape = ModelShape{spec.family, input_dim, spec.hidden_sizes,
                             spec.linear_bias};
    model.params = ParamVector(model.shape.param_count());

    if (spec.family == LearnerFamily::mlp) {
        // Fan-in scaled uniform weights, zero biases.
        const auto sizes = full_sizes(model.shape);
        double* p = model.params.data();
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const std::size_t n_in = sizes[l];
            const std::size_t n_out = sizes[l + 1];
            const double bound = std::sqrt(6.0 / static_cast<double>(n_in));
            for (std::size_t i = 0; i < n_in * n_out; ++i)
                *p++ = rng.uniform(-bound, bound);
            p += n_out; // biases stay zero
        }
    }
    return model;
}

namespace {

double decision_value_impl(const Model& model, std::span<const double> features,
                           MlpWorkspace* ws) {
    require(features.size() == model.shape.input_dim,
            "predict: feature dim " + std::to_string(features.size()) +
                " does not match model input dim " +
                std::to_string(model.shape.input_dim));
    const double* p = model.params.data();
    if (model.shape.family == LearnerFamily::linear) {
        double z = dot(p, features.data(), features.size());
        if (model.shape.linear_bias) z += p[features.size()];
        return z;
    }
    if (ws) return mlp_forward(model.shape, p, features.data(), *ws);
    MlpWorkspace local(full_sizes(model.shape));
    return mlp_forward(model.shape, p, features.data(), local);
}

} // namespace

double decision_value(const Model& model, std::span<const double> features) {
    return decision_value_impl(model, features, nullptr);
}

Prediction predict(const Model& model, std::span<const double> features) {
    const double score = sigmoid(decision_value(model, features));
    return Prediction{score >= 0.5 ? 1 : 0, score};
}

ParamVector gradient(const Model& model, std::span<const SampleRef> batch,
                     const LearnerSpec& spec, const GlobalAnchor* anchor) {
    require(!batch.empty(), "gradient: empty batch");
    const std::size_t dim = model.params.dim();
    ParamVector grad(dim);
    const double* p = model.params.data();
    double* g = grad.data();

    if (model.shape.family == LearnerFamily::linear) {
        const std::size_t n_feat = model.shape.input_dim;
        for (const Sample* s : batch) {
            require(s->features.size() == n_feat,
                    "gradient: sample dim mismatch");
            double z = dot(p, s->features.data(), n_feat);
            if (model.shape.linear_bias) z += p[n_feat];
            const double err = sigmoid(z) - static_cast<double>(s->label);
            const double* x = s->features.data();
            for (std::size_t i = 0; i < n_feat; ++i) g[i] += err * x[i];
            if (model.shape.linear_bias) g[n_feat] += err;
        }
    } else {
        MlpWorkspace ws(full_sizes(model.shape));
        for (const Sample* s : batch) {
            require(s->features.size() == model.shape.input_dim,
                    "gradient: sample dim mismatch");
            const double z =
                mlp_forward(model.shape, p, s->features.data(), ws);
            const double err = sigmoid(z) - static_cast<double>(s->label);
            mlp_backward(model.shape, p, s->features.data(), err, ws, g);
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < dim; ++i) g[i] *= inv;

    if (anchor != nullptr && spec.prox_mu > 0.0) {
        require(anchor->params.dim() == dim,
                "gradient: anchor dim mismatch");
        const double* a = anchor->params.data();
        for (std::size_t i = 0; i < dim; ++i)
            g[i] += spec.prox_mu * (p[i] - a[i]);
    }
    require(grad.all_finite(), "gradient: non-finite gradient");
    return grad;
}

ParamVector gradient(const Model& model, std::span<const Sample> batch,
                     const LearnerSpec& spec, const GlobalAnchor* anchor) {
    std::vector<SampleRef> refs;
    refs.reserve(batch.size());
    for (const Sample& s : batch) refs.push_back(&s);
    return gradient(model, std::span<const SampleRef>(refs), spec, anchor);
}

Model local_step(const Model& model, const Dataset& shard,
                 const LearnerSpec& spec, const GlobalAnchor* anchor,
                 Rng& rng) {
    require(!shard.empty(), "local_step: empty shard");
    const std::size_t k = std::min<std::size_t>(spec.batch_size, shard.size());
    const auto picks = rng.sample_without_replacement(shard.size(), k);
    std::vector<SampleRef> batch;
    batch.reserve(k);
    for (auto i : picks) batch.push_back(&shard.samples[i]);

    const ParamVector g =
        gradient(model, std::span<const SampleRef>(batch), spec, anchor);
    Model next = model;
    axpy(-spec.learning_rate, g, next.params);
    require(next.params.all_finite(), "local_step: parameters diverged");
    return next;
}

double empirical_risk(const Model& model, const Dataset& data, Loss loss) {
    require(!data.empty(), "empirical_risk: empty dataset");
    MlpWorkspace ws(full_sizes(model.shape));
    double acc = 0.0;
    for (const auto& s : data.samples) {
        const double z = decision_value_impl(model, s.features, &ws);
        if (loss == Loss::logistic) {
            acc += logistic_loss(z, s.label);
        } else {
            const int predicted = sigmoid(z) >= 0.5 ? 1 : 0;
            acc += (predicted != s.label) ? 1.0 : 0.0;
        }
    }
    return acc / static_cast<double>(data.size());
}

} // namespace feddc
