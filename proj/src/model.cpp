#include "fedlora/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace fedlora {

namespace {

void add_row_bias(Matrix& m, const Matrix& bias) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) += bias.at(0, j);
    }
}

Matrix tanh_of(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data) v = std::tanh(v);
    return out;
}

Matrix column_sums(const Matrix& m) {
    Matrix out(1, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) out.at(0, j) += m.at(i, j);
    }
    return out;
}

struct ForwardTrace {
    Matrix w1_eff;
    Matrix w2_eff;
    Matrix h1;
    Matrix h2;
    Matrix logits;
};

ForwardTrace forward_trace(const FrozenBackbone& bb, const std::vector<LoraAdapter>& adapters,
                           const Matrix& x) {
    if (x.cols != bb.input_dim()) {
        throw std::invalid_argument("forward: input dim " + std::to_string(x.cols) +
                                    " does not match backbone input " +
                                    std::to_string(bb.input_dim()));
    }
    ForwardTrace t;
    t.w1_eff = bb.W1;
    t.w2_eff = bb.W2;
    if (!adapters.empty()) {
        axpy(1.0, delta(adapters[0]), t.w1_eff);
        axpy(1.0, delta(adapters[1]), t.w2_eff);
    }
    Matrix z1 = matmul(x, transpose(t.w1_eff));
    add_row_bias(z1, bb.b1);
    t.h1 = tanh_of(z1);
    Matrix z2 = matmul(t.h1, transpose(t.w2_eff));
    add_row_bias(z2, bb.b2);
    t.h2 = tanh_of(z2);
    t.logits = matmul(t.h2, transpose(bb.Whead));
    add_row_bias(t.logits, bb.bhead);
    return t;
}

struct BackwardOut {
    double loss = 0.0;
    Matrix dw1_eff;
    Matrix dw2_eff;
    Matrix db1;
    Matrix db2;
};

// Softmax cross-entropy, mean-reduced; gradients w.r.t. the effective
// hidden weights (frozen + delta) and hidden biases.
BackwardOut backward(const FrozenBackbone& bb, const ForwardTrace& t, const Matrix& x,
                     const std::vector<int>& labels) {
    const std::size_t batch = x.rows;
    if (batch == 0 || labels.size() != batch) {
        throw std::invalid_argument("loss_and_grads: batch and label sizes disagree");
    }
    BackwardOut out;
    Matrix dlogits = t.logits;  // overwritten with (softmax - onehot) / batch
    for (std::size_t i = 0; i < batch; ++i) {
        double max_logit = dlogits.at(i, 0);
        for (std::size_t c = 1; c < dlogits.cols; ++c) {
            max_logit = std::max(max_logit, dlogits.at(i, c));
        }
        double denom = 0.0;
        for (std::size_t c = 0; c < dlogits.cols; ++c) {
            denom += std::exp(dlogits.at(i, c) - max_logit);
        }
        const auto y = static_cast<std::size_t>(labels[i]);
        out.loss -= (t.logits.at(i, y) - max_logit - std::log(denom));
        for (std::size_t c = 0; c < dlogits.cols; ++c) {
            const double p = std::exp(dlogits.at(i, c) - max_logit) / denom;
            dlogits.at(i, c) = (p - (c == y ? 1.0 : 0.0)) / static_cast<double>(batch);
        }
    }
    out.loss /= static_cast<double>(batch);

    const Matrix dh2 = matmul(dlogits, bb.Whead);
    Matrix dz2 = dh2;
    for (std::size_t i = 0; i < dz2.data.size(); ++i) {
        dz2.data[i] *= 1.0 - t.h2.data[i] * t.h2.data[i];
    }
    out.dw2_eff = matmul(transpose(dz2), t.h1);
    out.db2 = column_sums(dz2);

    const Matrix dh1 = matmul(dz2, t.w2_eff);
    Matrix dz1 = dh1;
    for (std::size_t i = 0; i < dz1.data.size(); ++i) {
        dz1.data[i] *= 1.0 - t.h1.data[i] * t.h1.data[i];
    }
    out.dw1_eff = matmul(transpose(dz1), x);
    out.db1 = column_sums(dz1);
    return out;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = stddev * rng.normal();
    return m;
}

}  // namespace

std::uint64_t FrozenBackbone::param_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const Matrix& m) {
        for (double v : m.data) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xff;
                h *= 0x100000001b3ULL;
            }
        }
    };
    mix(W1);
    mix(W2);
    mix(Whead);
    mix(b1);
    mix(b2);
    mix(bhead);
    return h;
}

FrozenBackbone make_pretrained_backbone(const std::vector<Sample>& pool, std::size_t input_dim,
                                        std::size_t hidden_dim, std::size_t num_classes,
                                        const PretrainParams& params, Rng& rng) {
    FrozenBackbone bb;
    bb.W1 = gaussian_matrix(hidden_dim, input_dim, 1.0 / std::sqrt(static_cast<double>(input_dim)),
                            rng);
    bb.W2 = gaussian_matrix(hidden_dim, hidden_dim,
                            1.0 / std::sqrt(static_cast<double>(hidden_dim)), rng);
    bb.Whead = gaussian_matrix(num_classes, hidden_dim,
                               1.0 / std::sqrt(static_cast<double>(hidden_dim)), rng);
    bb.b1 = Matrix(1, hidden_dim);
    bb.b2 = Matrix(1, hidden_dim);
    bb.bhead = Matrix(1, num_classes);

    if (params.steps == 0 || pool.empty()) return bb;

    AdamState sW1 = AdamState::for_shape(hidden_dim, input_dim, params.lr);
    AdamState sW2 = AdamState::for_shape(hidden_dim, hidden_dim, params.lr);
    AdamState sb1 = AdamState::for_shape(1, hidden_dim, params.lr);
    AdamState sb2 = AdamState::for_shape(1, hidden_dim, params.lr);
    const std::vector<LoraAdapter> no_adapters;
    for (std::size_t step = 0; step < params.steps; ++step) {
        const std::size_t bsz = std::min(params.batch_size, pool.size());
        Matrix x(bsz, input_dim);
        std::vector<int> labels(bsz);
        for (std::size_t i = 0; i < bsz; ++i) {
            const std::size_t idx = rng.below(pool.size());
            std::copy(pool[idx].x.begin(), pool[idx].x.end(), &x.at(i, 0));
            labels[i] = pool[idx].label;
        }
        const ForwardTrace t = forward_trace(bb, no_adapters, x);
        const BackwardOut g = backward(bb, t, x, labels);
        bb.W1 = adam_step(bb.W1, g.dw1_eff, sW1);
        bb.W2 = adam_step(bb.W2, g.dw2_eff, sW2);
        bb.b1 = adam_step(bb.b1, g.db1, sb1);
        bb.b2 = adam_step(bb.b2, g.db2, sb2);
        // Whead and bhead stay at their random initialization.
    }
    return bb;
}

std::vector<LoraAdapter> init_adapters(const FrozenBackbone& backbone, std::size_t rank, Rng& rng) {
    std::vector<LoraAdapter> out;
    for (auto [m, n] : backbone.adapted_shapes()) {
        LoraConfig cfg{m, n, rank, 1};
        out.push_back(init_adapter(cfg, rng));
    }
    return out;
}

Matrix forward(const AdaptedModel& model, const Matrix& x) {
    if (!model.adapters.empty() && model.adapters.size() != 2) {
        throw std::invalid_argument("forward: expected one adapter per hidden layer");
    }
    return forward_trace(*model.backbone, model.adapters, x).logits;
}

FactorGrads loss_and_grads(const AdaptedModel& model, const Matrix& x,
                           const std::vector<int>& labels) {
    const ForwardTrace t = forward_trace(*model.backbone, model.adapters, x);
    const BackwardOut g = backward(*model.backbone, t, x, labels);
    FactorGrads out;
    out.loss = g.loss;
    const Matrix* dw_eff[2] = {&g.dw1_eff, &g.dw2_eff};
    for (std::size_t l = 0; l < model.adapters.size(); ++l) {
        const LoraAdapter& ad = model.adapters[l];
        // dB = dW A^T, dA = B^T dW; only the factors are trainable.
        out.per_adapter.emplace_back(matmul(*dw_eff[l], transpose(ad.A)),
                                     matmul(transpose(ad.B), *dw_eff[l]));
    }
    return out;
}

std::vector<std::pair<AdamState, AdamState>> make_adam_states(const AdaptedModel& model,
                                                              const TrainParams& params) {
    std::vector<std::pair<AdamState, AdamState>> states;
    for (const LoraAdapter& ad : model.adapters) {
        AdamState sb = AdamState::for_shape(ad.B.rows, ad.B.cols, params.lr);
        AdamState sa = AdamState::for_shape(ad.A.rows, ad.A.cols, params.lr);
        sb.beta1 = sa.beta1 = params.beta1;
        sb.beta2 = sa.beta2 = params.beta2;
        sb.eps = sa.eps = params.eps;
        states.emplace_back(std::move(sb), std::move(sa));
    }
    return states;
}

void local_train(AdaptedModel& model, const std::vector<Sample>& train_set,
                 const std::vector<std::size_t>& shard_indices, const TrainParams& params,
                 std::vector<std::pair<AdamState, AdamState>>& adam_states, Rng& rng) {
    if (shard_indices.empty()) throw std::invalid_argument("local_train: empty shard");
    if (adam_states.size() != model.adapters.size()) {
        throw std::invalid_argument("local_train: one Adam state pair per adapter required");
    }
    std::vector<std::size_t> order = shard_indices;
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t begin = 0; begin < order.size(); begin += params.batch_size) {
            const std::size_t end = std::min(begin + params.batch_size, order.size());
            Matrix x(end - begin, model.backbone->input_dim());
            std::vector<int> labels(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                const Sample& s = train_set[order[i]];
                std::copy(s.x.begin(), s.x.end(), &x.at(i - begin, 0));
                labels[i - begin] = s.label;
            }
            const FactorGrads grads = loss_and_grads(model, x, labels);
            for (std::size_t l = 0; l < model.adapters.size(); ++l) {
                model.adapters[l].B =
                    adam_step(model.adapters[l].B, grads.per_adapter[l].first, adam_states[l].first);
                model.adapters[l].A = adam_step(model.adapters[l].A, grads.per_adapter[l].second,
                                                adam_states[l].second);
            }
        }
    }
}

Matrix batch_features(const std::vector<Sample>& samples, std::size_t begin, std::size_t end) {
    Matrix x(end - begin, samples[begin].x.size());
    for (std::size_t i = begin; i < end; ++i) {
        std::copy(samples[i].x.begin(), samples[i].x.end(), &x.at(i - begin, 0));
    }
    return x;
}

double evaluate(const AdaptedModel& model, const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty split");
    const std::size_t chunk = 256;
    const auto n_chunks = static_cast<std::int64_t>((samples.size() + chunk - 1) / chunk);
    std::size_t correct = 0;
#pragma omp parallel for schedule(static) reduction(+ : correct)
    for (std::int64_t c = 0; c < n_chunks; ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * chunk;
        const std::size_t end = std::min(begin + chunk, samples.size());
        const Matrix logits = forward(model, batch_features(samples, begin, end));
        for (std::size_t i = 0; i < logits.rows; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < logits.cols; ++j) {
                if (logits.at(i, j) > logits.at(i, best)) best = j;
            }
            if (best == static_cast<std::size_t>(samples[begin + i].label)) correct += 1;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

}  // namespace fedlora
