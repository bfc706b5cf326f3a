#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fedlora/adam.hpp"
#include "fedlora/datagen.hpp"
#include "fedlora/lora.hpp"
#include "fedlora/matrix.hpp"
#include "fedlora/rng.hpp"

namespace fedlora {

// Two-hidden-layer tanh classifier, briefly pretrained and then frozen.
// Both hidden matrices host a LoRA adapter; the classification head stays
// at its random initialization.
struct FrozenBackbone {
    Matrix W1;  // h x d
    Matrix W2;  // h x h
    Matrix Whead;  // C x h
    Matrix b1;  // 1 x h
    Matrix b2;  // 1 x h
    Matrix bhead;  // 1 x C

    std::size_t input_dim() const { return W1.cols; }
    std::size_t hidden_dim() const { return W1.rows; }
    std::size_t num_classes() const { return Whead.rows; }

    // Shapes of the adapted host matrices, in layer order.
    std::vector<std::pair<std::size_t, std::size_t>> adapted_shapes() const {
        return {{W1.rows, W1.cols}, {W2.rows, W2.cols}};
    }

    // FNV-1a over all frozen parameters; constant across an experiment.
    std::uint64_t param_hash() const;
};

struct PretrainParams {
    std::size_t steps = 60;
    std::size_t batch_size = 64;
    double lr = 1e-3;
};

// Random init, then a short full-weight Adam run on the held-out pool with
// the head frozen. The result is frozen for the rest of the experiment.
FrozenBackbone make_pretrained_backbone(const std::vector<Sample>& pool, std::size_t input_dim,
                                        std::size_t hidden_dim, std::size_t num_classes,
                                        const PretrainParams& params, Rng& rng);

struct AdaptedModel {
    const FrozenBackbone* backbone = nullptr;
    std::vector<LoraAdapter> adapters;  // one per adapted layer
};

// Fresh zero-delta adapters at the given rank for every adapted layer.
std::vector<LoraAdapter> init_adapters(const FrozenBackbone& backbone, std::size_t rank, Rng& rng);

// Batch logits; x is batch x input_dim.
Matrix forward(const AdaptedModel& model, const Matrix& x);

struct FactorGrads {
    double loss = 0.0;
    // (dB, dA) per adapted layer, mean-reduced over the batch.
    std::vector<std::pair<Matrix, Matrix>> per_adapter;
};

FactorGrads loss_and_grads(const AdaptedModel& model, const Matrix& x,
                           const std::vector<int>& labels);

struct TrainParams {
    std::size_t batch_size = 32;
    std::size_t epochs = 1;
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Minibatch Adam on the LoRA factors only. adam_states holds one (B, A)
// state pair per adapted layer and persists across calls.
void local_train(AdaptedModel& model, const std::vector<Sample>& train_set,
                 const std::vector<std::size_t>& shard_indices, const TrainParams& params,
                 std::vector<std::pair<AdamState, AdamState>>& adam_states, Rng& rng);

std::vector<std::pair<AdamState, AdamState>> make_adam_states(const AdaptedModel& model,
                                                              const TrainParams& params);

// Argmax accuracy; ties resolve to the lowest class index.
double evaluate(const AdaptedModel& model, const std::vector<Sample>& samples);

Matrix batch_features(const std::vector<Sample>& samples, std::size_t begin, std::size_t end);

}  // namespace fedlora
