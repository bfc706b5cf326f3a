#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedlora/aggregation.hpp"
#include "fedlora/datagen.hpp"
#include "fedlora/model.hpp"

namespace fedlora {

enum class RankPolicy { Oracle, TopKValidation, AllLow, AllHigh };

std::string to_string(RankPolicy p);
RankPolicy rank_policy_from_string(const std::string& name);

struct FederationConfig {
    std::size_t num_clients = 100;
    double participation_fraction = 0.1;
    std::size_t rounds = 30;
    std::size_t r_low = 5;
    std::size_t r_high = 20;
    double high_rank_fraction = 0.1;
    AggregationStrategy strategy = AggregationStrategy::Replication;
    RankPolicy rank_policy = RankPolicy::TopKValidation;
    std::uint64_t seed = 1;
};

struct DataConfig {
    std::size_t num_classes = 4;
    std::size_t feature_dim = 32;
    double class_separation = 2.5;
    TaskSizes sizes{12000, 500, 1000, 512};
    double hq_fraction = 0.1;
    double alpha_hq = 5.0;
    double alpha_lq = 1.0;
    std::size_t samples_per_client = 100;
    bool balanced_first_client = false;
};

struct ModelConfig {
    std::size_t hidden_dim = 64;
    TrainParams train;
    PretrainParams pretrain;
};

// Uplink accounting at 4 bytes per transmitted parameter. When a preset is
// active the paper-table dimensions replace the in-memory model's; the
// in-memory precision stays f64 either way.
struct LedgerSpec {
    bool use_preset = false;
    std::size_t m = 768;
    std::size_t n = 768;
    std::size_t num_matrices = 18;
};

struct ExperimentConfig {
    FederationConfig fed;
    DataConfig data;
    ModelConfig model;
    LedgerSpec ledger;
};

struct ClientState {
    int id = 0;
    QualityTier tier = QualityTier::LQ;
    const ClientShard* shard = nullptr;
    std::size_t rank = 0;
    std::vector<LoraAdapter> adapters;
    double last_val_acc = 0.0;
};

struct ParticipantRecord {
    int client_id = 0;
    std::size_t rank = 0;
    double acc_before = 0.0;
    double acc_after = 0.0;
};

struct RoundRecord {
    std::size_t round = 0;
    double global_acc = 0.0;
    std::vector<ParticipantRecord> participants;
    std::uint64_t uplink_bytes = 0;
    std::uint64_t cumulative_bytes = 0;
};

// Stratified participant sample: high- and low-rank clients appear in the
// same proportion as the population. Returned ids are sorted.
std::vector<int> select_clients(const std::vector<ClientState>& states, double fraction, Rng& rng);

// Oracle promotes HQ-tier clients; TopKValidation promotes the k_high
// highest last_val_acc (ties to the lower id); AllLow/AllHigh are the
// homogeneous controls.
void assign_ranks(std::vector<ClientState>& states, RankPolicy policy, std::size_t k_high,
                  std::size_t r_low, std::size_t r_high);

class Experiment {
   public:
    explicit Experiment(const ExperimentConfig& cfg);

    // One communication round: downlink, local training, before-probe,
    // aggregation, after-probe, byte ledger, global test accuracy.
    RoundRecord run_round();

    // Round-0 initialization record followed by cfg.rounds round records.
    std::vector<RoundRecord> run();

    const std::vector<ClientState>& clients() const { return clients_; }
    const std::vector<LoraAdapter>& global_adapters() const { return global_; }
    const SyntheticTask& task() const { return task_; }
    const FrozenBackbone& backbone() const { return backbone_; }
    std::uint64_t uplink_bytes_for_rank(std::size_t rank) const;

   private:
    void expand_global(std::size_t r_new);

    ExperimentConfig cfg_;
    Rng root_;
    SyntheticTask task_;
    std::vector<ClientShard> shards_;
    FrozenBackbone backbone_;
    std::vector<ClientState> clients_;
    std::vector<LoraAdapter> global_;
    std::size_t round_ = 0;
    std::uint64_t cumulative_bytes_ = 0;
    bool promotion_done_ = false;
};

std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg);

}  // namespace fedlora
