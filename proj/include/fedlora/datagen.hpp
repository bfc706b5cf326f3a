#pragma once

#include <cstdint>
#include <vector>

#include "fedlora/matrix.hpp"
#include "fedlora/rng.hpp"

namespace fedlora {

struct Sample {
    std::vector<double> x;
    int label = 0;
};

struct TaskSizes {
    std::size_t train = 4000;
    std::size_t val = 500;
    std::size_t test = 1000;
    std::size_t pretrain = 512;  // held-out pool used to pretrain the frozen backbone
};

// Class-conditional Gaussian classification task. Class c has mean
// separation * e_c (one-hot direction in the first C coordinates) and unit
// covariance; class priors are uniform.
struct SyntheticTask {
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;
    double separation = 0.0;
    Matrix class_means;  // C x d
    std::vector<Sample> train;
    std::vector<Sample> val;
    std::vector<Sample> test;
    std::vector<Sample> pretrain;
};

SyntheticTask generate_task(std::size_t num_classes, std::size_t feature_dim, double separation,
                            const TaskSizes& sizes, Rng& rng);

// One draw from Dirichlet(alpha, ..., alpha) over C classes.
std::vector<double> dirichlet_proportions(double alpha, std::size_t num_classes, Rng& rng);

enum class QualityTier { HQ, LQ };

struct PartitionSpec {
    std::size_t num_clients = 100;
    double hq_fraction = 0.1;
    double alpha_hq = 5.0;
    double alpha_lq = 1.0;
    std::size_t samples_per_client = 100;
    // Lone-HQ scenario: client 0 gets an exactly balanced shard and the HQ
    // tier, everyone else draws from alpha_lq.
    bool balanced_first_client = false;
    std::size_t max_retries = 100;
};

struct ClientShard {
    int client_id = 0;
    QualityTier tier = QualityTier::LQ;
    std::vector<std::size_t> indices;  // into task.train
    std::vector<std::size_t> class_histogram;
};

// Dirichlet partition of the train split: proportions are drawn per client,
// then samples are taken without replacement from per-class pools, so shards
// are pairwise disjoint.
std::vector<ClientShard> partition(const SyntheticTask& task, const PartitionSpec& spec, Rng& rng);

// CSV dump: split, client_id (-1 when unassigned), label, features...
void dump_dataset_csv(const SyntheticTask& task, const std::vector<ClientShard>& shards,
                      const std::string& path);

}  // namespace fedlora
