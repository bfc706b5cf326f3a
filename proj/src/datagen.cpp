#include "fedlora/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fedlora {

namespace {

std::vector<Sample> draw_split(const Matrix& means, std::size_t count, Rng& rng) {
    const std::size_t C = means.rows;
    const std::size_t d = means.cols;
    std::vector<Sample> out(count);
    for (Sample& s : out) {
        s.label = static_cast<int>(rng.below(C));
        s.x.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            s.x[j] = means.at(static_cast<std::size_t>(s.label), j) + rng.normal();
        }
    }
    return out;
}

}  // namespace

SyntheticTask generate_task(std::size_t num_classes, std::size_t feature_dim, double separation,
                            const TaskSizes& sizes, Rng& rng) {
    if (num_classes < 2) throw std::invalid_argument("generate_task: need at least 2 classes");
    if (feature_dim < num_classes) {
        throw std::invalid_argument("generate_task: feature_dim must be >= num_classes");
    }
    if (sizes.train < num_classes || sizes.val < num_classes || sizes.test < num_classes) {
        throw std::invalid_argument("generate_task: splits must have >= num_classes samples");
    }
    SyntheticTask task;
    task.num_classes = num_classes;
    task.feature_dim = feature_dim;
    task.separation = separation;
    task.class_means = Matrix(num_classes, feature_dim);
    for (std::size_t c = 0; c < num_classes; ++c) task.class_means.at(c, c) = separation;
    task.train = draw_split(task.class_means, sizes.train, rng);
    task.val = draw_split(task.class_means, sizes.val, rng);
    task.test = draw_split(task.class_means, sizes.test, rng);
    task.pretrain = draw_split(task.class_means, sizes.pretrain, rng);
    return task;
}

std::vector<double> dirichlet_proportions(double alpha, std::size_t num_classes, Rng& rng) {
    if (alpha <= 0.0) throw std::invalid_argument("dirichlet_proportions: alpha must be positive");
    std::vector<double> p(num_classes);
    double total = 0.0;
    for (double& v : p) {
        v = rng.gamma(alpha);
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

namespace {

// Largest-remainder rounding of proportions to integer counts summing to total.
std::vector<std::size_t> proportions_to_counts(const std::vector<double>& p, std::size_t total) {
    const std::size_t C = p.size();
    std::vector<std::size_t> counts(C);
    std::vector<std::pair<double, std::size_t>> remainders(C);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < C; ++c) {
        const double target = p[c] * static_cast<double>(total);
        counts[c] = static_cast<std::size_t>(std::floor(target));
        assigned += counts[c];
        remainders[c] = {target - std::floor(target), c};
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
        counts[remainders[i % C].second] += 1;
    }
    return counts;
}

}  // namespace

std::vector<ClientShard> partition(const SyntheticTask& task, const PartitionSpec& spec, Rng& rng) {
    const std::size_t C = task.num_classes;
    if (spec.num_clients == 0) throw std::invalid_argument("partition: need at least one client");
    if (!spec.balanced_first_client && (spec.hq_fraction <= 0.0 || spec.hq_fraction >= 1.0)) {
        throw std::invalid_argument("partition: hq_fraction must lie in (0, 1)");
    }
    if (spec.alpha_hq <= 0.0 || spec.alpha_lq <= 0.0) {
        throw std::invalid_argument("partition: Dirichlet alphas must be positive");
    }
    if (spec.num_clients * spec.samples_per_client > task.train.size()) {
        throw std::invalid_argument("partition: demand " +
                                    std::to_string(spec.num_clients * spec.samples_per_client) +
                                    " exceeds train size " + std::to_string(task.train.size()));
    }

    std::vector<std::vector<std::size_t>> pools(C);
    for (std::size_t i = 0; i < task.train.size(); ++i) {
        pools[static_cast<std::size_t>(task.train[i].label)].push_back(i);
    }
    for (auto& pool : pools) rng.shuffle(pool);
    std::vector<std::size_t> cursor(C, 0);

    // Tier assignment. The balanced-first-client preset pins client 0 as the
    // lone HQ client; otherwise a random subset of round(hq_fraction * n)
    // clients gets the HQ tier.
    std::vector<QualityTier> tiers(spec.num_clients, QualityTier::LQ);
    if (spec.balanced_first_client) {
        tiers[0] = QualityTier::HQ;
    } else {
        const auto n_hq = static_cast<std::size_t>(
            std::llround(spec.hq_fraction * static_cast<double>(spec.num_clients)));
        std::vector<std::size_t> ids(spec.num_clients);
        std::iota(ids.begin(), ids.end(), 0);
        rng.shuffle(ids);
        for (std::size_t i = 0; i < n_hq; ++i) tiers[ids[i]] = QualityTier::HQ;
    }

    std::vector<ClientShard> shards;
    shards.reserve(spec.num_clients);
    for (std::size_t id = 0; id < spec.num_clients; ++id) {
        const bool balanced = spec.balanced_first_client && id == 0;
        const double alpha = tiers[id] == QualityTier::HQ ? spec.alpha_hq : spec.alpha_lq;
        std::vector<std::size_t> counts;
        bool feasible = false;
        for (std::size_t attempt = 0; attempt <= spec.max_retries; ++attempt) {
            std::vector<double> p;
            if (balanced) {
                p.assign(C, 1.0 / static_cast<double>(C));
            } else {
                p = dirichlet_proportions(alpha, C, rng);
            }
            counts = proportions_to_counts(p, spec.samples_per_client);
            feasible = true;
            for (std::size_t c = 0; c < C; ++c) {
                if (cursor[c] + counts[c] > pools[c].size()) {
                    feasible = false;
                    break;
                }
            }
            if (feasible || balanced) break;
        }
        if (!feasible) {
            throw std::runtime_error("partition: class pool exhausted for client " +
                                     std::to_string(id) + " after " +
                                     std::to_string(spec.max_retries) + " retries");
        }
        ClientShard shard;
        shard.client_id = static_cast<int>(id);
        shard.tier = tiers[id];
        shard.class_histogram = counts;
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t k = 0; k < counts[c]; ++k) {
                shard.indices.push_back(pools[c][cursor[c]++]);
            }
        }
        shards.push_back(std::move(shard));
    }
    return shards;
}

void dump_dataset_csv(const SyntheticTask& task, const std::vector<ClientShard>& shards,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_dataset_csv: cannot open " + path);
    std::vector<int> owner(task.train.size(), -1);
    for (const ClientShard& s : shards) {
        for (std::size_t idx : s.indices) owner[idx] = s.client_id;
    }
    out << "split,client_id,label";
    for (std::size_t j = 0; j < task.feature_dim; ++j) out << ",f" << j;
    out << "\n";
    auto write_split = [&](const char* name, const std::vector<Sample>& samples, bool owned) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            out << name << "," << (owned ? owner[i] : -1) << "," << samples[i].label;
            char buf[32];
            for (double v : samples[i].x) {
                std::snprintf(buf, sizeof(buf), ",%.17g", v);
                out << buf;
            }
            out << "\n";
        }
    };
    write_split("train", task.train, true);
    write_split("val", task.val, false);
    write_split("test", task.test, false);
    if (!out) throw std::runtime_error("dump_dataset_csv: write failed for " + path);
}

}  // namespace fedlora
