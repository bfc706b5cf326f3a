#include "fedlora/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedlora {

std::string to_string(RankPolicy p) {
    switch (p) {
        case RankPolicy::Oracle: return "oracle";
        case RankPolicy::TopKValidation: return "topk_validation";
        case RankPolicy::AllLow: return "all_low";
        case RankPolicy::AllHigh: return "all_high";
    }
    throw std::logic_error("to_string: bad RankPolicy");
}

RankPolicy rank_policy_from_string(const std::string& name) {
    if (name == "oracle") return RankPolicy::Oracle;
    if (name == "topk_validation") return RankPolicy::TopKValidation;
    if (name == "all_low") return RankPolicy::AllLow;
    if (name == "all_high") return RankPolicy::AllHigh;
    throw std::invalid_argument("unknown rank policy: " + name);
}

std::vector<int> select_clients(const std::vector<ClientState>& states, double fraction,
                                Rng& rng) {
    const std::size_t n = states.size();
    if (n == 0) throw std::invalid_argument("select_clients: no clients");
    if (fraction <= 0.0 || fraction > 1.0) {
        throw std::invalid_argument("select_clients: fraction must lie in (0, 1]");
    }
    auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);

    std::size_t r_max = 0;
    for (const ClientState& s : states) r_max = std::max(r_max, s.rank);
    std::vector<std::size_t> high, low;
    for (std::size_t i = 0; i < n; ++i) {
        (states[i].rank == r_max ? high : low).push_back(i);
    }
    auto k_high = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(high.size())));
    k_high = std::min({k_high, k, high.size()});
    std::size_t k_low = k - k_high;
    if (k_low > low.size()) {
        k_high += k_low - low.size();
        k_low = low.size();
    }
    rng.shuffle(high);
    rng.shuffle(low);
    std::vector<int> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k_high; ++i) out.push_back(static_cast<int>(high[i]));
    for (std::size_t i = 0; i < k_low; ++i) out.push_back(static_cast<int>(low[i]));
    std::sort(out.begin(), out.end());
    return out;
}

void assign_ranks(std::vector<ClientState>& states, RankPolicy policy, std::size_t k_high,
                  std::size_t r_low, std::size_t r_high) {
    if (k_high > states.size()) {
        throw std::invalid_argument("assign_ranks: k_high " + std::to_string(k_high) +
                                    " exceeds client count " + std::to_string(states.size()));
    }
    switch (policy) {
        case RankPolicy::AllLow:
            for (ClientState& s : states) s.rank = r_low;
            return;
        case RankPolicy::AllHigh:
            for (ClientState& s : states) s.rank = r_high;
            return;
        case RankPolicy::Oracle:
            for (ClientState& s : states) {
                s.rank = s.tier == QualityTier::HQ ? r_high : r_low;
            }
            return;
        case RankPolicy::TopKValidation: {
            std::vector<std::size_t> order(states.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&states](std::size_t a, std::size_t b) {
                if (states[a].last_val_acc != states[b].last_val_acc) {
                    return states[a].last_val_acc > states[b].last_val_acc;
                }
                return states[a].id < states[b].id;
            });
            for (std::size_t i = 0; i < states.size(); ++i) {
                states[order[i]].rank = i < k_high ? r_high : r_low;
            }
            return;
        }
    }
    throw std::logic_error("assign_ranks: bad policy");
}

namespace {

// Fixed child-stream layout off the experiment seed. Offsets are arbitrary
// but must stay stable: they define the reproducibility contract.
constexpr std::uint64_t kStreamTask = 1;
constexpr std::uint64_t kStreamPartition = 2;
constexpr std::uint64_t kStreamBackbone = 3;
constexpr std::uint64_t kStreamGlobalInit = 4;
constexpr std::uint64_t kStreamSelectBase = 0x200000000ULL;
constexpr std::uint64_t kStreamClientBase = 0x300000000ULL;
constexpr std::uint64_t kStreamExpandBase = 0x400000000ULL;

}  // namespace

Experiment::Experiment(const ExperimentConfig& cfg) : cfg_(cfg), root_(cfg.fed.seed) {
    if (cfg_.fed.r_low > cfg_.fed.r_high) {
        throw std::invalid_argument("Experiment: r_low must not exceed r_high");
    }
    Rng task_rng = root_.child(kStreamTask);
    task_ = generate_task(cfg_.data.num_classes, cfg_.data.feature_dim, cfg_.data.class_separation,
                          cfg_.data.sizes, task_rng);

    PartitionSpec pspec;
    pspec.num_clients = cfg_.fed.num_clients;
    pspec.hq_fraction = cfg_.data.hq_fraction;
    pspec.alpha_hq = cfg_.data.alpha_hq;
    pspec.alpha_lq = cfg_.data.alpha_lq;
    pspec.samples_per_client = cfg_.data.samples_per_client;
    pspec.balanced_first_client = cfg_.data.balanced_first_client;
    Rng part_rng = root_.child(kStreamPartition);
    shards_ = partition(task_, pspec, part_rng);

    Rng bb_rng = root_.child(kStreamBackbone);
    backbone_ = make_pretrained_backbone(task_.pretrain, cfg_.data.feature_dim,
                                         cfg_.model.hidden_dim, cfg_.data.num_classes,
                                         cfg_.model.pretrain, bb_rng);

    clients_.resize(cfg_.fed.num_clients);
    for (std::size_t i = 0; i < clients_.size(); ++i) {
        clients_[i].id = static_cast<int>(i);
        clients_[i].tier = shards_[i].tier;
        clients_[i].shard = &shards_[i];
    }
    const auto k_high = static_cast<std::size_t>(std::llround(
        cfg_.fed.high_rank_fraction * static_cast<double>(cfg_.fed.num_clients)));
    // TopKValidation starts everyone low; promotion happens after round 1.
    const RankPolicy initial_policy = cfg_.fed.rank_policy == RankPolicy::TopKValidation
                                          ? RankPolicy::AllLow
                                          : cfg_.fed.rank_policy;
    assign_ranks(clients_, initial_policy, k_high, cfg_.fed.r_low, cfg_.fed.r_high);
    promotion_done_ = cfg_.fed.rank_policy != RankPolicy::TopKValidation;

    std::size_t global_rank = cfg_.fed.r_low;
    for (const ClientState& c : clients_) global_rank = std::max(global_rank, c.rank);
    Rng init_rng = root_.child(kStreamGlobalInit);
    global_ = init_adapters(backbone_, global_rank, init_rng);
}

std::uint64_t Experiment::uplink_bytes_for_rank(std::size_t rank) const {
    if (cfg_.ledger.use_preset) {
        return 4ULL * cfg_.ledger.num_matrices * (cfg_.ledger.m + cfg_.ledger.n) * rank;
    }
    std::uint64_t params = 0;
    for (auto [m, n] : backbone_.adapted_shapes()) params += (m + n) * rank;
    return 4ULL * params;
}

void Experiment::expand_global(std::size_t r_new) {
    Rng expand_rng = root_.child(kStreamExpandBase + round_);
    for (LoraAdapter& g : global_) {
        if (g.rank() >= r_new) continue;
        const std::size_t r_old = g.rank();
        LoraAdapter wide = pad_zero(g, r_new);
        // B's new columns stay zero so the global delta is unchanged; A's new
        // rows get the usual Gaussian init so the added directions are
        // trainable (a zero-zero pair would never receive gradient).
        const double stddev = 1.0 / std::sqrt(static_cast<double>(r_new));
        for (std::size_t i = r_old; i < r_new; ++i) {
            for (std::size_t j = 0; j < wide.A.cols; ++j) {
                wide.A.at(i, j) = stddev * expand_rng.normal();
            }
        }
        g = std::move(wide);
    }
}

RoundRecord Experiment::run_round() {
    round_ += 1;
    const FederationConfig& fed = cfg_.fed;
    const bool bootstrap_round = fed.rank_policy == RankPolicy::TopKValidation && !promotion_done_;

    Rng sel_rng = root_.child(kStreamSelectBase + round_);
    std::vector<int> participants = select_clients(clients_, fed.participation_fraction, sel_rng);

    // Downlink + one local epoch per participant. Clients are independent:
    // each owns its adapters and a pre-split RNG stream, so the schedule
    // does not affect the result.
    const auto n_part = static_cast<std::int64_t>(participants.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n_part; ++i) {
        ClientState& c = clients_[static_cast<std::size_t>(participants[i])];
        c.adapters.clear();
        for (const LoraAdapter& g : global_) c.adapters.push_back(downlink(g, c.rank));
        AdaptedModel model{&backbone_, std::move(c.adapters)};
        auto states = make_adam_states(model, cfg_.model.train);
        Rng crng = root_.child(kStreamClientBase + round_ * 1000003ULL +
                               static_cast<std::uint64_t>(c.id));
        local_train(model, task_.train, c.shard->indices, cfg_.model.train, states, crng);
        c.adapters = std::move(model.adapters);
    }

    if (bootstrap_round) {
        // Promotion needs a score for every client, but only the sampled
        // participants upload adapters. Everyone else trains a throwaway
        // copy from the broadcast global and reports a 4-byte validation
        // accuracy; the validation split travels on the (uncounted)
        // downlink.
        std::vector<char> sampled(clients_.size(), 0);
        for (int id : participants) sampled[static_cast<std::size_t>(id)] = 1;
        const auto n_clients = static_cast<std::int64_t>(clients_.size());
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < n_clients; ++i) {
            ClientState& c = clients_[static_cast<std::size_t>(i)];
            if (sampled[static_cast<std::size_t>(i)]) {
                c.last_val_acc = evaluate(AdaptedModel{&backbone_, c.adapters}, task_.val);
                continue;
            }
            std::vector<LoraAdapter> local;
            for (const LoraAdapter& g : global_) local.push_back(downlink(g, c.rank));
            AdaptedModel model{&backbone_, std::move(local)};
            auto states = make_adam_states(model, cfg_.model.train);
            Rng crng = root_.child(kStreamClientBase + round_ * 1000003ULL +
                                   static_cast<std::uint64_t>(c.id));
            local_train(model, task_.train, c.shard->indices, cfg_.model.train, states, crng);
            c.last_val_acc = evaluate(model, task_.val);
        }
    }

    RoundRecord record;
    record.round = round_;
    record.participants.reserve(participants.size());
    for (int id : participants) {
        const ClientState& c = clients_[static_cast<std::size_t>(id)];
        ParticipantRecord pr;
        pr.client_id = id;
        pr.rank = c.rank;
        pr.acc_before = evaluate(AdaptedModel{&backbone_, c.adapters}, task_.test);
        record.participants.push_back(pr);
    }

    std::size_t r_target = 0;
    for (int id : participants) {
        r_target = std::max(r_target, clients_[static_cast<std::size_t>(id)].rank);
    }
    std::vector<LoraAdapter> aggregated;
    for (std::size_t l = 0; l < global_.size(); ++l) {
        std::vector<ClientUpdate> updates;
        updates.reserve(participants.size());
        for (int id : participants) {
            updates.push_back({id, clients_[static_cast<std::size_t>(id)].adapters[l], 1.0});
        }
        LoraAdapter agg = aggregate(fed.strategy, updates, r_target);
        // The global rank never decreases; zero-pad if a round happened to
        // draw only low-rank participants.
        if (agg.rank() < global_[l].rank()) agg = pad_zero(agg, global_[l].rank());
        aggregated.push_back(std::move(agg));
    }

    for (std::size_t i = 0; i < participants.size(); ++i) {
        const ClientState& c = clients_[static_cast<std::size_t>(participants[i])];
        std::vector<LoraAdapter> after;
        for (const LoraAdapter& agg : aggregated) after.push_back(downlink(agg, c.rank));
        record.participants[i].acc_after = evaluate(AdaptedModel{&backbone_, after}, task_.test);
    }

    for (const ParticipantRecord& pr : record.participants) {
        record.uplink_bytes += uplink_bytes_for_rank(pr.rank);
    }
    if (bootstrap_round) record.uplink_bytes += 4ULL * clients_.size();  // scalar scores
    cumulative_bytes_ += record.uplink_bytes;
    record.cumulative_bytes = cumulative_bytes_;

    global_ = std::move(aggregated);
    record.global_acc = evaluate(AdaptedModel{&backbone_, global_}, task_.test);

    if (bootstrap_round) {
        const auto k_high = static_cast<std::size_t>(std::llround(
            fed.high_rank_fraction * static_cast<double>(fed.num_clients)));
        assign_ranks(clients_, RankPolicy::TopKValidation, k_high, fed.r_low, fed.r_high);
        expand_global(fed.r_high);
        promotion_done_ = true;
    }
    return record;
}

std::vector<RoundRecord> Experiment::run() {
    std::vector<RoundRecord> records;
    records.reserve(cfg_.fed.rounds + 1);
    RoundRecord init;
    init.round = 0;
    init.global_acc = evaluate(AdaptedModel{&backbone_, global_}, task_.test);
    records.push_back(init);
    for (std::size_t r = 0; r < cfg_.fed.rounds; ++r) records.push_back(run_round());
    return records;
}

std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg) {
    Experiment exp(cfg);
    return exp.run();
}

}  // namespace fedlora
