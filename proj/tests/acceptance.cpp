// Acceptance suite: each criterion prints one [PASS]/[FAIL] line. Run with
// no arguments for all criteria, or pass criterion numbers to run a subset.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fedlora/aggregation.hpp"
#include "fedlora/comm.hpp"
#include "fedlora/config.hpp"
#include "fedlora/federation.hpp"
#include "fedlora/metrics.hpp"
#include "fedlora/model.hpp"

using namespace fedlora;

namespace {

bool g_verbose = true;

LoraAdapter random_adapter(std::size_t m, std::size_t n, std::size_t r, Rng& rng) {
    LoraAdapter a;
    a.B = Matrix(m, r);
    a.A = Matrix(r, n);
    for (double& v : a.B.data) v = rng.normal();
    for (double& v : a.A.data) v = rng.normal();
    return a;
}

// ---------------------------------------------------------------- criterion 1
bool crit_comm_table() {
    const CommPreset p = comm_preset("distilbert");
    const auto entries =
        comm_table(p.m, p.n, p.num_matrices, p.ranks, p.mixture, p.reference_total);
    bool ok = entries.size() == 4;
    ok = ok && entries[0].params == 552960 && entries[1].params == 193536 &&
         entries[2].params == 138240;
    auto mb2 = [](std::uint64_t bytes) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", static_cast<double>(bytes) / (1024.0 * 1024.0));
        return std::string(buf);
    };
    ok = ok && mb2(entries[0].bytes) == "2.11" && mb2(entries[1].bytes) == "0.74" &&
         mb2(entries[2].bytes) == "0.53";
    const long long mixture_diff =
        std::llabs(static_cast<long long>(entries[3].params) - 179715LL);
    ok = ok && mixture_diff <= 5;
    return ok;
}

// ---------------------------------------------------------------- criterion 2
bool crit_dilution_law() {
    Rng rng(202);
    for (int k : {2, 5, 15}) {
        std::vector<ClientUpdate> updates{{0, random_adapter(12, 10, 20, rng)}};
        for (int i = 1; i < k; ++i) updates.push_back({i, random_adapter(12, 10, 5, rng)});
        const LoraAdapter agg = aggregate_zero_pad(updates, 20);
        const LoraAdapter& donor = updates[0].adapter;
        for (std::size_t j = 5; j < 20; ++j) {
            for (std::size_t i = 0; i < 12; ++i) {
                if (std::abs(agg.B.at(i, j) - donor.B.at(i, j) / k) > 1e-12) return false;
            }
            for (std::size_t c = 0; c < 10; ++c) {
                if (std::abs(agg.A.at(j, c) - donor.A.at(j, c) / k) > 1e-12) return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------- criterion 3
bool crit_preservation_law() {
    Rng rng(303);
    for (int low_count : {1, 4, 14}) {
        std::vector<ClientUpdate> updates{{0, random_adapter(12, 10, 20, rng)}};
        for (int i = 1; i <= low_count; ++i) updates.push_back({i, random_adapter(12, 10, 5, rng)});
        const LoraAdapter agg = aggregate_replication(updates, 20);
        const LoraAdapter& donor = updates[0].adapter;
        for (std::size_t j = 5; j < 20; ++j) {
            for (std::size_t i = 0; i < 12; ++i) {
                if (std::abs(agg.B.at(i, j) - donor.B.at(i, j)) > 1e-12) return false;
            }
            for (std::size_t c = 0; c < 10; ++c) {
                if (std::abs(agg.A.at(j, c) - donor.A.at(j, c)) > 1e-12) return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------- criterion 4
bool crit_strategy_degeneracy() {
    Rng rng(404);
    std::vector<ClientUpdate> updates;
    for (int i = 0; i < 7; ++i) updates.push_back({i, random_adapter(9, 11, 6, rng)});
    const LoraAdapter homog = aggregate_homogeneous(updates);
    const LoraAdapter zp = aggregate_zero_pad(updates, 6);
    const LoraAdapter rep = aggregate_replication(updates, 6);
    return homog.B == zp.B && homog.A == zp.A && homog.B == rep.B && homog.A == rep.A;
}

// ---------------------------------------------------------------- criterion 5
bool crit_eq9_oracle() {
    Rng rng(505);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ClientUpdate> updates{{0, random_adapter(8, 6, 20, rng)},
                                          {1, random_adapter(8, 6, 5, rng)}};
        const LoraAdapter agg = aggregate_replication(updates, 20);
        const LoraAdapter padded = pad_replicate(updates[1].adapter, updates[0].adapter);
        const Matrix expected_b = 0.5 * (updates[0].adapter.B + padded.B);
        const Matrix expected_a = 0.5 * (updates[0].adapter.A + padded.A);
        if (max_abs_diff(agg.B, expected_b) > 1e-12) return false;
        if (max_abs_diff(agg.A, expected_a) > 1e-12) return false;
    }
    return true;
}

// ---------------------------------------------------------------- criterion 6
bool crit_gradient_check() {
    Rng task_rng(606);
    const SyntheticTask task = generate_task(4, 16, 2.5, TaskSizes{400, 64, 64, 256}, task_rng);
    Rng bb_rng(607);
    PretrainParams pp;
    pp.steps = 30;
    const FrozenBackbone bb =
        make_pretrained_backbone(task.pretrain, 16, 24, 4, pp, bb_rng);
    Rng ad_rng(608);
    AdaptedModel model{&bb, init_adapters(bb, 4, ad_rng)};
    for (LoraAdapter& a : model.adapters) {
        for (double& v : a.B.data) v = 0.3 * ad_rng.normal();
        for (double& v : a.A.data) v += 0.1 * ad_rng.normal();
    }
    const Matrix x = batch_features(task.train, 0, 16);
    std::vector<int> labels;
    for (std::size_t i = 0; i < 16; ++i) labels.push_back(task.train[i].label);
    const FactorGrads analytic = loss_and_grads(model, x, labels);

    const double h = 1e-5;
    auto probe = [&](Matrix& param, const Matrix& grad) {
        const std::size_t stride = std::max<std::size_t>(1, param.data.size() / 12);
        std::size_t probed = 0;
        for (std::size_t i = 0; i < param.data.size() && probed < 12; i += stride, ++probed) {
            const double saved = param.data[i];
            param.data[i] = saved + h;
            const double up = loss_and_grads(model, x, labels).loss;
            param.data[i] = saved - h;
            const double down = loss_and_grads(model, x, labels).loss;
            param.data[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max(1e-7, std::abs(numeric));
            if (std::abs(grad.data[i] - numeric) / denom >= 1e-5) return false;
        }
        return true;
    };
    for (std::size_t l = 0; l < model.adapters.size(); ++l) {
        if (!probe(model.adapters[l].B, analytic.per_adapter[l].first)) return false;
        if (!probe(model.adapters[l].A, analytic.per_adapter[l].second)) return false;
    }
    return true;
}

// --------------------------------------------------------- criteria 7 and 8
ExperimentConfig lone_hq_config(std::uint64_t seed, AggregationStrategy strategy,
                                RankPolicy policy) {
    ExperimentConfig cfg;
    cfg.fed.seed = seed;
    cfg.fed.num_clients = 15;
    cfg.fed.participation_fraction = 1.0;
    cfg.fed.rounds = 30;
    cfg.fed.r_low = 5;
    cfg.fed.r_high = 20;
    cfg.fed.high_rank_fraction = 1.0 / 15.0;
    cfg.fed.strategy = strategy;
    cfg.fed.rank_policy = policy;
    cfg.data.num_classes = 4;
    cfg.data.feature_dim = 32;
    cfg.data.class_separation = 1.2;
    cfg.data.sizes = TaskSizes{4000, 500, 1000, 512};
    cfg.data.alpha_lq = 0.6;
    cfg.data.samples_per_client = 200;
    cfg.data.balanced_first_client = true;
    cfg.model.hidden_dim = 64;
    cfg.model.train.lr = 2e-3;
    cfg.model.train.epochs = 2;
    cfg.model.pretrain.steps = 5;
    cfg.ledger.use_preset = true;
    return cfg;
}

ExperimentConfig main_experiment_config(std::uint64_t seed, AggregationStrategy strategy,
                                        RankPolicy policy) {
    ExperimentConfig cfg;
    cfg.fed.seed = seed;
    cfg.fed.num_clients = 100;
    cfg.fed.participation_fraction = 0.1;
    cfg.fed.rounds = 30;
    cfg.fed.r_low = 5;
    cfg.fed.r_high = 20;
    cfg.fed.high_rank_fraction = 0.1;
    cfg.fed.strategy = strategy;
    cfg.fed.rank_policy = policy;
    cfg.data.num_classes = 4;
    cfg.data.feature_dim = 32;
    cfg.data.class_separation = 1.2;
    cfg.data.sizes = TaskSizes{12000, 500, 1000, 512};
    cfg.data.hq_fraction = 0.1;
    cfg.data.alpha_hq = 5.0;
    cfg.data.alpha_lq = 1.0;
    cfg.data.samples_per_client = 100;
    cfg.model.hidden_dim = 64;
    cfg.model.train.lr = 2e-3;
    cfg.model.train.epochs = 2;
    cfg.model.pretrain.steps = 5;
    cfg.ledger.use_preset = true;
    return cfg;
}

std::size_t rounds_to_target(const std::vector<RoundRecord>& records, double target) {
    for (const RoundRecord& r : records) {
        if (r.round >= 1 && r.global_acc >= target) return r.round;
    }
    return records.size();  // rounds + 1 sentinel: never reached
}

bool crit_lone_hq() {
    const std::uint64_t seeds[] = {11, 12, 13, 14, 15};
    int drop_wins = 0, speed_wins = 0;
    for (std::uint64_t seed : seeds) {
        const auto rep = run_experiment(
            lone_hq_config(seed, AggregationStrategy::Replication, RankPolicy::Oracle));
        const auto zp = run_experiment(
            lone_hq_config(seed, AggregationStrategy::ZeroPad, RankPolicy::Oracle));
        const auto all_high = run_experiment(
            lone_hq_config(seed, AggregationStrategy::Homogeneous, RankPolicy::AllHigh));

        // (a) HQ client's before -> after accuracy drop over rounds 1-3.
        auto hq_drop = [](const std::vector<RoundRecord>& records) {
            double drop = 0.0;
            for (std::size_t r = 1; r <= 3; ++r) {
                for (const ParticipantRecord& p : records[r].participants) {
                    if (p.client_id == 0) drop += p.acc_before - p.acc_after;
                }
            }
            return drop;
        };
        if (hq_drop(rep) < hq_drop(zp)) ++drop_wins;

        // (b) rounds to 90% of the all-high run's round-30 accuracy.
        const double target = 0.9 * all_high.back().global_acc;
        const std::size_t rt_rep = rounds_to_target(rep, target);
        const std::size_t rt_zp = rounds_to_target(zp, target);
        if (rt_rep <= rt_zp) ++speed_wins;
        if (g_verbose) {
            std::printf("  seed %llu: drop rep=%.4f zp=%.4f | target %.4f rounds rep=%zu zp=%zu\n",
                        static_cast<unsigned long long>(seed), hq_drop(rep), hq_drop(zp), target,
                        rt_rep, rt_zp);
        }
    }
    if (g_verbose) std::printf("  drop wins %d/5, speed wins %d/5\n", drop_wins, speed_wins);
    return drop_wins >= 3 && speed_wins >= 3;
}

bool crit_main_experiment() {
    const std::uint64_t seeds[] = {21, 22, 23, 24, 25};
    int rep_vs_frob = 0, frob_vs_zp = 0, bytes_wins = 0;
    for (std::uint64_t seed : seeds) {
        const auto rep = run_experiment(main_experiment_config(
            seed, AggregationStrategy::Replication, RankPolicy::TopKValidation));
        const auto frob = run_experiment(main_experiment_config(
            seed, AggregationStrategy::FrobeniusZeroPad, RankPolicy::TopKValidation));
        const auto zp = run_experiment(main_experiment_config(
            seed, AggregationStrategy::ZeroPad, RankPolicy::TopKValidation));
        auto all_high_cfg =
            main_experiment_config(seed, AggregationStrategy::Homogeneous, RankPolicy::AllHigh);
        const auto all_high = run_experiment(all_high_cfg);
        auto r7_cfg =
            main_experiment_config(seed, AggregationStrategy::Homogeneous, RankPolicy::AllLow);
        r7_cfg.fed.r_low = r7_cfg.fed.r_high = 7;
        const auto r7 = run_experiment(r7_cfg);

        const double target = 0.9 * all_high.back().global_acc;
        const std::size_t rt_rep = rounds_to_target(rep, target);
        const std::size_t rt_frob = rounds_to_target(frob, target);
        const std::size_t rt_zp = rounds_to_target(zp, target);
        const std::size_t rt_r7 = rounds_to_target(r7, target);
        if (rt_rep <= rt_frob) ++rep_vs_frob;
        if (rt_frob <= rt_zp) ++frob_vs_zp;

        auto bytes_at = [](const std::vector<RoundRecord>& records, std::size_t round) {
            return records[std::min(round, records.size() - 1)].cumulative_bytes;
        };
        if (bytes_at(rep, rt_rep) < bytes_at(r7, rt_r7)) ++bytes_wins;
        if (g_verbose) {
            std::printf("  seed %llu: target %.4f rounds rep=%zu frob=%zu zp=%zu r7=%zu | "
                        "bytes rep=%llu r7=%llu\n",
                        static_cast<unsigned long long>(seed), target, rt_rep, rt_frob, rt_zp,
                        rt_r7, static_cast<unsigned long long>(bytes_at(rep, rt_rep)),
                        static_cast<unsigned long long>(bytes_at(r7, rt_r7)));
        }
    }
    if (g_verbose) {
        std::printf("  rep<=frob %d/5, frob<=zp %d/5, bytes %d/5\n", rep_vs_frob, frob_vs_zp,
                    bytes_wins);
    }
    return rep_vs_frob >= 3 && frob_vs_zp >= 3 && bytes_wins >= 3;
}

// ---------------------------------------------------------------- criterion 9
bool crit_determinism() {
    ExperimentConfig cfg = main_experiment_config(31, AggregationStrategy::Replication,
                                                  RankPolicy::TopKValidation);
    cfg.fed.rounds = 3;
    const auto run1 = run_experiment(cfg);
    const auto run2 = run_experiment(cfg);
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fedlora_acceptance";
    fs::create_directories(dir);
    const fs::path p1 = dir / "run1.csv";
    const fs::path p2 = dir / "run2.csv";
    emit_metrics(run1, cfg, p1.string());
    emit_metrics(run2, cfg, p2.string());
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    const bool ok = slurp(p1) == slurp(p2) && !slurp(p1).empty();
    fs::remove_all(dir);
    return ok;
}

struct Criterion {
    int number;
    const char* description;
    bool (*fn)();
};

const Criterion kCriteria[] = {
    {1, "comm-table reproduction (param counts, MB figures, mixture within 5)", crit_comm_table},
    {2, "dilution law: zero-pad trailing columns equal donor/k", crit_dilution_law},
    {3, "preservation law: replication keeps donor trailing columns", crit_preservation_law},
    {4, "strategy degeneracy on rank-homogeneous inputs (bitwise)", crit_strategy_degeneracy},
    {5, "two-client replication matches the averaging oracle", crit_eq9_oracle},
    {6, "factor gradients match central finite differences", crit_gradient_check},
    {7, "lone-HQ qualitative reproduction (drop + rounds-to-target)", crit_lone_hq},
    {8, "main-experiment qualitative reproduction (ordering + bytes)", crit_main_experiment},
    {9, "byte-identical metrics on rerun", crit_determinism},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quiet") == 0) {
            g_verbose = false;
        } else {
            wanted.push_back(std::atoi(argv[i]));
        }
    }
    int failures = 0;
    for (const Criterion& c : kCriteria) {
        if (!wanted.empty() &&
            std::find(wanted.begin(), wanted.end(), c.number) == wanted.end()) {
            continue;
        }
        bool ok = false;
        try {
            ok = c.fn();
        } catch (const std::exception& e) {
            std::printf("  criterion %d threw: %s\n", c.number, e.what());
        }
        std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", c.number, c.description);
        std::fflush(stdout);
        failures += ok ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
