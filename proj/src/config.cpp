#include "fedlora/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fedlora {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

std::uint64_t parse_u64(const std::string& origin, std::size_t line, const std::string& key,
                        const std::string& value) {
    try {
        std::size_t pos = 0;
        if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail(origin, line, "field '" + key + "': expected a non-negative integer, got '" + value +
                               "'");
    }
}

double parse_double(const std::string& origin, std::size_t line, const std::string& key,
                    const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail(origin, line, "field '" + key + "': expected a real number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& origin, std::size_t line, const std::string& key,
                const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    fail(origin, line, "field '" + key + "': expected true or false, got '" + value + "'");
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    bool saw_seed = false;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "federation" && section != "data" && section != "model" &&
                section != "ledger") {
                fail(origin, line_no, "unknown section '" + section + "'");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(origin, line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) fail(origin, line_no, "key '" + key + "' outside any section");

        auto u64 = [&] { return parse_u64(origin, line_no, key, value); };
        auto real = [&] { return parse_double(origin, line_no, key, value); };
        auto boolean = [&] { return parse_bool(origin, line_no, key, value); };

        if (section == "federation") {
            if (key == "seed") {
                cfg.fed.seed = u64();
                saw_seed = true;
            } else if (key == "rounds") {
                cfg.fed.rounds = u64();
            } else if (key == "num_clients") {
                cfg.fed.num_clients = u64();
            } else if (key == "participation_fraction") {
                cfg.fed.participation_fraction = real();
            } else if (key == "r_low") {
                cfg.fed.r_low = u64();
            } else if (key == "r_high") {
                cfg.fed.r_high = u64();
            } else if (key == "high_rank_fraction") {
                cfg.fed.high_rank_fraction = real();
            } else if (key == "strategy") {
                try {
                    cfg.fed.strategy = strategy_from_string(value);
                } catch (const std::exception& e) {
                    fail(origin, line_no, e.what());
                }
            } else if (key == "rank_policy") {
                try {
                    cfg.fed.rank_policy = rank_policy_from_string(value);
                } catch (const std::exception& e) {
                    fail(origin, line_no, e.what());
                }
            } else {
                fail(origin, line_no, "unknown key '" + key + "' in [federation]");
            }
        } else if (section == "data") {
            if (key == "num_classes") cfg.data.num_classes = u64();
            else if (key == "feature_dim") cfg.data.feature_dim = u64();
            else if (key == "class_separation") cfg.data.class_separation = real();
            else if (key == "train_size") cfg.data.sizes.train = u64();
            else if (key == "val_size") cfg.data.sizes.val = u64();
            else if (key == "test_size") cfg.data.sizes.test = u64();
            else if (key == "pretrain_size") cfg.data.sizes.pretrain = u64();
            else if (key == "hq_fraction") cfg.data.hq_fraction = real();
            else if (key == "alpha_hq") cfg.data.alpha_hq = real();
            else if (key == "alpha_lq") cfg.data.alpha_lq = real();
            else if (key == "samples_per_client") cfg.data.samples_per_client = u64();
            else if (key == "balanced_first_client") cfg.data.balanced_first_client = boolean();
            else fail(origin, line_no, "unknown key '" + key + "' in [data]");
        } else if (section == "model") {
            if (key == "hidden_dim") cfg.model.hidden_dim = u64();
            else if (key == "batch_size") cfg.model.train.batch_size = u64();
            else if (key == "local_epochs") cfg.model.train.epochs = u64();
            else if (key == "lr") cfg.model.train.lr = real();
            else if (key == "beta1") cfg.model.train.beta1 = real();
            else if (key == "beta2") cfg.model.train.beta2 = real();
            else if (key == "eps") cfg.model.train.eps = real();
            else if (key == "pretrain_steps") cfg.model.pretrain.steps = u64();
            else if (key == "pretrain_batch_size") cfg.model.pretrain.batch_size = u64();
            else if (key == "pretrain_lr") cfg.model.pretrain.lr = real();
            else fail(origin, line_no, "unknown key '" + key + "' in [model]");
        } else {  // ledger
            if (key == "use_preset") cfg.ledger.use_preset = boolean();
            else if (key == "m") cfg.ledger.m = u64();
            else if (key == "n") cfg.ledger.n = u64();
            else if (key == "num_matrices") cfg.ledger.num_matrices = u64();
            else fail(origin, line_no, "unknown key '" + key + "' in [ledger]");
        }
    }
    if (!saw_seed) throw ConfigError(origin + ": missing required key 'seed' in [federation]");

    // Cross-field validation.
    auto reject = [&origin](const std::string& msg) { throw ConfigError(origin + ": " + msg); };
    if (cfg.fed.r_low < 1 || cfg.fed.r_high < 1) reject("ranks must be >= 1");
    if (cfg.fed.r_low > cfg.fed.r_high) reject("r_low must not exceed r_high");
    if (cfg.fed.num_clients < 1) reject("num_clients must be >= 1");
    if (cfg.fed.participation_fraction <= 0.0 || cfg.fed.participation_fraction > 1.0) {
        reject("participation_fraction must lie in (0, 1]");
    }
    if (cfg.fed.participation_fraction * static_cast<double>(cfg.fed.num_clients) < 1.0) {
        reject("participation_fraction selects no client");
    }
    if (cfg.fed.high_rank_fraction < 0.0 || cfg.fed.high_rank_fraction > 1.0) {
        reject("high_rank_fraction must lie in [0, 1]");
    }
    if (!cfg.data.balanced_first_client &&
        (cfg.data.hq_fraction <= 0.0 || cfg.data.hq_fraction >= 1.0)) {
        reject("hq_fraction must lie in (0, 1)");
    }
    if (cfg.data.alpha_hq <= 0.0 || cfg.data.alpha_lq <= 0.0) {
        reject("Dirichlet alphas must be positive");
    }
    if (cfg.data.num_classes < 2) reject("num_classes must be >= 2");
    if (cfg.data.feature_dim < cfg.data.num_classes) reject("feature_dim must be >= num_classes");
    if (cfg.model.train.batch_size < 1) reject("batch_size must be >= 1");
    if (cfg.fed.num_clients * cfg.data.samples_per_client > cfg.data.sizes.train) {
        reject("num_clients * samples_per_client exceeds train_size");
    }
    if (cfg.fed.strategy == AggregationStrategy::Homogeneous &&
        cfg.fed.r_low != cfg.fed.r_high &&
        (cfg.fed.rank_policy == RankPolicy::Oracle ||
         cfg.fed.rank_policy == RankPolicy::TopKValidation)) {
        reject("strategy homogeneous cannot aggregate mixed ranks; pick a heterogeneous "
               "strategy or a homogeneous rank policy");
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

std::string emit_effective_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[federation]\n";
    out << "seed = " << cfg.fed.seed << "\n";
    out << "rounds = " << cfg.fed.rounds << "\n";
    out << "num_clients = " << cfg.fed.num_clients << "\n";
    out << "participation_fraction = " << fmt_double(cfg.fed.participation_fraction) << "\n";
    out << "r_low = " << cfg.fed.r_low << "\n";
    out << "r_high = " << cfg.fed.r_high << "\n";
    out << "high_rank_fraction = " << fmt_double(cfg.fed.high_rank_fraction) << "\n";
    out << "strategy = " << to_string(cfg.fed.strategy) << "\n";
    out << "rank_policy = " << to_string(cfg.fed.rank_policy) << "\n";
    out << "[data]\n";
    out << "num_classes = " << cfg.data.num_classes << "\n";
    out << "feature_dim = " << cfg.data.feature_dim << "\n";
    out << "class_separation = " << fmt_double(cfg.data.class_separation) << "\n";
    out << "train_size = " << cfg.data.sizes.train << "\n";
    out << "val_size = " << cfg.data.sizes.val << "\n";
    out << "test_size = " << cfg.data.sizes.test << "\n";
    out << "pretrain_size = " << cfg.data.sizes.pretrain << "\n";
    out << "hq_fraction = " << fmt_double(cfg.data.hq_fraction) << "\n";
    out << "alpha_hq = " << fmt_double(cfg.data.alpha_hq) << "\n";
    out << "alpha_lq = " << fmt_double(cfg.data.alpha_lq) << "\n";
    out << "samples_per_client = " << cfg.data.samples_per_client << "\n";
    out << "balanced_first_client = " << (cfg.data.balanced_first_client ? "true" : "false")
        << "\n";
    out << "[model]\n";
    out << "hidden_dim = " << cfg.model.hidden_dim << "\n";
    out << "batch_size = " << cfg.model.train.batch_size << "\n";
    out << "local_epochs = " << cfg.model.train.epochs << "\n";
    out << "lr = " << fmt_double(cfg.model.train.lr) << "\n";
    out << "beta1 = " << fmt_double(cfg.model.train.beta1) << "\n";
    out << "beta2 = " << fmt_double(cfg.model.train.beta2) << "\n";
    out << "eps = " << fmt_double(cfg.model.train.eps) << "\n";
    out << "pretrain_steps = " << cfg.model.pretrain.steps << "\n";
    out << "pretrain_batch_size = " << cfg.model.pretrain.batch_size << "\n";
    out << "pretrain_lr = " << fmt_double(cfg.model.pretrain.lr) << "\n";
    out << "[ledger]\n";
    out << "use_preset = " << (cfg.ledger.use_preset ? "true" : "false") << "\n";
    out << "m = " << cfg.ledger.m << "\n";
    out << "n = " << cfg.ledger.n << "\n";
    out << "num_matrices = " << cfg.ledger.num_matrices << "\n";
    return out.str();
}

}  // namespace fedlora
