#include "fedlora/comm.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fedlora {

namespace {

std::uint64_t rank_params(std::size_t m, std::size_t n, std::size_t num_matrices,
                          std::size_t rank) {
    return static_cast<std::uint64_t>(num_matrices) * (m + n) * rank;
}

}  // namespace

std::vector<CommLedgerEntry> comm_table(std::size_t m, std::size_t n, std::size_t num_matrices,
                                        const std::vector<std::size_t>& ranks,
                                        const RankMixture& mixture,
                                        std::uint64_t reference_total) {
    if (ranks.empty()) throw std::invalid_argument("comm_table: need at least one rank");
    std::vector<CommLedgerEntry> entries;
    for (std::size_t r : ranks) {
        CommLedgerEntry e;
        e.label = "LoRA (r=" + std::to_string(r) + ")";
        e.params = rank_params(m, n, num_matrices, r);
        e.bytes = 4 * e.params;
        e.percent_of_total =
            100.0 * static_cast<double>(e.params) / static_cast<double>(reference_total);
        entries.push_back(e);
    }
    if (!mixture.empty()) {
        double mean = 0.0;
        for (auto [r, w] : mixture) {
            mean += w * static_cast<double>(rank_params(m, n, num_matrices, r));
        }
        CommLedgerEntry e;
        e.label = "Mixture";
        e.params = static_cast<std::uint64_t>(std::llround(mean));
        e.bytes = 4 * e.params;
        e.percent_of_total =
            100.0 * static_cast<double>(e.params) / static_cast<double>(reference_total);
        entries.push_back(e);
    }
    return entries;
}

std::string format_comm_table(const std::vector<CommLedgerEntry>& entries) {
    std::ostringstream out;
    char buf[64];
    out << "method, num of parameters, communication cost, percent of total model\n";
    for (const CommLedgerEntry& e : entries) {
        const double mb = static_cast<double>(e.bytes) / (1024.0 * 1024.0);
        std::snprintf(buf, sizeof(buf), "%s, %llu, %.2fMB, %.2f%%\n", e.label.c_str(),
                      static_cast<unsigned long long>(e.params), mb, e.percent_of_total);
        out << buf;
    }
    return out.str();
}

CommPreset comm_preset(const std::string& name) {
    if (name == "distilbert") {
        CommPreset p;
        p.m = 768;
        p.n = 768;
        p.num_matrices = 18;
        p.ranks = {20, 7, 5};
        p.mixture = {{20, 0.1}, {5, 0.9}};
        p.reference_total = 66'960'000;
        return p;
    }
    throw std::invalid_argument("unknown comm-table preset: " + name);
}

}  // namespace fedlora
