#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedlora {

struct CommLedgerEntry {
    std::string label;
    std::uint64_t params = 0;
    std::uint64_t bytes = 0;  // always 4 * params
    double percent_of_total = 0.0;
};

// (rank, population weight) pairs; weights sum to 1.
using RankMixture = std::vector<std::pair<std::size_t, double>>;

// Per-rank uplink cost entries plus a population-mixture entry, with bytes
// at 4 per parameter and percent relative to reference_total parameters.
std::vector<CommLedgerEntry> comm_table(std::size_t m, std::size_t n, std::size_t num_matrices,
                                        const std::vector<std::size_t>& ranks,
                                        const RankMixture& mixture,
                                        std::uint64_t reference_total);

// MB figures use a 1024*1024 divisor and two decimals.
std::string format_comm_table(const std::vector<CommLedgerEntry>& entries);

struct CommPreset {
    std::size_t m, n, num_matrices;
    std::vector<std::size_t> ranks;
    RankMixture mixture;
    std::uint64_t reference_total;
};

// "distilbert": 768x768 hosts, 18 adapted matrices, ranks {20, 7, 5},
// mixture 10% r=20 + 90% r=5, reference total 66.96M parameters.
CommPreset comm_preset(const std::string& name);

}  // namespace fedlora
