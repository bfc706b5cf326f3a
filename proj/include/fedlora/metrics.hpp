#pragma once

#include <string>
#include <vector>

#include "fedlora/config.hpp"
#include "fedlora/federation.hpp"

namespace fedlora {

// CSV text: effective config as '#'-prefixed header lines, then a column
// header, one global row per round and one row per (round, participant).
// Columns: round,scope,client_id,rank,acc_before,acc_after,global_acc,
// uplink_bytes,cumulative_bytes. Byte-identical for identical inputs.
std::string render_metrics_csv(const std::vector<RoundRecord>& records,
                               const ExperimentConfig& cfg);

void emit_metrics(const std::vector<RoundRecord>& records, const ExperimentConfig& cfg,
                  const std::string& path);

// Per-round mean/min/max global accuracy and mean cumulative bytes across
// seeds. All runs must have the same number of records.
std::string render_sweep_summary(const std::vector<std::vector<RoundRecord>>& runs,
                                 const std::vector<std::uint64_t>& seeds);

}  // namespace fedlora
