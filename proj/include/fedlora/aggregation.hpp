#pragma once

#include <string>
#include <vector>

#include "fedlora/lora.hpp"

namespace fedlora {

enum class AggregationStrategy { Homogeneous, ZeroPad, FrobeniusZeroPad, Replication };

std::string to_string(AggregationStrategy s);
AggregationStrategy strategy_from_string(const std::string& name);

struct ClientUpdate {
    int client_id = 0;
    LoraAdapter adapter;
    double sample_weight = 1.0;
};

// All aggregators sum in ascending client-id order so runs are bitwise
// reproducible and permutation invariance is exact.

// Factor-wise mean; requires every update at the same rank.
LoraAdapter aggregate_homogeneous(const std::vector<ClientUpdate>& updates);

// B gains zero columns, A gains zero rows; delta is unchanged exactly.
LoraAdapter pad_zero(const LoraAdapter& adapter, std::size_t r_target);

// Pad everything to r_target, then unweighted factor-wise mean.
LoraAdapter aggregate_zero_pad(const std::vector<ClientUpdate>& updates, std::size_t r_target);

// Zero-pad, then weight each update by ||B_i A_i||_F / sum_j ||B_j A_j||_F.
// Falls back to the unweighted mean when every delta is zero.
LoraAdapter aggregate_frobenius_zero_pad(const std::vector<ClientUpdate>& updates,
                                         std::size_t r_target);

// Extend a low-rank adapter with the donor's trailing columns of B and
// trailing rows of A.
LoraAdapter pad_replicate(const LoraAdapter& low, const LoraAdapter& donor);

// Three-step replication aggregation: mean the updates already at r_target,
// replicate that aggregate into each lower-rank update, then average all of
// them with the aggregate weighted by the high-rank client count.
LoraAdapter aggregate_replication(const std::vector<ClientUpdate>& updates, std::size_t r_target);

// Downlink view of the global adapter for a client at the given rank.
LoraAdapter downlink(const LoraAdapter& global, std::size_t client_rank);

LoraAdapter aggregate(AggregationStrategy strategy, const std::vector<ClientUpdate>& updates,
                      std::size_t r_target);

}  // namespace fedlora
