#include "fedlora/aggregation.hpp"

#include <algorithm>
#include <stdexcept>

namespace fedlora {

std::string to_string(AggregationStrategy s) {
    switch (s) {
        case AggregationStrategy::Homogeneous: return "homogeneous";
        case AggregationStrategy::ZeroPad: return "zero_pad";
        case AggregationStrategy::FrobeniusZeroPad: return "frobenius_zero_pad";
        case AggregationStrategy::Replication: return "replication";
    }
    throw std::logic_error("to_string: bad AggregationStrategy");
}

AggregationStrategy strategy_from_string(const std::string& name) {
    if (name == "homogeneous") return AggregationStrategy::Homogeneous;
    if (name == "zero_pad") return AggregationStrategy::ZeroPad;
    if (name == "frobenius_zero_pad") return AggregationStrategy::FrobeniusZeroPad;
    if (name == "replication") return AggregationStrategy::Replication;
    throw std::invalid_argument("unknown aggregation strategy: " + name);
}

namespace {

std::vector<const ClientUpdate*> sorted_by_id(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw std::invalid_argument("aggregate: empty update list");
    std::vector<const ClientUpdate*> out;
    out.reserve(updates.size());
    for (const ClientUpdate& u : updates) out.push_back(&u);
    std::sort(out.begin(), out.end(),
              [](const ClientUpdate* a, const ClientUpdate* b) { return a->client_id < b->client_id; });
    return out;
}

// Sum-then-divide over adapters of equal rank, fixed order.
LoraAdapter mean_adapters(const std::vector<LoraAdapter>& adapters) {
    LoraAdapter acc = adapters.front();
    for (std::size_t i = 1; i < adapters.size(); ++i) {
        axpy(1.0, adapters[i].B, acc.B);
        axpy(1.0, adapters[i].A, acc.A);
    }
    const double k = static_cast<double>(adapters.size());
    for (double& v : acc.B.data) v /= k;
    for (double& v : acc.A.data) v /= k;
    return acc;
}

}  // namespace

LoraAdapter aggregate_homogeneous(const std::vector<ClientUpdate>& updates) {
    auto sorted = sorted_by_id(updates);
    const std::size_t r = sorted.front()->adapter.rank();
    std::vector<LoraAdapter> adapters;
    adapters.reserve(sorted.size());
    for (const ClientUpdate* u : sorted) {
        if (u->adapter.rank() != r) {
            throw std::invalid_argument(
                "aggregate_homogeneous: mixed ranks " + std::to_string(r) + " and " +
                std::to_string(u->adapter.rank()) +
                "; use a rank-heterogeneous strategy (zero_pad, frobenius_zero_pad, replication)");
        }
        adapters.push_back(u->adapter);
    }
    return mean_adapters(adapters);
}

LoraAdapter pad_zero(const LoraAdapter& adapter, std::size_t r_target) {
    if (r_target < adapter.rank()) {
        throw std::invalid_argument("pad_zero: r_target " + std::to_string(r_target) +
                                    " below adapter rank " + std::to_string(adapter.rank()));
    }
    LoraAdapter out;
    out.B = Matrix(adapter.m(), r_target);
    out.A = Matrix(r_target, adapter.n());
    for (std::size_t i = 0; i < adapter.m(); ++i) {
        for (std::size_t j = 0; j < adapter.rank(); ++j) out.B.at(i, j) = adapter.B.at(i, j);
    }
    for (std::size_t i = 0; i < adapter.rank(); ++i) {
        for (std::size_t j = 0; j < adapter.n(); ++j) out.A.at(i, j) = adapter.A.at(i, j);
    }
    return out;
}

LoraAdapter aggregate_zero_pad(const std::vector<ClientUpdate>& updates, std::size_t r_target) {
    auto sorted = sorted_by_id(updates);
    std::vector<LoraAdapter> padded;
    padded.reserve(sorted.size());
    for (const ClientUpdate* u : sorted) padded.push_back(pad_zero(u->adapter, r_target));
    return mean_adapters(padded);
}

LoraAdapter aggregate_frobenius_zero_pad(const std::vector<ClientUpdate>& updates,
                                         std::size_t r_target) {
    auto sorted = sorted_by_id(updates);
    std::vector<double> norms;
    norms.reserve(sorted.size());
    double total = 0.0;
    for (const ClientUpdate* u : sorted) {
        const double norm = frobenius_norm(delta(u->adapter));
        norms.push_back(norm);
        total += norm;
    }
    if (total == 0.0) {
        // All deltas vanish; weights are undefined, fall back to the mean.
        return aggregate_zero_pad(updates, r_target);
    }
    LoraAdapter acc;
    acc.B = Matrix(sorted.front()->adapter.m(), r_target);
    acc.A = Matrix(r_target, sorted.front()->adapter.n());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const LoraAdapter padded = pad_zero(sorted[i]->adapter, r_target);
        const double w = norms[i] / total;
        axpy(w, padded.B, acc.B);
        axpy(w, padded.A, acc.A);
    }
    return acc;
}

LoraAdapter pad_replicate(const LoraAdapter& low, const LoraAdapter& donor) {
    if (low.rank() >= donor.rank()) {
        throw std::invalid_argument("pad_replicate: low rank " + std::to_string(low.rank()) +
                                    " must be below donor rank " + std::to_string(donor.rank()));
    }
    if (low.m() != donor.m() || low.n() != donor.n()) {
        throw std::invalid_argument("pad_replicate: host shapes disagree, " + low.B.shape_str() +
                                    "/" + low.A.shape_str() + " vs donor " + donor.B.shape_str() +
                                    "/" + donor.A.shape_str());
    }
    LoraAdapter out;
    out.B = Matrix(low.m(), donor.rank());
    out.A = Matrix(donor.rank(), low.n());
    for (std::size_t i = 0; i < low.m(); ++i) {
        for (std::size_t j = 0; j < low.rank(); ++j) out.B.at(i, j) = low.B.at(i, j);
        for (std::size_t j = low.rank(); j < donor.rank(); ++j) out.B.at(i, j) = donor.B.at(i, j);
    }
    for (std::size_t i = 0; i < low.rank(); ++i) {
        for (std::size_t j = 0; j < low.n(); ++j) out.A.at(i, j) = low.A.at(i, j);
    }
    for (std::size_t i = low.rank(); i < donor.rank(); ++i) {
        for (std::size_t j = 0; j < low.n(); ++j) out.A.at(i, j) = donor.A.at(i, j);
    }
    return out;
}

LoraAdapter aggregate_replication(const std::vector<ClientUpdate>& updates, std::size_t r_target) {
    auto sorted = sorted_by_id(updates);
    std::vector<LoraAdapter> high;
    std::size_t low_rank = 0;
    for (const ClientUpdate* u : sorted) {
        const std::size_t r = u->adapter.rank();
        if (r == r_target) {
            high.push_back(u->adapter);
        } else if (r > r_target) {
            throw std::invalid_argument("aggregate_replication: update rank " + std::to_string(r) +
                                        " exceeds r_target " + std::to_string(r_target));
        } else if (low_rank == 0) {
            low_rank = r;
        } else if (r != low_rank) {
            throw std::invalid_argument(
                "aggregate_replication: low-rank updates must share one rank, got " +
                std::to_string(low_rank) + " and " + std::to_string(r));
        }
    }
    if (high.empty()) {
        throw std::invalid_argument(
            "aggregate_replication: no update at r_target to act as replication donor");
    }
    const LoraAdapter donor = mean_adapters(high);
    std::vector<LoraAdapter> all;
    all.reserve(sorted.size());
    for (const ClientUpdate* u : sorted) {
        if (u->adapter.rank() == r_target) {
            all.push_back(u->adapter);
        } else {
            all.push_back(pad_replicate(u->adapter, donor));
        }
    }
    return mean_adapters(all);
}

LoraAdapter downlink(const LoraAdapter& global, std::size_t client_rank) {
    if (client_rank > global.rank()) {
        throw std::invalid_argument("downlink: client rank " + std::to_string(client_rank) +
                                    " exceeds global rank " + std::to_string(global.rank()));
    }
    return truncate(global, client_rank);
}

LoraAdapter aggregate(AggregationStrategy strategy, const std::vector<ClientUpdate>& updates,
                      std::size_t r_target) {
    switch (strategy) {
        case AggregationStrategy::Homogeneous: return aggregate_homogeneous(updates);
        case AggregationStrategy::ZeroPad: return aggregate_zero_pad(updates, r_target);
        case AggregationStrategy::FrobeniusZeroPad:
            return aggregate_frobenius_zero_pad(updates, r_target);
        case AggregationStrategy::Replication: return aggregate_replication(updates, r_target);
    }
    throw std::logic_error("aggregate: bad strategy");
}

}  // namespace fedlora
