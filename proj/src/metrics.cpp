#include "fedlora/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedlora {

namespace {

std::string fmt_acc(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string render_metrics_csv(const std::vector<RoundRecord>& records,
                               const ExperimentConfig& cfg) {
    std::ostringstream out;
    std::istringstream header(emit_effective_config(cfg));
    std::string line;
    while (std::getline(header, line)) out << "# " << line << "\n";
    out << "round,scope,client_id,rank,acc_before,acc_after,global_acc,uplink_bytes,"
           "cumulative_bytes\n";
    for (const RoundRecord& r : records) {
        out << r.round << ",global,-1,-1,,," << fmt_acc(r.global_acc) << "," << r.uplink_bytes
            << "," << r.cumulative_bytes << "\n";
        for (const ParticipantRecord& p : r.participants) {
            out << r.round << ",client," << p.client_id << "," << p.rank << ","
                << fmt_acc(p.acc_before) << "," << fmt_acc(p.acc_after) << ",,,\n";
        }
    }
    return out.str();
}

void emit_metrics(const std::vector<RoundRecord>& records, const ExperimentConfig& cfg,
                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw std::runtime_error("emit_metrics: cannot open " + path);
    out << render_metrics_csv(records, cfg);
    if (!out) throw std::runtime_error("emit_metrics: write failed for " + path);
}

std::string render_sweep_summary(const std::vector<std::vector<RoundRecord>>& runs,
                                 const std::vector<std::uint64_t>& seeds) {
    if (runs.empty()) throw std::invalid_argument("render_sweep_summary: no runs");
    const std::size_t rounds = runs.front().size();
    for (const auto& run : runs) {
        if (run.size() != rounds) {
            throw std::invalid_argument("render_sweep_summary: runs have unequal round counts");
        }
    }
    std::ostringstream out;
    out << "# seeds:";
    for (std::uint64_t s : seeds) out << " " << s;
    out << "\n";
    out << "round,mean_global_acc,min_global_acc,max_global_acc,mean_cumulative_bytes\n";
    for (std::size_t i = 0; i < rounds; ++i) {
        double mean = 0.0, lo = 1.0, hi = 0.0, bytes = 0.0;
        for (const auto& run : runs) {
            const double a = run[i].global_acc;
            mean += a;
            lo = std::min(lo, a);
            hi = std::max(hi, a);
            bytes += static_cast<double>(run[i].cumulative_bytes);
        }
        mean /= static_cast<double>(runs.size());
        bytes /= static_cast<double>(runs.size());
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.1f\n", runs.front()[i].round, mean,
                      lo, hi, bytes);
        out << buf;
    }
    return out.str();
}

}  // namespace fedlora
