#include "fedlora/lora.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace fedlora {

void warn_if_not_reducing(const LoraConfig& cfg) {
    const double limit = static_cast<double>(cfg.m) * static_cast<double>(cfg.n) /
                         static_cast<double>(cfg.m + cfg.n);
    if (static_cast<double>(cfg.r) >= limit) {
        std::cerr << "warning: rank " << cfg.r << " does not reduce parameters for a " << cfg.m
                  << "x" << cfg.n << " matrix (needs r < " << limit << ")\n";
    }
}

LoraAdapter init_adapter(const LoraConfig& cfg, Rng& rng) {
    if (cfg.m < 1 || cfg.n < 1 || cfg.r < 1) {
        throw std::invalid_argument("init_adapter: dimensions and rank must be >= 1");
    }
    warn_if_not_reducing(cfg);
    LoraAdapter adapter;
    adapter.B = Matrix(cfg.m, cfg.r);
    adapter.A = Matrix(cfg.r, cfg.n);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.r));
    for (double& v : adapter.A.data) v = stddev * rng.normal();
    return adapter;
}

Matrix delta(const LoraAdapter& adapter) { return matmul(adapter.B, adapter.A); }

std::size_t param_count(const LoraConfig& cfg) {
    return cfg.num_adapted_matrices * (cfg.m + cfg.n) * cfg.r;
}

LoraAdapter truncate(const LoraAdapter& adapter, std::size_t r_new) {
    if (r_new > adapter.rank()) {
        throw std::invalid_argument("truncate: r_new " + std::to_string(r_new) +
                                    " exceeds adapter rank " + std::to_string(adapter.rank()));
    }
    LoraAdapter out;
    out.B = Matrix(adapter.m(), r_new);
    out.A = Matrix(r_new, adapter.n());
    for (std::size_t i = 0; i < adapter.m(); ++i) {
        for (std::size_t j = 0; j < r_new; ++j) out.B.at(i, j) = adapter.B.at(i, j);
    }
    for (std::size_t i = 0; i < r_new; ++i) {
        for (std::size_t j = 0; j < adapter.n(); ++j) out.A.at(i, j) = adapter.A.at(i, j);
    }
    return out;
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw std::runtime_error("read_adapter: truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void write_adapter(std::ostream& out, const LoraAdapter& adapter) {
    put_u64(out, adapter.m());
    put_u64(out, adapter.n());
    put_u64(out, adapter.rank());
    for (double v : adapter.B.data) put_f64(out, v);
    for (double v : adapter.A.data) put_f64(out, v);
}

LoraAdapter read_adapter(std::istream& in) {
    const std::uint64_t m = get_u64(in);
    const std::uint64_t n = get_u64(in);
    const std::uint64_t r = get_u64(in);
    LoraAdapter adapter;
    adapter.B = Matrix(m, r);
    adapter.A = Matrix(r, n);
    for (double& v : adapter.B.data) v = get_f64(in);
    for (double& v : adapter.A.data) v = get_f64(in);
    if (!in) throw std::runtime_error("read_adapter: truncated payload");
    return adapter;
}

void save_adapter(const std::string& path, const LoraAdapter& adapter) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_adapter: cannot open " + path);
    write_adapter(out, adapter);
    if (!out) throw std::runtime_error("save_adapter: write failed for " + path);
}

LoraAdapter load_adapter(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_adapter: cannot open " + path);
    return read_adapter(in);
}

}  // namespace fedlora
