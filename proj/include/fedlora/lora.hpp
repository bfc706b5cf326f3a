#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "fedlora/matrix.hpp"
#include "fedlora/rng.hpp"

namespace fedlora {

struct LoraConfig {
    std::size_t m = 0;  // output dim of the host matrix
    std::size_t n = 0;  // input dim of the host matrix
    std::size_t r = 1;
    std::size_t num_adapted_matrices = 1;
};

// Emits a warning on stderr when r >= mn/(m+n), i.e. when the adapter does
// not actually reduce the parameter count. Not an error: the run stays valid.
void warn_if_not_reducing(const LoraConfig& cfg);

// Low-rank update pair: delta = B * A with B m-by-r and A r-by-n.
struct LoraAdapter {
    Matrix B;
    Matrix A;

    std::size_t rank() const { return B.cols; }
    std::size_t m() const { return B.rows; }
    std::size_t n() const { return A.cols; }
};

// A ~ N(0, 1/r), B = 0, so the initial delta is exactly zero.
LoraAdapter init_adapter(const LoraConfig& cfg, Rng& rng);

Matrix delta(const LoraAdapter& adapter);

std::size_t param_count(const LoraConfig& cfg);

// Keeps the leading r_new columns of B and rows of A.
LoraAdapter truncate(const LoraAdapter& adapter, std::size_t r_new);

// Flat binary checkpoint layout: m, n, r as little-endian u64, then B
// row-major, then A row-major, little-endian f64.
void write_adapter(std::ostream& out, const LoraAdapter& adapter);
LoraAdapter read_adapter(std::istream& in);
void save_adapter(const std::string& path, const LoraAdapter& adapter);
LoraAdapter load_adapter(const std::string& path);

}  // namespace fedlora
