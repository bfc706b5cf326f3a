#pragma once

#include "fedlora/matrix.hpp"

namespace fedlora {

struct AdamState {
    Matrix first_moment;
    Matrix second_moment;
    long long step = 0;
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_shape(std::size_t rows, std::size_t cols, double lr);
};

// One bias-corrected Adam update. Advances the state moments and step
// counter; returns the updated parameter.
Matrix adam_step(const Matrix& param, const Matrix& grad, AdamState& state);

}  // namespace fedlora
