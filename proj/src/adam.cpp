#include "fedlora/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace fedlora {

AdamState AdamState::for_shape(std::size_t rows, std::size_t cols, double lr) {
    AdamState s;
    s.first_moment = Matrix(rows, cols);
    s.second_moment = Matrix(rows, cols);
    s.lr = lr;
    return s;
}

Matrix adam_step(const Matrix& param, const Matrix& grad, AdamState& state) {
    if (!param.same_shape(grad) || !param.same_shape(state.first_moment) ||
        !param.same_shape(state.second_moment)) {
        throw std::invalid_argument("adam_step: shape mismatch, param " + param.shape_str() +
                                    ", grad " + grad.shape_str() + ", moments " +
                                    state.first_moment.shape_str());
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    Matrix out = param;
    for (std::size_t i = 0; i < param.data.size(); ++i) {
        const double g = grad.data[i];
        double& m = state.first_moment.data[i];
        double& v = state.second_moment.data[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        out.data[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
    ensure_finite(out, "adam_step");
    return out;
}

}  // namespace fedlora
