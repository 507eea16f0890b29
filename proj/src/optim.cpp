#include "augscale/optim.hpp"

#include <cmath>

#include "augscale/error.hpp"

namespace augscale {

AdamWState make_adamw_state(const std::vector<Mat<float>*>& params) {
    AdamWState s;
    for (const Mat<float>* p : params) {
        s.m.emplace_back(p->rows, p->cols);
        s.v.emplace_back(p->rows, p->cols);
    }
    return s;
}

void adamw_step(const std::vector<Mat<float>*>& params, const std::vector<Mat<float>>& grads,
                AdamWState& state, const AdamWConfig& config) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw NumericalError("adamw: parameter/gradient/state count mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Mat<float>& p = *params[k];
        const Mat<float>& g = grads[k];
        if (!p.same_shape(g) || !p.same_shape(state.m[k]))
            throw NumericalError("adamw: shape mismatch at parameter " + std::to_string(k));
        Mat<float>& m = state.m[k];
        Mat<float>& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g.v[i];
            m.v[i] = static_cast<float>(config.beta1 * m.v[i] + (1.0 - config.beta1) * gi);
            v.v[i] = static_cast<float>(config.beta2 * v.v[i] + (1.0 - config.beta2) * gi * gi);
            const double mhat = m.v[i] / bc1;
            const double vhat = v.v[i] / bc2;
            const double update = mhat / (std::sqrt(vhat) + config.eps) +
                                  config.weight_decay * p.v[i];
            p.v[i] = static_cast<float>(p.v[i] - config.lr * update);
        }
    }
}

}  // namespace augscale
