#pragma once

#include <vector>

#include "augscale/tape.hpp"

namespace augscale {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// First/second moment buffers, parallel to the parameter list order.
struct AdamWState {
    long step = 0;
    std::vector<Mat<float>> m;
    std::vector<Mat<float>> v;
};

AdamWState make_adamw_state(const std::vector<Mat<float>*>& params);

// Decoupled weight decay update; deterministic. Throws NumericalError on a
// shape mismatch between parameters, gradients and state.
void adamw_step(const std::vector<Mat<float>*>& params, const std::vector<Mat<float>>& grads,
                AdamWState& state, const AdamWConfig& config);

}  // namespace augscale
