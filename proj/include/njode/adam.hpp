#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <utility>
#include <vector>

#include "njode/nn.hpp"

namespace njode {

/// Flat, ordered view over a parameter (or gradient) collection. The order is
/// fixed by construction, so moments in AdamState line up across steps.
struct ParamSpans {
    std::vector<std::pair<double*, std::size_t>> spans;
    std::size_t total = 0;

    void add(double* data, std::size_t n) {
        spans.emplace_back(data, n);
        total += n;
    }
};

ParamSpans param_spans(MlpParams& p);
ParamSpans param_spans(BoundedNetParams& p);

struct AdamState {
    Eigen::VectorXd m, v;
    long step = 0;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0005;

    static AdamState init(std::size_t n_params, double lr = 0.001, double beta1 = 0.9,
                          double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.0005);
};

/// One Adam update with bias correction. Decoupled weight decay multiplies the
/// parameters by (1 - lr * wd) before the Adam delta. Throws DivergenceError
/// on non-finite gradients.
void adam_step(ParamSpans& params, const ParamSpans& grads, AdamState& state);

}  // namespace njode
