#include "njode/adam.hpp"

#include <cmath>

#include "njode/errors.hpp"

namespace njode {

ParamSpans param_spans(MlpParams& p) {
    ParamSpans s;
    for (std::size_t l = 0; l < p.W.size(); ++l) {
        s.add(p.W[l].data(), static_cast<std::size_t>(p.W[l].size()));
        s.add(p.b[l].data(), static_cast<std::size_t>(p.b[l].size()));
    }
    return s;
}

ParamSpans param_spans(BoundedNetParams& p) {
    ParamSpans s = param_spans(p.net);
    s.add(&p.gamma, 1);
    return s;
}

AdamState AdamState::init(std::size_t n_params, double lr, double beta1, double beta2, double eps,
                          double weight_decay) {
    AdamState st;
    st.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params));
    st.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params));
    st.lr = lr;
    st.beta1 = beta1;
    st.beta2 = beta2;
    st.eps = eps;
    st.weight_decay = weight_decay;
    return st;
}

void adam_step(ParamSpans& params, const ParamSpans& grads, AdamState& s) {
    if (params.total != grads.total || static_cast<std::size_t>(s.m.size()) != params.total)
        throw InvalidInputError("adam_step: shape mismatch between params, grads and state");
    for (const auto& [g, n] : grads.spans)
        for (std::size_t i = 0; i < n; ++i)
            if (!std::isfinite(g[i])) throw DivergenceError("adam_step: non-finite gradient");

    s.step += 1;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    const double decay = 1.0 - s.lr * s.weight_decay;

    std::size_t k = 0;
    for (std::size_t span = 0; span < params.spans.size(); ++span) {
        double* p = params.spans[span].first;
        const double* g = grads.spans[span].first;
        const std::size_t n = params.spans[span].second;
        if (n != grads.spans[span].second) throw InvalidInputError("adam_step: span shape mismatch");
        for (std::size_t i = 0; i < n; ++i, ++k) {
            p[i] *= decay;
            s.m[k] = s.beta1 * s.m[k] + (1.0 - s.beta1) * g[i];
            s.v[k] = s.beta2 * s.v[k] + (1.0 - s.beta2) * g[i] * g[i];
            const double mhat = s.m[k] / bc1;
            const double vhat = s.v[k] / bc2;
            p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
        }
    }
}

}  // namespace njode
