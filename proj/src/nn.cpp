#include "njode/nn.hpp"

#include <cmath>
#include <cstring>

#include "njode/errors.hpp"

namespace njode {

void MlpParams::validate() const {
    if (W.size() != b.size()) throw InvalidInputError("MlpParams: weight/bias count mismatch");
    for (std::size_t l = 0; l < W.size(); ++l) {
        if (W[l].rows() != b[l].size()) throw InvalidInputError("MlpParams: bias length mismatch");
        if (l > 0 && W[l].cols() != W[l - 1].rows())
            throw InvalidInputError("MlpParams: consecutive layer dimensions must chain");
        if (!W[l].allFinite() || !b[l].allFinite())
            throw InvalidInputError("MlpParams: non-finite parameter");
    }
}

MlpParams make_mlp(int in, const std::vector<int>& hidden, int out, Activation act, Rng& rng) {
    MlpParams p;
    p.hidden_act = act;
    std::vector<int> dims{in};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l], fan_out = dims[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        RowMat W(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) W(i, j) = rng.uniform(-bound, bound);
        p.W.push_back(std::move(W));
        p.b.push_back(Vec::Zero(fan_out));
    }
    return p;
}

Vec gamma_clip(const Vec& x, double gamma) {
    if (!(gamma > 0.0)) throw InvalidInputError("gamma_clip: gamma must be positive");
    const double norm = x.norm();
    if (norm <= gamma) return x;
    return x * (gamma / norm);
}

Vec mlp_forward(const MlpParams& p, const Vec& x) {
    if (p.W.empty()) throw InvalidInputError("mlp_forward: empty network");
    if (x.size() != p.input_dim()) throw InvalidInputError("mlp_forward: input width mismatch");
    Vec h = x;
    for (int l = 0; l < p.n_layers(); ++l) {
        Vec a = p.W[l] * h + p.b[l];
        if (l + 1 < p.n_layers()) {
            if (p.hidden_act == Activation::Relu)
                a = a.cwiseMax(0.0);
            else
                a = a.array().tanh().matrix();
        }
        h = std::move(a);
    }
    return h;
}

Vec mlp_forward(const BoundedNetParams& p, const Vec& x) {
    return gamma_clip(mlp_forward(p.net, x), p.gamma);
}

MlpParams zero_like(const MlpParams& p) {
    MlpParams z;
    z.hidden_act = p.hidden_act;
    for (std::size_t l = 0; l < p.W.size(); ++l) {
        z.W.push_back(RowMat::Zero(p.W[l].rows(), p.W[l].cols()));
        z.b.push_back(Vec::Zero(p.b[l].size()));
    }
    return z;
}

BoundedNetParams zero_like(const BoundedNetParams& p) {
    return BoundedNetParams{zero_like(p.net), 0.0};
}

// ---------------------------------------------------------------------------
// Tape

void Tape::reset() {
    nodes_.clear();
    val_.clear();
    aux_.clear();
}

int Tape::alloc(int len) {
    const int off = static_cast<int>(val_.size());
    val_.resize(val_.size() + len);
    return off;
}

int Tape::aux_alloc(int len) {
    const int off = static_cast<int>(aux_.size());
    aux_.resize(aux_.size() + len);
    return off;
}

int Tape::push(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
}

Eigen::Map<const Vec> Tape::value(int node) const {
    const Node& n = nodes_[node];
    return {val_.data() + n.off, n.len};
}

double Tape::scalar_value(int node) const { return val_[nodes_[node].off]; }

Eigen::Map<const Vec> Tape::cotangent(int node) const {
    const Node& n = nodes_[node];
    return {cot_.data() + n.off, n.len};
}

int Tape::input(const double* data, int len) {
    Node n{Op::Input};
    n.len = len;
    n.off = alloc(len);
    std::memcpy(val_.data() + n.off, data, sizeof(double) * len);
    return push(n);
}

int Tape::concat_h_const(int h, const double* tail, int tail_len) {
    Node n{Op::Concat};
    n.a = h;
    const int hlen = (h >= 0) ? nodes_[h].len : 0;
    n.len = hlen + tail_len;
    n.off = alloc(n.len);
    if (h >= 0)
        std::memcpy(val_.data() + n.off, val_.data() + nodes_[h].off, sizeof(double) * hlen);
    std::memcpy(val_.data() + n.off + hlen, tail, sizeof(double) * tail_len);
    return push(n);
}

int Tape::affine(int x, const RowMat& W, const Vec& bias, int slot) {
    if (nodes_[x].len != W.cols()) throw InvalidInputError("Tape::affine: input width mismatch");
    Node n{Op::Affine};
    n.a = x;
    n.len = static_cast<int>(W.rows());
    n.off = alloc(n.len);
    n.W = &W;
    n.bias = &bias;
    n.slot = slot;
    Eigen::Map<Vec> y(val_.data() + n.off, n.len);
    Eigen::Map<const Vec> xin(val_.data() + nodes_[x].off, nodes_[x].len);
    y.noalias() = W * xin;
    y += bias;
    return push(n);
}

int Tape::activation(int x, Activation act) {
    Node n{act == Activation::Relu ? Op::Relu : Op::Tanh};
    n.a = x;
    n.len = nodes_[x].len;
    n.off = alloc(n.len);
    const double* in = val_.data() + nodes_[x].off;
    double* out = val_.data() + n.off;
    if (act == Activation::Relu) {
        for (int i = 0; i < n.len; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    } else {
        for (int i = 0; i < n.len; ++i) out[i] = std::tanh(in[i]);
    }
    return push(n);
}

int Tape::dropout(int x, double rate, Rng& rng) {
    if (rate <= 0.0) return x;
    Node n{Op::Dropout};
    n.a = x;
    n.len = nodes_[x].len;
    n.off = alloc(n.len);
    n.aux = aux_alloc(n.len);
    const double keep = 1.0 - rate, scale = 1.0 / keep;
    const double* in = val_.data() + nodes_[x].off;
    for (int i = 0; i < n.len; ++i) {
        const double m = rng.bernoulli(keep) ? scale : 0.0;
        aux_[n.aux + i] = m;
        val_[n.off + i] = in[i] * m;
    }
    return push(n);
}

int Tape::clip(int x, double gamma, int gamma_slot) {
    Node n{Op::Clip};
    n.a = x;
    n.len = nodes_[x].len;
    n.off = alloc(n.len);
    n.slot = gamma_slot;
    n.x1 = gamma;
    Eigen::Map<const Vec> xin(val_.data() + nodes_[x].off, n.len);
    Eigen::Map<Vec> y(val_.data() + n.off, n.len);
    const double norm = xin.norm();
    n.x2 = norm;
    if (norm <= gamma)
        y = xin;
    else
        y = xin * (gamma / norm);
    return push(n);
}

int Tape::axpy(int a, double s, int f) {
    Node n{Op::Axpy};
    n.a = a;
    n.b = f;
    n.x1 = s;
    n.len = nodes_[a].len;
    n.off = alloc(n.len);
    Eigen::Map<Vec>(val_.data() + n.off, n.len) =
        Eigen::Map<const Vec>(val_.data() + nodes_[a].off, n.len) +
        s * Eigen::Map<const Vec>(val_.data() + nodes_[f].off, n.len);
    return push(n);
}

int Tape::add(int a, int b) {
    Node n{Op::Add};
    n.a = a;
    n.b = b;
    n.len = nodes_[a].len;
    n.off = alloc(n.len);
    Eigen::Map<Vec>(val_.data() + n.off, n.len) =
        Eigen::Map<const Vec>(val_.data() + nodes_[a].off, n.len) +
        Eigen::Map<const Vec>(val_.data() + nodes_[b].off, n.len);
    return push(n);
}

int Tape::add_head(int a, int b) {
    Node n{Op::AddHead};
    n.a = a;
    n.b = b;
    n.len = nodes_[a].len;
    n.off = alloc(n.len);
    Eigen::Map<Vec>(val_.data() + n.off, n.len) =
        Eigen::Map<const Vec>(val_.data() + nodes_[a].off, n.len) +
        Eigen::Map<const Vec>(val_.data() + nodes_[b].off, n.len);
    return push(n);
}

int Tape::sq_err_masked(int y, const double* target, const double* mask, int len) {
    if (nodes_[y].len != len) throw InvalidInputError("Tape::sq_err_masked: width mismatch");
    Node n{Op::SqErrMasked};
    n.a = y;
    n.len = 1;
    n.off = alloc(1);
    n.c1 = target;
    n.c2 = mask;
    n.x1 = static_cast<double>(len);
    const double* v = val_.data() + nodes_[y].off;
    double s = 0.0;
    for (int i = 0; i < len; ++i) {
        const double e = mask[i] * (v[i] - target[i]);
        s += e * e;
    }
    val_[n.off] = s;
    return push(n);
}

int Tape::scalar_add(int a, int b) {
    Node n{Op::SAdd};
    n.a = a;
    n.b = b;
    n.len = 1;
    n.off = alloc(1);
    val_[n.off] = val_[nodes_[a].off] + val_[nodes_[b].off];
    return push(n);
}

int Tape::scalar_scale(int a, double c) {
    Node n{Op::SScale};
    n.a = a;
    n.x1 = c;
    n.len = 1;
    n.off = alloc(1);
    val_[n.off] = c * val_[nodes_[a].off];
    return push(n);
}

int Tape::scalar_sqrt_shift(int a, double eps) {
    Node n{Op::SSqrtShift};
    n.a = a;
    n.x1 = eps;
    n.len = 1;
    n.off = alloc(1);
    val_[n.off] = std::sqrt(val_[nodes_[a].off] + eps);
    return push(n);
}

int Tape::scalar_square(int a) {
    Node n{Op::SSquare};
    n.a = a;
    n.len = 1;
    n.off = alloc(1);
    const double v = val_[nodes_[a].off];
    val_[n.off] = v * v;
    return push(n);
}

int Tape::scalar_zero() {
    Node n{Op::SZero};
    n.len = 1;
    n.off = alloc(1);
    val_[n.off] = 0.0;
    return push(n);
}

void Tape::backward(int loss_node, GradSink& sink) {
    if (nodes_[loss_node].len != 1) throw InvalidInputError("Tape::backward: loss must be scalar");
    cot_.assign(val_.size(), 0.0);
    cot_[nodes_[loss_node].off] = 1.0;

    for (int id = loss_node; id >= 0; --id) {
        const Node& n = nodes_[id];
        const double* g = cot_.data() + n.off;
        switch (n.op) {
            case Op::Input:
            case Op::SZero:
                break;
            case Op::Concat:
                if (n.a >= 0) {
                    const int hlen = nodes_[n.a].len;
                    Eigen::Map<Vec>(cot_.data() + nodes_[n.a].off, hlen) +=
                        Eigen::Map<const Vec>(g, hlen);
                }
                break;
            case Op::Affine: {
                Eigen::Map<const Vec> gy(g, n.len);
                Eigen::Map<const Vec> x(val_.data() + nodes_[n.a].off, nodes_[n.a].len);
                Eigen::Map<Vec> gx(cot_.data() + nodes_[n.a].off, nodes_[n.a].len);
                gx.noalias() += n.W->transpose() * gy;
                if (n.slot >= 0) {
                    sink.W[n.slot]->noalias() += gy * x.transpose();
                    *sink.b[n.slot] += gy;
                }
                break;
            }
            case Op::Relu: {
                const double* xin = val_.data() + nodes_[n.a].off;
                double* gx = cot_.data() + nodes_[n.a].off;
                for (int i = 0; i < n.len; ++i)
                    if (xin[i] > 0.0) gx[i] += g[i];
                break;
            }
            case Op::Tanh: {
                const double* y = val_.data() + n.off;
                double* gx = cot_.data() + nodes_[n.a].off;
                for (int i = 0; i < n.len; ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
                break;
            }
            case Op::Dropout: {
                double* gx = cot_.data() + nodes_[n.a].off;
                for (int i = 0; i < n.len; ++i) gx[i] += g[i] * aux_[n.aux + i];
                break;
            }
            case Op::Clip: {
                // identity branch on |x| <= gamma (kink included by design)
                Eigen::Map<const Vec> gy(g, n.len);
                Eigen::Map<const Vec> x(val_.data() + nodes_[n.a].off, n.len);
                Eigen::Map<Vec> gx(cot_.data() + nodes_[n.a].off, n.len);
                const double gamma = n.x1, norm = n.x2;
                if (norm <= gamma) {
                    gx += gy;
                } else {
                    const double s = gamma / norm;
                    const double dot = gy.dot(x);
                    gx += s * gy - (s * dot / (norm * norm)) * x;
                    if (n.slot >= 0) *sink.gamma[n.slot] += dot / norm;
                }
                break;
            }
            case Op::Axpy: {
                Eigen::Map<const Vec> gy(g, n.len);
                Eigen::Map<Vec>(cot_.data() + nodes_[n.a].off, n.len) += gy;
                Eigen::Map<Vec>(cot_.data() + nodes_[n.b].off, n.len) += n.x1 * gy;
                break;
            }
            case Op::Add: {
                Eigen::Map<const Vec> gy(g, n.len);
                Eigen::Map<Vec>(cot_.data() + nodes_[n.a].off, n.len) += gy;
                Eigen::Map<Vec>(cot_.data() + nodes_[n.b].off, n.len) += gy;
                break;
            }
            case Op::AddHead: {
                Eigen::Map<const Vec> gy(g, n.len);
                Eigen::Map<Vec>(cot_.data() + nodes_[n.a].off, n.len) += gy;
                Eigen::Map<Vec>(cot_.data() + nodes_[n.b].off, n.len) += gy;
                break;
            }
            case Op::SqErrMasked: {
                const int len = static_cast<int>(n.x1);
                const double gs = g[0];
                const double* v = val_.data() + nodes_[n.a].off;
                double* gx = cot_.data() + nodes_[n.a].off;
                for (int i = 0; i < len; ++i)
                    gx[i] += gs * 2.0 * n.c2[i] * n.c2[i] * (v[i] - n.c1[i]);
                break;
            }
            case Op::SAdd:
                cot_[nodes_[n.a].off] += g[0];
                cot_[nodes_[n.b].off] += g[0];
                break;
            case Op::SScale:
                cot_[nodes_[n.a].off] += n.x1 * g[0];
                break;
            case Op::SSqrtShift:
                cot_[nodes_[n.a].off] += g[0] * 0.5 / val_[n.off];
                break;
            case Op::SSquare:
                cot_[nodes_[n.a].off] += g[0] * 2.0 * val_[nodes_[n.a].off];
                break;
        }
    }
}

int mlp_forward_tape(Tape& tape, const MlpParams& p, int x, int slot0, const DropoutConfig& dropout) {
    int h = x;
    for (int l = 0; l < p.n_layers(); ++l) {
        h = tape.affine(h, p.W[l], p.b[l], slot0 + l);
        if (l + 1 < p.n_layers()) {
            h = tape.activation(h, p.hidden_act);
            if (dropout.rate > 0.0) h = tape.dropout(h, dropout.rate, *dropout.rng);
        }
    }
    return h;
}

int mlp_forward_tape(Tape& tape, const BoundedNetParams& p, int x, int slot0, int gamma_slot,
                     const DropoutConfig& dropout) {
    const int y = mlp_forward_tape(tape, p.net, x, slot0, dropout);
    return tape.clip(y, p.gamma, gamma_slot);
}

}  // namespace njode
