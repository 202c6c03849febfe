#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "njode/paths.hpp"
#include "njode/rng.hpp"

namespace njode {

enum class Activation { Relu, Tanh };

/// Affine chain with an activation after every layer except the last.
struct MlpParams {
    std::vector<RowMat> W;
    std::vector<Vec> b;
    Activation hidden_act = Activation::Relu;

    int n_layers() const { return static_cast<int>(W.size()); }
    int input_dim() const { return W.empty() ? 0 : static_cast<int>(W.front().cols()); }
    int output_dim() const { return W.empty() ? 0 : static_cast<int>(W.back().rows()); }
    void validate() const;
};

/// Network whose output is radially clipped to norm gamma; gamma is trained
/// together with the inner weights.
struct BoundedNetParams {
    MlpParams net;
    double gamma = 100.0;
};

/// Glorot-uniform weights, zero biases.
MlpParams make_mlp(int in, const std::vector<int>& hidden, int out, Activation act, Rng& rng);

/// x * min(1, gamma / |x|_2); identity on |x|_2 <= gamma, 0 stays 0.
Vec gamma_clip(const Vec& x, double gamma);

/// Evaluation-mode forward passes (no dropout, no tape).
Vec mlp_forward(const MlpParams& p, const Vec& x);
Vec mlp_forward(const BoundedNetParams& p, const Vec& x);

struct DropoutConfig {
    double rate = 0.0;
    Rng* rng = nullptr;  // required when rate > 0
};

/// Gradient accumulation targets, indexed by the slot ids handed to the tape.
struct GradSink {
    std::vector<RowMat*> W;
    std::vector<Vec*> b;
    std::vector<double*> gamma;
};

/// Recorded forward computation over a flat value arena. Nodes are appended
/// in execution order, which is a valid topological order, so the reverse
/// sweep walks them back to front.
class Tape {
public:
    void reset();
    int n_nodes() const { return static_cast<int>(nodes_.size()); }

    /// Leaf holding borrowed-in values; collects input cotangents.
    int input(const double* data, int len);
    /// [value(h) | tail]; h = -1 makes the node a constant leaf of the tail only.
    int concat_h_const(int h, const double* tail, int tail_len);
    int affine(int x, const RowMat& W, const Vec& bias, int slot);
    int activation(int x, Activation act);
    /// Inverted dropout; identity when rate <= 0. Mask resampled per call.
    int dropout(int x, double rate, Rng& rng);
    int clip(int x, double gamma, int gamma_slot);
    /// a + s * f (Euler step).
    int axpy(int a, double s, int f);
    int add(int a, int b);
    /// a + b[0:len(a)] (decoder residual head).
    int add_head(int a, int b);

    /// Scalar nodes for loss assembly.
    int sq_err_masked(int y, const double* target, const double* mask, int len);
    int scalar_add(int a, int b);
    int scalar_scale(int a, double c);
    int scalar_sqrt_shift(int a, double eps);  // sqrt(value + eps)
    int scalar_square(int a);
    int scalar_zero();

    Eigen::Map<const Vec> value(int node) const;
    double scalar_value(int node) const;

    /// Reverse sweep from a scalar node; parameter gradients are accumulated
    /// into the sink (+=). Cotangents stay readable until the next forward.
    void backward(int loss_node, GradSink& sink);
    Eigen::Map<const Vec> cotangent(int node) const;

private:
    enum class Op : std::uint8_t {
        Input, Concat, Affine, Relu, Tanh, Dropout, Clip, Axpy, Add, AddHead,
        SqErrMasked, SAdd, SScale, SSqrtShift, SSquare, SZero
    };
    struct Node {
        Op op;
        int a = -1, b = -1;
        int off = 0, len = 0;
        int aux = -1;       // aux arena offset (dropout mask)
        int slot = -1;      // parameter slot
        double x1 = 0.0;    // payload: axpy scale / gamma / eps / scale factor
        double x2 = 0.0;    // payload: saved |x|_2 for clip
        const RowMat* W = nullptr;
        const Vec* bias = nullptr;
        const double* c1 = nullptr;  // borrowed target
        const double* c2 = nullptr;  // borrowed mask
    };

    int alloc(int len);
    int aux_alloc(int len);
    int push(Node n);

    std::vector<Node> nodes_;
    std::vector<double> val_;
    std::vector<double> aux_;
    std::vector<double> cot_;
};

/// Records a full MLP application on the tape. `slot0` is the slot of the
/// first layer; layer l uses slot0 + l.
int mlp_forward_tape(Tape& tape, const MlpParams& p, int x, int slot0, const DropoutConfig& dropout);
int mlp_forward_tape(Tape& tape, const BoundedNetParams& p, int x, int slot0, int gamma_slot,
                     const DropoutConfig& dropout);

/// Zero-initialized structures with the same shapes (gradient holders).
MlpParams zero_like(const MlpParams& p);
BoundedNetParams zero_like(const BoundedNetParams& p);

}  // namespace njode
