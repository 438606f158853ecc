#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posereg/errors.hpp"
#include "posereg/types.hpp"

namespace posereg::ad {

// Reverse-mode tape over flat double buffers. The op set is exactly what the
// regression pipeline needs: dense conv / linear layers, elementwise
// nonlinearities, and the bilinear sampling family (single sample, shifted
// sample, summed semantic-point samples, multi-query gather). Values and
// gradients live in two arena buffers owned by the tape; a training step
// builds one tape, seeds output gradients and runs backward().
//
// Tapes are single-owner: one tape per step, reset() reuses the storage.

using VarId = int32_t;
constexpr VarId kNoVar = -1;

class Tape {
public:
    /// New variable of size n, zero-initialized. Fill via value().
    VarId leaf(size_t n);
    VarId leaf(std::span<const double> v);

    // y = conv(x, w) + b with zero padding k/2, stride 1.
    // x: cin x h x w, w: cout x cin x k x k, b: cout, y: cout x h x w.
    VarId conv2d(VarId x, VarId w, VarId b, int cin, int cout, int h, int width, int ksize);

    VarId tanh_op(VarId x);
    VarId sigmoid(VarId x);
    VarId add(VarId a, VarId b);

    // y = W x + b. W is row-major (out x in), out = size(b).
    VarId linear(VarId w, VarId b, VarId x);

    // Border-clamped bilinear sample of a c x h x w grid at a 2-vector point.
    VarId bilinear(VarId grid, int c, int h, int w, VarId point);

    // Sample at base + offset. offset may be kNoVar for a constant point.
    VarId sample_shift(VarId grid, int c, int h, int w, Vec2 base, VarId offset);

    // sum_n sample(grid, base + offset0 + offsets[2n:2n+2]); offsets holds 2N
    // values. N = 0 yields a zero vector.
    VarId sample_sum_shift(VarId grid, int c, int h, int w, Vec2 base, VarId offset0, VarId offsets);

    // concat_i sample(grid, base + offsets[i]); each offsets[i] is a 2-vector
    // variable. Output size c * offsets.size().
    VarId gather_concat(VarId grid, int c, int h, int w, Vec2 base, std::span<const VarId> offsets);

    std::span<double> value(VarId id);
    std::span<const double> value(VarId id) const;
    std::span<double> grad(VarId id);
    std::span<const double> grad(VarId id) const;
    size_t size(VarId id) const { return nodes_[id].n; }

    /// Sets the cotangent of an output. Throws TapeMismatch on size mismatch.
    void seed(VarId id, std::span<const double> cotangent);

    void zero_grad();
    /// Reverse sweep; accumulates into grad() of every reachable variable.
    void backward();

    void reset();
    size_t num_nodes() const { return nodes_.size(); }

private:
    enum class Op : uint8_t {
        kLeaf,
        kConv2d,
        kTanh,
        kSigmoid,
        kAdd,
        kLinear,
        kBilinear,
        kSampleShift,
        kSampleSumShift,
        kGatherConcat,
    };

    struct Node {
        Op op;
        VarId in[3];
        int32_t extra_begin = 0, extra_count = 0;
        int64_t val = 0; // offset into arenas
        int32_t n = 0;   // value size
        int32_t imeta[4] = {0, 0, 0, 0};
        double dmeta[2] = {0.0, 0.0};
    };

    VarId push(Op op, size_t n, VarId a = kNoVar, VarId b = kNoVar, VarId c = kNoVar);
    void backward_node(const Node& node);

    std::vector<Node> nodes_;
    std::vector<double> val_;
    std::vector<double> grad_;
    std::vector<VarId> extra_;
};

} // namespace posereg::ad
