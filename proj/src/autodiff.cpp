#include "posereg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace posereg::ad {

namespace {

// Shared bilinear interpolation context: corner indices, fractional weights,
// and whether the positional derivative passes (it is zero once the
// coordinate is clamped to the border).
struct BilinearCtx {
    int x0, x1, y0, y1;
    double fx, fy;
    bool pass_x, pass_y;
};

BilinearCtx make_ctx(double px, double py, int h, int w) {
    BilinearCtx c{};
    c.pass_x = px >= 0.0 && px <= w - 1;
    c.pass_y = py >= 0.0 && py <= h - 1;

    const double xs = std::clamp(px, 0.0, static_cast<double>(w - 1));
    const double ys = std::clamp(py, 0.0, static_cast<double>(h - 1));
    int x0 = static_cast<int>(std::floor(xs));
    int y0 = static_cast<int>(std::floor(ys));
    if (x0 >= w - 1) x0 = w - 2;
    if (y0 >= h - 1) y0 = h - 2;
    if (x0 < 0) x0 = 0;
    if (y0 < 0) y0 = 0;
    c.x0 = x0;
    c.y0 = y0;
    c.x1 = std::min(x0 + 1, w - 1);
    c.y1 = std::min(y0 + 1, h - 1);
    c.fx = xs - x0;
    c.fy = ys - y0;
    return c;
}

void sample_forward(const double* grid, int channels, int h, int w, const BilinearCtx& c, double* out) {
    const double w00 = (1.0 - c.fy) * (1.0 - c.fx);
    const double w01 = (1.0 - c.fy) * c.fx;
    const double w10 = c.fy * (1.0 - c.fx);
    const double w11 = c.fy * c.fx;
    const size_t plane = static_cast<size_t>(h) * w;
    const size_t i00 = static_cast<size_t>(c.y0) * w + c.x0;
    const size_t i01 = static_cast<size_t>(c.y0) * w + c.x1;
    const size_t i10 = static_cast<size_t>(c.y1) * w + c.x0;
    const size_t i11 = static_cast<size_t>(c.y1) * w + c.x1;
    for (int ch = 0; ch < channels; ++ch) {
        const double* g = grid + ch * plane;
        out[ch] += w00 * g[i00] + w01 * g[i01] + w10 * g[i10] + w11 * g[i11];
    }
}

// Accumulates grid cotangents and returns the positional cotangent (dx, dy).
Vec2 sample_backward(const double* grid, double* grid_grad, int channels, int h, int w,
                     const BilinearCtx& c, const double* cot) {
    const double w00 = (1.0 - c.fy) * (1.0 - c.fx);
    const double w01 = (1.0 - c.fy) * c.fx;
    const double w10 = c.fy * (1.0 - c.fx);
    const double w11 = c.fy * c.fx;
    const size_t plane = static_cast<size_t>(h) * w;
    const size_t i00 = static_cast<size_t>(c.y0) * w + c.x0;
    const size_t i01 = static_cast<size_t>(c.y0) * w + c.x1;
    const size_t i10 = static_cast<size_t>(c.y1) * w + c.x0;
    const size_t i11 = static_cast<size_t>(c.y1) * w + c.x1;

    double dx = 0.0, dy = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
        const double* g = grid + ch * plane;
        double* gg = grid_grad + ch * plane;
        const double co = cot[ch];
        gg[i00] += w00 * co;
        gg[i01] += w01 * co;
        gg[i10] += w10 * co;
        gg[i11] += w11 * co;
        dx += co * ((1.0 - c.fy) * (g[i01] - g[i00]) + c.fy * (g[i11] - g[i10]));
        dy += co * ((1.0 - c.fx) * (g[i10] - g[i00]) + c.fx * (g[i11] - g[i01]));
    }
    return {c.pass_x ? dx : 0.0, c.pass_y ? dy : 0.0};
}

} // namespace

VarId Tape::push(Op op, size_t n, VarId a, VarId b, VarId c) {
    Node node;
    node.op = op;
    node.in[0] = a;
    node.in[1] = b;
    node.in[2] = c;
    node.val = static_cast<int64_t>(val_.size());
    node.n = static_cast<int32_t>(n);
    val_.resize(val_.size() + n, 0.0);
    grad_.resize(grad_.size() + n, 0.0);
    nodes_.push_back(node);
    return static_cast<VarId>(nodes_.size() - 1);
}

VarId Tape::leaf(size_t n) { return push(Op::kLeaf, n); }

VarId Tape::leaf(std::span<const double> v) {
    const VarId id = push(Op::kLeaf, v.size());
    std::copy(v.begin(), v.end(), val_.begin() + nodes_[id].val);
    return id;
}

std::span<double> Tape::value(VarId id) { return {val_.data() + nodes_[id].val, static_cast<size_t>(nodes_[id].n)}; }
std::span<const double> Tape::value(VarId id) const {
    return {val_.data() + nodes_[id].val, static_cast<size_t>(nodes_[id].n)};
}
std::span<double> Tape::grad(VarId id) { return {grad_.data() + nodes_[id].val, static_cast<size_t>(nodes_[id].n)}; }
std::span<const double> Tape::grad(VarId id) const {
    return {grad_.data() + nodes_[id].val, static_cast<size_t>(nodes_[id].n)};
}

void Tape::seed(VarId id, std::span<const double> cotangent) {
    if (cotangent.size() != static_cast<size_t>(nodes_[id].n))
        throw TapeMismatch("cotangent size " + std::to_string(cotangent.size()) + " does not match variable size " +
                           std::to_string(nodes_[id].n));
    auto g = grad(id);
    for (size_t i = 0; i < cotangent.size(); ++i) g[i] += cotangent[i];
}

VarId Tape::conv2d(VarId x, VarId w, VarId b, int cin, int cout, int h, int width, int ksize) {
    if (size(x) != static_cast<size_t>(cin) * h * width ||
        size(w) != static_cast<size_t>(cout) * cin * ksize * ksize || size(b) != static_cast<size_t>(cout))
        throw ShapeMismatch("conv2d operand sizes do not match the declared dimensions");
    const VarId id = push(Op::kConv2d, static_cast<size_t>(cout) * h * width, x, w, b);
    Node& node = nodes_[id];
    node.imeta[0] = cout;
    node.imeta[1] = ksize;
    node.imeta[2] = h;
    node.imeta[3] = width;

    const int pad = ksize / 2;
    const double* xin = val_.data() + nodes_[x].val;
    const double* wt = val_.data() + nodes_[w].val;
    const double* bias = val_.data() + nodes_[b].val;
    double* out = val_.data() + node.val;
    const size_t plane = static_cast<size_t>(h) * width;
    for (int co = 0; co < cout; ++co) {
        double* oplane = out + co * plane;
        for (size_t i = 0; i < plane; ++i) oplane[i] = bias[co];
        for (int ci = 0; ci < cin; ++ci) {
            const double* iplane = xin + ci * plane;
            const double* kmat = wt + (static_cast<size_t>(co) * cin + ci) * ksize * ksize;
            for (int ky = 0; ky < ksize; ++ky) {
                const int dy = ky - pad;
                for (int kx = 0; kx < ksize; ++kx) {
                    const int dx = kx - pad;
                    const double kv = kmat[ky * ksize + kx];
                    if (kv == 0.0) continue;
                    const int y_lo = std::max(0, -dy), y_hi = std::min(h, h - dy);
                    const int x_lo = std::max(0, -dx), x_hi = std::min(width, width - dx);
                    for (int y = y_lo; y < y_hi; ++y) {
                        const double* src = iplane + static_cast<size_t>(y + dy) * width + dx;
                        double* dst = oplane + static_cast<size_t>(y) * width;
                        for (int xc = x_lo; xc < x_hi; ++xc) dst[xc] += kv * src[xc];
                    }
                }
            }
        }
    }
    return id;
}

VarId Tape::tanh_op(VarId x) {
    const VarId id = push(Op::kTanh, size(x), x);
    const double* xin = val_.data() + nodes_[x].val;
    double* out = val_.data() + nodes_[id].val;
    for (int32_t i = 0; i < nodes_[id].n; ++i) out[i] = std::tanh(xin[i]);
    return id;
}

VarId Tape::sigmoid(VarId x) {
    const VarId id = push(Op::kSigmoid, size(x), x);
    const double* xin = val_.data() + nodes_[x].val;
    double* out = val_.data() + nodes_[id].val;
    for (int32_t i = 0; i < nodes_[id].n; ++i) out[i] = 1.0 / (1.0 + std::exp(-xin[i]));
    return id;
}

VarId Tape::add(VarId a, VarId b) {
    if (size(a) != size(b)) throw ShapeMismatch("add operands differ in size");
    const VarId id = push(Op::kAdd, size(a), a, b);
    const double* av = val_.data() + nodes_[a].val;
    const double* bv = val_.data() + nodes_[b].val;
    double* out = val_.data() + nodes_[id].val;
    for (int32_t i = 0; i < nodes_[id].n; ++i) out[i] = av[i] + bv[i];
    return id;
}

VarId Tape::linear(VarId w, VarId b, VarId x) {
    const size_t out_dim = size(b);
    const size_t in_dim = size(x);
    if (size(w) != out_dim * in_dim) throw ShapeMismatch("linear weight size does not match in/out dimensions");
    const VarId id = push(Op::kLinear, out_dim, w, b, x);
    Node& node = nodes_[id];
    node.imeta[0] = static_cast<int32_t>(out_dim);
    node.imeta[1] = static_cast<int32_t>(in_dim);
    const double* wv = val_.data() + nodes_[w].val;
    const double* bv = val_.data() + nodes_[b].val;
    const double* xv = val_.data() + nodes_[x].val;
    double* out = val_.data() + node.val;
    for (size_t o = 0; o < out_dim; ++o) {
        double acc = bv[o];
        const double* row = wv + o * in_dim;
        for (size_t i = 0; i < in_dim; ++i) acc += row[i] * xv[i];
        out[o] = acc;
    }
    return id;
}

VarId Tape::bilinear(VarId grid, int c, int h, int w, VarId point) {
    if (size(grid) != static_cast<size_t>(c) * h * w || size(point) != 2)
        throw ShapeMismatch("bilinear operand sizes do not match the declared dimensions");
    const double px = value(point)[0];
    const double py = value(point)[1];
    const VarId id = push(Op::kBilinear, static_cast<size_t>(c), grid, point);
    Node& node = nodes_[id];
    node.imeta[0] = c;
    node.imeta[1] = h;
    node.imeta[2] = w;
    const BilinearCtx ctx = make_ctx(px, py, h, w);
    sample_forward(val_.data() + nodes_[grid].val, c, h, w, ctx, val_.data() + node.val);
    return id;
}

VarId Tape::sample_shift(VarId grid, int c, int h, int w, Vec2 base, VarId offset) {
    if (size(grid) != static_cast<size_t>(c) * h * w) throw ShapeMismatch("sample_shift grid size mismatch");
    if (offset != kNoVar && size(offset) != 2) throw ShapeMismatch("sample_shift offset must be a 2-vector");
    double px = base.x, py = base.y;
    if (offset != kNoVar) {
        px += value(offset)[0];
        py += value(offset)[1];
    }
    const VarId id = push(Op::kSampleShift, static_cast<size_t>(c), grid, offset);
    Node& node = nodes_[id];
    node.imeta[0] = c;
    node.imeta[1] = h;
    node.imeta[2] = w;
    node.dmeta[0] = base.x;
    node.dmeta[1] = base.y;
    const BilinearCtx ctx = make_ctx(px, py, h, w);
    sample_forward(val_.data() + nodes_[grid].val, c, h, w, ctx, val_.data() + node.val);
    return id;
}

VarId Tape::sample_sum_shift(VarId grid, int c, int h, int w, Vec2 base, VarId offset0, VarId offsets) {
    if (size(grid) != static_cast<size_t>(c) * h * w) throw ShapeMismatch("sample_sum_shift grid size mismatch");
    if (size(offset0) != 2) throw ShapeMismatch("sample_sum_shift base offset must be a 2-vector");
    if (size(offsets) % 2 != 0) throw ShapeMismatch("sample_sum_shift offsets must hold 2N values");
    const VarId id = push(Op::kSampleSumShift, static_cast<size_t>(c), grid, offset0, offsets);
    Node& node = nodes_[id];
    node.imeta[0] = c;
    node.imeta[1] = h;
    node.imeta[2] = w;
    node.dmeta[0] = base.x;
    node.dmeta[1] = base.y;
    const int num_points = static_cast<int>(size(offsets) / 2);
    const double bx = base.x + value(offset0)[0];
    const double by = base.y + value(offset0)[1];
    const double* offs = val_.data() + nodes_[offsets].val;
    for (int n = 0; n < num_points; ++n) {
        const BilinearCtx ctx = make_ctx(bx + offs[2 * n], by + offs[2 * n + 1], h, w);
        sample_forward(val_.data() + nodes_[grid].val, c, h, w, ctx, val_.data() + node.val);
    }
    return id;
}

VarId Tape::gather_concat(VarId grid, int c, int h, int w, Vec2 base, std::span<const VarId> offsets) {
    if (size(grid) != static_cast<size_t>(c) * h * w) throw ShapeMismatch("gather_concat grid size mismatch");
    for (VarId off : offsets)
        if (size(off) != 2) throw ShapeMismatch("gather_concat offsets must be 2-vectors");
    const VarId id = push(Op::kGatherConcat, static_cast<size_t>(c) * offsets.size(), grid);
    Node& node = nodes_[id];
    node.imeta[0] = c;
    node.imeta[1] = h;
    node.imeta[2] = w;
    node.dmeta[0] = base.x;
    node.dmeta[1] = base.y;
    node.extra_begin = static_cast<int32_t>(extra_.size());
    node.extra_count = static_cast<int32_t>(offsets.size());
    extra_.insert(extra_.end(), offsets.begin(), offsets.end());
    for (size_t i = 0; i < offsets.size(); ++i) {
        const double px = base.x + value(offsets[i])[0];
        const double py = base.y + value(offsets[i])[1];
        const BilinearCtx ctx = make_ctx(px, py, h, w);
        sample_forward(val_.data() + nodes_[grid].val, c, h, w, ctx, val_.data() + node.val + i * c);
    }
    return id;
}

void Tape::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

void Tape::reset() {
    nodes_.clear();
    val_.clear();
    grad_.clear();
    extra_.clear();
}

void Tape::backward_node(const Node& node) {
    const double* cot = grad_.data() + node.val;
    switch (node.op) {
        case Op::kLeaf:
            break;
        case Op::kTanh: {
            const double* y = val_.data() + node.val;
            double* gx = grad_.data() + nodes_[node.in[0]].val;
            for (int32_t i = 0; i < node.n; ++i) gx[i] += cot[i] * (1.0 - y[i] * y[i]);
            break;
        }
        case Op::kSigmoid: {
            const double* y = val_.data() + node.val;
            double* gx = grad_.data() + nodes_[node.in[0]].val;
            for (int32_t i = 0; i < node.n; ++i) gx[i] += cot[i] * y[i] * (1.0 - y[i]);
            break;
        }
        case Op::kAdd: {
            double* ga = grad_.data() + nodes_[node.in[0]].val;
            double* gb = grad_.data() + nodes_[node.in[1]].val;
            for (int32_t i = 0; i < node.n; ++i) {
                ga[i] += cot[i];
                gb[i] += cot[i];
            }
            break;
        }
        case Op::kLinear: {
            const int out_dim = node.imeta[0];
            const int in_dim = node.imeta[1];
            const double* wv = val_.data() + nodes_[node.in[0]].val;
            const double* xv = val_.data() + nodes_[node.in[2]].val;
            double* gw = grad_.data() + nodes_[node.in[0]].val;
            double* gb = grad_.data() + nodes_[node.in[1]].val;
            double* gx = grad_.data() + nodes_[node.in[2]].val;
            for (int o = 0; o < out_dim; ++o) {
                const double co = cot[o];
                if (co == 0.0) continue;
                gb[o] += co;
                const double* row = wv + static_cast<size_t>(o) * in_dim;
                double* grow = gw + static_cast<size_t>(o) * in_dim;
                for (int i = 0; i < in_dim; ++i) {
                    grow[i] += co * xv[i];
                    gx[i] += co * row[i];
                }
            }
            break;
        }
        case Op::kConv2d: {
            const int cout = node.imeta[0];
            const int ksize = node.imeta[1];
            const int h = node.imeta[2];
            const int w = node.imeta[3];
            const int pad = ksize / 2;
            const Node& xn = nodes_[node.in[0]];
            const int cin = static_cast<int>(xn.n / (h * w));
            const double* xin = val_.data() + xn.val;
            const double* wt = val_.data() + nodes_[node.in[1]].val;
            double* gx = grad_.data() + xn.val;
            double* gw = grad_.data() + nodes_[node.in[1]].val;
            double* gb = grad_.data() + nodes_[node.in[2]].val;
            const size_t plane = static_cast<size_t>(h) * w;
            for (int co = 0; co < cout; ++co) {
                const double* gout = cot + co * plane;
                double acc_b = 0.0;
                for (size_t i = 0; i < plane; ++i) acc_b += gout[i];
                gb[co] += acc_b;
                for (int ci = 0; ci < cin; ++ci) {
                    const double* iplane = xin + ci * plane;
                    double* giplane = gx + ci * plane;
                    const double* kmat = wt + (static_cast<size_t>(co) * cin + ci) * ksize * ksize;
                    double* gkmat = gw + (static_cast<size_t>(co) * cin + ci) * ksize * ksize;
                    for (int ky = 0; ky < ksize; ++ky) {
                        const int dy = ky - pad;
                        for (int kx = 0; kx < ksize; ++kx) {
                            const int dx = kx - pad;
                            const double kv = kmat[ky * ksize + kx];
                            double acc_w = 0.0;
                            const int y_lo = std::max(0, -dy), y_hi = std::min(h, h - dy);
                            const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
                            for (int y = y_lo; y < y_hi; ++y) {
                                const double* src = iplane + static_cast<size_t>(y + dy) * w + dx;
                                double* gsrc = giplane + static_cast<size_t>(y + dy) * w + dx;
                                const double* go = gout + static_cast<size_t>(y) * w;
                                for (int xc = x_lo; xc < x_hi; ++xc) {
                                    acc_w += go[xc] * src[xc];
                                    gsrc[xc] += go[xc] * kv;
                                }
                            }
                            gkmat[ky * ksize + kx] += acc_w;
                        }
                    }
                }
            }
            break;
        }
        case Op::kBilinear: {
            const int c = node.imeta[0], h = node.imeta[1], w = node.imeta[2];
            const double* pt = val_.data() + nodes_[node.in[1]].val;
            const BilinearCtx ctx = make_ctx(pt[0], pt[1], h, w);
            const Vec2 dpos = sample_backward(val_.data() + nodes_[node.in[0]].val,
                                              grad_.data() + nodes_[node.in[0]].val, c, h, w, ctx, cot);
            double* gp = grad_.data() + nodes_[node.in[1]].val;
            gp[0] += dpos.x;
            gp[1] += dpos.y;
            break;
        }
        case Op::kSampleShift: {
            const int c = node.imeta[0], h = node.imeta[1], w = node.imeta[2];
            double px = node.dmeta[0], py = node.dmeta[1];
            if (node.in[1] != kNoVar) {
                const double* off = val_.data() + nodes_[node.in[1]].val;
                px += off[0];
                py += off[1];
            }
            const BilinearCtx ctx = make_ctx(px, py, h, w);
            const Vec2 dpos = sample_backward(val_.data() + nodes_[node.in[0]].val,
                                              grad_.data() + nodes_[node.in[0]].val, c, h, w, ctx, cot);
            if (node.in[1] != kNoVar) {
                double* go = grad_.data() + nodes_[node.in[1]].val;
                go[0] += dpos.x;
                go[1] += dpos.y;
            }
            break;
        }
        case Op::kSampleSumShift: {
            const int c = node.imeta[0], h = node.imeta[1], w = node.imeta[2];
            const double* off0 = val_.data() + nodes_[node.in[1]].val;
            const double* offs = val_.data() + nodes_[node.in[2]].val;
            double* goff0 = grad_.data() + nodes_[node.in[1]].val;
            double* goffs = grad_.data() + nodes_[node.in[2]].val;
            const int num_points = static_cast<int>(nodes_[node.in[2]].n / 2);
            const double bx = node.dmeta[0] + off0[0];
            const double by = node.dmeta[1] + off0[1];
            for (int n = 0; n < num_points; ++n) {
                const BilinearCtx ctx = make_ctx(bx + offs[2 * n], by + offs[2 * n + 1], h, w);
                const Vec2 dpos = sample_backward(val_.data() + nodes_[node.in[0]].val,
                                                  grad_.data() + nodes_[node.in[0]].val, c, h, w, ctx, cot);
                goff0[0] += dpos.x;
                goff0[1] += dpos.y;
                goffs[2 * n] += dpos.x;
                goffs[2 * n + 1] += dpos.y;
            }
            break;
        }
        case Op::kGatherConcat: {
            const int c = node.imeta[0], h = node.imeta[1], w = node.imeta[2];
            for (int32_t i = 0; i < node.extra_count; ++i) {
                const VarId off_id = extra_[node.extra_begin + i];
                const double* off = val_.data() + nodes_[off_id].val;
                const BilinearCtx ctx = make_ctx(node.dmeta[0] + off[0], node.dmeta[1] + off[1], h, w);
                const Vec2 dpos = sample_backward(val_.data() + nodes_[node.in[0]].val,
                                                  grad_.data() + nodes_[node.in[0]].val, c, h, w, ctx,
                                                  cot + static_cast<size_t>(i) * c);
                double* go = grad_.data() + nodes_[off_id].val;
                go[0] += dpos.x;
                go[1] += dpos.y;
            }
            break;
        }
    }
}

void Tape::backward() {
    for (size_t i = nodes_.size(); i-- > 0;) backward_node(nodes_[i]);
}

} // namespace posereg::ad
