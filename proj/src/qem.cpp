#include "posereg/qem.hpp"

#include <algorithm>

namespace posereg {

KqeParams KqeParams::zeros(int channels, int n_points) {
    KqeParams p;
    p.n_points = n_points;
    p.wq.assign(static_cast<size_t>(2) * channels, 0.0);
    p.bq.assign(2, 0.0);
    p.ws.assign(static_cast<size_t>(2) * n_points * channels, 0.0);
    p.bs.assign(static_cast<size_t>(2) * n_points, 0.0);
    p.wr.assign(static_cast<size_t>(2) * channels, 0.0);
    p.br.assign(2, 0.0);
    return p;
}

void KqeParams::validate(int channels) const {
    if (n_points < 0) throw ShapeMismatch("semantic point count must be >= 0");
    const size_t c = static_cast<size_t>(channels);
    if (wq.size() != 2 * c || bq.size() != 2 || ws.size() != 2 * static_cast<size_t>(n_points) * c ||
        bs.size() != 2 * static_cast<size_t>(n_points) || wr.size() != 2 * c || br.size() != 2)
        throw ShapeMismatch("query head shapes do not match feature channels / semantic point count");
}

std::vector<double> bilinear_sample(const FeatureGrid& grid, Vec2 point) {
    ad::Tape tape;
    const ad::VarId g = tape.leaf(grid.values);
    const ad::VarId p = tape.leaf(std::span<const double>(&point.x, 2));
    const ad::VarId out = tape.bilinear(g, grid.channels, grid.height, grid.width, p);
    auto v = tape.value(out);
    return {v.begin(), v.end()};
}

BilinearGrad bilinear_sample_vjp(const FeatureGrid& grid, Vec2 point, std::span<const double> cotangent) {
    ad::Tape tape;
    const ad::VarId g = tape.leaf(grid.values);
    const ad::VarId p = tape.leaf(std::span<const double>(&point.x, 2));
    const ad::VarId out = tape.bilinear(g, grid.channels, grid.height, grid.width, p);
    tape.seed(out, cotangent);
    tape.backward();

    BilinearGrad result;
    result.grid = FeatureGrid(grid.channels, grid.height, grid.width);
    auto gg = tape.grad(g);
    std::copy(gg.begin(), gg.end(), result.grid.values.begin());
    result.point = {tape.grad(p)[0], tape.grad(p)[1]};
    return result;
}

KqeParamVars kqe_params_to_tape(ad::Tape& tape, const KqeParams& params, int channels) {
    params.validate(channels);
    KqeParamVars v;
    v.n_points = params.n_points;
    v.channels = channels;
    v.wq = tape.leaf(params.wq);
    v.bq = tape.leaf(params.bq);
    v.ws = tape.leaf(params.ws);
    v.bs = tape.leaf(params.bs);
    v.wr = tape.leaf(params.wr);
    v.br = tape.leaf(params.br);
    return v;
}

KqeVars kqe_forward_tape(ad::Tape& tape, ad::VarId rk, int channels, int height, int width, Vec2 c,
                         const KqeParamVars& params) {
    if (tape.size(rk) != static_cast<size_t>(channels) * height * width)
        throw ShapeMismatch("keypoint feature grid size does not match declared dimensions");

    // Step 1: locate the keypoint query from the feature at the center.
    const ad::VarId feat_c = tape.sample_shift(rk, channels, height, width, c, ad::kNoVar);
    const ad::VarId query_offset = tape.linear(params.wq, params.bq, feat_c);

    // Step 2: place N semantic points around the query and sum their features.
    const ad::VarId feat_q = tape.sample_shift(rk, channels, height, width, c, query_offset);
    const ad::VarId semantic_offsets = tape.linear(params.ws, params.bs, feat_q);
    const ad::VarId transformed =
        tape.sample_sum_shift(rk, channels, height, width, c, query_offset, semantic_offsets);

    // Step 3: refine from the aggregated feature; the full displacement is the
    // sum of the two hops.
    const ad::VarId refine_offset = tape.linear(params.wr, params.br, transformed);
    const ad::VarId total_offset = tape.add(query_offset, refine_offset);

    return {query_offset, refine_offset, total_offset, transformed};
}

ad::VarId pqe_forward_tape(ad::Tape& tape, ad::VarId ri, int channels, int height, int width, Vec2 c,
                           std::span<const ad::VarId> query_displacements) {
    return tape.gather_concat(ri, channels, height, width, c, query_displacements);
}

namespace {

struct KqeScratch {
    ad::Tape tape;
    ad::VarId grid;
    KqeParamVars params;
    KqeVars vars;
};

KqeScratch run_kqe(const FeatureGrid& rk, Vec2 c, const KqeParams& params) {
    KqeScratch s;
    s.grid = s.tape.leaf(rk.values);
    s.params = kqe_params_to_tape(s.tape, params, rk.channels);
    s.vars = kqe_forward_tape(s.tape, s.grid, rk.channels, rk.height, rk.width, c, s.params);
    return s;
}

} // namespace

KqeOutput kqe_forward(const FeatureGrid& rk, Vec2 c, const KqeParams& params) {
    KqeScratch s = run_kqe(rk, c, params);
    KqeOutput out;
    out.query_offset = {s.tape.value(s.vars.query_offset)[0], s.tape.value(s.vars.query_offset)[1]};
    out.refine_offset = {s.tape.value(s.vars.refine_offset)[0], s.tape.value(s.vars.refine_offset)[1]};
    out.total_offset = {s.tape.value(s.vars.total_offset)[0], s.tape.value(s.vars.total_offset)[1]};
    out.query_position = c + out.query_offset;
    auto tf = s.tape.value(s.vars.transformed_feature);
    out.transformed_feature.assign(tf.begin(), tf.end());
    return out;
}

KqeGrad kqe_forward_vjp(const FeatureGrid& rk, Vec2 c, const KqeParams& params, Vec2 total_offset_cot,
                        std::span<const double> feature_cot) {
    KqeScratch s = run_kqe(rk, c, params);
    s.tape.seed(s.vars.total_offset, std::span<const double>(&total_offset_cot.x, 2));
    if (!feature_cot.empty()) s.tape.seed(s.vars.transformed_feature, feature_cot);
    s.tape.backward();

    KqeGrad g;
    g.grid = FeatureGrid(rk.channels, rk.height, rk.width);
    auto gg = s.tape.grad(s.grid);
    std::copy(gg.begin(), gg.end(), g.grid.values.begin());
    g.params = KqeParams::zeros(rk.channels, params.n_points);
    auto take = [&](ad::VarId id, std::vector<double>& dst) {
        auto src = s.tape.grad(id);
        dst.assign(src.begin(), src.end());
    };
    take(s.params.wq, g.params.wq);
    take(s.params.bq, g.params.bq);
    take(s.params.ws, g.params.ws);
    take(s.params.bs, g.params.bs);
    take(s.params.wr, g.params.wr);
    take(s.params.br, g.params.br);
    return g;
}

std::vector<double> pqe_forward(const FeatureGrid& ri, Vec2 c, std::span<const Vec2> query_displacements) {
    ad::Tape tape;
    const ad::VarId g = tape.leaf(ri.values);
    std::vector<ad::VarId> offs;
    offs.reserve(query_displacements.size());
    for (const Vec2& d : query_displacements) offs.push_back(tape.leaf(std::span<const double>(&d.x, 2)));
    const ad::VarId out = pqe_forward_tape(tape, g, ri.channels, ri.height, ri.width, c, offs);
    auto v = tape.value(out);
    return {v.begin(), v.end()};
}

PqeGrad pqe_forward_vjp(const FeatureGrid& ri, Vec2 c, std::span<const Vec2> query_displacements,
                        std::span<const double> cotangent) {
    ad::Tape tape;
    const ad::VarId g = tape.leaf(ri.values);
    std::vector<ad::VarId> offs;
    offs.reserve(query_displacements.size());
    for (const Vec2& d : query_displacements) offs.push_back(tape.leaf(std::span<const double>(&d.x, 2)));
    const ad::VarId out = pqe_forward_tape(tape, g, ri.channels, ri.height, ri.width, c, offs);
    tape.seed(out, cotangent);
    tape.backward();

    PqeGrad result;
    result.grid = FeatureGrid(ri.channels, ri.height, ri.width);
    auto gg = tape.grad(g);
    std::copy(gg.begin(), gg.end(), result.grid.values.begin());
    result.displacements.reserve(offs.size());
    for (ad::VarId off : offs) result.displacements.push_back({tape.grad(off)[0], tape.grad(off)[1]});
    return result;
}

} // namespace posereg
