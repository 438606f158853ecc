#include "posereg/model.hpp"

#include <cmath>

#include "posereg/rng.hpp"

namespace posereg {

namespace {

void fill_uniform(std::vector<double>& v, Rng& rng, double bound) {
    for (double& x : v) x = rng.uniform(-bound, bound);
}

ConvLayer make_conv(int cin, int cout, int ksize, Rng& rng, double gain = 1.0) {
    ConvLayer layer;
    layer.cin = cin;
    layer.cout = cout;
    layer.ksize = ksize;
    layer.w.assign(static_cast<size_t>(cout) * cin * ksize * ksize, 0.0);
    layer.b.assign(cout, 0.0);
    fill_uniform(layer.w, rng, gain * std::sqrt(3.0 / (cin * ksize * ksize)));
    return layer;
}

} // namespace

TinyModel TinyModel::init(const ModelConfig& cfg, uint64_t seed) {
    Rng rng(derive_seed(seed, 17));
    TinyModel m;
    m.cfg = cfg;

    int cin = cfg.num_keypoints; // one evidence channel per keypoint
    for (int l = 0; l < cfg.conv_layers; ++l) {
        m.backbone.push_back(make_conv(cin, cfg.feat_channels, cfg.conv_kernel, rng));
        cin = cfg.feat_channels;
    }
    for (int i = 0; i < cfg.num_keypoints; ++i)
        m.kp_heads.push_back(make_conv(cfg.feat_channels, cfg.feat_channels, 1, rng));
    m.inst_head = make_conv(cfg.feat_channels, cfg.inst_channels, 1, rng);

    // Offset heads start small so queries begin near their centers.
    for (int i = 0; i < cfg.num_keypoints; ++i) {
        KqeParams p = KqeParams::zeros(cfg.feat_channels, cfg.n_semantic);
        fill_uniform(p.wq, rng, 0.1 * std::sqrt(3.0 / cfg.feat_channels));
        fill_uniform(p.ws, rng, 0.1 * std::sqrt(3.0 / cfg.feat_channels));
        fill_uniform(p.wr, rng, 0.1 * std::sqrt(3.0 / cfg.feat_channels));
        m.kqe.push_back(std::move(p));
    }

    m.score_w.assign(static_cast<size_t>(cfg.inst_channels) * cfg.num_keypoints, 0.0);
    fill_uniform(m.score_w, rng, std::sqrt(3.0 / m.score_w.size()));
    m.score_b.assign(1, -2.0); // start near the background score
    return m;
}

void TinyModel::visit(const std::function<void(std::vector<double>&)>& fn) {
    for (ConvLayer& l : backbone) {
        fn(l.w);
        fn(l.b);
    }
    for (ConvLayer& l : kp_heads) {
        fn(l.w);
        fn(l.b);
    }
    fn(inst_head.w);
    fn(inst_head.b);
    for (KqeParams& p : kqe) {
        fn(p.wq);
        fn(p.bq);
        fn(p.ws);
        fn(p.bs);
        fn(p.wr);
        fn(p.br);
    }
    fn(score_w);
    fn(score_b);
}

void TinyModel::visit(const std::function<void(const std::vector<double>&)>& fn) const {
    const_cast<TinyModel*>(this)->visit([&](std::vector<double>& v) { fn(v); });
}

size_t TinyModel::num_params() const {
    size_t n = 0;
    visit([&](const std::vector<double>& v) { n += v.size(); });
    return n;
}

std::vector<double> flatten_params(const TinyModel& model) {
    std::vector<double> flat;
    flat.reserve(model.num_params());
    model.visit([&](const std::vector<double>& v) { flat.insert(flat.end(), v.begin(), v.end()); });
    return flat;
}

void unflatten_params(TinyModel& model, std::span<const double> flat) {
    size_t pos = 0;
    model.visit([&](std::vector<double>& v) {
        std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
        pos += v.size();
    });
    if (pos != flat.size()) throw ShapeMismatch("flat parameter size does not match the model");
}

ForwardVars model_forward_tape(ad::Tape& tape, const TinyModel& model, const FeatureGrid& input) {
    const ModelConfig& cfg = model.cfg;
    if (input.channels != cfg.num_keypoints)
        throw ShapeMismatch("scene must have one evidence channel per keypoint");
    const int h = input.height;
    const int w = input.width;

    ForwardVars vars;
    vars.height = h;
    vars.width = w;
    vars.num_keypoints = cfg.num_keypoints;

    // Parameter leaves in visit order, remembered positionally.
    model.visit([&](const std::vector<double>& v) { vars.param_leaves.push_back(tape.leaf(v)); });
    size_t next = 0;
    auto take_leaf = [&]() { return vars.param_leaves[next++]; };

    const ad::VarId in = tape.leaf(input.values);

    // Backbone.
    ad::VarId feat = in;
    int cin = input.channels;
    std::vector<std::pair<ad::VarId, ad::VarId>> conv_leaves;
    for (size_t l = 0; l < model.backbone.size(); ++l) {
        const ad::VarId wv = take_leaf();
        const ad::VarId bv = take_leaf();
        feat = tape.conv2d(feat, wv, bv, cin, model.backbone[l].cout, h, w, model.backbone[l].ksize);
        feat = tape.tanh_op(feat);
        cin = model.backbone[l].cout;
    }

    // Branch heads (1x1 convs).
    std::vector<ad::VarId> rk(cfg.num_keypoints);
    for (int i = 0; i < cfg.num_keypoints; ++i) {
        const ad::VarId wv = take_leaf();
        const ad::VarId bv = take_leaf();
        rk[i] = tape.conv2d(feat, wv, bv, cfg.feat_channels, cfg.feat_channels, h, w, 1);
    }
    const ad::VarId inst_w = take_leaf();
    const ad::VarId inst_b = take_leaf();
    const ad::VarId ri = tape.conv2d(feat, inst_w, inst_b, cfg.feat_channels, cfg.inst_channels, h, w, 1);

    std::vector<KqeParamVars> kqe_vars(cfg.num_keypoints);
    for (int i = 0; i < cfg.num_keypoints; ++i) {
        KqeParamVars& p = kqe_vars[i];
        p.wq = take_leaf();
        p.bq = take_leaf();
        p.ws = take_leaf();
        p.bs = take_leaf();
        p.wr = take_leaf();
        p.br = take_leaf();
        p.n_points = cfg.n_semantic;
        p.channels = cfg.feat_channels;
    }
    const ad::VarId score_w = take_leaf();
    const ad::VarId score_b = take_leaf();

    vars.cell_score.resize(static_cast<size_t>(h) * w);
    vars.cell_total_offset.resize(static_cast<size_t>(h) * w * cfg.num_keypoints);
    vars.cell_query_offset.resize(static_cast<size_t>(h) * w * cfg.num_keypoints);

    std::vector<ad::VarId> query_offsets(cfg.num_keypoints);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec2 c{static_cast<double>(x), static_cast<double>(y)};
            for (int i = 0; i < cfg.num_keypoints; ++i) {
                const KqeVars kv = kqe_forward_tape(tape, rk[i], cfg.feat_channels, h, w, c, kqe_vars[i]);
                query_offsets[i] = kv.query_offset;
                vars.cell_total_offset[vars.offset_index(i, x, y)] = kv.total_offset;
                vars.cell_query_offset[vars.offset_index(i, x, y)] = kv.query_offset;
            }
            const ad::VarId pose_feat =
                pqe_forward_tape(tape, ri, cfg.inst_channels, h, w, c, query_offsets);
            const ad::VarId logit = tape.linear(score_w, score_b, pose_feat);
            vars.cell_score[vars.cell_index(x, y)] = tape.sigmoid(logit);
        }
    }
    return vars;
}

ModelOutputs read_outputs(const ad::Tape& tape, const ForwardVars& vars) {
    ModelOutputs out;
    out.score = ScoreMap(vars.height, vars.width);
    out.offsets = OffsetField(vars.num_keypoints, vars.height, vars.width);
    out.query_offsets = OffsetField(vars.num_keypoints, vars.height, vars.width);
    for (int y = 0; y < vars.height; ++y) {
        for (int x = 0; x < vars.width; ++x) {
            out.score.at(x, y) = tape.value(vars.cell_score[vars.cell_index(x, y)])[0];
            for (int i = 0; i < vars.num_keypoints; ++i) {
                auto total = tape.value(vars.cell_total_offset[vars.offset_index(i, x, y)]);
                out.offsets.set_offset(i, x, y, {total[0], total[1]});
                auto query = tape.value(vars.cell_query_offset[vars.offset_index(i, x, y)]);
                out.query_offsets.set_offset(i, x, y, {query[0], query[1]});
            }
        }
    }
    return out;
}

ModelOutputs model_forward(const TinyModel& model, const FeatureGrid& input) {
    ad::Tape tape;
    const ForwardVars vars = model_forward_tape(tape, model, input);
    return read_outputs(tape, vars);
}

void collect_param_grads(const ad::Tape& tape, const ForwardVars& vars, std::vector<double>& flat_out) {
    flat_out.clear();
    for (ad::VarId leaf : vars.param_leaves) {
        auto g = tape.grad(leaf);
        flat_out.insert(flat_out.end(), g.begin(), g.end());
    }
}

} // namespace posereg
