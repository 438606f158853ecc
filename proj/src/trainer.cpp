#include "posereg/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "posereg/rng.hpp"

namespace posereg {

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state, double lr) {
    if (params.size() != grads.size()) throw ShapeMismatch("parameter/gradient size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

namespace {

Pose decode_cell_pose(const OffsetField& offsets, int x, int y) {
    Pose pose;
    pose.keypoints.reserve(offsets.num_keypoints);
    for (int i = 0; i < offsets.num_keypoints; ++i) {
        const Vec2 off = offsets.offset(i, x, y);
        pose.keypoints.push_back({x - off.x, y - off.y, kLabeledVisible});
    }
    return pose;
}

struct SceneSupervision {
    RegionAssignment assignment;
    ScoreMap score_target;
    WeightMap weights;
    OffsetTarget offset_target;
};

SceneSupervision build_supervision(const ModelOutputs& outputs, const SyntheticScene& scene,
                                   const TrainConfig& cfg, const FalloffConstants& kc) {
    SceneSupervision sup;
    GridGeometry geom{outputs.score.height, outputs.score.width, cfg.scene.geom.stride};
    sup.assignment = assign_regions(scene.annotations, geom, cfg.gamma);
    const PoseProvider provider = [&](int x, int y) { return decode_cell_pose(outputs.offsets, x, y); };
    sup.score_target =
        build_score_target(cfg.label, provider, scene.annotations, sup.assignment, kc, cfg.gaussian_sigma);
    sup.weights = build_weight_map(sup.assignment);
    sup.offset_target = build_offset_target(scene.annotations, sup.assignment);
    return sup;
}

} // namespace

StepResult train_step(TinyModel& model, std::span<const SyntheticScene> batch, const TrainConfig& cfg,
                      AdamState& adam, StepDiagnostics* diagnostics) {
    const FalloffConstants kc = cfg.falloff();
    std::vector<double> grad_accum(model.num_params(), 0.0);
    std::vector<double> scene_grads;
    StepResult result;

    ad::Tape tape;
    for (size_t s = 0; s < batch.size(); ++s) {
        tape.reset();
        const SyntheticScene& scene = batch[s];
        const ForwardVars vars = model_forward_tape(tape, model, scene.input);
        const ModelOutputs outputs = read_outputs(tape, vars);
        const SceneSupervision sup = build_supervision(outputs, scene, cfg, kc);

        const LossValue li = weighted_l2(outputs.score, sup.score_target, sup.weights);
        const LossValue ld = smooth_l1(outputs.offsets, sup.offset_target, cfg.smooth_l1_beta);
        const TotalLoss total = total_loss(li, ld, cfg.lambda_score, cfg.lambda_offset);
        if (!std::isfinite(total.value))
            throw NonFiniteLoss("non-finite loss at scene seed " + std::to_string(scene.seed) +
                                " (score " + std::to_string(li.value) + ", offset " + std::to_string(ld.value) + ")");

        result.loss += total.value;
        result.score_loss += li.value;
        result.offset_loss += ld.value;

        // Seed output cotangents; the targets are constants by construction.
        for (size_t i = 0; i < total.score_grad.size(); ++i) {
            const double g = total.score_grad[i];
            if (g != 0.0) tape.seed(vars.cell_score[i], std::span<const double>(&g, 1));
        }
        for (int y = 0; y < outputs.offsets.height; ++y) {
            for (int x = 0; x < outputs.offsets.width; ++x) {
                for (int kp = 0; kp < outputs.offsets.num_keypoints; ++kp) {
                    const double gx = total.offset_grad[outputs.offsets.index(kp, 0, x, y)];
                    const double gy = total.offset_grad[outputs.offsets.index(kp, 1, x, y)];
                    if (gx == 0.0 && gy == 0.0) continue;
                    const double g2[2] = {gx, gy};
                    tape.seed(vars.cell_total_offset[vars.offset_index(kp, x, y)], g2);
                }
            }
        }
        tape.backward();
        collect_param_grads(tape, vars, scene_grads);
        for (size_t i = 0; i < grad_accum.size(); ++i) grad_accum[i] += scene_grads[i];

        if (diagnostics && s == 0) {
            diagnostics->score_target = sup.score_target;
            diagnostics->weights = sup.weights;
            diagnostics->assigned_cells.clear();
            diagnostics->decoded_poses.clear();
            diagnostics->assigned_instance.clear();
            for (int y = 0; y < sup.assignment.height; ++y) {
                for (int x = 0; x < sup.assignment.width; ++x) {
                    const int n = sup.assignment.at(x, y);
                    if (n == RegionAssignment::kNone) continue;
                    diagnostics->assigned_cells.emplace_back(x, y);
                    diagnostics->decoded_poses.push_back(decode_cell_pose(outputs.offsets, x, y));
                    diagnostics->assigned_instance.push_back(n);
                }
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad_accum) g *= inv;
    result.loss *= inv;
    result.score_loss *= inv;
    result.offset_loss *= inv;

    std::vector<double> params = flatten_params(model);
    adam_step(params, grad_accum, adam, cfg.lr);
    unflatten_params(model, params);
    return result;
}

std::vector<Candidate> decode_scene(const TinyModel& model, const SyntheticScene& scene, const TrainConfig& cfg) {
    const ModelOutputs outputs = model_forward(model, scene.input);
    std::vector<Candidate> candidates =
        extract_candidates(outputs.score, outputs.offsets, cfg.score_threshold, cfg.top_k);
    return oks_nms(std::move(candidates), cfg.nms_threshold, cfg.falloff());
}

std::vector<SyntheticScene> make_scene_pool(const TrainConfig& cfg, uint64_t stream, int count) {
    SceneParams params = cfg.scene;
    params.num_keypoints = cfg.model.num_keypoints;
    std::vector<SyntheticScene> pool;
    pool.reserve(count);
    for (int i = 0; i < count; ++i) {
        const uint64_t seed = derive_seed(derive_seed(cfg.seed, stream), static_cast<uint64_t>(i));
        pool.push_back(synth_scene_random_count(seed, params, cfg.min_instances, cfg.max_instances));
    }
    return pool;
}

ToyRunResult train_toy(const TrainConfig& cfg) {
    const std::vector<SyntheticScene> train_pool = make_scene_pool(cfg, 0xA11CEull, cfg.train_scenes);
    const std::vector<SyntheticScene> eval_pool = make_scene_pool(cfg, 0xE7A1ull, cfg.eval_scenes);

    ToyRunResult run;
    run.model = TinyModel::init(cfg.model, cfg.seed);
    AdamState adam;
    run.loss_history.reserve(cfg.steps);

    std::vector<SyntheticScene> batch;
    for (int step = 0; step < cfg.steps; ++step) {
        batch.clear();
        for (int j = 0; j < cfg.batch; ++j)
            batch.push_back(train_pool[(static_cast<size_t>(step) * cfg.batch + j) % train_pool.size()]);
        const StepResult r = train_step(run.model, batch, cfg, adam);
        run.loss_history.push_back(r.loss);
    }
    run.first_loss = run.loss_history.empty() ? 0.0 : run.loss_history.front();
    run.final_loss = run.loss_history.empty() ? 0.0 : run.loss_history.back();

    std::vector<ImageDetections> dets;
    std::vector<ImageGroundTruth> gts;
    for (size_t i = 0; i < eval_pool.size(); ++i) {
        ImageDetections d;
        d.image_id = static_cast<int>(i);
        for (const Candidate& c : decode_scene(run.model, eval_pool[i], cfg)) d.poses.push_back(c.pose);
        dets.push_back(std::move(d));
        gts.push_back({static_cast<int>(i), eval_pool[i].annotations});
    }
    run.eval = summarize(dets, gts, cfg.falloff());
    return run;
}

double finite_diff_check(const TinyModel& model, const SyntheticScene& scene, const TrainConfig& cfg,
                         double epsilon, int num_samples, uint64_t seed) {
    const FalloffConstants kc = cfg.falloff();

    // Analytic pass; targets are frozen at the current parameters, matching
    // how training treats them.
    ad::Tape tape;
    const ForwardVars vars = model_forward_tape(tape, model, scene.input);
    const ModelOutputs outputs = read_outputs(tape, vars);
    const SceneSupervision sup = build_supervision(outputs, scene, cfg, kc);

    const LossValue li = weighted_l2(outputs.score, sup.score_target, sup.weights);
    const LossValue ld = smooth_l1(outputs.offsets, sup.offset_target, cfg.smooth_l1_beta);
    const TotalLoss total = total_loss(li, ld, cfg.lambda_score, cfg.lambda_offset);
    (void)total;

    for (size_t i = 0; i < total.score_grad.size(); ++i) {
        const double g = total.score_grad[i];
        if (g != 0.0) tape.seed(vars.cell_score[i], std::span<const double>(&g, 1));
    }
    for (int y = 0; y < outputs.offsets.height; ++y) {
        for (int x = 0; x < outputs.offsets.width; ++x) {
            for (int kp = 0; kp < outputs.offsets.num_keypoints; ++kp) {
                const double gx = total.offset_grad[outputs.offsets.index(kp, 0, x, y)];
                const double gy = total.offset_grad[outputs.offsets.index(kp, 1, x, y)];
                if (gx == 0.0 && gy == 0.0) continue;
                const double g2[2] = {gx, gy};
                tape.seed(vars.cell_total_offset[vars.offset_index(kp, x, y)], g2);
            }
        }
    }
    tape.backward();
    std::vector<double> analytic;
    collect_param_grads(tape, vars, analytic);

    const std::vector<double> theta = flatten_params(model);
    TinyModel probe = model;
    const auto loss_at = [&](const std::vector<double>& flat) {
        unflatten_params(probe, flat);
        const ModelOutputs out = model_forward(probe, scene.input);
        const LossValue a = weighted_l2(out.score, sup.score_target, sup.weights);
        const LossValue b = smooth_l1(out.offsets, sup.offset_target, cfg.smooth_l1_beta);
        return cfg.lambda_score * a.value + cfg.lambda_offset * b.value;
    };

    // Sample distinct parameter indices.
    Rng rng(derive_seed(seed, 31));
    std::vector<size_t> indices;
    if (static_cast<size_t>(num_samples) >= theta.size()) {
        indices.resize(theta.size());
        for (size_t i = 0; i < theta.size(); ++i) indices[i] = i;
    } else {
        std::vector<uint8_t> used(theta.size(), 0);
        while (static_cast<int>(indices.size()) < num_samples) {
            const size_t i = static_cast<size_t>(rng.uniform_int(static_cast<int>(theta.size())));
            if (!used[i]) {
                used[i] = 1;
                indices.push_back(i);
            }
        }
    }

    double worst = 0.0;
    std::vector<double> flat = theta;
    for (size_t i : indices) {
        flat[i] = theta[i] + epsilon;
        const double lp = loss_at(flat);
        flat[i] = theta[i] - epsilon;
        const double lm = loss_at(flat);
        flat[i] = theta[i];
        const double numeric = (lp - lm) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

} // namespace posereg
