#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "posereg/decoder.hpp"
#include "posereg/evaluator.hpp"
#include "posereg/losses.hpp"
#include "posereg/model.hpp"
#include "posereg/synthetic.hpp"
#include "posereg/target_codec.hpp"

namespace posereg {

struct TrainConfig {
    ModelConfig model;
    SceneParams scene;
    double gamma = 4.0;
    double lr = 5e-4;
    int steps = 2000;
    int batch = 1;
    double lambda_score = 1.0;
    double lambda_offset = 1.0;
    double smooth_l1_beta = 1.0;
    uint64_t seed = 1;
    InstanceLabel label = InstanceLabel::kCir;
    double gaussian_sigma = 2.0;
    int train_scenes = 32;
    int eval_scenes = 16;
    int min_instances = 1;
    int max_instances = 4;
    // decode settings used for held-out evaluation
    double score_threshold = 0.01;
    int top_k = 30;
    double nms_threshold = 0.7;

    FalloffConstants falloff() const { return default_falloff(model.num_keypoints); }
};

struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t t = 0;
    std::vector<double> m, v;
};

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state, double lr);

struct StepResult {
    double loss = 0.0;
    double score_loss = 0.0;
    double offset_loss = 0.0;
};

/// Optional per-step introspection (targets recomputed from the current
/// predictions, and the poses they were decoded from).
struct StepDiagnostics {
    ScoreMap score_target;
    WeightMap weights;
    std::vector<std::pair<int, int>> assigned_cells; // (x, y), first scene of the batch
    std::vector<Pose> decoded_poses;                 // aligned with assigned_cells
    std::vector<int> assigned_instance;              // aligned with assigned_cells
};

/// One optimization step: forward, rebuild targets from the current
/// predictions (constants, no gradient flows into them), loss, backward,
/// Adam update. Throws NonFiniteLoss if the loss leaves the reals.
StepResult train_step(TinyModel& model, std::span<const SyntheticScene> batch, const TrainConfig& cfg,
                      AdamState& adam, StepDiagnostics* diagnostics = nullptr);

/// Decodes a scene with the current model and returns NMS-filtered candidates.
std::vector<Candidate> decode_scene(const TinyModel& model, const SyntheticScene& scene, const TrainConfig& cfg);

struct ToyRunResult {
    double first_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_history; // one entry per step
    EvalResult eval;                  // held-out scenes
    TinyModel model;
};

/// Full desk-scale run: seeded scene pools, `steps` optimization steps,
/// held-out decoding + COCO-style evaluation.
ToyRunResult train_toy(const TrainConfig& cfg);

/// Compares the analytic gradient of the (frozen-target) loss against central
/// finite differences on `num_samples` randomly chosen parameters. Returns the
/// worst relative error.
double finite_diff_check(const TinyModel& model, const SyntheticScene& scene, const TrainConfig& cfg,
                         double epsilon = 1e-4, int num_samples = 120, uint64_t seed = 7);

/// Scene pools used by train_toy (exposed for tools and tests).
std::vector<SyntheticScene> make_scene_pool(const TrainConfig& cfg, uint64_t stream, int count);

} // namespace posereg
