#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "posereg/autodiff.hpp"
#include "posereg/qem.hpp"
#include "posereg/types.hpp"

namespace posereg {

struct ModelConfig {
    int num_keypoints = 5;
    int feat_channels = 8; // backbone / keypoint branch width
    int inst_channels = 8; // instance branch width
    int n_semantic = 9;
    int conv_kernel = 5;
    int conv_layers = 3;
};

struct ConvLayer {
    int cin = 0, cout = 0, ksize = 1;
    std::vector<double> w, b;
};

/// Small two-branch regression network: a shared conv backbone, per-keypoint
/// 1x1 feature heads driving the query encoders, an instance feature head,
/// and a scalar score head over the gathered pose query feature.
struct TinyModel {
    ModelConfig cfg;
    std::vector<ConvLayer> backbone;  // conv_layers deep
    std::vector<ConvLayer> kp_heads;  // K 1x1 heads -> per-keypoint features
    ConvLayer inst_head;              // 1x1 head -> instance features
    std::vector<KqeParams> kqe;       // per keypoint
    std::vector<double> score_w;      // 1 x (inst_channels * K)
    std::vector<double> score_b;      // 1

    static TinyModel init(const ModelConfig& cfg, uint64_t seed);

    /// Visits every parameter tensor in a fixed order (the flat layout used by
    /// the optimizer, checkpoints and gradient checks).
    void visit(const std::function<void(std::vector<double>&)>& fn);
    void visit(const std::function<void(const std::vector<double>&)>& fn) const;
    size_t num_params() const;
};

/// Tape handles produced by one forward pass.
struct ForwardVars {
    std::vector<ad::VarId> param_leaves;            // visit order
    std::vector<ad::VarId> cell_score;              // H*W, scalar each
    std::vector<ad::VarId> cell_total_offset;       // H*W*K, 2-vector each
    std::vector<ad::VarId> cell_query_offset;       // H*W*K, 2-vector each
    int height = 0, width = 0;

    size_t cell_index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    size_t offset_index(int kp, int x, int y) const {
        return (static_cast<size_t>(y) * width + x) * num_keypoints + kp;
    }
    int num_keypoints = 0;
};

ForwardVars model_forward_tape(ad::Tape& tape, const TinyModel& model, const FeatureGrid& input);

struct ModelOutputs {
    ScoreMap score;            // predicted instance score map
    OffsetField offsets;       // center -> keypoint displacements per cell
    OffsetField query_offsets; // center -> query displacements per cell
};

ModelOutputs read_outputs(const ad::Tape& tape, const ForwardVars& vars);

/// Convenience eager forward on a scratch tape.
ModelOutputs model_forward(const TinyModel& model, const FeatureGrid& input);

/// Collects gradients of all parameter leaves into one flat vector
/// (visit-order concatenation).
void collect_param_grads(const ad::Tape& tape, const ForwardVars& vars, std::vector<double>& flat_out);

/// Flat parameter access in visit order.
std::vector<double> flatten_params(const TinyModel& model);
void unflatten_params(TinyModel& model, std::span<const double> flat);

} // namespace posereg
