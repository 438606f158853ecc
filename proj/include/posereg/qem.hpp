#pragma once

#include <span>
#include <vector>

#include "posereg/autodiff.hpp"
#include "posereg/types.hpp"

namespace posereg {

/// Weights of the three keypoint-query prediction heads. Each head is a 1x1
/// linear map applied to a sampled C-vector: the query head locates the
/// keypoint query, the semantic head places N auxiliary sampling points
/// around it, and the refinement head regresses the final query-to-keypoint
/// displacement from the aggregated semantic feature.
struct KqeParams {
    int n_points = 0;           // N
    std::vector<double> wq, bq; // 2 x C, 2
    std::vector<double> ws, bs; // 2N x C, 2N
    std::vector<double> wr, br; // 2 x C, 2

    static KqeParams zeros(int channels, int n_points);
    void validate(int channels) const; // throws ShapeMismatch
};

struct KqeOutput {
    Vec2 query_offset;  // center -> query
    Vec2 refine_offset; // query -> keypoint
    Vec2 total_offset;  // center -> keypoint, always query_offset + refine_offset
    Vec2 query_position;
    std::vector<double> transformed_feature; // aggregated semantic feature at the center
};

/// Border-clamped 4-neighbour bilinear interpolation of every channel.
std::vector<double> bilinear_sample(const FeatureGrid& grid, Vec2 point);

struct BilinearGrad {
    FeatureGrid grid;
    Vec2 point;
};

/// Vector-Jacobian product of bilinear_sample. The positional gradient is the
/// in-cell analytic derivative and zero where border clamping is active.
BilinearGrad bilinear_sample_vjp(const FeatureGrid& grid, Vec2 point, std::span<const double> cotangent);

/// Keypoint query encoding at center c: locate the query, enrich it with N
/// semantic-point samples, refine to the final displacement.
KqeOutput kqe_forward(const FeatureGrid& rk, Vec2 c, const KqeParams& params);

struct KqeGrad {
    FeatureGrid grid;
    KqeParams params; // same shapes as the inputs, holding gradients
};

/// VJP of kqe_forward with cotangents for the total offset and (optionally,
/// pass empty to skip) the transformed feature.
KqeGrad kqe_forward_vjp(const FeatureGrid& rk, Vec2 c, const KqeParams& params, Vec2 total_offset_cot,
                        std::span<const double> feature_cot);

/// Pose query encoding: the instance feature sampled at every keypoint-query
/// position, concatenated in keypoint order. Output size C * K.
std::vector<double> pqe_forward(const FeatureGrid& ri, Vec2 c, std::span<const Vec2> query_displacements);

struct PqeGrad {
    FeatureGrid grid;
    std::vector<Vec2> displacements;
};

PqeGrad pqe_forward_vjp(const FeatureGrid& ri, Vec2 c, std::span<const Vec2> query_displacements,
                        std::span<const double> cotangent);

// Tape-side builders shared by the eager wrappers above and the trainer.

struct KqeParamVars {
    ad::VarId wq, bq, ws, bs, wr, br;
    int n_points = 0;
    int channels = 0;
};

KqeParamVars kqe_params_to_tape(ad::Tape& tape, const KqeParams& params, int channels);

struct KqeVars {
    ad::VarId query_offset;
    ad::VarId refine_offset;
    ad::VarId total_offset;
    ad::VarId transformed_feature;
};

KqeVars kqe_forward_tape(ad::Tape& tape, ad::VarId rk, int channels, int height, int width, Vec2 c,
                         const KqeParamVars& params);

ad::VarId pqe_forward_tape(ad::Tape& tape, ad::VarId ri, int channels, int height, int width, Vec2 c,
                           std::span<const ad::VarId> query_displacements);

} // namespace posereg
