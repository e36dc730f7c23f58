#pragma once

#include <Eigen/Dense>
#include <vector>

#include "uwsn/rng.hpp"

namespace uwsn {

// Target state, ordered [x, y, vx, vy].
using TargetState = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Constant-velocity model: x_{t+1} = F x_t + w_t, w_t ~ N(0, Q).
struct MotionModel {
    double sample_interval = 1.25;
    double noise_intensity = 2.5e-3;
    Mat4 transition = Mat4::Identity();
    Mat4 process_cov = Mat4::Zero();
    Mat4 noise_chol = Mat4::Zero(); // lower-triangular, L L^T = Q
};

// Cholesky factor of a symmetric PSD matrix; zero pivots (rank-deficient Q,
// e.g. q = 0) yield zero columns instead of failing.
Mat4 cholesky_psd(const Mat4& m);

MotionModel build_motion_model(double sample_interval, double noise_intensity);

TargetState propagate(const TargetState& state, const MotionModel& model,
                      Rng& rng);

// Length-`steps` sequence; element 0 is `initial`, each later element one
// propagation of its predecessor.
std::vector<TargetState> generate_trajectory(const TargetState& initial,
                                             const MotionModel& model,
                                             std::size_t steps, Rng& rng);

} // namespace uwsn
