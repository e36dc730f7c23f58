#include "uwsn/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace uwsn {

Mat4 cholesky_psd(const Mat4& m) {
    Mat4 l = Mat4::Zero();
    const double tol = 1e-12 * std::max(m.trace(), 1e-300);
    for (int j = 0; j < 4; ++j) {
        double d = m(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= tol) continue; // zero pivot: leave the column zero
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < 4; ++i) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

MotionModel build_motion_model(double sample_interval, double noise_intensity) {
    if (sample_interval <= 0.0)
        throw std::invalid_argument("motion model: sample interval must be > 0");
    if (noise_intensity < 0.0)
        throw std::invalid_argument("motion model: noise intensity must be >= 0");

    MotionModel m;
    m.sample_interval = sample_interval;
    m.noise_intensity = noise_intensity;

    const double d = sample_interval;
    m.transition = Mat4::Identity();
    m.transition(0, 2) = d;
    m.transition(1, 3) = d;

    const double d3 = d * d * d / 3.0;
    const double d2 = d * d / 2.0;
    Mat4 q = Mat4::Zero();
    q(0, 0) = d3;
    q(1, 1) = d3;
    q(0, 2) = q(2, 0) = d2;
    q(1, 3) = q(3, 1) = d2;
    q(2, 2) = d;
    q(3, 3) = d;
    m.process_cov = noise_intensity * q;
    m.noise_chol = cholesky_psd(m.process_cov);
    return m;
}

TargetState propagate(const TargetState& state, const MotionModel& model,
                      Rng& rng) {
    Eigen::Vector4d xi;
    for (int i = 0; i < 4; ++i) xi(i) = rng.normal();
    return model.transition * state + model.noise_chol * xi;
}

std::vector<TargetState> generate_trajectory(const TargetState& initial,
                                             const MotionModel& model,
                                             std::size_t steps, Rng& rng) {
    if (steps == 0)
        throw std::invalid_argument("trajectory: steps must be >= 1");
    std::vector<TargetState> out;
    out.reserve(steps);
    out.push_back(initial);
    for (std::size_t t = 1; t < steps; ++t)
        out.push_back(propagate(out.back(), model, rng));
    return out;
}

} // namespace uwsn
