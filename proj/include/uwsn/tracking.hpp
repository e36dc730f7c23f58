#pragma once

#include <vector>

#include "uwsn/dynamics.hpp"
#include "uwsn/sensing.hpp"

namespace uwsn {

// Weighted particle set, stored column-wise so the per-particle kernels can
// stream over coordinates.
struct ParticleCloud {
    std::vector<double> x, y, vx, vy, w;

    std::size_t size() const { return x.size(); }

    TargetState state(std::size_t i) const {
        return TargetState(x[i], y[i], vx[i], vy[i]);
    }

    void set_state(std::size_t i, const TargetState& s) {
        x[i] = s(0);
        y[i] = s(1);
        vx[i] = s(2);
        vy[i] = s(3);
    }

    void resize(std::size_t n) {
        x.resize(n);
        y.resize(n);
        vx.resize(n);
        vy.resize(n);
        w.resize(n);
    }
};

struct Prior {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Mat4 cov = Mat4::Identity();
};

// Measurement-side description of the scene; quantizer == nullptr means the
// fusion center receives analog data.
struct Scene {
    const SensorField* field = nullptr;
    const SignalModel* signal = nullptr;
    const Quantizer* quantizer = nullptr;

    const Sensor& sensor(int id) const;
};

struct PfStepResult {
    TargetState estimate = TargetState::Zero();
    bool weight_underflow = false;
};

ParticleCloud init_particles(const Prior& prior, std::size_t count, Rng& rng);

// Alg. line 3: propagate every particle through the motion model, in place.
void predict(ParticleCloud& cloud, const MotionModel& model, Rng& rng);

// Lines 6-9: weight by the likelihood of the received data, normalize,
// estimate, resample. A total weight underflow resets to uniform weights and
// flags the step instead of failing.
PfStepResult update_with_measurements(ParticleCloud& cloud,
                                      const std::vector<Measurement>& meas,
                                      const Scene& scene, Rng& rng);

PfStepResult pf_step(ParticleCloud& cloud, const MotionModel& model,
                     const std::vector<Measurement>& meas, const Scene& scene,
                     Rng& rng);

ParticleCloud systematic_resample(const ParticleCloud& cloud, Rng& rng);

TargetState estimate(const ParticleCloud& cloud);

// Weighted empirical covariance around the weighted mean.
Mat4 weighted_covariance(const ParticleCloud& cloud);

} // namespace uwsn
