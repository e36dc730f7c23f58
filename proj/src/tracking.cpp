#include "uwsn/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "uwsn/kernels.hpp"

namespace uwsn {

const Sensor& Scene::sensor(int id) const {
    for (const Sensor& s : field->sensors)
        if (s.id == id) return s;
    throw std::invalid_argument("scene: unknown sensor id");
}

ParticleCloud init_particles(const Prior& prior, std::size_t count, Rng& rng) {
    if (count == 0)
        throw std::invalid_argument("init_particles: count must be >= 1");
    const Mat4 chol = cholesky_psd(prior.cov);
    ParticleCloud cloud;
    cloud.resize(count);
    const double w0 = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
        Eigen::Vector4d xi;
        for (int k = 0; k < 4; ++k) xi(k) = rng.normal();
        cloud.set_state(i, prior.mean + chol * xi);
        cloud.w[i] = w0;
    }
    return cloud;
}

void predict(ParticleCloud& cloud, const MotionModel& model, Rng& rng) {
    const double d = model.sample_interval;
    const Mat4& l = model.noise_chol;
    const std::size_t n = cloud.size();
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector4d xi;
        for (int k = 0; k < 4; ++k) xi(k) = rng.normal();
        const Eigen::Vector4d noise = l * xi;
        cloud.x[i] += d * cloud.vx[i] + noise(0);
        cloud.y[i] += d * cloud.vy[i] + noise(1);
        cloud.vx[i] += noise(2);
        cloud.vy[i] += noise(3);
    }
}

namespace {

// Accumulates one sensor's log-likelihood over all particles.
void accumulate_loglik(const ParticleCloud& cloud, const Measurement& m,
                       const Scene& scene, std::vector<double>& h,
                       std::vector<double>& logw) {
    const Sensor& sensor = scene.sensor(m.sensor_id);
    const SignalModel& sig = *scene.signal;
    const std::size_t n = cloud.size();
    h.resize(n);
    if (sig.decay_exponent == 2.0) {
        kernels::ops().amplitude2(cloud.x.data(), cloud.y.data(), n, sensor.x,
                                  sensor.y, sig.source_power, sig.atten_scale,
                                  h.data());
    } else {
        for (std::size_t i = 0; i < n; ++i)
            h[i] = received_amplitude(sensor, cloud.state(i), sig);
    }

    if (!m.quantized) {
        const double inv2s2 = 1.0 / (2.0 * sig.noise_std * sig.noise_std);
        const double noise_term = (1.0 - sensor.sensing_prob) *
                                  std::exp(-m.value * m.value * inv2s2);
        const double log_norm =
            -std::log(sig.noise_std * std::sqrt(2.0 * M_PI));
        kernels::ops().mixture_loglik_acc(h.data(), n, m.value,
                                          sensor.sensing_prob, inv2s2,
                                          noise_term, log_norm, logw.data());
    } else {
        const Quantizer& q = *scene.quantizer;
        const std::size_t l = static_cast<std::size_t>(m.level);
        const double s = sig.noise_std;
        const double lo = q.thresholds[l];
        const double hi = q.thresholds[l + 1];
        const double noise_part =
            (1.0 - sensor.sensing_prob) *
            (gaussian_tail(lo / s) - gaussian_tail(hi / s));
        for (std::size_t i = 0; i < n; ++i) {
            const double p =
                sensor.sensing_prob * (gaussian_tail((lo - h[i]) / s) -
                                       gaussian_tail((hi - h[i]) / s)) +
                noise_part;
            logw[i] += std::log(p);
        }
    }
}

} // namespace

PfStepResult update_with_measurements(ParticleCloud& cloud,
                                      const std::vector<Measurement>& meas,
                                      const Scene& scene, Rng& rng) {
    const std::size_t n = cloud.size();
    PfStepResult result;

    // Log-domain accumulation with max-shift; products over many sensors
    // underflow in linear domain.
    std::vector<double> logw(n);
    for (std::size_t i = 0; i < n; ++i) logw[i] = std::log(cloud.w[i]);
    std::vector<double> scratch;
    for (const Measurement& m : meas)
        accumulate_loglik(cloud, m, scene, scratch, logw);

    const double shift = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    if (std::isfinite(shift)) {
        for (std::size_t i = 0; i < n; ++i) {
            cloud.w[i] = std::exp(logw[i] - shift);
            total += cloud.w[i];
        }
    }
    if (!std::isfinite(shift) || total <= 0.0) {
        result.weight_underflow = true;
        std::fill(cloud.w.begin(), cloud.w.end(),
                  1.0 / static_cast<double>(n));
        total = 1.0;
    } else {
        for (std::size_t i = 0; i < n; ++i) cloud.w[i] /= total;
    }

    result.estimate = estimate(cloud);
    cloud = systematic_resample(cloud, rng);
    return result;
}

PfStepResult pf_step(ParticleCloud& cloud, const MotionModel& model,
                     const std::vector<Measurement>& meas, const Scene& scene,
                     Rng& rng) {
    predict(cloud, model, rng);
    return update_with_measurements(cloud, meas, scene, rng);
}

ParticleCloud systematic_resample(const ParticleCloud& cloud, Rng& rng) {
    const std::size_t n = cloud.size();
    ParticleCloud out;
    out.resize(n);
    const double step = 1.0 / static_cast<double>(n);
    double u = rng.uniform() * step;
    double cum = cloud.w[0];
    std::size_t src = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (cum < u && src + 1 < n) {
            ++src;
            cum += cloud.w[src];
        }
        out.x[i] = cloud.x[src];
        out.y[i] = cloud.y[src];
        out.vx[i] = cloud.vx[src];
        out.vy[i] = cloud.vy[src];
        out.w[i] = step;
        u += step;
    }
    return out;
}

TargetState estimate(const ParticleCloud& cloud) {
    TargetState mean = TargetState::Zero();
    const std::size_t n = cloud.size();
    for (std::size_t i = 0; i < n; ++i) {
        mean(0) += cloud.w[i] * cloud.x[i];
        mean(1) += cloud.w[i] * cloud.y[i];
        mean(2) += cloud.w[i] * cloud.vx[i];
        mean(3) += cloud.w[i] * cloud.vy[i];
    }
    return mean;
}

Mat4 weighted_covariance(const ParticleCloud& cloud) {
    const TargetState mu = estimate(cloud);
    Mat4 cov = Mat4::Zero();
    const std::size_t n = cloud.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector4d d = cloud.state(i) - mu;
        cov += cloud.w[i] * (d * d.transpose());
    }
    return cov;
}

} // namespace uwsn
