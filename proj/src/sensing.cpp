#include "uwsn/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uwsn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double unit_from_hash(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Distance from a point to the default target track, the line through
// (-23,-24) with direction (1,1).
double track_distance(double x, double y) {
    return std::abs(x - y - 1.0) / std::sqrt(2.0);
}

} // namespace

FieldLayout parse_layout(const std::string& name) {
    if (name == "paper") return FieldLayout::Paper;
    if (name == "reversed") return FieldLayout::Reversed;
    if (name == "uniform") return FieldLayout::Uniform;
    if (name == "all_reliable") return FieldLayout::AllReliable;
    throw std::invalid_argument("unknown field layout: " + name);
}

SensorField make_grid_field(int grid, double roi_side, FieldLayout layout,
                            std::uint64_t layout_seed) {
    if (grid < 1) throw std::invalid_argument("field: grid must be >= 1");
    if (roi_side <= 0.0) throw std::invalid_argument("field: roi side must be > 0");

    SensorField field;
    field.sensors.reserve(static_cast<std::size_t>(grid) * grid);
    const double half = roi_side / 2.0;
    const double near_cut = grid > 1 ? roi_side / (grid - 1) : roi_side;
    int id = 0;
    for (int r = 0; r < grid; ++r) {
        for (int c = 0; c < grid; ++c) {
            Sensor s;
            s.id = id;
            s.x = grid > 1 ? -half + c * roi_side / (grid - 1) : 0.0;
            s.y = grid > 1 ? -half + r * roi_side / (grid - 1) : 0.0;
            const double u =
                unit_from_hash(splitmix64(layout_seed * 7919 + id));
            const bool near = track_distance(s.x, s.y) < near_cut;
            switch (layout) {
            case FieldLayout::Paper:
                s.sensing_prob = near ? 0.05 + 0.30 * u : 0.45 + 0.50 * u;
                break;
            case FieldLayout::Reversed:
                s.sensing_prob = near ? 0.45 + 0.50 * u : 0.05 + 0.30 * u;
                break;
            case FieldLayout::Uniform:
                s.sensing_prob = 0.02 + 0.96 * u;
                break;
            case FieldLayout::AllReliable:
                s.sensing_prob = 1.0;
                break;
            }
            field.sensors.push_back(s);
            ++id;
        }
    }
    return field;
}

double received_amplitude(const Sensor& sensor, const TargetState& state,
                          const SignalModel& model) {
    const double dx = state(0) - sensor.x;
    const double dy = state(1) - sensor.y;
    const double d = std::sqrt(dx * dx + dy * dy);
    const double dn = std::pow(d, model.decay_exponent);
    return std::sqrt(model.source_power / (1.0 + model.atten_scale * dn));
}

Eigen::Vector4d amplitude_gradient(const Sensor& sensor,
                                   const TargetState& state,
                                   const SignalModel& model) {
    const double dx = state(0) - sensor.x;
    const double dy = state(1) - sensor.y;
    const double d = std::sqrt(dx * dx + dy * dy);
    Eigen::Vector4d g = Eigen::Vector4d::Zero();
    if (d == 0.0) return g; // stationary point of the radial field
    const double h = received_amplitude(sensor, state, model);
    const double dn = std::pow(d, model.decay_exponent);
    const double factor = -0.5 * model.atten_scale * model.decay_exponent * h *
                          std::pow(d, model.decay_exponent - 2.0) /
                          (1.0 + model.atten_scale * dn);
    g(0) = factor * dx;
    g(1) = factor * dy;
    return g;
}

Measurement sample_measurement(const Sensor& sensor, const TargetState& state,
                               const SignalModel& model, Rng& rng) {
    Measurement m;
    m.sensor_id = sensor.id;
    m.truth_sensed = rng.bernoulli(sensor.sensing_prob);
    const double noise = model.noise_std * rng.normal();
    m.value = m.truth_sensed
                  ? received_amplitude(sensor, state, model) + noise
                  : noise;
    return m;
}

double analog_likelihood_h(double value, double h, double sensing_prob,
                           const SignalModel& model) {
    const double s2 = model.noise_std * model.noise_std;
    const double norm = 1.0 / (model.noise_std * std::sqrt(2.0 * M_PI));
    const double rs = value - h;
    return norm * (sensing_prob * std::exp(-rs * rs / (2.0 * s2)) +
                   (1.0 - sensing_prob) * std::exp(-value * value / (2.0 * s2)));
}

double analog_likelihood(double value, const Sensor& sensor,
                         const TargetState& state, const SignalModel& model) {
    return analog_likelihood_h(value, received_amplitude(sensor, state, model),
                               sensor.sensing_prob, model);
}

double gaussian_tail(double x) {
    if (x == -kInf) return 1.0;
    if (x == kInf) return 0.0;
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

namespace {

// P(a < N(0,1) <= b) without the catastrophic cancellation that
// Q(a) - Q(b) suffers when both tails are on the same side and nearly 1.
double gaussian_interval(double a, double b) {
    if (b <= a) return 0.0;
    if (a >= 0.0) return gaussian_tail(a) - gaussian_tail(b);
    if (b <= 0.0) return gaussian_tail(-b) - gaussian_tail(-a);
    // straddles the mode; both tails are <= 1/2 and subtract safely
    return 1.0 - gaussian_tail(-a) - gaussian_tail(b);
}

} // namespace

Quantizer build_quantizer(int bits, const SignalModel& model) {
    if (bits < 1 || bits > 16)
        throw std::invalid_argument("quantizer: bits must be in [1, 16]");
    Quantizer q;
    q.bits = bits;
    q.levels = 1 << bits;
    q.thresholds.resize(static_cast<std::size_t>(q.levels) + 1);
    q.thresholds.front() = -kInf;
    q.thresholds.back() = kInf;
    // L-1 interior thresholds evenly partition [-sigma, sigma + sqrt(P0)].
    const double lo = -model.noise_std;
    const double span = 2.0 * model.noise_std + std::sqrt(model.source_power);
    for (int l = 1; l < q.levels; ++l)
        q.thresholds[static_cast<std::size_t>(l)] = lo + l * span / q.levels;
    return q;
}

int quantize(double value, const Quantizer& quantizer) {
    // eta_l <= value < eta_{l+1}; a value on an interior threshold maps to
    // the higher level.
    const auto first = quantizer.thresholds.begin() + 1;
    const auto last = quantizer.thresholds.end() - 1;
    return static_cast<int>(std::upper_bound(first, last, value) - first);
}

double quantized_pmf_h(int level, double h, double sensing_prob,
                       const SignalModel& model, const Quantizer& quantizer) {
    const double s = model.noise_std;
    const auto& eta = quantizer.thresholds;
    const std::size_t l = static_cast<std::size_t>(level);
    const double sig =
        gaussian_interval((eta[l] - h) / s, (eta[l + 1] - h) / s);
    const double noi = gaussian_interval(eta[l] / s, eta[l + 1] / s);
    return sensing_prob * sig + (1.0 - sensing_prob) * noi;
}

double quantized_pmf(int level, const Sensor& sensor, const TargetState& state,
                     const SignalModel& model, const Quantizer& quantizer) {
    if (level < 0 || level >= quantizer.levels)
        throw std::invalid_argument("quantized_pmf: level out of range");
    return quantized_pmf_h(level, received_amplitude(sensor, state, model),
                           sensor.sensing_prob, model, quantizer);
}

} // namespace uwsn
