#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uwsn/dynamics.hpp"
#include "uwsn/rng.hpp"

namespace uwsn {

struct Sensor {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    double sensing_prob = 1.0; // p_s
};

struct SignalModel {
    double source_power = 1000.0; // P0
    double atten_scale = 1.0;     // alpha
    double decay_exponent = 2.0;  // n
    double noise_std = 0.2;       // sigma
};

// Thresholds eta_0..eta_L with eta_0 = -inf, eta_L = +inf.
struct Quantizer {
    int bits = 0;
    int levels = 1;
    std::vector<double> thresholds;
};

struct Measurement {
    int sensor_id = 0;
    double value = 0.0; // analog amplitude
    int level = 0;      // quantized level, when quantized
    bool quantized = false;
    bool truth_sensed = false; // simulation-only: which mixture branch fired
};

struct SensorField {
    std::vector<Sensor> sensors;
};

enum class FieldLayout { Paper, Reversed, Uniform, AllReliable };

FieldLayout parse_layout(const std::string& name);

// m x m lattice over a square ROI of side `roi_side` centered at the origin.
// The default layout gives sensors near the default diagonal track low
// sensing probabilities (all distinct); Reversed flips that; Uniform draws
// each probability uniformly from a deterministic per-index sequence.
SensorField make_grid_field(int grid, double roi_side, FieldLayout layout,
                            std::uint64_t layout_seed = 1);

double received_amplitude(const Sensor& sensor, const TargetState& state,
                          const SignalModel& model);

// d(amplitude)/d(state); velocity components are always zero.
Eigen::Vector4d amplitude_gradient(const Sensor& sensor,
                                   const TargetState& state,
                                   const SignalModel& model);

Measurement sample_measurement(const Sensor& sensor, const TargetState& state,
                               const SignalModel& model, Rng& rng);

double analog_likelihood(double value, const Sensor& sensor,
                         const TargetState& state, const SignalModel& model);

// Q(x) = P(N(0,1) > x)
double gaussian_tail(double x);

Quantizer build_quantizer(int bits, const SignalModel& model);

int quantize(double value, const Quantizer& quantizer);

double quantized_pmf(int level, const Sensor& sensor, const TargetState& state,
                     const SignalModel& model, const Quantizer& quantizer);

// Same pmf expressed through the amplitude only; the state enters the
// likelihood solely through h.
double quantized_pmf_h(int level, double h, double sensing_prob,
                       const SignalModel& model, const Quantizer& quantizer);

double analog_likelihood_h(double value, double h, double sensing_prob,
                           const SignalModel& model);

} // namespace uwsn
