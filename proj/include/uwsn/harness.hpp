#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uwsn/selection.hpp"

namespace uwsn {

enum class Scheme { Fiss, Miubss, WeightedSum, FixedA };
enum class SolutionRule { Compromise, Knee };

struct ExperimentConfig {
    // field
    int grid = 6;
    double roi_side = 50.0;
    std::string layout = "paper";
    std::uint64_t layout_seed = 1;
    std::vector<double> explicit_probs; // overrides the layout when nonempty

    SignalModel signal;

    // quantization; bits used only when quantized
    bool quantized = false;
    int bits = 5;

    // motion
    double sample_interval = 1.25;
    double noise_intensity = 2.5e-3;

    // prior
    Eigen::Vector4d prior_mean = Eigen::Vector4d(-23.0, -24.0, 2.0, 2.0);
    double prior_sigma_pos = 6.0;
    double prior_sigma_vel = 0.1;

    // filter
    std::size_t particles = 5000;

    // selection
    Scheme scheme = Scheme::Miubss;
    SolutionRule rule = SolutionRule::Compromise;
    FiMetric metric = FiMetric::Miub; // for weighted_sum / fixed_a
    bool metric_explicit = false;
    double w1 = 0.5;
    std::size_t fixed_a = 1;
    double prefilter = 0.0; // p_s threshold; 0 disables

    // nsga
    std::size_t pop_size = 100;
    std::size_t generations = 100;
    double mutation_rate = -1.0;
    bool seed_extremes = true;

    // run
    std::size_t steps = 20;
    std::size_t trials = 500;
    std::uint64_t seed = 1;
    unsigned workers = 1;

    // Canonical key-value form, also used as the replay manifest.
    std::string canonical() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

struct StepRecord {
    TargetState estimate = TargetState::Zero();
    TargetState truth = TargetState::Zero();
    SelectionMask mask; // over the full (unfiltered) field, by sensor id
    int selected = 0;
    std::vector<double> meas_values; // analog amplitudes of selected sensors
    std::vector<std::uint8_t> meas_sensed;
    bool underflow = false;
    double diversity = 0.0;
};

struct TrialResult {
    std::vector<StepRecord> steps;
};

struct RunSummary {
    std::vector<double> mse;            // per step, position components only
    std::vector<double> mean_selected;  // per step
    std::vector<double> reliable_frac;  // amplitude test (analog) or truth flag
    std::vector<double> reliable_truth; // simulator ground truth
    std::vector<double> diversity;
    std::size_t trials = 0;
    std::size_t underflow_events = 0;
    double wall_seconds = 0.0;
};

// Fraction of selected sensors per step whose measurement falls outside
// [-3 sigma, 3 sigma].
std::vector<double> reliable_fraction(const TrialResult& trial, double sigma);

class Experiment {
public:
    explicit Experiment(const ExperimentConfig& config);

    struct StepProbe {
        std::size_t step = 0;
        const ParticleCloud* cloud = nullptr;
        const MetricTable* table = nullptr;
        const std::vector<Individual>* front = nullptr; // null without NSGA
    };
    using ProbeFn = std::function<void(const StepProbe&)>;

    TrialResult run_trial(std::uint64_t trial_seed,
                          const ProbeFn& probe = nullptr) const;

    RunSummary run_monte_carlo() const;

    std::uint64_t trial_seed(std::size_t index) const {
        return derive_seed(config_.seed, index);
    }

    const ExperimentConfig& config() const { return config_; }
    const SensorField& field() const { return field_; }
    const MetricEngine& engine() const { return *engine_; }
    const Quantizer* quantizer() const {
        return config_.quantized ? &quantizer_ : nullptr;
    }
    const MotionModel& motion() const { return motion_; }
    const Prior& prior() const { return prior_; }
    std::size_t full_sensor_count() const { return full_count_; }

private:
    ExperimentConfig config_;
    SensorField field_; // after prefiltering
    std::size_t full_count_ = 0;
    Quantizer quantizer_;
    MotionModel motion_;
    Prior prior_;
    std::optional<MetricEngine> engine_;
};

RunSummary aggregate(const std::vector<TrialResult>& trials, double sigma,
                     bool quantized);

void write_mse_csv(const RunSummary& summary, const std::string& path);
void write_reliability_csv(const RunSummary& summary, const std::string& path);
void write_manifest(const ExperimentConfig& config, const std::string& path);
void write_front_csv(const std::vector<FrontPoint>& front,
                     const std::string& path);

// Per-sensor metric dump; distances are measured from `ref` (usually the
// current cloud mean).
void write_metrics_csv(const MetricTable& table, const SensorField& field,
                       const TargetState& ref, const std::string& path);

// Full `simulate` output set: mse.csv, reliability.csv (analog only) and
// manifest.txt under out_dir.
void write_results(const RunSummary& summary, const ExperimentConfig& config,
                   const std::string& out_dir);

std::string mask_hex(const SelectionMask& mask);

std::string format_double(double v); // 17 significant digits

} // namespace uwsn
