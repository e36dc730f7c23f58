#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uwsn/sensing.hpp"
#include "uwsn/tracking.hpp"

namespace uwsn {

using FisherMatrix = Mat4;
using SelectionMask = std::vector<std::uint8_t>;

// Per-sensor metrics evaluated against one particle cloud.
struct MetricTable {
    std::vector<FisherMatrix> per_sensor_fi; // expectation over the cloud
    std::vector<double> per_sensor_mi;       // bits
    FisherMatrix prior_fi = FisherMatrix::Zero();
    double full_logdet = 0.0; // log det(sum_i J_i + J^P), cached
    double prior_logdet = 0.0;
    double mi_sum = 0.0;
};

// log det of a symmetric positive definite matrix; near-singular inputs get
// a diagonal jitter of 1e-9 * trace / 4.
double logdet_psd(const Mat4& m);

// kappa^A of the analog Fisher information, by adaptive quadrature over
// z in [-8 sigma, h + 8 sigma], relative tolerance 1e-8.
double kappa_analog(double h, double sensing_prob, const SignalModel& model);

// kappa^Q: finite sum over quantization levels; vanishing-probability cells
// (pmf < 1e-300) contribute zero.
double kappa_quantized(double h, double sensing_prob, const SignalModel& model,
                       const Quantizer& quantizer);

FisherMatrix fi_analog_single(const Sensor& sensor, const TargetState& state,
                              const SignalModel& model);

FisherMatrix fi_quantized_single(const Sensor& sensor, const TargetState& state,
                                 const SignalModel& model,
                                 const Quantizer& quantizer);

// Inverse of the weighted empirical cloud covariance (Gaussian
// approximation of the prior density).
FisherMatrix prior_fisher(const ParticleCloud& cloud);

// Weighted particle average of the single-state FI. Exact reference path;
// MetricEngine provides the interpolated fast path.
FisherMatrix expected_fi(const Sensor& sensor, const ParticleCloud& cloud,
                         const SignalModel& model,
                         const Quantizer* quantizer = nullptr);

FisherMatrix total_fi(const SelectionMask& mask, const MetricTable& table);

// Exact joint MI of a sensor subset for quantized data: full sum over
// L^|subset| level tuples with the outer expectation over the cloud.
// Throws when L^|subset| exceeds the tuple budget.
double mi_quantized(const std::vector<int>& subset, const ParticleCloud& cloud,
                    const SensorField& field, const SignalModel& model,
                    const Quantizer& quantizer,
                    std::uint64_t tuple_budget = 1u << 20);

struct MiEstimate {
    double bits = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo MI estimate for analog data over a small subset.
MiEstimate mi_analog(const std::vector<int>& subset, const ParticleCloud& cloud,
                     const SensorField& field, const SignalModel& model,
                     std::size_t sample_count, Rng& rng);

double miub(const SelectionMask& mask, const MetricTable& table);

// Entropy (bits) of the two-component measurement mixture at amplitude h.
double conditional_entropy_bits(double h, double sensing_prob,
                                const SignalModel& model);

// Precomputes per-sensor interpolation tables (kappa, conditional entropies,
// quantized pmf rows) once per scene so the per-step MetricTable costs only
// streaming passes over the cloud. Equivalence-tested against the exact ops.
class MetricEngine {
public:
    MetricEngine(const SensorField& field, const SignalModel& model,
                 const Quantizer* quantizer);

    MetricTable compute(const ParticleCloud& cloud) const;

    const SensorField& field() const { return *field_; }
    bool quantized() const { return quantizer_ != nullptr; }

private:
    struct SensorTables {
        // analog tables, uniform grid h in [0, h_cap], constant beyond
        double h_cap = 0.0;
        double dh = 0.0;
        std::vector<double> kappa_a;
        std::vector<double> hmix_a; // conditional entropy of z given h
        // quantized tables, uniform grid h in [0, h_max_q]
        bool has_q = false;
        double h_max_q = 0.0;
        double dh_q = 0.0;
        std::vector<double> kappa_q;
        std::vector<double> pmf_rows; // npts_q x L
        std::vector<double> hd;       // entropy of pmf row, bits
        std::size_t npts_q = 0;
    };

    double lerp_table(const std::vector<double>& tab, double dh, double h) const;

    const SensorField* field_;
    SignalModel model_;
    const Quantizer* quantizer_;
    std::vector<SensorTables> tables_;
};

} // namespace uwsn
