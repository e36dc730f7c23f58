#pragma once

#include "uwsn/moo.hpp"

namespace uwsn {

struct FrontPoint {
    SelectionMask mask;
    double f1 = 0.0;
    double f2 = 0.0;
};

enum class FiMetric { Fi, Miub };

// Knee point per the slope criterion: for each solution (ascending f2) the
// slope to its left neighbor is 180 - atan(df1/df2) * 180/pi; the all-zero
// anchor (f1=1, f2=0) is prepended when absent and never returned.
FrontPoint knee_point(std::vector<FrontPoint> front);

// Front point closest (Euclidean) to the utopia point (0, 0).
FrontPoint compromise(const std::vector<FrontPoint>& front);

// Minimizes w1*f1 + (1-w1)*f2. MIUB objectives are additive per sensor and
// solved exactly by a threshold rule; FI scans an NSGA-II front.
SelectionMask weighted_sum_select(const MetricTable& table, FiMetric metric,
                                  double w1, const NsgaConfig& config,
                                  Rng& rng);

// Copy of the field without the sensors whose sensing probability is below
// the threshold.
SensorField threshold_prefilter(const SensorField& field, double p_th);

// Fixed-cardinality baseline: top A sensors by per-sensor MI, or (for FI)
// exhaustive search when C(N, A) is small and greedy forward selection
// otherwise.
SelectionMask top_a_select(const MetricTable& table, std::size_t a,
                           FiMetric metric);

std::vector<FrontPoint> to_front_points(const std::vector<Individual>& front);

} // namespace uwsn
