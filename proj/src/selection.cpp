#include "uwsn/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace uwsn {

namespace {

void sort_by_f2(std::vector<FrontPoint>& front) {
    std::sort(front.begin(), front.end(),
              [](const FrontPoint& a, const FrontPoint& b) {
                  if (a.f2 != b.f2) return a.f2 < b.f2;
                  return a.f1 < b.f1;
              });
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t c = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        if (c > UINT64_MAX / (n - k + i)) return UINT64_MAX;
        c = c * (n - k + i) / i;
    }
    return c;
}

} // namespace

std::vector<FrontPoint> to_front_points(const std::vector<Individual>& front) {
    std::vector<FrontPoint> out;
    out.reserve(front.size());
    for (const Individual& ind : front)
        out.push_back({ind.mask, ind.obj.info_gap, ind.obj.count_frac});
    return out;
}

FrontPoint knee_point(std::vector<FrontPoint> front) {
    const bool has_anchor =
        std::any_of(front.begin(), front.end(), [](const FrontPoint& p) {
            return p.f1 == 1.0 && p.f2 == 0.0;
        });
    if (!has_anchor) {
        FrontPoint anchor;
        anchor.f1 = 1.0;
        anchor.f2 = 0.0;
        if (!front.empty()) anchor.mask.assign(front.front().mask.size(), 0);
        front.push_back(anchor);
    }
    sort_by_f2(front);
    if (front.size() < 2)
        throw std::invalid_argument("knee_point: need at least 2 points");

    double best_slope = -std::numeric_limits<double>::infinity();
    std::size_t best = front.size();
    for (std::size_t b = 1; b < front.size(); ++b) {
        const FrontPoint& pa = front[b - 1];
        const FrontPoint& pb = front[b];
        const double df2 = pa.f2 - pb.f2;
        if (df2 == 0.0) continue;
        const double slope =
            180.0 - std::atan((pa.f1 - pb.f1) / df2) * 180.0 / M_PI;
        if (slope > best_slope) { // ties keep the smaller f2 (first hit)
            best_slope = slope;
            best = b;
        }
    }
    if (best == front.size())
        throw std::invalid_argument("knee_point: degenerate front");
    return front[best];
}

FrontPoint compromise(const std::vector<FrontPoint>& front) {
    if (front.empty())
        throw std::invalid_argument("compromise: empty front");
    const FrontPoint* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const FrontPoint& p : front) {
        const double d = std::sqrt(p.f1 * p.f1 + p.f2 * p.f2);
        if (d < best_d || (d == best_d && best && p.f2 < best->f2)) {
            best_d = d;
            best = &p;
        }
    }
    return *best;
}

SelectionMask weighted_sum_select(const MetricTable& table, FiMetric metric,
                                  double w1, const NsgaConfig& config,
                                  Rng& rng) {
    if (w1 < 0.0 || w1 > 1.0)
        throw std::invalid_argument("weighted_sum: w1 must be in [0, 1]");
    const std::size_t n = table.per_sensor_mi.size();

    if (metric == FiMetric::Miub) {
        // f1 is additive over sensors: selecting sensor i changes the score
        // by (1-w1)/N - w1 * I_i / sum(I).
        SelectionMask mask(n, 0);
        if (table.mi_sum <= 0.0)
            throw std::runtime_error("weighted_sum: all per-sensor MI zero");
        const double cost = (1.0 - w1) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            if (w1 * table.per_sensor_mi[i] / table.mi_sum > cost) mask[i] = 1;
        return mask;
    }

    NsgaConfig cfg = config;
    cfg.genome_length = n;
    const auto front = nsga2_run(
        [&](const SelectionMask& m) { return objective_fi(m, table); }, cfg,
        rng);
    const Individual* best = nullptr;
    double best_score = std::numeric_limits<double>::infinity();
    for (const Individual& ind : front) {
        const double score =
            w1 * ind.obj.info_gap + (1.0 - w1) * ind.obj.count_frac;
        if (score < best_score) {
            best_score = score;
            best = &ind;
        }
    }
    return best->mask;
}

SensorField threshold_prefilter(const SensorField& field, double p_th) {
    if (p_th < 0.0 || p_th > 1.0)
        throw std::invalid_argument("prefilter: threshold must be in [0, 1]");
    SensorField out;
    for (const Sensor& s : field.sensors)
        if (s.sensing_prob >= p_th) out.sensors.push_back(s);
    if (out.sensors.empty())
        throw std::runtime_error("prefilter: every sensor filtered out");
    return out;
}

SelectionMask top_a_select(const MetricTable& table, std::size_t a,
                           FiMetric metric) {
    const std::size_t n = table.per_sensor_mi.size();
    if (a > n) throw std::invalid_argument("top_a: A exceeds sensor count");
    SelectionMask mask(n, 0);
    if (a == 0) return mask;
    if (a == n) {
        std::fill(mask.begin(), mask.end(), 1);
        return mask;
    }

    if (metric == FiMetric::Miub) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t i, std::size_t j) {
                             return table.per_sensor_mi[i] >
                                    table.per_sensor_mi[j];
                         });
        for (std::size_t i = 0; i < a; ++i) mask[order[i]] = 1;
        return mask;
    }

    if (binomial(n, a) <= 100000) {
        // Exhaustive over all A-subsets.
        std::vector<std::size_t> pick(a);
        std::iota(pick.begin(), pick.end(), 0);
        double best = -std::numeric_limits<double>::infinity();
        SelectionMask best_mask = mask;
        while (true) {
            SelectionMask m(n, 0);
            for (std::size_t i : pick) m[i] = 1;
            const double score = logdet_psd(total_fi(m, table));
            if (score > best) {
                best = score;
                best_mask = m;
            }
            // next combination
            std::size_t i = a;
            while (i > 0 && pick[i - 1] == n - a + i - 1) --i;
            if (i == 0) break;
            ++pick[i - 1];
            for (std::size_t j = i; j < a; ++j) pick[j] = pick[j - 1] + 1;
        }
        return best_mask;
    }

    // Greedy forward selection on log det.
    for (std::size_t step = 0; step < a; ++step) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_i = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask[i]) continue;
            mask[i] = 1;
            const double score = logdet_psd(total_fi(mask, table));
            mask[i] = 0;
            if (score > best) {
                best = score;
                best_i = i;
            }
        }
        mask[best_i] = 1;
    }
    return mask;
}

} // namespace uwsn
