#include "uwsn/moo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace uwsn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t popcount(const SelectionMask& mask) {
    std::size_t n = 0;
    for (auto g : mask) n += g;
    return n;
}

} // namespace

Objectives objective_fi(const SelectionMask& mask, const MetricTable& table) {
    if (table.full_logdet <= 0.0 || table.prior_logdet < 0.0)
        throw std::runtime_error(
            "objective_fi: degenerate information scale (log det <= 0)");
    const std::size_t n = mask.size();
    Objectives obj;
    obj.count_frac =
        static_cast<double>(popcount(mask)) / static_cast<double>(n);
    if (popcount(mask) == 0) {
        obj.info_gap = 1.0; // all-zero anchor
        return obj;
    }
    const double masked = logdet_psd(total_fi(mask, table));
    obj.info_gap = std::clamp(
        (table.full_logdet - masked) / table.full_logdet, 0.0, 1.0);
    return obj;
}

Objectives objective_miub(const SelectionMask& mask, const MetricTable& table) {
    if (table.mi_sum <= 0.0)
        throw std::runtime_error("objective_miub: all per-sensor MI are zero");
    Objectives obj;
    obj.count_frac = static_cast<double>(popcount(mask)) /
                     static_cast<double>(mask.size());
    obj.info_gap =
        std::clamp((table.mi_sum - miub(mask, table)) / table.mi_sum, 0.0, 1.0);
    return obj;
}

bool dominates(const Objectives& a, const Objectives& b) {
    if (a.info_gap > b.info_gap || a.count_frac > b.count_frac) return false;
    return a.info_gap < b.info_gap || a.count_frac < b.count_frac;
}

std::vector<std::vector<std::size_t>>
fast_nondominated_sort(std::vector<Individual>& population) {
    const std::size_t n = population.size();
    if (n == 0) throw std::invalid_argument("sort: empty population");
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<int> dom_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(population[i].obj, population[j].obj)) {
                dominated[i].push_back(j);
                ++dom_count[j];
            } else if (dominates(population[j].obj, population[i].obj)) {
                dominated[j].push_back(i);
                ++dom_count[i];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (dom_count[i] == 0) {
            population[i].rank = 0;
            fronts[0].push_back(i);
        }
    }
    std::size_t r = 0;
    while (!fronts[r].empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : fronts[r]) {
            for (std::size_t j : dominated[i]) {
                if (--dom_count[j] == 0) {
                    population[j].rank = static_cast<int>(r + 1);
                    next.push_back(j);
                }
            }
        }
        fronts.push_back(std::move(next));
        ++r;
    }
    fronts.pop_back();
    return fronts;
}

void crowding_distance(std::vector<Individual>& population,
                       const std::vector<std::size_t>& front) {
    if (front.empty()) throw std::invalid_argument("crowding: empty front");
    for (std::size_t i : front) population[i].crowding = 0.0;
    const std::size_t m = front.size();
    if (m <= 2) {
        for (std::size_t i : front) population[i].crowding = kInf;
        return;
    }
    std::vector<std::size_t> order(front);
    for (int axis = 0; axis < 2; ++axis) {
        const auto key = [&](std::size_t i) {
            return axis == 0 ? population[i].obj.info_gap
                             : population[i].obj.count_frac;
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) {
                             return key(a) < key(b);
                         });
        population[order.front()].crowding = kInf;
        population[order.back()].crowding = kInf;
        const double range = key(order.back()) - key(order.front());
        if (range <= 0.0) continue; // zero-range objective contributes 0
        for (std::size_t k = 1; k + 1 < m; ++k) {
            if (population[order[k]].crowding == kInf) continue;
            population[order[k]].crowding +=
                (key(order[k + 1]) - key(order[k - 1])) / range;
        }
    }
}

std::size_t binary_tournament(const std::vector<Individual>& population,
                              Rng& rng) {
    const std::size_t a = rng.below(population.size());
    const std::size_t b = rng.below(population.size());
    const Individual& ia = population[a];
    const Individual& ib = population[b];
    if (ia.rank != ib.rank) return ia.rank < ib.rank ? a : b;
    if (ia.crowding != ib.crowding) return ia.crowding > ib.crowding ? a : b;
    return std::min(a, b);
}

std::pair<SelectionMask, SelectionMask>
uniform_crossover(const SelectionMask& p1, const SelectionMask& p2, Rng& rng) {
    if (p1.size() != p2.size())
        throw std::invalid_argument("crossover: length mismatch");
    SelectionMask c1(p1.size()), c2(p1.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        const bool xi = rng.uniform() <= 0.5;
        c1[i] = xi ? p1[i] : p2[i];
        c2[i] = xi ? p2[i] : p1[i];
    }
    return {c1, c2};
}

void uniform_mutation(SelectionMask& mask, double rate, Rng& rng) {
    if (rate < 0.0 || rate > 1.0)
        throw std::invalid_argument("mutation: rate must be in [0, 1]");
    for (auto& g : mask)
        if (rng.uniform() < rate) g = g ? 0 : 1;
}

std::vector<Individual> nsga2_run(const ObjectiveFn& objective,
                                  const NsgaConfig& config, Rng& rng) {
    const std::size_t n = config.genome_length;
    const std::size_t p = config.pop_size;
    if (n == 0) throw std::invalid_argument("nsga2: empty genome");
    if (p < 4 || p % 2 != 0)
        throw std::invalid_argument("nsga2: population must be even and >= 4");
    const double rate = config.mutation_rate < 0.0
                            ? 1.0 / static_cast<double>(n)
                            : config.mutation_rate;

    std::vector<Individual> pop(p);
    for (auto& ind : pop) {
        ind.mask.resize(n);
        for (auto& g : ind.mask) g = rng.uniform() < 0.5 ? 1 : 0;
    }
    if (config.seed_extremes && p >= 2) {
        std::fill(pop[0].mask.begin(), pop[0].mask.end(), 0);
        std::fill(pop[1].mask.begin(), pop[1].mask.end(), 1);
    }
    for (auto& ind : pop) ind.obj = objective(ind.mask);
    {
        const auto fronts = fast_nondominated_sort(pop);
        for (const auto& f : fronts) crowding_distance(pop, f);
    }

    for (std::size_t g = 0; g < config.generations; ++g) {
        std::vector<Individual> merged = pop;
        merged.reserve(2 * p);
        for (std::size_t k = 0; k < p / 2; ++k) {
            const Individual& p1 = pop[binary_tournament(pop, rng)];
            const Individual& p2 = pop[binary_tournament(pop, rng)];
            auto [c1, c2] = uniform_crossover(p1.mask, p2.mask, rng);
            uniform_mutation(c1, rate, rng);
            uniform_mutation(c2, rate, rng);
            Individual i1, i2;
            i1.mask = std::move(c1);
            i2.mask = std::move(c2);
            i1.obj = objective(i1.mask);
            i2.obj = objective(i2.mask);
            merged.push_back(std::move(i1));
            merged.push_back(std::move(i2));
        }

        const auto fronts = fast_nondominated_sort(merged);
        std::vector<Individual> next;
        next.reserve(p);
        for (const auto& front : fronts) {
            crowding_distance(merged, front);
            if (next.size() + front.size() <= p) {
                for (std::size_t i : front) next.push_back(merged[i]);
            } else {
                std::vector<std::size_t> order(front);
                std::stable_sort(order.begin(), order.end(),
                                 [&](std::size_t a, std::size_t b) {
                                     if (merged[a].crowding !=
                                         merged[b].crowding)
                                         return merged[a].crowding >
                                                merged[b].crowding;
                                     return a < b;
                                 });
                for (std::size_t i : order) {
                    if (next.size() == p) break;
                    next.push_back(merged[i]);
                }
            }
            if (next.size() == p) break;
        }
        pop = std::move(next);
    }

    // Final rank-0 set, deduplicated per objective vector by the
    // lexicographically smallest mask.
    const auto fronts = fast_nondominated_sort(pop);
    for (const auto& f : fronts) crowding_distance(pop, f);
    std::map<std::pair<double, double>, SelectionMask> best;
    for (std::size_t i : fronts[0]) {
        const auto key = std::make_pair(pop[i].obj.info_gap,
                                        pop[i].obj.count_frac);
        auto it = best.find(key);
        if (it == best.end() || pop[i].mask < it->second)
            best[key] = pop[i].mask;
    }
    std::vector<Individual> out;
    out.reserve(best.size());
    for (std::size_t i : fronts[0]) {
        const auto key = std::make_pair(pop[i].obj.info_gap,
                                        pop[i].obj.count_frac);
        auto it = best.find(key);
        if (it != best.end() && it->second == pop[i].mask) {
            out.push_back(pop[i]);
            best.erase(it);
        }
    }
    std::sort(out.begin(), out.end(), [](const Individual& a,
                                         const Individual& b) {
        if (a.obj.count_frac != b.obj.count_frac)
            return a.obj.count_frac < b.obj.count_frac;
        return a.obj.info_gap < b.obj.info_gap;
    });
    return out;
}

double diversity_metric(const std::vector<Objectives>& front) {
    if (front.empty()) return 1.0;
    std::vector<Objectives> pts = front;
    std::sort(pts.begin(), pts.end(), [](const Objectives& a,
                                         const Objectives& b) {
        if (a.count_frac != b.count_frac) return a.count_frac < b.count_frac;
        return a.info_gap > b.info_gap;
    });
    if (pts.size() < 2) return 1.0;

    const auto dist = [](const Objectives& a, const Objectives& b) {
        const double d1 = a.info_gap - b.info_gap;
        const double d2 = a.count_frac - b.count_frac;
        return std::sqrt(d1 * d1 + d2 * d2);
    };
    const Objectives lo_extreme{1.0, 0.0};
    const Objectives hi_extreme{0.0, 1.0};
    const double df = dist(lo_extreme, pts.front());
    const double dl = dist(pts.back(), hi_extreme);
    std::vector<double> gaps;
    gaps.reserve(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        gaps.push_back(dist(pts[i], pts[i + 1]));
    const double mean =
        std::accumulate(gaps.begin(), gaps.end(), 0.0) /
        static_cast<double>(gaps.size());
    double dev = 0.0;
    for (double d : gaps) dev += std::abs(d - mean);
    const double denom =
        df + dl + static_cast<double>(gaps.size()) * mean;
    if (denom <= 0.0) return 1.0;
    return (df + dl + dev) / denom;
}

} // namespace uwsn
