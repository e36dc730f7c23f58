#pragma once

#include <functional>
#include <vector>

#include "uwsn/infometrics.hpp"

namespace uwsn {

struct Objectives {
    double info_gap = 0.0;   // f1
    double count_frac = 0.0; // f2
};

struct Individual {
    SelectionMask mask;
    Objectives obj;
    int rank = 0;
    double crowding = 0.0;
};

struct NsgaConfig {
    std::size_t genome_length = 0;
    std::size_t pop_size = 100;
    std::size_t generations = 100;
    double mutation_rate = -1.0; // < 0 selects the 1/N default
    bool seed_extremes = true;
};

using ObjectiveFn = std::function<Objectives(const SelectionMask&)>;

// Normalized log-det information gap vs normalized sensor count. The empty
// mask anchors the front at f1 = 1 by definition.
Objectives objective_fi(const SelectionMask& mask, const MetricTable& table);

Objectives objective_miub(const SelectionMask& mask, const MetricTable& table);

bool dominates(const Objectives& a, const Objectives& b);

// Assigns ranks in place and returns the fronts as index lists.
std::vector<std::vector<std::size_t>>
fast_nondominated_sort(std::vector<Individual>& population);

// Crowding distances for one front, written into the individuals.
void crowding_distance(std::vector<Individual>& population,
                       const std::vector<std::size_t>& front);

std::size_t binary_tournament(const std::vector<Individual>& population,
                              Rng& rng);

std::pair<SelectionMask, SelectionMask>
uniform_crossover(const SelectionMask& p1, const SelectionMask& p2, Rng& rng);

void uniform_mutation(SelectionMask& mask, double rate, Rng& rng);

// Full NSGA-II loop; returns the final rank-0 set, deduplicated (per
// objective vector the lexicographically smallest mask) and sorted by
// ascending f2.
std::vector<Individual> nsga2_run(const ObjectiveFn& objective,
                                  const NsgaConfig& config, Rng& rng);

// Spread metric Delta of a front; extremes are the feasible anchors (1,0)
// and (0,1). A single-point front is maximally non-diverse (1).
double diversity_metric(const std::vector<Objectives>& front);

} // namespace uwsn
