#include "uwsn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace uwsn {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
    throw std::invalid_argument("config: key '" + key + "': " + why);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) bad_value(key, "trailing characters in '" + v + "'");
        return d;
    } catch (const std::invalid_argument&) {
        bad_value(key, "not a number: '" + v + "'");
    } catch (const std::out_of_range&) {
        bad_value(key, "out of range: '" + v + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) bad_value(key, "trailing characters in '" + v + "'");
        return i;
    } catch (const std::invalid_argument&) {
        bad_value(key, "not an integer: '" + v + "'");
    } catch (const std::out_of_range&) {
        bad_value(key, "out of range: '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long i = std::stoull(v, &pos);
        if (pos != v.size()) bad_value(key, "trailing characters in '" + v + "'");
        return i;
    } catch (const std::invalid_argument&) {
        bad_value(key, "not an unsigned integer: '" + v + "'");
    } catch (const std::out_of_range&) {
        bad_value(key, "out of range: '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, "expected a boolean, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) bad_value(key, "empty list element");
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) bad_value(key, "empty list");
    return out;
}

std::string scheme_name(Scheme s) {
    switch (s) {
    case Scheme::Fiss: return "fiss";
    case Scheme::Miubss: return "miubss";
    case Scheme::WeightedSum: return "weighted_sum";
    case Scheme::FixedA: return "fixed_a";
    }
    return "miubss";
}

Scheme parse_scheme(const std::string& key, const std::string& v) {
    if (v == "fiss") return Scheme::Fiss;
    if (v == "miubss") return Scheme::Miubss;
    if (v == "weighted_sum") return Scheme::WeightedSum;
    if (v == "fixed_a") return Scheme::FixedA;
    bad_value(key, "unknown scheme '" + v +
                       "' (fiss, miubss, weighted_sum, fixed_a)");
}

std::string rule_name(SolutionRule r) {
    return r == SolutionRule::Knee ? "knee" : "compromise";
}

SolutionRule parse_rule(const std::string& key, const std::string& v) {
    if (v == "compromise") return SolutionRule::Compromise;
    if (v == "knee") return SolutionRule::Knee;
    bad_value(key, "unknown rule '" + v + "' (compromise, knee)");
}

std::string metric_name(FiMetric m) {
    return m == FiMetric::Fi ? "fi" : "miub";
}

FiMetric parse_metric(const std::string& key, const std::string& v) {
    if (v == "fi") return FiMetric::Fi;
    if (v == "miub") return FiMetric::Miub;
    bad_value(key, "unknown metric '" + v + "' (fi, miub)");
}

std::string join_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    return out;
}

void validate(const ExperimentConfig& c) {
    const auto check = [](bool ok, const std::string& key,
                          const std::string& why) {
        if (!ok) bad_value(key, why);
    };
    check(c.grid >= 1, "field.grid", "must be >= 1");
    check(c.roi_side > 0.0, "field.roi", "must be > 0");
    parse_layout(c.layout); // throws on unknown names
    const std::size_t n = static_cast<std::size_t>(c.grid) *
                          static_cast<std::size_t>(c.grid);
    if (!c.explicit_probs.empty()) {
        check(c.explicit_probs.size() == n, "field.probs",
              "needs grid*grid entries");
        for (double p : c.explicit_probs)
            check(p >= 0.0 && p <= 1.0, "field.probs",
                  "probabilities must be in [0, 1]");
    }
    check(c.signal.source_power > 0.0, "signal.p0", "must be > 0");
    check(c.signal.atten_scale > 0.0, "signal.alpha", "must be > 0");
    check(c.signal.decay_exponent > 0.0, "signal.n", "must be > 0");
    check(c.signal.noise_std > 0.0, "signal.sigma", "must be > 0");
    if (c.quantized)
        check(c.bits >= 1 && c.bits <= 16, "quantizer.bits",
              "must be in [1, 16]");
    check(c.sample_interval > 0.0, "motion.interval", "must be > 0");
    check(c.noise_intensity >= 0.0, "motion.q", "must be >= 0");
    check(c.prior_sigma_pos > 0.0, "prior.sigma_pos", "must be > 0");
    check(c.prior_sigma_vel > 0.0, "prior.sigma_vel", "must be > 0");
    check(c.particles >= 1, "filter.particles", "must be >= 1");
    check(c.w1 >= 0.0 && c.w1 <= 1.0, "selection.w1", "must be in [0, 1]");
    check(c.fixed_a <= n, "selection.a", "exceeds the sensor count");
    check(c.prefilter >= 0.0 && c.prefilter <= 1.0, "selection.prefilter",
          "must be in [0, 1]");
    check(c.pop_size >= 4 && c.pop_size % 2 == 0, "nsga.pop",
          "must be even and >= 4");
    check(c.generations >= 1, "nsga.generations", "must be >= 1");
    check(c.mutation_rate < 0.0 || c.mutation_rate <= 1.0, "nsga.mutation",
          "must be in [0, 1] or negative for the 1/N default");
    check(c.steps >= 1, "run.steps", "must be >= 1");
    check(c.trials >= 1, "run.trials", "must be >= 1");
    check(c.workers >= 1, "run.workers", "must be >= 1");
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string ExperimentConfig::canonical() const {
    std::string s;
    const auto add = [&s](const std::string& k, const std::string& v) {
        s += k + " = " + v + "\n";
    };
    add("field.grid", std::to_string(grid));
    add("field.roi", format_double(roi_side));
    add("field.layout", layout);
    add("field.layout_seed", std::to_string(layout_seed));
    if (!explicit_probs.empty()) add("field.probs", join_list(explicit_probs));
    add("signal.p0", format_double(signal.source_power));
    add("signal.alpha", format_double(signal.atten_scale));
    add("signal.n", format_double(signal.decay_exponent));
    add("signal.sigma", format_double(signal.noise_std));
    add("quantizer.kind", quantized ? "quantized" : "analog");
    add("quantizer.bits", std::to_string(bits));
    add("motion.interval", format_double(sample_interval));
    add("motion.q", format_double(noise_intensity));
    add("prior.mean", join_list({prior_mean(0), prior_mean(1), prior_mean(2),
                                 prior_mean(3)}));
    add("prior.sigma_pos", format_double(prior_sigma_pos));
    add("prior.sigma_vel", format_double(prior_sigma_vel));
    add("filter.particles", std::to_string(particles));
    add("selection.scheme", scheme_name(scheme));
    add("selection.rule", rule_name(rule));
    add("selection.metric", metric_name(metric));
    add("selection.w1", format_double(w1));
    add("selection.a", std::to_string(fixed_a));
    add("selection.prefilter", format_double(prefilter));
    add("nsga.pop", std::to_string(pop_size));
    add("nsga.generations", std::to_string(generations));
    add("nsga.mutation", format_double(mutation_rate));
    add("nsga.seed_extremes", seed_extremes ? "true" : "false");
    add("run.steps", std::to_string(steps));
    add("run.trials", std::to_string(trials));
    add("run.seed", std::to_string(seed));
    // run.workers is accepted as input but deliberately omitted: it is an
    // execution detail that must not influence any output byte.
    return s;
}

ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(
                "config: line " + std::to_string(lineno) +
                ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: line " +
                                        std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw std::invalid_argument("config: duplicate key '" + key + "'");
    }

    ExperimentConfig c;
    const auto take = [&kv](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        return &it->second;
    };
    const auto used = [&kv](const std::string& key) { kv.erase(key); };

    if (const auto* v = take("field.grid")) {
        c.grid = static_cast<int>(parse_int("field.grid", *v));
        used("field.grid");
    }
    if (const auto* v = take("field.roi")) {
        c.roi_side = parse_double("field.roi", *v);
        used("field.roi");
    }
    if (const auto* v = take("field.layout")) {
        c.layout = *v;
        used("field.layout");
    }
    if (const auto* v = take("field.layout_seed")) {
        c.layout_seed = parse_u64("field.layout_seed", *v);
        used("field.layout_seed");
    }
    if (const auto* v = take("field.probs")) {
        c.explicit_probs = parse_list("field.probs", *v);
        used("field.probs");
    }
    if (const auto* v = take("signal.p0")) {
        c.signal.source_power = parse_double("signal.p0", *v);
        used("signal.p0");
    }
    if (const auto* v = take("signal.alpha")) {
        c.signal.atten_scale = parse_double("signal.alpha", *v);
        used("signal.alpha");
    }
    if (const auto* v = take("signal.n")) {
        c.signal.decay_exponent = parse_double("signal.n", *v);
        used("signal.n");
    }
    if (const auto* v = take("signal.sigma")) {
        c.signal.noise_std = parse_double("signal.sigma", *v);
        used("signal.sigma");
    }
    if (const auto* v = take("quantizer.kind")) {
        if (*v == "analog")
            c.quantized = false;
        else if (*v == "quantized")
            c.quantized = true;
        else
            bad_value("quantizer.kind",
                      "expected 'analog' or 'quantized', got '" + *v + "'");
        used("quantizer.kind");
    }
    if (const auto* v = take("quantizer.bits")) {
        c.bits = static_cast<int>(parse_int("quantizer.bits", *v));
        used("quantizer.bits");
    }
    if (const auto* v = take("motion.interval")) {
        c.sample_interval = parse_double("motion.interval", *v);
        used("motion.interval");
    }
    if (const auto* v = take("motion.q")) {
        c.noise_intensity = parse_double("motion.q", *v);
        used("motion.q");
    }
    if (const auto* v = take("prior.mean")) {
        const auto m = parse_list("prior.mean", *v);
        if (m.size() != 4) bad_value("prior.mean", "needs 4 entries");
        c.prior_mean = Eigen::Vector4d(m[0], m[1], m[2], m[3]);
        used("prior.mean");
    }
    if (const auto* v = take("prior.sigma_pos")) {
        c.prior_sigma_pos = parse_double("prior.sigma_pos", *v);
        used("prior.sigma_pos");
    }
    if (const auto* v = take("prior.sigma_vel")) {
        c.prior_sigma_vel = parse_double("prior.sigma_vel", *v);
        used("prior.sigma_vel");
    }
    if (const auto* v = take("filter.particles")) {
        const long long n = parse_int("filter.particles", *v);
        if (n < 0) bad_value("filter.particles", "must be >= 1");
        c.particles = static_cast<std::size_t>(n);
        used("filter.particles");
    }
    if (const auto* v = take("selection.scheme")) {
        c.scheme = parse_scheme("selection.scheme", *v);
        used("selection.scheme");
    }
    if (const auto* v = take("selection.rule")) {
        c.rule = parse_rule("selection.rule", *v);
        used("selection.rule");
    }
    if (const auto* v = take("selection.metric")) {
        c.metric = parse_metric("selection.metric", *v);
        c.metric_explicit = true;
        used("selection.metric");
    }
    if (const auto* v = take("selection.w1")) {
        c.w1 = parse_double("selection.w1", *v);
        used("selection.w1");
    }
    if (const auto* v = take("selection.a")) {
        const long long a = parse_int("selection.a", *v);
        if (a < 0) bad_value("selection.a", "must be >= 0");
        c.fixed_a = static_cast<std::size_t>(a);
        used("selection.a");
    }
    if (const auto* v = take("selection.prefilter")) {
        c.prefilter = parse_double("selection.prefilter", *v);
        used("selection.prefilter");
    }
    if (const auto* v = take("nsga.pop")) {
        const long long p = parse_int("nsga.pop", *v);
        if (p < 0) bad_value("nsga.pop", "must be even and >= 4");
        c.pop_size = static_cast<std::size_t>(p);
        used("nsga.pop");
    }
    if (const auto* v = take("nsga.generations")) {
        const long long g = parse_int("nsga.generations", *v);
        if (g < 0) bad_value("nsga.generations", "must be >= 1");
        c.generations = static_cast<std::size_t>(g);
        used("nsga.generations");
    }
    if (const auto* v = take("nsga.mutation")) {
        c.mutation_rate = parse_double("nsga.mutation", *v);
        used("nsga.mutation");
    }
    if (const auto* v = take("nsga.seed_extremes")) {
        c.seed_extremes = parse_bool("nsga.seed_extremes", *v);
        used("nsga.seed_extremes");
    }
    if (const auto* v = take("run.steps")) {
        const long long t = parse_int("run.steps", *v);
        if (t < 0) bad_value("run.steps", "must be >= 1");
        c.steps = static_cast<std::size_t>(t);
        used("run.steps");
    }
    if (const auto* v = take("run.trials")) {
        const long long t = parse_int("run.trials", *v);
        if (t < 0) bad_value("run.trials", "must be >= 1");
        c.trials = static_cast<std::size_t>(t);
        used("run.trials");
    }
    if (const auto* v = take("run.seed")) {
        c.seed = parse_u64("run.seed", *v);
        used("run.seed");
    }
    if (const auto* v = take("run.workers")) {
        const long long w = parse_int("run.workers", *v);
        if (w < 1) bad_value("run.workers", "must be >= 1");
        c.workers = static_cast<unsigned>(w);
        used("run.workers");
    }

    if (!kv.empty())
        throw std::invalid_argument("config: unknown key '" +
                                    kv.begin()->first + "'");

    if (!c.metric_explicit)
        c.metric = c.scheme == Scheme::Fiss ? FiMetric::Fi : FiMetric::Miub;
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Experiment::Experiment(const ExperimentConfig& config) : config_(config) {
    validate(config_);
    SensorField full = make_grid_field(config_.grid, config_.roi_side,
                                       parse_layout(config_.layout),
                                       config_.layout_seed);
    if (!config_.explicit_probs.empty())
        for (std::size_t i = 0; i < full.sensors.size(); ++i)
            full.sensors[i].sensing_prob = config_.explicit_probs[i];
    full_count_ = full.sensors.size();
    field_ = config_.prefilter > 0.0
                 ? threshold_prefilter(full, config_.prefilter)
                 : full;
    if (config_.quantized)
        quantizer_ = build_quantizer(config_.bits, config_.signal);
    motion_ = build_motion_model(config_.sample_interval,
                                 config_.noise_intensity);
    prior_.mean = config_.prior_mean;
    prior_.cov = Mat4::Zero();
    prior_.cov(0, 0) = prior_.cov(1, 1) =
        config_.prior_sigma_pos * config_.prior_sigma_pos;
    prior_.cov(2, 2) = prior_.cov(3, 3) =
        config_.prior_sigma_vel * config_.prior_sigma_vel;
    engine_.emplace(field_, config_.signal, quantizer());
}

TrialResult Experiment::run_trial(std::uint64_t trial_seed,
                                  const ProbeFn& probe) const {
    Rng rng(trial_seed);
    const Mat4 prior_chol = cholesky_psd(prior_.cov);
    Eigen::Vector4d xi;
    for (int i = 0; i < 4; ++i) xi(i) = rng.normal();
    TargetState truth = prior_.mean + prior_chol * xi;

    ParticleCloud cloud = init_particles(prior_, config_.particles, rng);
    Scene scene{&field_, &config_.signal, quantizer()};
    const std::size_t n = field_.sensors.size();

    NsgaConfig nsga;
    nsga.genome_length = n;
    nsga.pop_size = config_.pop_size;
    nsga.generations = config_.generations;
    nsga.mutation_rate = config_.mutation_rate;
    nsga.seed_extremes = config_.seed_extremes;

    TrialResult trial;
    trial.steps.reserve(config_.steps);

    for (std::size_t t = 0; t < config_.steps; ++t) {
        truth = propagate(truth, motion_, rng);
        predict(cloud, motion_, rng);
        const MetricTable table = engine_->compute(cloud);

        SelectionMask local;
        double diversity = 0.0;
        std::vector<Individual> front;
        switch (config_.scheme) {
        case Scheme::Fiss:
        case Scheme::Miubss: {
            const bool fi = config_.scheme == Scheme::Fiss;
            front = nsga2_run(
                [&](const SelectionMask& m) {
                    return fi ? objective_fi(m, table)
                              : objective_miub(m, table);
                },
                nsga, rng);
            std::vector<Objectives> objs;
            objs.reserve(front.size());
            for (const Individual& ind : front) objs.push_back(ind.obj);
            diversity = diversity_metric(objs);
            const auto points = to_front_points(front);
            const FrontPoint chosen = config_.rule == SolutionRule::Knee
                                          ? knee_point(points)
                                          : compromise(points);
            local = chosen.mask;
            if (local.size() != n) local.assign(n, 0); // synthetic anchor
            break;
        }
        case Scheme::WeightedSum:
            local = weighted_sum_select(table, config_.metric, config_.w1,
                                        nsga, rng);
            break;
        case Scheme::FixedA:
            local = top_a_select(table, std::min(config_.fixed_a, n),
                                 config_.metric);
            break;
        }

        if (probe) {
            StepProbe p;
            p.step = t;
            p.cloud = &cloud;
            p.table = &table;
            p.front = front.empty() ? nullptr : &front;
            probe(p);
        }

        StepRecord rec;
        rec.truth = truth;
        rec.diversity = diversity;
        rec.mask.assign(full_count_, 0);
        std::vector<Measurement> meas;
        for (std::size_t i = 0; i < n; ++i) {
            if (!local[i]) continue;
            const Sensor& s = field_.sensors[i];
            rec.mask[static_cast<std::size_t>(s.id)] = 1;
            Measurement m = sample_measurement(s, truth, config_.signal, rng);
            rec.meas_values.push_back(m.value);
            rec.meas_sensed.push_back(m.truth_sensed ? 1 : 0);
            if (config_.quantized) {
                m.level = quantize(m.value, quantizer_);
                m.quantized = true;
            }
            meas.push_back(m);
            ++rec.selected;
        }

        const PfStepResult res =
            update_with_measurements(cloud, meas, scene, rng);
        rec.estimate = res.estimate;
        rec.underflow = res.weight_underflow;
        trial.steps.push_back(std::move(rec));
    }
    return trial;
}

std::vector<double> reliable_fraction(const TrialResult& trial, double sigma) {
    std::vector<double> out;
    out.reserve(trial.steps.size());
    for (const StepRecord& rec : trial.steps) {
        if (rec.meas_values.empty()) {
            out.push_back(0.0);
            continue;
        }
        std::size_t reliable = 0;
        for (double v : rec.meas_values)
            if (std::abs(v) > 3.0 * sigma) ++reliable;
        out.push_back(static_cast<double>(reliable) /
                      static_cast<double>(rec.meas_values.size()));
    }
    return out;
}

RunSummary aggregate(const std::vector<TrialResult>& trials, double sigma,
                     bool quantized) {
    if (trials.empty())
        throw std::invalid_argument("aggregate: no successful trials");
    const std::size_t steps = trials.front().steps.size();
    for (const TrialResult& t : trials)
        if (t.steps.size() != steps)
            throw std::invalid_argument("aggregate: ragged trial lengths");

    RunSummary s;
    s.trials = trials.size();
    s.mse.assign(steps, 0.0);
    s.mean_selected.assign(steps, 0.0);
    s.reliable_frac.assign(steps, 0.0);
    s.reliable_truth.assign(steps, 0.0);
    s.diversity.assign(steps, 0.0);

    // Per-trial contributions are sorted before accumulation so the result
    // does not depend on the order the trials are presented in.
    const auto sorted_mean = [](std::vector<double>& v) {
        if (v.empty()) return 0.0;
        std::sort(v.begin(), v.end());
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / static_cast<double>(v.size());
    };

    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<double> mse, selected, diversity, rel_amp, rel_truth;
        for (const TrialResult& tr : trials) {
            const StepRecord& rec = tr.steps[t];
            const double dx = rec.estimate(0) - rec.truth(0);
            const double dy = rec.estimate(1) - rec.truth(1);
            mse.push_back(dx * dx + dy * dy);
            selected.push_back(static_cast<double>(rec.selected));
            diversity.push_back(rec.diversity);
            if (rec.underflow) ++s.underflow_events;
            if (!rec.meas_values.empty()) {
                std::size_t amp = 0, sensed = 0;
                for (std::size_t k = 0; k < rec.meas_values.size(); ++k) {
                    if (std::abs(rec.meas_values[k]) > 3.0 * sigma) ++amp;
                    if (rec.meas_sensed[k]) ++sensed;
                }
                const double m = static_cast<double>(rec.meas_values.size());
                rel_amp.push_back((quantized ? static_cast<double>(sensed)
                                             : static_cast<double>(amp)) /
                                  m);
                rel_truth.push_back(static_cast<double>(sensed) / m);
            }
        }
        s.mse[t] = sorted_mean(mse);
        s.mean_selected[t] = sorted_mean(selected);
        s.diversity[t] = sorted_mean(diversity);
        s.reliable_frac[t] = sorted_mean(rel_amp);
        s.reliable_truth[t] = sorted_mean(rel_truth);
    }
    return s;
}

RunSummary Experiment::run_monte_carlo() const {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = config_.trials;
    std::vector<TrialResult> results(n);
    std::vector<std::string> errors(n);
    std::vector<std::uint8_t> ok(n, 0);

    const unsigned workers =
        std::min<unsigned>(config_.workers, static_cast<unsigned>(n));
    std::atomic<std::size_t> cursor{0};
    const auto work = [&]() {
        while (true) {
            const std::size_t tr = cursor.fetch_add(1);
            if (tr >= n) break;
            try {
                results[tr] = run_trial(trial_seed(tr));
                ok[tr] = 1;
            } catch (const std::exception& e) {
                errors[tr] = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    std::vector<TrialResult> good;
    good.reserve(n);
    std::size_t failed = 0;
    std::string first_error;
    for (std::size_t tr = 0; tr < n; ++tr) {
        if (ok[tr]) {
            good.push_back(std::move(results[tr]));
        } else {
            ++failed;
            if (first_error.empty()) first_error = errors[tr];
        }
    }
    if (static_cast<double>(failed) > 0.1 * static_cast<double>(n))
        throw std::runtime_error(
            "run: " + std::to_string(failed) + " of " + std::to_string(n) +
            " trials failed (first: " + first_error + ")");

    RunSummary summary =
        aggregate(good, config_.signal.noise_std, config_.quantized);
    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return summary;
}

std::string mask_hex(const SelectionMask& mask) {
    const std::size_t nibbles = (mask.size() + 3) / 4;
    std::string out = "0x";
    if (nibbles == 0) return out + "0";
    for (std::size_t k = nibbles; k-- > 0;) {
        unsigned v = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            const std::size_t bit = 4 * k + b;
            if (bit < mask.size() && mask[bit]) v |= 1u << b;
        }
        out += "0123456789abcdef"[v];
    }
    return out;
}

void write_mse_csv(const RunSummary& summary, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "step,mse,mean_selected,reliable_frac,diversity\n";
    for (std::size_t t = 0; t < summary.mse.size(); ++t)
        out << t << ',' << format_double(summary.mse[t]) << ','
            << format_double(summary.mean_selected[t]) << ','
            << format_double(summary.reliable_frac[t]) << ','
            << format_double(summary.diversity[t]) << '\n';
}

void write_reliability_csv(const RunSummary& summary, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "step,reliable_amp,reliable_truth\n";
    for (std::size_t t = 0; t < summary.reliable_frac.size(); ++t)
        out << t << ',' << format_double(summary.reliable_frac[t]) << ','
            << format_double(summary.reliable_truth[t]) << '\n';
}

void write_manifest(const ExperimentConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << config.canonical();
}

void write_front_csv(const std::vector<FrontPoint>& front,
                     const std::string& path) {
    std::vector<FrontPoint> pts = front;
    std::sort(pts.begin(), pts.end(), [](const FrontPoint& a,
                                         const FrontPoint& b) {
        if (a.f2 != b.f2) return a.f2 < b.f2;
        return a.f1 < b.f1;
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "f1,f2,cardinality,mask_hex\n";
    for (const FrontPoint& p : pts) {
        std::size_t card = 0;
        for (auto g : p.mask) card += g;
        out << format_double(p.f1) << ',' << format_double(p.f2) << ',' << card
            << ',' << mask_hex(p.mask) << '\n';
    }
}

void write_metrics_csv(const MetricTable& table, const SensorField& field,
                       const TargetState& ref, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "sensor_id,dist,p_s,fi_logdet_gain,mi_bits\n";
    std::vector<std::size_t> order(field.sensors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return field.sensors[a].id < field.sensors[b].id;
    });
    for (std::size_t i : order) {
        const Sensor& s = field.sensors[i];
        const double dx = s.x - ref(0);
        const double dy = s.y - ref(1);
        const double gain =
            logdet_psd(table.prior_fi + table.per_sensor_fi[i]) -
            table.prior_logdet;
        out << s.id << ',' << format_double(std::sqrt(dx * dx + dy * dy))
            << ',' << format_double(s.sensing_prob) << ','
            << format_double(gain) << ','
            << format_double(table.per_sensor_mi[i]) << '\n';
    }
}

void write_results(const RunSummary& summary, const ExperimentConfig& config,
                   const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_mse_csv(summary, (dir / "mse.csv").string());
    if (!config.quantized)
        write_reliability_csv(summary, (dir / "reliability.csv").string());
    write_manifest(config, (dir / "manifest.txt").string());
}

} // namespace uwsn
