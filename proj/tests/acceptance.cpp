// Acceptance gate: nine end-to-end criteria, one pass/fail line each.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "uwsn/harness.hpp"

using namespace uwsn;

namespace {

std::string g_detail;

void fail(const std::string& why) { g_detail = why; }

// ---------------------------------------------------------------- fixtures

SensorField six_sensor_field() {
    const double probs[6] = {0.15, 0.8, 0.55, 0.3, 0.95, 0.45};
    const double px[6] = {-5.0, 5.0, -5.0, 5.0, 0.0, -8.0};
    const double py[6] = {-5.0, -5.0, 5.0, 5.0, 8.0, 0.0};
    SensorField f;
    for (int i = 0; i < 6; ++i) {
        Sensor s;
        s.id = i;
        s.x = px[i];
        s.y = py[i];
        s.sensing_prob = probs[i];
        f.sensors.push_back(s);
    }
    return f;
}

ParticleCloud gaussian_cloud(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    ParticleCloud c;
    c.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.x[i] = 1.5 * rng.normal();
        c.y[i] = -1.0 + 1.5 * rng.normal();
        c.vx[i] = 2.0 + 0.1 * rng.normal();
        c.vy[i] = 2.0 + 0.1 * rng.normal();
        c.w[i] = 1.0 / static_cast<double>(n);
    }
    return c;
}

MetricTable synthetic_table(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    MetricTable t;
    t.prior_fi = Mat4::Identity() * 1.2;
    FisherMatrix full = t.prior_fi;
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector4d g = Eigen::Vector4d::Zero();
        g(0) = rng.normal();
        g(1) = rng.normal();
        const FisherMatrix fi = (0.2 + rng.uniform()) * (g * g.transpose());
        t.per_sensor_fi.push_back(fi);
        t.per_sensor_mi.push_back(0.05 + rng.uniform());
        full += fi;
    }
    t.full_logdet = logdet_psd(full);
    t.prior_logdet = logdet_psd(t.prior_fi);
    for (double v : t.per_sensor_mi) t.mi_sum += v;
    return t;
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

RunSummary run(const std::string& config_text) {
    const Experiment exp(parse_config(config_text));
    return exp.run_monte_carlo();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- criteria

// 1. Closed-form Fisher information and finite-difference gradients.
bool criterion_fi_oracles() {
    const SignalModel model;
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        Sensor s;
        s.id = rep;
        s.x = -25.0 + 50.0 * rng.uniform();
        s.y = -25.0 + 50.0 * rng.uniform();
        s.sensing_prob = 1.0;
        TargetState state(-25.0 + 50.0 * rng.uniform(),
                          -25.0 + 50.0 * rng.uniform(), 2.0, 2.0);
        if (std::hypot(state(0) - s.x, state(1) - s.y) < 0.5) continue;

        const Eigen::Vector4d g = amplitude_gradient(s, state, model);
        const FisherMatrix want =
            g * g.transpose() / (model.noise_std * model.noise_std);
        const FisherMatrix got = fi_analog_single(s, state, model);
        const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
        if (((got - want).cwiseAbs().maxCoeff()) / scale > 1e-6) {
            fail("closed-form FI mismatch");
            return false;
        }

        for (int k = 0; k < 2; ++k) {
            const double step = 1e-6 * std::max(1.0, std::abs(state(k)));
            TargetState hi = state, lo = state;
            hi(k) += step;
            lo(k) -= step;
            const double fd = (received_amplitude(s, hi, model) -
                               received_amplitude(s, lo, model)) /
                              (2.0 * step);
            const double ref = std::max(std::abs(fd), 1e-12);
            if (std::abs(g(k) - fd) / ref > 1e-6) {
                fail("gradient finite-difference mismatch");
                return false;
            }
        }
        if (g(2) != 0.0 || g(3) != 0.0) {
            fail("velocity gradient components must vanish");
            return false;
        }
    }
    return true;
}

// 2. MIUB really upper-bounds the exact joint MI.
bool criterion_miub_bound() {
    const SensorField field = six_sensor_field();
    const ParticleCloud cloud = gaussian_cloud(150, 13);
    const SignalModel model;
    for (int bits : {2, 5}) {
        const Quantizer q = build_quantizer(bits, model);
        MetricTable table;
        table.per_sensor_fi.assign(6, FisherMatrix::Zero());
        for (int i = 0; i < 6; ++i)
            table.per_sensor_mi.push_back(
                mi_quantized({i}, cloud, field, model, q));
        for (double v : table.per_sensor_mi) table.mi_sum += v;

        for (unsigned m = 1; m < 64; ++m) {
            SelectionMask mask(6, 0);
            std::vector<int> subset;
            for (unsigned b = 0; b < 6; ++b)
                if ((m >> b) & 1u) {
                    mask[b] = 1;
                    subset.push_back(static_cast<int>(b));
                }
            if (subset.size() > 2) continue;
            const double bound = miub(mask, table);
            const double joint =
                mi_quantized(subset, cloud, field, model, q);
            if (bound < joint - 1e-9) {
                fail("miub < joint MI at bits=" + std::to_string(bits));
                return false;
            }
        }
    }
    return true;
}

// 3. NSGA-II front vs exhaustive Pareto enumeration; sort vs oracle.
bool criterion_nsga_correctness() {
    const std::size_t n = 10;
    const MetricTable table = synthetic_table(n, 17);
    std::set<std::pair<double, double>> pareto;
    {
        std::vector<Objectives> all;
        for (unsigned m = 0; m < (1u << n); ++m) {
            SelectionMask mask(n, 0);
            for (unsigned b = 0; b < n; ++b) mask[b] = (m >> b) & 1u;
            all.push_back(objective_fi(mask, table));
        }
        for (std::size_t i = 0; i < all.size(); ++i) {
            bool dom = false;
            for (std::size_t j = 0; j < all.size(); ++j)
                if (j != i && dominates(all[j], all[i])) dom = true;
            if (!dom) pareto.insert({all[i].info_gap, all[i].count_frac});
        }
    }
    NsgaConfig cfg;
    cfg.genome_length = n;
    cfg.pop_size = 64;
    cfg.generations = 60;
    std::size_t covered = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(500 + seed);
        const auto front = nsga2_run(
            [&](const SelectionMask& m) { return objective_fi(m, table); },
            cfg, rng);
        std::set<std::pair<double, double>> got;
        for (const Individual& ind : front) {
            const auto key =
                std::make_pair(ind.obj.info_gap, ind.obj.count_frac);
            if (pareto.count(key) == 0) {
                fail("front point outside the true Pareto set");
                return false;
            }
            got.insert(key);
        }
        covered += got.size();
    }
    if (static_cast<double>(covered) <
        0.95 * static_cast<double>(20 * pareto.size())) {
        fail("Pareto coverage below 95%");
        return false;
    }

    Rng rng(19);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<Individual> pop(50);
        for (auto& ind : pop) {
            ind.obj.info_gap = rng.uniform();
            ind.obj.count_frac = rng.uniform();
        }
        std::vector<Individual> copy = pop;
        fast_nondominated_sort(pop);
        std::vector<int> oracle(copy.size(), -1);
        int rank = 0;
        std::size_t assigned = 0;
        while (assigned < copy.size()) {
            std::vector<std::size_t> now;
            for (std::size_t i = 0; i < copy.size(); ++i) {
                if (oracle[i] >= 0) continue;
                bool dom = false;
                for (std::size_t j = 0; j < copy.size(); ++j)
                    if (oracle[j] < 0 && j != i &&
                        dominates(copy[j].obj, copy[i].obj))
                        dom = true;
                if (!dom) now.push_back(i);
            }
            for (std::size_t i : now) oracle[i] = rank;
            assigned += now.size();
            ++rank;
        }
        for (std::size_t i = 0; i < pop.size(); ++i)
            if (pop[i].rank != oracle[i]) {
                fail("nondominated sort disagrees with the oracle");
                return false;
            }
    }
    return true;
}

// 4. One front point per selected-sensor count on the 36-sensor default.
bool criterion_front_cardinality() {
    const Experiment exp(parse_config(""));
    Rng cloud_rng(7);
    const ParticleCloud cloud =
        init_particles(exp.prior(), exp.config().particles, cloud_rng);
    const MetricTable table = exp.engine().compute(cloud);

    NsgaConfig cfg;
    cfg.genome_length = 36;
    cfg.pop_size = 100;
    cfg.generations = 100;
    int good = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(900 + seed);
        const auto front = nsga2_run(
            [&](const SelectionMask& m) { return objective_miub(m, table); },
            cfg, rng);
        std::set<std::pair<double, double>> objs;
        std::set<int> cards;
        for (const Individual& ind : front) {
            objs.insert({ind.obj.info_gap, ind.obj.count_frac});
            int c = 0;
            for (auto g : ind.mask) c += g;
            cards.insert(c);
        }
        if (front.size() == 37 && objs.size() == 37 && cards.size() == 37)
            ++good;
    }
    if (good < 18) {
        fail("only " + std::to_string(good) +
             "/20 seeds produced a 37-point front");
        return false;
    }
    return true;
}

// 5. Knee rule: minimal cardinality, worse terminal MSE than compromise.
bool criterion_knee_vs_compromise() {
    const std::string base = "filter.particles = 2000\n"
                             "run.trials = 100\n"
                             "run.seed = 5\n";
    const RunSummary knee = run(base + "selection.rule = knee\n");
    const RunSummary comp = run(base + "selection.rule = compromise\n");
    const double knee_card = mean_of(knee.mean_selected);
    if (knee_card > 1.5) {
        fail("knee rule selects " + std::to_string(knee_card) +
             " sensors on average");
        return false;
    }
    if (knee.mse.back() < 1.25 * comp.mse.back()) {
        fail("knee terminal MSE " + std::to_string(knee.mse.back()) +
             " not >= 1.25x compromise " + std::to_string(comp.mse.back()));
        return false;
    }
    return true;
}

// 6. MIUBSS prefers reliable sensors and tracks better than FISS.
bool criterion_miubss_vs_fiss() {
    const std::string base = "filter.particles = 2000\n"
                             "run.trials = 200\n"
                             "run.seed = 6\n";
    const RunSummary miubss = run(base + "selection.scheme = miubss\n");
    const RunSummary fiss = run(base + "selection.scheme = fiss\n");
    const double rel_miubss = mean_of(miubss.reliable_frac);
    const double rel_fiss = mean_of(fiss.reliable_frac);
    if (!(rel_miubss > rel_fiss)) {
        fail("reliable fraction: miubss " + std::to_string(rel_miubss) +
             " vs fiss " + std::to_string(rel_fiss));
        return false;
    }
    if (!(miubss.mse.back() < fiss.mse.back())) {
        fail("terminal MSE: miubss " + std::to_string(miubss.mse.back()) +
             " vs fiss " + std::to_string(fiss.mse.back()));
        return false;
    }

    const std::string one = base + "selection.scheme = fixed_a\n"
                                   "selection.a = 1\n";
    const RunSummary mi1 = run(one + "selection.metric = miub\n");
    const RunSummary fi1 = run(one + "selection.metric = fi\n");
    const double gap = mean_of(mi1.reliable_frac) - mean_of(fi1.reliable_frac);
    if (gap < 0.10) {
        fail("single-sensor reliable-fraction gap only " +
             std::to_string(gap));
        return false;
    }
    return true;
}

// 7. Quantization ordering: analog <= 5-bit <= 2-bit tracking MSE.
bool criterion_quantization_ordering() {
    const std::string base = "filter.particles = 2000\n"
                             "run.trials = 200\n"
                             "run.seed = 7\n";
    const RunSummary analog = run(base);
    const RunSummary b5 = run(base + "quantizer.kind = quantized\n"
                                     "quantizer.bits = 5\n");
    const RunSummary b2 = run(base + "quantizer.kind = quantized\n"
                                     "quantizer.bits = 2\n");
    const double ma = mean_of(analog.mse);
    const double m5 = mean_of(b5.mse);
    const double m2 = mean_of(b2.mse);
    if (!(ma <= m5 && m5 <= m2)) {
        fail("mean MSE ordering violated: analog " + std::to_string(ma) +
             ", 5-bit " + std::to_string(m5) + ", 2-bit " +
             std::to_string(m2));
        return false;
    }
    if (!(m5 - ma < m2 - m5)) {
        fail("analog/5-bit gap " + std::to_string(m5 - ma) +
             " not smaller than 5-bit/2-bit gap " + std::to_string(m2 - m5));
        return false;
    }
    return true;
}

// 8. Byte-identical replays, independent of the worker count.
bool criterion_determinism() {
#ifndef UWSN_CLI_PATH
    fail("CLI path not configured");
    return false;
#else
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "uwsn_acceptance";
    fs::create_directories(dir);
    const fs::path cfg = dir / "determinism.cfg";
    {
        std::ofstream out(cfg, std::ios::binary);
        out << "filter.particles = 500\n"
               "run.steps = 5\n"
               "run.trials = 8\n"
               "run.seed = 3\n"
               "nsga.pop = 20\n"
               "nsga.generations = 10\n";
    }
    const auto simulate = [&](const std::string& out_dir, int workers) {
        const std::string cmd = std::string(UWSN_CLI_PATH) +
                                " simulate --config " + cfg.string() +
                                " --workers " + std::to_string(workers) +
                                " --out " + out_dir + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    const std::string a = (dir / "a").string();
    const std::string b = (dir / "b").string();
    const std::string c = (dir / "c").string();
    if (!simulate(a, 1) || !simulate(b, 1) || !simulate(c, 3)) {
        fail("simulate invocation failed");
        return false;
    }
    for (const char* file : {"mse.csv", "reliability.csv", "manifest.txt"}) {
        const std::string ref = slurp(a + "/" + file);
        if (ref.empty()) {
            fail(std::string("missing output ") + file);
            return false;
        }
        if (slurp(b + "/" + file) != ref) {
            fail(std::string("rerun differs in ") + file);
            return false;
        }
        if (slurp(c + "/" + file) != ref) {
            fail(std::string("worker count changes ") + file);
            return false;
        }
    }
    return true;
#endif
}

// 9. Normalization: pmf sums, particle weights, PSD Fisher matrices.
bool criterion_normalization() {
    const SignalModel model;
    const SensorField field = make_grid_field(6, 50.0, FieldLayout::Paper, 1);
    Rng rng(23);
    for (int rep = 0; rep < 1000; ++rep) {
        const Sensor& s = field.sensors[rng.below(field.sensors.size())];
        const TargetState state(-25.0 + 50.0 * rng.uniform(),
                                -25.0 + 50.0 * rng.uniform(), 2.0, 2.0);
        const int bits = 1 + static_cast<int>(rng.below(8));
        const Quantizer q = build_quantizer(bits, model);
        double sum = 0.0;
        for (int l = 0; l < q.levels; ++l)
            sum += quantized_pmf(l, s, state, model, q);
        if (std::abs(sum - 1.0) > 1e-12) {
            fail("pmf sum deviates by " + std::to_string(sum - 1.0));
            return false;
        }
    }

    const MotionModel motion = build_motion_model(1.25, 2.5e-3);
    Prior prior;
    prior.mean = Eigen::Vector4d(-23.0, -24.0, 2.0, 2.0);
    prior.cov = Mat4::Identity();
    ParticleCloud cloud = init_particles(prior, 1000, rng);
    Scene scene;
    scene.field = &field;
    scene.signal = &model;
    TargetState truth = prior.mean;
    for (int t = 0; t < 20; ++t) {
        truth = propagate(truth, motion, rng);
        std::vector<Measurement> meas;
        for (int k = 0; k < 3; ++k) {
            const Sensor& s = field.sensors[rng.below(field.sensors.size())];
            meas.push_back(sample_measurement(s, truth, model, rng));
        }
        pf_step(cloud, motion, meas, scene, rng);
        double wsum = 0.0;
        for (double w : cloud.w) wsum += w;
        if (std::abs(wsum - 1.0) > 1e-12) {
            fail("particle weights sum to " + std::to_string(wsum));
            return false;
        }
    }

    const Quantizer q5 = build_quantizer(5, model);
    const ParticleCloud small = gaussian_cloud(200, 29);
    const auto psd = [](const FisherMatrix& m) {
        const Eigen::SelfAdjointEigenSolver<Mat4> es(m);
        const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
        return es.eigenvalues().minCoeff() >= -1e-9 * scale;
    };
    for (int rep = 0; rep < 100; ++rep) {
        const Sensor& s = field.sensors[rng.below(field.sensors.size())];
        const TargetState state(-25.0 + 50.0 * rng.uniform(),
                                -25.0 + 50.0 * rng.uniform(), 2.0, 2.0);
        if (!psd(fi_analog_single(s, state, model)) ||
            !psd(fi_quantized_single(s, state, model, q5)) ||
            !psd(expected_fi(s, small, model)) ||
            !psd(expected_fi(s, small, model, &q5))) {
            fail("Fisher matrix not PSD");
            return false;
        }
    }
    if (!psd(prior_fisher(small))) {
        fail("prior Fisher matrix not PSD");
        return false;
    }
    return true;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<bool()> fn;
    };
    const std::vector<Criterion> criteria{
        {"FI closed form and gradient oracles", criterion_fi_oracles},
        {"MIUB upper-bounds the exact joint MI", criterion_miub_bound},
        {"NSGA-II front and sort correctness", criterion_nsga_correctness},
        {"36-sensor front has N+1 cardinalities", criterion_front_cardinality},
        {"knee rule: fewer sensors, worse MSE", criterion_knee_vs_compromise},
        {"MIUBSS beats FISS on reliability and MSE", criterion_miubss_vs_fiss},
        {"quantization MSE ordering", criterion_quantization_ordering},
        {"byte-identical deterministic replays", criterion_determinism},
        {"normalization and PSD invariants", criterion_normalization},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        g_detail.clear();
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = criteria[i].fn();
        } catch (const std::exception& e) {
            fail(std::string("exception: ") + e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        std::printf("[%zu/9] %-42s %s (%.1f s)%s%s\n", i + 1,
                    criteria[i].name, ok ? "PASS" : "FAIL", secs,
                    g_detail.empty() ? "" : " -- ", g_detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
