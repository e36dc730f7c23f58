#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "uwsn/selection.hpp"

using namespace uwsn;

namespace {

FrontPoint fp(double f1, double f2) {
    FrontPoint p;
    p.f1 = f1;
    p.f2 = f2;
    p.mask = SelectionMask(4, 0);
    return p;
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

bool same_point(const FrontPoint& a, const FrontPoint& b) {
    return a.f1 == b.f1 && a.f2 == b.f2 && a.mask == b.mask;
}

double segment_slope(const FrontPoint& left, const FrontPoint& right) {
    return 180.0 -
           std::atan((left.f1 - right.f1) / (left.f2 - right.f2)) * 180.0 /
               M_PI;
}

} // namespace

TEST_CASE("knee slope anchor value") {
    // drop of 0.8 in f1 for a 0.25 rise in f2
    CHECK(segment_slope(fp(1.0, 0.0), fp(0.2, 0.25)) ==
          doctest::Approx(252.645975).epsilon(1e-8));
    // nearly flat segment scores lower
    CHECK(segment_slope(fp(0.2, 0.25), fp(0.1, 0.9)) <
          segment_slope(fp(1.0, 0.0), fp(0.2, 0.25)));
}

TEST_CASE("knee picks the steepest-gain point") {
    const std::vector<FrontPoint> front{fp(1.0, 0.0), fp(0.2, 0.25),
                                        fp(0.1, 0.9)};
    const FrontPoint k = knee_point(front);
    CHECK(k.f1 == 0.2);
    CHECK(k.f2 == 0.25);

    const std::vector<FrontPoint> steep{fp(1.0, 0.0), fp(0.1, 1.0 / 36.0),
                                        fp(0.05, 0.5), fp(0.0, 1.0)};
    const FrontPoint k2 = knee_point(steep);
    CHECK(k2.f1 == 0.1);
    CHECK(k2.f2 == doctest::Approx(1.0 / 36.0));
}

TEST_CASE("knee never returns the all-zero anchor") {
    // anchor absent: it is prepended internally but not a candidate
    const std::vector<FrontPoint> one{fp(0.5, 0.5)};
    const FrontPoint k = knee_point(one);
    CHECK(k.f1 == 0.5);
    CHECK(k.f2 == 0.5);

    // anchor present explicitly: still not returned
    const std::vector<FrontPoint> with{fp(1.0, 0.0), fp(0.5, 0.5)};
    const FrontPoint k2 = knee_point(with);
    CHECK(k2.f1 == 0.5);

    CHECK_THROWS(knee_point({}));
}

TEST_CASE("knee and compromise are members and order-invariant") {
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<FrontPoint> front;
        const int n = 2 + static_cast<int>(rng.below(8));
        double f1 = 1.0, f2 = 0.0;
        for (int i = 0; i < n; ++i) {
            front.push_back(fp(f1, f2));
            f1 -= rng.uniform() * f1;
            f2 += rng.uniform() * (1.0 - f2) + 1e-3;
        }
        const FrontPoint k = knee_point(front);
        const FrontPoint c = compromise(front);
        const auto member = [&](const FrontPoint& p) {
            return std::any_of(front.begin(), front.end(),
                               [&](const FrontPoint& q) {
                                   return same_point(p, q);
                               });
        };
        CHECK(member(k));
        CHECK(member(c));

        std::vector<FrontPoint> shuffled = front;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
        CHECK(same_point(knee_point(shuffled), k));
        CHECK(same_point(compromise(shuffled), c));
    }
}

TEST_CASE("compromise anchors") {
    const std::vector<FrontPoint> front{fp(1.0, 0.0), fp(0.5, 0.1),
                                        fp(0.0, 1.0)};
    const FrontPoint c = compromise(front);
    CHECK(c.f1 == 0.5);
    CHECK(c.f2 == 0.1);
    CHECK(std::hypot(c.f1, c.f2) == doctest::Approx(0.50990195135927845));

    const FrontPoint single = compromise({fp(0.7, 0.3)});
    CHECK(single.f1 == 0.7);

    // the utopia point itself wins outright
    const FrontPoint utopia = compromise({fp(0.4, 0.4), fp(0.0, 0.0)});
    CHECK(utopia.f1 == 0.0);
    CHECK(utopia.f2 == 0.0);

    // equal distances break toward the smaller f2
    const FrontPoint tie = compromise({fp(0.6, 0.8), fp(0.8, 0.6)});
    CHECK(tie.f2 == 0.6);

    CHECK_THROWS(compromise({}));
}

TEST_CASE("weighted sum extremes") {
    const MetricTable table = synthetic_table(6, 23);
    NsgaConfig cfg;
    cfg.pop_size = 32;
    cfg.generations = 40;
    Rng rng(25);
    for (FiMetric metric : {FiMetric::Fi, FiMetric::Miub}) {
        const SelectionMask none =
            weighted_sum_select(table, metric, 0.0, cfg, rng);
        CHECK(std::count(none.begin(), none.end(), 1) == 0);
        const SelectionMask all =
            weighted_sum_select(table, metric, 1.0, cfg, rng);
        CHECK(std::count(all.begin(), all.end(), 0) == 0);
    }
    CHECK_THROWS(weighted_sum_select(table, FiMetric::Miub, 1.5, cfg, rng));
}

TEST_CASE("weighted sum MIUB threshold rule is exact") {
    const MetricTable table = synthetic_table(6, 27);
    NsgaConfig cfg;
    Rng rng(29);
    const auto score = [&](const SelectionMask& m, double w1) {
        double mi = 0.0;
        int k = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (!m[i]) continue;
            mi += table.per_sensor_mi[i];
            ++k;
        }
        return w1 * (1.0 - mi / table.mi_sum) +
               (1.0 - w1) * k / static_cast<double>(m.size());
    };
    for (double w1 : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const SelectionMask got =
            weighted_sum_select(table, FiMetric::Miub, w1, cfg, rng);
        double best = std::numeric_limits<double>::infinity();
        for (unsigned bits = 0; bits < 64; ++bits) {
            SelectionMask m(6, 0);
            for (unsigned b = 0; b < 6; ++b) m[b] = (bits >> b) & 1u;
            best = std::min(best, score(m, w1));
        }
        CHECK(score(got, w1) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("threshold prefilter") {
    const SensorField field =
        make_grid_field(6, 50.0, FieldLayout::Paper, 1);
    const SensorField same = threshold_prefilter(field, 0.0);
    CHECK(same.sensors.size() == field.sensors.size());

    const SensorField kept = threshold_prefilter(field, 0.5);
    CHECK(kept.sensors.size() < field.sensors.size());
    for (const Sensor& s : kept.sensors) {
        CHECK(s.sensing_prob >= 0.5);
        // ids refer back to the full field
        CHECK(field.sensors[static_cast<std::size_t>(s.id)].sensing_prob ==
              s.sensing_prob);
    }
    // every dropped sensor really was below threshold
    std::size_t below = 0;
    for (const Sensor& s : field.sensors)
        if (s.sensing_prob < 0.5) ++below;
    CHECK(field.sensors.size() - kept.sensors.size() == below);
    CHECK(below > 0); // the near-track band sits under 0.35

    const SensorField reliable =
        make_grid_field(4, 50.0, FieldLayout::AllReliable, 1);
    CHECK(threshold_prefilter(reliable, 1.0).sensors.size() == 16);

    CHECK_THROWS(threshold_prefilter(field, 1.0)); // nothing survives
    CHECK_THROWS(threshold_prefilter(field, 1.5));
}

TEST_CASE("top-A selection") {
    const MetricTable table = synthetic_table(6, 31);
    const SelectionMask none = top_a_select(table, 0, FiMetric::Fi);
    CHECK(std::count(none.begin(), none.end(), 1) == 0);
    const SelectionMask all = top_a_select(table, 6, FiMetric::Miub);
    CHECK(std::count(all.begin(), all.end(), 0) == 0);
    CHECK_THROWS(top_a_select(table, 7, FiMetric::Fi));

    // A = 2, FI: must match the exhaustive best pair by log det
    const SelectionMask pair = top_a_select(table, 2, FiMetric::Fi);
    CHECK(std::count(pair.begin(), pair.end(), 1) == 2);
    double best = -std::numeric_limits<double>::infinity();
    SelectionMask best_mask;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i + 1; j < 6; ++j) {
            SelectionMask m(6, 0);
            m[i] = m[j] = 1;
            const double s = logdet_psd(total_fi(m, table));
            if (s > best) {
                best = s;
                best_mask = m;
            }
        }
    CHECK(pair == best_mask);

    // A = 2, MIUB: the two largest per-sensor MI values
    const SelectionMask mi2 = top_a_select(table, 2, FiMetric::Miub);
    std::vector<double> sorted = table.per_sensor_mi;
    std::sort(sorted.rbegin(), sorted.rend());
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(static_cast<bool>(mi2[i]) ==
              (table.per_sensor_mi[i] >= sorted[1]));
}

TEST_CASE("front point conversion") {
    std::vector<Individual> inds(2);
    inds[0].mask = {1, 0};
    inds[0].obj = {0.25, 0.5};
    inds[1].mask = {1, 1};
    inds[1].obj = {0.0, 1.0};
    const auto pts = to_front_points(inds);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].f1 == 0.25);
    CHECK(pts[0].f2 == 0.5);
    CHECK(pts[0].mask == SelectionMask{1, 0});
    CHECK(pts[1].f1 == 0.0);
}
