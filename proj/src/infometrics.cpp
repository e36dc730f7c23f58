#include "uwsn/infometrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "uwsn/kernels.hpp"

namespace uwsn {

namespace {

constexpr double kLog2 = 0.6931471805599453094;

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double b, double fa, double fm, double fb, double whole,
                     double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps)
        return left + right + delta / 15.0;
    return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

// Adaptive Simpson with tolerance relative to a caller-supplied scale.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double rel_tol, double scale) {
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = simpson(a, b, fa, fm, fb);
    const double eps = rel_tol * std::max(std::abs(scale), 1e-30);
    return adaptive_step(f, a, b, fa, fm, fb, whole, eps, 40);
}

Eigen::Vector4d gradient_h(const Sensor& sensor, const TargetState& state,
                           const SignalModel& model) {
    return amplitude_gradient(sensor, state, model);
}

double entropy_bits(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

} // namespace

double logdet_psd(const Mat4& m) {
    Eigen::LLT<Mat4> llt(m);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-9 * m.trace() / 4.0;
        llt.compute(m + jitter * Mat4::Identity());
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("logdet: matrix not positive definite");
    }
    const Mat4 l = llt.matrixL();
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

double kappa_analog(double h, double sensing_prob, const SignalModel& model) {
    // With p_s = 0 the likelihood has no state dependence; the FI is zero
    // regardless of kappa, whose own integral blows up exponentially in h.
    if (sensing_prob <= 0.0) return 0.0;
    const double sigma = model.noise_std;
    const double s2 = sigma * sigma;
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
    const auto integrand = [&](double z) {
        const double rs = z - h;
        const double sig = std::exp(-rs * rs / (2.0 * s2));
        const double noi = std::exp(-z * z / (2.0 * s2));
        const double p =
            norm * (sensing_prob * sig + (1.0 - sensing_prob) * noi);
        if (p < 1e-300) return 0.0;
        const double dnum = rs / s2 * norm * sig;
        return dnum * dnum / p;
    };
    // The integrand lives in +/-8 sigma windows around the two mixture modes
    // (z = 0 and z = h); between them both densities are doubly-exponentially
    // small. Integrating the windows keeps the quadrature panels on the
    // spikes for any h.
    const double scale = 1.0 / s2;
    const double w = 8.0 * sigma;
    double total = 0.0;
    if (h <= 2.0 * w) {
        const double cut = std::min(std::max(h * 0.5, 0.0), w);
        total += adaptive_simpson(integrand, -w, cut, 1e-8, scale);
        total += adaptive_simpson(integrand, cut, h + w, 1e-8, scale);
    } else {
        total += adaptive_simpson(integrand, -w, w, 1e-8, scale);
        total += adaptive_simpson(integrand, h - w, h + w, 1e-8, scale);
    }
    return total;
}

double kappa_quantized(double h, double sensing_prob, const SignalModel& model,
                       const Quantizer& quantizer) {
    const double sigma = model.noise_std;
    const double s2 = sigma * sigma;
    const auto edge_exp = [&](double eta) {
        if (!std::isfinite(eta)) return 0.0;
        const double r = eta - h;
        return std::exp(-r * r / (2.0 * s2));
    };
    double kappa = 0.0;
    for (int l = 0; l < quantizer.levels; ++l) {
        const double pmf = quantized_pmf_h(l, h, sensing_prob, model, quantizer);
        if (pmf < 1e-300) continue;
        const double diff = edge_exp(quantizer.thresholds[l]) -
                            edge_exp(quantizer.thresholds[l + 1]);
        kappa += diff * diff / (2.0 * M_PI * s2 * pmf);
    }
    return kappa;
}

FisherMatrix fi_analog_single(const Sensor& sensor, const TargetState& state,
                              const SignalModel& model) {
    const double h = received_amplitude(sensor, state, model);
    const double k = kappa_analog(h, sensor.sensing_prob, model);
    const Eigen::Vector4d g = gradient_h(sensor, state, model);
    return sensor.sensing_prob * sensor.sensing_prob * k * (g * g.transpose());
}

FisherMatrix fi_quantized_single(const Sensor& sensor, const TargetState& state,
                                 const SignalModel& model,
                                 const Quantizer& quantizer) {
    const double h = received_amplitude(sensor, state, model);
    const double k = kappa_quantized(h, sensor.sensing_prob, model, quantizer);
    const Eigen::Vector4d g = gradient_h(sensor, state, model);
    return sensor.sensing_prob * sensor.sensing_prob * k * (g * g.transpose());
}

FisherMatrix prior_fisher(const ParticleCloud& cloud) {
    Mat4 cov = weighted_covariance(cloud);
    Eigen::LLT<Mat4> llt(cov);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-9 * cov.trace() / 4.0;
        llt.compute(cov + jitter * Mat4::Identity());
        if (llt.info() != Eigen::Success)
            throw std::runtime_error(
                "prior_fisher: cloud covariance not invertible");
    }
    return llt.solve(Mat4::Identity());
}

FisherMatrix expected_fi(const Sensor& sensor, const ParticleCloud& cloud,
                         const SignalModel& model, const Quantizer* quantizer) {
    FisherMatrix sum = FisherMatrix::Zero();
    const std::size_t n = cloud.size();
    for (std::size_t i = 0; i < n; ++i) {
        const TargetState s = cloud.state(i);
        const FisherMatrix fi =
            quantizer ? fi_quantized_single(sensor, s, model, *quantizer)
                      : fi_analog_single(sensor, s, model);
        sum += cloud.w[i] * fi;
    }
    return sum;
}

FisherMatrix total_fi(const SelectionMask& mask, const MetricTable& table) {
    if (mask.size() != table.per_sensor_fi.size())
        throw std::invalid_argument("total_fi: mask length mismatch");
    FisherMatrix sum = table.prior_fi;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) sum += table.per_sensor_fi[i];
    return sum;
}

double miub(const SelectionMask& mask, const MetricTable& table) {
    if (mask.size() != table.per_sensor_mi.size())
        throw std::invalid_argument("miub: mask length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) sum += table.per_sensor_mi[i];
    return sum;
}

double mi_quantized(const std::vector<int>& subset, const ParticleCloud& cloud,
                    const SensorField& field, const SignalModel& model,
                    const Quantizer& quantizer, std::uint64_t tuple_budget) {
    const std::size_t k = subset.size();
    if (k == 0) return 0.0;
    const std::uint64_t levels = static_cast<std::uint64_t>(quantizer.levels);
    std::uint64_t tuples = 1;
    for (std::size_t i = 0; i < k; ++i) {
        if (tuples > tuple_budget / levels)
            throw std::runtime_error(
                "mi_quantized: level-tuple count exceeds budget");
        tuples *= levels;
    }

    const std::size_t n = cloud.size();
    const std::size_t levels_sz = static_cast<std::size_t>(quantizer.levels);

    // Per-sensor pmf rows for every particle.
    std::vector<std::vector<double>> rows(k);
    double h_cond = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const Sensor* sensor = nullptr;
        for (const Sensor& s : field.sensors)
            if (s.id == subset[i]) sensor = &s;
        if (!sensor) throw std::invalid_argument("mi_quantized: unknown sensor");
        rows[i].resize(n * levels_sz);
        for (std::size_t s = 0; s < n; ++s) {
            const double h =
                received_amplitude(*sensor, cloud.state(s), model);
            double hs = 0.0;
            for (std::size_t l = 0; l < levels_sz; ++l) {
                const double p = quantized_pmf_h(static_cast<int>(l), h,
                                                 sensor->sensing_prob, model,
                                                 quantizer);
                rows[i][s * levels_sz + l] = p;
                if (p > 0.0) hs -= p * std::log2(p);
            }
            h_cond += cloud.w[s] * hs;
        }
    }

    // H(D): exact sum over all level tuples.
    double h_joint = 0.0;
    std::vector<std::size_t> tuple(k, 0);
    for (std::uint64_t t = 0; t < tuples; ++t) {
        double marginal = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double prod = cloud.w[s];
            for (std::size_t i = 0; i < k; ++i)
                prod *= rows[i][s * levels_sz + tuple[i]];
            marginal += prod;
        }
        if (marginal > 0.0) h_joint -= marginal * std::log2(marginal);
        for (std::size_t i = 0; i < k; ++i) {
            if (++tuple[i] < levels_sz) break;
            tuple[i] = 0;
        }
    }
    return std::max(0.0, h_joint - h_cond);
}

double conditional_entropy_bits(double h, double sensing_prob,
                                const SignalModel& model) {
    const double sigma = model.noise_std;
    const auto integrand = [&](double z) {
        const double p = analog_likelihood_h(z, h, sensing_prob, model);
        return p > 0.0 ? -p * std::log2(p) : 0.0;
    };
    // Same windowed integration as kappa_analog: -p log p is doubly-
    // exponentially small away from the two mixture modes.
    const double w = 8.0 * sigma;
    const double lo = std::min(0.0, h) - w;
    const double hi = std::max(0.0, h) + w;
    double total = 0.0;
    if (std::abs(h) <= 2.0 * w) {
        const double cut = std::clamp(h * 0.5, lo + 1e-12, hi - 1e-12);
        total += adaptive_simpson(integrand, lo, cut, 1e-9, 4.0);
        total += adaptive_simpson(integrand, cut, hi, 1e-9, 4.0);
    } else if (h > 0.0) {
        total += adaptive_simpson(integrand, -w, w, 1e-9, 4.0);
        total += adaptive_simpson(integrand, h - w, h + w, 1e-9, 4.0);
    } else {
        total += adaptive_simpson(integrand, h - w, h + w, 1e-9, 4.0);
        total += adaptive_simpson(integrand, -w, w, 1e-9, 4.0);
    }
    return total;
}

MiEstimate mi_analog(const std::vector<int>& subset, const ParticleCloud& cloud,
                     const SensorField& field, const SignalModel& model,
                     std::size_t sample_count, Rng& rng) {
    const std::size_t k = subset.size();
    MiEstimate out;
    if (k == 0 || sample_count == 0) return out;
    const std::size_t n = cloud.size();

    std::vector<const Sensor*> sensors(k, nullptr);
    for (std::size_t i = 0; i < k; ++i) {
        for (const Sensor& s : field.sensors)
            if (s.id == subset[i]) sensors[i] = &s;
        if (!sensors[i]) throw std::invalid_argument("mi_analog: unknown sensor");
    }

    // Amplitudes per sensor and particle.
    std::vector<std::vector<double>> amp(k, std::vector<double>(n));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t s = 0; s < n; ++s)
            amp[i][s] = received_amplitude(*sensors[i], cloud.state(s), model);

    // Conditional entropy: quadrature per amplitude bin (256 bins).
    double h_cond = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto [lo_it, hi_it] =
            std::minmax_element(amp[i].begin(), amp[i].end());
        const double lo = *lo_it;
        const double span = std::max(*hi_it - lo, 1e-12);
        constexpr std::size_t bins = 256;
        std::vector<double> bw(bins, 0.0), bh(bins, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            std::size_t b = static_cast<std::size_t>((amp[i][s] - lo) / span *
                                                     (bins - 1));
            b = std::min(b, bins - 1);
            bw[b] += cloud.w[s];
            bh[b] += cloud.w[s] * amp[i][s];
        }
        for (std::size_t b = 0; b < bins; ++b)
            if (bw[b] > 0.0)
                h_cond += bw[b] * conditional_entropy_bits(
                                      bh[b] / bw[b],
                                      sensors[i]->sensing_prob, model);
    }

    // Cumulative weights for particle draws.
    std::vector<double> cum(n);
    double acc = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        acc += cloud.w[s];
        cum[s] = acc;
    }

    // H(z): Monte Carlo over (x, z) pairs.
    double mean = 0.0, m2 = 0.0;
    std::vector<double> z(k);
    for (std::size_t j = 0; j < sample_count; ++j) {
        const double u = rng.uniform() * acc;
        const std::size_t s = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        for (std::size_t i = 0; i < k; ++i) {
            const bool sensed = rng.bernoulli(sensors[i]->sensing_prob);
            z[i] = (sensed ? amp[i][std::min(s, n - 1)] : 0.0) +
                   model.noise_std * rng.normal();
        }
        double q = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            double prod = cloud.w[t];
            for (std::size_t i = 0; i < k; ++i)
                prod *= analog_likelihood_h(z[i], amp[i][t],
                                            sensors[i]->sensing_prob, model);
            q += prod;
        }
        const double v = -std::log2(std::max(q, 1e-300));
        const double delta = v - mean;
        mean += delta / static_cast<double>(j + 1);
        m2 += delta * (v - mean);
    }
    const double var =
        sample_count > 1 ? m2 / static_cast<double>(sample_count - 1) : 0.0;
    out.bits = mean - h_cond;
    out.std_error = std::sqrt(var / static_cast<double>(sample_count));
    return out;
}

// ---- MetricEngine --------------------------------------------------------

MetricEngine::MetricEngine(const SensorField& field, const SignalModel& model,
                           const Quantizer* quantizer)
    : field_(&field), model_(model), quantizer_(quantizer) {
    const double sigma = model_.noise_std;
    const double h_max = std::sqrt(model_.source_power);
    tables_.resize(field.sensors.size());
    for (std::size_t i = 0; i < field.sensors.size(); ++i) {
        const Sensor& s = field.sensors[i];
        SensorTables& t = tables_[i];

        // Both kappa^A and the conditional entropy depend on h only through
        // the overlap of the two mixture components, so they are constant
        // once h >> sigma.
        t.h_cap = std::min(h_max, 14.0 * sigma);
        constexpr std::size_t pts = 385;
        t.dh = t.h_cap / (pts - 1);
        t.kappa_a.resize(pts);
        t.hmix_a.resize(pts);
        for (std::size_t j = 0; j < pts; ++j) {
            const double h = static_cast<double>(j) * t.dh;
            t.kappa_a[j] = kappa_analog(h, s.sensing_prob, model_);
            t.hmix_a[j] = conditional_entropy_bits(h, s.sensing_prob, model_);
        }

        if (quantizer_ && quantizer_->levels <= 256) {
            t.has_q = true;
            t.h_max_q = h_max;
            const std::size_t npts = std::clamp<std::size_t>(
                static_cast<std::size_t>(t.h_max_q / (sigma / 4.0)) + 2, 129,
                4097);
            t.npts_q = npts;
            t.dh_q = t.h_max_q / static_cast<double>(npts - 1);
            const std::size_t levels =
                static_cast<std::size_t>(quantizer_->levels);
            t.kappa_q.resize(npts);
            t.hd.resize(npts);
            t.pmf_rows.resize(npts * levels);
            for (std::size_t j = 0; j < npts; ++j) {
                const double h = static_cast<double>(j) * t.dh_q;
                t.kappa_q[j] =
                    kappa_quantized(h, s.sensing_prob, model_, *quantizer_);
                double hs = 0.0;
                for (std::size_t l = 0; l < levels; ++l) {
                    const double p = quantized_pmf_h(
                        static_cast<int>(l), h, s.sensing_prob, model_,
                        *quantizer_);
                    t.pmf_rows[j * levels + l] = p;
                    if (p > 0.0) hs -= p * std::log2(p);
                }
                t.hd[j] = hs;
            }
        }
    }
}

double MetricEngine::lerp_table(const std::vector<double>& tab, double dh,
                                double h) const {
    if (h <= 0.0) return tab.front();
    const double pos = h / dh;
    const std::size_t j = static_cast<std::size_t>(pos);
    if (j + 1 >= tab.size()) return tab.back();
    const double frac = pos - static_cast<double>(j);
    return tab[j] + frac * (tab[j + 1] - tab[j]);
}

MetricTable MetricEngine::compute(const ParticleCloud& cloud) const {
    const std::size_t n = cloud.size();
    const std::size_t ns = field_->sensors.size();
    const double sigma = model_.noise_std;
    MetricTable out;
    out.per_sensor_fi.resize(ns);
    out.per_sensor_mi.resize(ns);
    out.prior_fi = prior_fisher(cloud);
    out.prior_logdet = logdet_psd(out.prior_fi);

    std::vector<double> h(n);
    constexpr std::size_t kBins = 128;
    std::vector<double> bin_w(kBins), bin_h(kBins);

    FisherMatrix full = out.prior_fi;
    for (std::size_t si = 0; si < ns; ++si) {
        const Sensor& sensor = field_->sensors[si];
        const SensorTables& tab = tables_[si];

        if (model_.decay_exponent == 2.0) {
            kernels::ops().amplitude2(cloud.x.data(), cloud.y.data(), n,
                                      sensor.x, sensor.y, model_.source_power,
                                      model_.atten_scale, h.data());
        } else {
            for (std::size_t i = 0; i < n; ++i)
                h[i] = received_amplitude(sensor, cloud.state(i), model_);
        }

        // Amplitude bins (weighted mean amplitude per bin).
        const auto [lo_it, hi_it] = std::minmax_element(h.begin(), h.end());
        const double h_lo = *lo_it;
        const double h_span = std::max(*hi_it - h_lo, 1e-12);
        std::fill(bin_w.begin(), bin_w.end(), 0.0);
        std::fill(bin_h.begin(), bin_h.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t b = static_cast<std::size_t>((h[i] - h_lo) / h_span *
                                                     (kBins - 1));
            b = std::min(b, kBins - 1);
            bin_w[b] += cloud.w[i];
            bin_h[b] += cloud.w[i] * h[i];
        }

        // Expected FI over the cloud.
        const double ps2 = sensor.sensing_prob * sensor.sensing_prob;
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double kappa;
            if (!quantizer_) {
                kappa = lerp_table(tab.kappa_a, tab.dh, h[i]);
            } else if (tab.has_q) {
                kappa = lerp_table(tab.kappa_q, tab.dh_q, h[i]);
            } else {
                kappa = kappa_quantized(h[i], sensor.sensing_prob, model_,
                                        *quantizer_);
            }
            const double dx = cloud.x[i] - sensor.x;
            const double dy = cloud.y[i] - sensor.y;
            double factor;
            if (model_.decay_exponent == 2.0) {
                // 1 + alpha d^2 = P0 / h^2
                factor = -model_.atten_scale * h[i] * h[i] * h[i] /
                         model_.source_power;
            } else {
                const double d = std::sqrt(dx * dx + dy * dy);
                const double dn = std::pow(d, model_.decay_exponent);
                factor = d == 0.0
                             ? 0.0
                             : -0.5 * model_.atten_scale *
                                   model_.decay_exponent * h[i] *
                                   std::pow(d, model_.decay_exponent - 2.0) /
                                   (1.0 + model_.atten_scale * dn);
            }
            const double wk = cloud.w[i] * ps2 * kappa * factor * factor;
            sxx += wk * dx * dx;
            sxy += wk * dx * dy;
            syy += wk * dy * dy;
        }
        FisherMatrix fi = FisherMatrix::Zero();
        fi(0, 0) = sxx;
        fi(0, 1) = fi(1, 0) = sxy;
        fi(1, 1) = syy;
        out.per_sensor_fi[si] = fi;
        full += fi;

        // Per-sensor MI.
        double mi;
        if (!quantizer_) {
            double h_cond = 0.0;
            for (std::size_t b = 0; b < kBins; ++b)
                if (bin_w[b] > 0.0)
                    h_cond += bin_w[b] *
                              lerp_table(tab.hmix_a, tab.dh, bin_h[b] / bin_w[b]);

            // Marginal density on a z grid; each mixture component only
            // touches its +/-8.5 sigma window.
            const double z_lo = -8.0 * sigma;
            const double z_hi = h_lo + h_span + 8.0 * sigma;
            const double dz = sigma / 8.0;
            const std::size_t gn =
                static_cast<std::size_t>((z_hi - z_lo) / dz) + 1;
            std::vector<double> grid(gn, 0.0);
            const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
            kernels::ops().gauss_accum(grid.data(), 0, gn, z_lo, dz, 0.0,
                                       1.0 - sensor.sensing_prob, inv2s2);
            for (std::size_t b = 0; b < kBins; ++b) {
                if (bin_w[b] <= 0.0) continue;
                const double mean = bin_h[b] / bin_w[b];
                const double lo = mean - 8.5 * sigma;
                const double hi = mean + 8.5 * sigma;
                const std::size_t j0 = static_cast<std::size_t>(
                    std::max(0.0, (lo - z_lo) / dz));
                const std::size_t j1 = std::min(
                    gn, static_cast<std::size_t>(
                            std::max(0.0, (hi - z_lo) / dz)) +
                            1);
                kernels::ops().gauss_accum(grid.data(), j0, j1, z_lo, dz, mean,
                                           bin_w[b] * sensor.sensing_prob,
                                           inv2s2);
            }
            const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
            double h_marg = 0.0;
            for (double g : grid) {
                const double p = norm * g;
                if (p > 0.0) h_marg -= p * std::log2(p) * dz;
            }
            mi = h_marg - h_cond;
        } else {
            const std::size_t levels =
                static_cast<std::size_t>(quantizer_->levels);
            std::vector<double> marginal(levels, 0.0);
            double h_cond = 0.0;
            for (std::size_t b = 0; b < kBins; ++b) {
                if (bin_w[b] <= 0.0) continue;
                const double hb = bin_h[b] / bin_w[b];
                if (tab.has_q) {
                    const double pos = std::clamp(
                        hb / tab.dh_q, 0.0,
                        static_cast<double>(tab.npts_q - 1));
                    const std::size_t j = std::min(
                        static_cast<std::size_t>(pos), tab.npts_q - 2);
                    const double frac = pos - static_cast<double>(j);
                    const double* r0 = &tab.pmf_rows[j * levels];
                    const double* r1 = &tab.pmf_rows[(j + 1) * levels];
                    for (std::size_t l = 0; l < levels; ++l)
                        marginal[l] +=
                            bin_w[b] * (r0[l] + frac * (r1[l] - r0[l]));
                    h_cond +=
                        bin_w[b] * (tab.hd[j] + frac * (tab.hd[j + 1] - tab.hd[j]));
                } else {
                    double hs = 0.0;
                    for (std::size_t l = 0; l < levels; ++l) {
                        const double p = quantized_pmf_h(
                            static_cast<int>(l), hb, sensor.sensing_prob,
                            model_, *quantizer_);
                        marginal[l] += bin_w[b] * p;
                        if (p > 0.0) hs -= p * std::log2(p);
                    }
                    h_cond += bin_w[b] * hs;
                }
            }
            mi = entropy_bits(marginal) - h_cond;
        }
        out.per_sensor_mi[si] = std::max(0.0, mi);
    }

    out.full_logdet = logdet_psd(full);
    for (double v : out.per_sensor_mi) out.mi_sum += v;
    return out;
}

} // namespace uwsn
