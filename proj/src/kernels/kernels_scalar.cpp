#include "uwsn/kernels.hpp"

#include <cmath>

namespace uwsn::kernels {

namespace {

void amplitude2_scalar(const double* px, const double* py, std::size_t n,
                       double sx, double sy, double p0, double alpha,
                       double* h) {
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = px[i] - sx;
        const double dy = py[i] - sy;
        h[i] = std::sqrt(p0 / (1.0 + alpha * (dx * dx + dy * dy)));
    }
}

void mixture_loglik_acc_scalar(const double* h, std::size_t n, double z,
                               double ps, double inv2s2, double noise_term,
                               double log_norm, double* logw) {
    for (std::size_t i = 0; i < n; ++i) {
        const double r = z - h[i];
        const double sig = ps * std::exp(-r * r * inv2s2);
        logw[i] += std::log(sig + noise_term) + log_norm;
    }
}

void gauss_accum_scalar(double* grid, std::size_t j0, std::size_t j1,
                        double z0, double dz, double mean, double scale,
                        double inv2s2) {
    for (std::size_t j = j0; j < j1; ++j) {
        const double r = z0 + static_cast<double>(j) * dz - mean;
        grid[j] += scale * std::exp(-r * r * inv2s2);
    }
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops{amplitude2_scalar, mixture_loglik_acc_scalar,
                         gauss_accum_scalar, "scalar"};
    return ops;
}

} // namespace uwsn::kernels
