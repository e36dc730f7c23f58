#pragma once

#include <cstddef>

// Data-parallel inner loops of the simulator. Every kernel has a scalar
// reference implementation and, on x86 machines with AVX2+FMA, a vectorized
// variant selected once at startup. The two are equivalence-tested; callers
// go through ops().

namespace uwsn::kernels {

struct Ops {
    // h[i] = sqrt(p0 / (1 + alpha * d2)) with d2 the squared distance from
    // (px[i], py[i]) to (sx, sy). Inverse-square decay (n = 2) only; the
    // general-exponent path stays scalar.
    void (*amplitude2)(const double* px, const double* py, std::size_t n,
                       double sx, double sy, double p0, double alpha,
                       double* h);

    // logw[i] += log(ps * exp(-(z - h[i])^2 * inv2s2) + noise_term) + log_norm
    // where noise_term = (1-ps) * exp(-z^2 * inv2s2) is constant across
    // particles and log_norm = -log(sigma * sqrt(2*pi)).
    void (*mixture_loglik_acc)(const double* h, std::size_t n, double z,
                               double ps, double inv2s2, double noise_term,
                               double log_norm, double* logw);

    // grid[j] += scale * exp(-(z0 + j*dz - mean)^2 * inv2s2) for j in [j0, j1)
    void (*gauss_accum)(double* grid, std::size_t j0, std::size_t j1,
                        double z0, double dz, double mean, double scale,
                        double inv2s2);

    const char* name;
};

const Ops& scalar_ops();

// Null when this build/CPU has no AVX2 path.
const Ops* avx2_ops();

// Runtime-dispatched: avx2 when the CPU supports it, scalar otherwise.
const Ops& ops();

} // namespace uwsn::kernels
