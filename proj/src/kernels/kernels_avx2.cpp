// AVX2+FMA variants of the inner-loop kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; dispatch.cpp decides at runtime
// whether it is used.

#include "uwsn/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>
#include <cfloat>
#include <cmath>
#include <cstdint>

namespace uwsn::kernels {

namespace {

// ---- vectorized exp/log, Cephes polynomials ------------------------------

inline __m256d ldexp4(__m256d x, __m256i n) {
    // Two-step scaling so intermediate exponents stay in the normal range
    // even when the final result is subnormal.
    const __m256i half = _mm256_srai_epi32(n, 1); // works per 32-bit lane
    // n fits in 32 bits; reconstruct 64-bit halves.
    const __m256i n1 = half;
    const __m256i n2 = _mm256_sub_epi64(n, n1);
    const __m256i bias = _mm256_set1_epi64x(1023);
    const __m256d s1 =
        _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(n1, bias), 52));
    const __m256d s2 =
        _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(n2, bias), 52));
    return _mm256_mul_pd(_mm256_mul_pd(x, s1), s2);
}

inline __m256d exp4(__m256d x) {
    const __m256d max_x = _mm256_set1_pd(709.0);
    const __m256d min_x = _mm256_set1_pd(-745.0);
    const __m256d clamped = _mm256_max_pd(_mm256_min_pd(x, max_x), min_x);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    __m256d n = _mm256_round_pd(_mm256_mul_pd(clamped, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);

    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
    __m256d r = _mm256_fnmadd_pd(n, c1, clamped);
    r = _mm256_fnmadd_pd(n, c2, r);

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
    p = _mm256_mul_pd(p, r);

    __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.0));

    const __m256d e = _mm256_add_pd(
        _mm256_set1_pd(1.0),
        _mm256_mul_pd(_mm256_set1_pd(2.0),
                      _mm256_div_pd(p, _mm256_sub_pd(q, p))));

    const __m128i n32 = _mm256_cvtpd_epi32(n);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    __m256d result = ldexp4(e, n64);

    // Saturate the clamped tails.
    const __m256d over = _mm256_cmp_pd(x, max_x, _CMP_GT_OQ);
    const __m256d under = _mm256_cmp_pd(x, min_x, _CMP_LT_OQ);
    result = _mm256_blendv_pd(result, _mm256_set1_pd(HUGE_VAL), over);
    result = _mm256_blendv_pd(result, _mm256_setzero_pd(), under);
    return result;
}

// log for non-negative inputs; subnormals are rescaled into the normal
// range first, zero maps to -inf.
inline __m256d log4(__m256d x) {
    const __m256d tiny =
        _mm256_cmp_pd(x, _mm256_set1_pd(DBL_MIN), _CMP_LT_OQ);
    const __m256d rescaled =
        _mm256_mul_pd(x, _mm256_set1_pd(18014398509481984.0)); // 2^54
    x = _mm256_blendv_pd(x, rescaled, tiny);
    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i exp_mask = _mm256_set1_epi64x(0x7ff0000000000000LL);
    const __m256i mant_mask = _mm256_set1_epi64x(0x000fffffffffffffLL);

    // frexp: m in [0.5, 1), e the unbiased exponent + 1.
    __m256i e64 = _mm256_srli_epi64(_mm256_and_si256(bits, exp_mask), 52);
    e64 = _mm256_sub_epi64(e64, _mm256_set1_epi64x(1022));
    const __m256i half_bits = _mm256_set1_epi64x(0x3fe0000000000000LL);
    __m256d m = _mm256_castsi256_pd(
        _mm256_or_si256(_mm256_and_si256(bits, mant_mask), half_bits));

    // if m < sqrt(1/2): e -= 1, m *= 2
    const __m256d sqrth = _mm256_set1_pd(0.70710678118654752440);
    const __m256d below = _mm256_cmp_pd(m, sqrth, _CMP_LT_OQ);
    e64 = _mm256_sub_epi64(
        e64, _mm256_and_si256(_mm256_castpd_si256(below),
                              _mm256_set1_epi64x(1)));
    m = _mm256_add_pd(m, _mm256_and_pd(below, m));
    m = _mm256_sub_pd(m, _mm256_set1_pd(1.0));

    // int64 -> double (|e| < 2^31)
    const __m256i lo32 =
        _mm256_shuffle_epi32(e64, _MM_SHUFFLE(2, 0, 2, 0));
    const __m128i packed = _mm_unpacklo_epi64(
        _mm256_castsi256_si128(lo32), _mm256_extracti128_si256(lo32, 1));
    const __m256d e = _mm256_cvtepi32_pd(packed);

    const __m256d z = _mm256_mul_pd(m, m);
    __m256d p = _mm256_set1_pd(1.01875663804580931796e-4);
    p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(4.97494994976747001425e-1));
    p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(4.70579119878881725854e0));
    p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(1.44989225341610930846e1));
    p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(1.79368678507819816313e1));
    p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(7.70838733755885391666e0));

    __m256d q = _mm256_add_pd(m, _mm256_set1_pd(1.12873587189167450590e1));
    q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(4.52279145837532221105e1));
    q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(8.29875266912776603211e1));
    q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(7.11544750618563894466e1));
    q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(2.31251620126765340583e1));

    __m256d y = _mm256_mul_pd(_mm256_mul_pd(m, z), _mm256_div_pd(p, q));
    y = _mm256_fmadd_pd(e, _mm256_set1_pd(-2.121944400546905827679e-4), y);
    y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, y);
    __m256d result = _mm256_add_pd(m, y);
    result = _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), result);

    // undo the subnormal rescale: log(x * 2^54) - 54 log 2
    result = _mm256_sub_pd(
        result,
        _mm256_and_pd(tiny, _mm256_set1_pd(37.429947750237048457)));
    const __m256d zero =
        _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LE_OQ);
    result = _mm256_blendv_pd(result, _mm256_set1_pd(-HUGE_VAL), zero);
    return result;
}

// ---- kernels -------------------------------------------------------------

void amplitude2_avx2(const double* px, const double* py, std::size_t n,
                     double sx, double sy, double p0, double alpha,
                     double* h) {
    const __m256d vsx = _mm256_set1_pd(sx);
    const __m256d vsy = _mm256_set1_pd(sy);
    const __m256d vp0 = _mm256_set1_pd(p0);
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(px + i), vsx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(py + i), vsy);
        const __m256d d2 = _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx));
        const __m256d den = _mm256_fmadd_pd(va, d2, one);
        _mm256_storeu_pd(h + i, _mm256_sqrt_pd(_mm256_div_pd(vp0, den)));
    }
    for (; i < n; ++i) {
        const double dx = px[i] - sx;
        const double dy = py[i] - sy;
        h[i] = std::sqrt(p0 / (1.0 + alpha * (dx * dx + dy * dy)));
    }
}

void mixture_loglik_acc_avx2(const double* h, std::size_t n, double z,
                             double ps, double inv2s2, double noise_term,
                             double log_norm, double* logw) {
    const __m256d vz = _mm256_set1_pd(z);
    const __m256d vps = _mm256_set1_pd(ps);
    const __m256d vinv = _mm256_set1_pd(-inv2s2);
    const __m256d vnoise = _mm256_set1_pd(noise_term);
    const __m256d vlogn = _mm256_set1_pd(log_norm);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_sub_pd(vz, _mm256_loadu_pd(h + i));
        const __m256d t = _mm256_mul_pd(_mm256_mul_pd(r, r), vinv);
        const __m256d sig = _mm256_mul_pd(vps, exp4(t));
        const __m256d lp =
            _mm256_add_pd(log4(_mm256_add_pd(sig, vnoise)), vlogn);
        _mm256_storeu_pd(logw + i, _mm256_add_pd(_mm256_loadu_pd(logw + i), lp));
    }
    for (; i < n; ++i) {
        const double r = z - h[i];
        logw[i] += std::log(ps * std::exp(-r * r * inv2s2) + noise_term) +
                   log_norm;
    }
}

void gauss_accum_avx2(double* grid, std::size_t j0, std::size_t j1, double z0,
                      double dz, double mean, double scale, double inv2s2) {
    const __m256d vinv = _mm256_set1_pd(-inv2s2);
    const __m256d vscale = _mm256_set1_pd(scale);
    const __m256d vdz = _mm256_set1_pd(dz);
    const __m256d base = _mm256_set1_pd(z0 - mean);
    std::size_t j = j0;
    for (; j + 4 <= j1; j += 4) {
        const __m256d idx = _mm256_set_pd(
            static_cast<double>(j + 3), static_cast<double>(j + 2),
            static_cast<double>(j + 1), static_cast<double>(j));
        const __m256d r = _mm256_fmadd_pd(idx, vdz, base);
        const __m256d t = _mm256_mul_pd(_mm256_mul_pd(r, r), vinv);
        const __m256d g = _mm256_mul_pd(vscale, exp4(t));
        _mm256_storeu_pd(grid + j, _mm256_add_pd(_mm256_loadu_pd(grid + j), g));
    }
    for (; j < j1; ++j) {
        const double r = z0 + static_cast<double>(j) * dz - mean;
        grid[j] += scale * std::exp(-r * r * inv2s2);
    }
}

} // namespace

const Ops* avx2_ops() {
    static const Ops ops{amplitude2_avx2, mixture_loglik_acc_avx2,
                         gauss_accum_avx2, "avx2"};
    return &ops;
}

} // namespace uwsn::kernels

#else

namespace uwsn::kernels {
const Ops* avx2_ops() { return nullptr; }
} // namespace uwsn::kernels

#endif
