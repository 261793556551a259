#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "lvp/kernels.hpp"

namespace lvp::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

double l1_avx2(std::span<const float> a, std::span<const float> b) {
    const std::size_t n = a.size();
    const float* pa = a.data();
    const float* pb = b.data();
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d x0 = _mm256_cvtps_pd(_mm_loadu_ps(pa + i));
        __m256d y0 = _mm256_cvtps_pd(_mm_loadu_ps(pb + i));
        __m256d x1 = _mm256_cvtps_pd(_mm_loadu_ps(pa + i + 4));
        __m256d y1 = _mm256_cvtps_pd(_mm_loadu_ps(pb + i + 4));
        acc0 = _mm256_add_pd(acc0, _mm256_andnot_pd(sign, _mm256_sub_pd(x0, y0)));
        acc1 = _mm256_add_pd(acc1, _mm256_andnot_pd(sign, _mm256_sub_pd(x1, y1)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += std::fabs(static_cast<double>(pa[i]) - static_cast<double>(pb[i]));
    return s;
}

double l2_squared_avx2(std::span<const float> a, std::span<const float> b) {
    const std::size_t n = a.size();
    const float* pa = a.data();
    const float* pb = b.data();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm_loadu_ps(pa + i)),
                                   _mm256_cvtps_pd(_mm_loadu_ps(pb + i)));
        __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm_loadu_ps(pa + i + 4)),
                                   _mm256_cvtps_pd(_mm_loadu_ps(pb + i + 4)));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        s += d * d;
    }
    return s;
}

CosineParts cosine_parts_avx2(std::span<const float> a, std::span<const float> b) {
    const std::size_t n = a.size();
    const float* pa = a.data();
    const float* pb = b.data();
    __m256d dot = _mm256_setzero_pd();
    __m256d na = _mm256_setzero_pd();
    __m256d nb = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_cvtps_pd(_mm_loadu_ps(pa + i));
        __m256d y = _mm256_cvtps_pd(_mm_loadu_ps(pb + i));
        dot = _mm256_fmadd_pd(x, y, dot);
        na = _mm256_fmadd_pd(x, x, na);
        nb = _mm256_fmadd_pd(y, y, nb);
    }
    CosineParts p{hsum(dot), hsum(na), hsum(nb)};
    for (; i < n; ++i) {
        const double x = pa[i];
        const double y = pb[i];
        p.dot += x * y;
        p.norm_a_sq += x * x;
        p.norm_b_sq += y * y;
    }
    return p;
}

}  // namespace lvp::kernels
