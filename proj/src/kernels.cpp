#include "lvp/kernels.hpp"

#include <cmath>
#include <cstddef>

namespace lvp::kernels {

double l1_reference(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return s;
}

double l2_squared_reference(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

CosineParts cosine_parts_reference(std::span<const float> a, std::span<const float> b) {
    CosineParts p;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        p.dot += x * y;
        p.norm_a_sq += x * x;
        p.norm_b_sq += y * y;
    }
    return p;
}

double l1_blocked(std::span<const float> a, std::span<const float> b) {
    const std::size_t n = a.size();
    const float* pa = a.data();
    const float* pb = b.data();
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (int j = 0; j < 4; ++j)
            acc[j] += std::fabs(static_cast<double>(pa[i + j]) - static_cast<double>(pb[i + j]));
    }
    double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (; i < n; ++i) s += std::fabs(static_cast<double>(pa[i]) - static_cast<double>(pb[i]));
    return s;
}

double l2_squared_blocked(std::span<const float> a, std::span<const float> b) {
    const std::size_t n = a.size();
    const float* pa = a.data();
    const float* pb = b.data();
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (int j = 0; j < 4; ++j) {
            const double d = static_cast<double>(pa[i + j]) - static_cast<double>(pb[i + j]);
            acc[j] += d * d;
        }
    }
    double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (; i < n; ++i) {
        const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        s += d * d;
    }
    return s;
}

CosineParts cosine_parts_blocked(std::span<const float> a, std::span<const float> b) {
    const std::size_t n = a.size();
    const float* pa = a.data();
    const float* pb = b.data();
    double dot[4] = {0, 0, 0, 0}, na[4] = {0, 0, 0, 0}, nb[4] = {0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (int j = 0; j < 4; ++j) {
            const double x = pa[i + j];
            const double y = pb[i + j];
            dot[j] += x * y;
            na[j] += x * x;
            nb[j] += y * y;
        }
    }
    CosineParts p{(dot[0] + dot[1]) + (dot[2] + dot[3]), (na[0] + na[1]) + (na[2] + na[3]),
                  (nb[0] + nb[1]) + (nb[2] + nb[3])};
    for (; i < n; ++i) {
        const double x = pa[i];
        const double y = pb[i];
        p.dot += x * y;
        p.norm_a_sq += x * x;
        p.norm_b_sq += y * y;
    }
    return p;
}

#ifndef LVP_HAVE_AVX2
double l1_avx2(std::span<const float> a, std::span<const float> b) { return l1_blocked(a, b); }
double l2_squared_avx2(std::span<const float> a, std::span<const float> b) {
    return l2_squared_blocked(a, b);
}
CosineParts cosine_parts_avx2(std::span<const float> a, std::span<const float> b) {
    return cosine_parts_blocked(a, b);
}
#endif

bool avx2_compiled() {
#ifdef LVP_HAVE_AVX2
    return true;
#else
    return false;
#endif
}

namespace {

Path detect_path() {
#if defined(LVP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Path::Avx2;
#endif
    return Path::Blocked;
}

const Path g_path = detect_path();

}  // namespace

Path active_path() { return g_path; }

const char* to_string(Path p) {
    switch (p) {
        case Path::Reference: return "reference";
        case Path::Blocked: return "blocked";
        case Path::Avx2: return "avx2";
    }
    return "unknown";
}

double l1(std::span<const float> a, std::span<const float> b) {
    return g_path == Path::Avx2 ? l1_avx2(a, b) : l1_blocked(a, b);
}

double l2_squared(std::span<const float> a, std::span<const float> b) {
    return g_path == Path::Avx2 ? l2_squared_avx2(a, b) : l2_squared_blocked(a, b);
}

CosineParts cosine_parts(std::span<const float> a, std::span<const float> b) {
    return g_path == Path::Avx2 ? cosine_parts_avx2(a, b) : cosine_parts_blocked(a, b);
}

}  // namespace lvp::kernels
