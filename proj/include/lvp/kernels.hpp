#pragma once

// Low-level distance kernels. All paths accumulate in double; they differ only
// in summation order, so results agree to within a few ulps of the reference.

#include <span>

namespace lvp::kernels {

struct CosineParts {
    double dot = 0.0;
    double norm_a_sq = 0.0;
    double norm_b_sq = 0.0;
};

// Straight single-accumulator loops.
double l1_reference(std::span<const float> a, std::span<const float> b);
double l2_squared_reference(std::span<const float> a, std::span<const float> b);
CosineParts cosine_parts_reference(std::span<const float> a, std::span<const float> b);

// Four independent accumulators; auto-vectorises on any target.
double l1_blocked(std::span<const float> a, std::span<const float> b);
double l2_squared_blocked(std::span<const float> a, std::span<const float> b);
CosineParts cosine_parts_blocked(std::span<const float> a, std::span<const float> b);

// AVX2/FMA versions. Fall back to the blocked path when not compiled in.
double l1_avx2(std::span<const float> a, std::span<const float> b);
double l2_squared_avx2(std::span<const float> a, std::span<const float> b);
CosineParts cosine_parts_avx2(std::span<const float> a, std::span<const float> b);

enum class Path { Reference, Blocked, Avx2 };

bool avx2_compiled();
// The path `similarity` dispatches to; fixed for the process lifetime.
Path active_path();
const char* to_string(Path p);

// Dispatched entry points.
double l1(std::span<const float> a, std::span<const float> b);
double l2_squared(std::span<const float> a, std::span<const float> b);
CosineParts cosine_parts(std::span<const float> a, std::span<const float> b);

}  // namespace lvp::kernels
