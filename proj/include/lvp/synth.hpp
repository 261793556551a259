#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvp/core_types.hpp"
#include "lvp/similarity.hpp"

namespace lvp {

// Isotropic Gaussian classes. Class means are mean_scale * N(0, I); records
// are mean + domain offset + within_std * N(0, I). Every random quantity comes
// from an Rng stream keyed by (seed, purpose, class, domain), so changing one
// count does not perturb any other draw.
struct SynthSpec {
    std::string ns = "synth";
    std::uint32_t num_classes = 10;
    std::uint32_t dim = 16;
    // Classes per CIL task; 0 puts every class into one task.
    std::uint32_t classes_per_task = 0;
    double mean_scale = 1.0;
    double within_std = 0.1;
    std::uint32_t train_per_class = 50;
    std::uint32_t test_per_class = 20;
    // One scale per domain; non-empty turns the stream domain-incremental with
    // one task (and one test task) per domain.
    std::vector<double> domain_offsets;
    // Pseudo-text vector = true mean + text_noise * N(0, I).
    std::optional<double> text_noise;
    std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

struct SynthDataset {
    std::vector<TaskSpec> train;
    std::vector<TaskSpec> test;
    std::optional<Pool> text_pool;
    std::map<ClassId, std::vector<double>> true_means;
    std::vector<std::vector<double>> domain_offsets;
};

SynthDataset generate(const SynthSpec& spec);

// All records of a task list, in order.
std::vector<Record> flatten(std::span<const TaskSpec> tasks);

// --- brute-force oracles -------------------------------------------------
// Plain loops with no dependency on the engine's kernels.

ClassId oracle_nearest_class_mean(const std::map<ClassId, std::vector<double>>& means,
                                  SimilarityKind kind, std::span<const float> query);

// Class of the most similar reference record; ties go to the smallest ClassId.
ClassId oracle_nearest_neighbor(std::span<const Record> references, SimilarityKind kind,
                                std::span<const float> query);

std::map<ClassId, double> oracle_softmax(const std::map<ClassId, double>& scores, double tau);

}  // namespace lvp
