#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lvp/core_types.hpp"

namespace lvp {

// logits = W * x + b; rows follow class_order (sorted ClassId).
struct LinearClassifier {
    std::size_t dim = 0;
    std::vector<ClassId> class_order;
    std::vector<double> weights;  // class_order.size() x dim, row-major
    std::vector<double> bias;

    std::size_t rows() const { return class_order.size(); }
    std::vector<double> logits(std::span<const float> query) const;

    bool operator==(const LinearClassifier&) const = default;
};

struct HeadTrainConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double target_loss_low = 0.05;
    double target_loss_high = 0.1;
    std::uint32_t max_steps = 5000;
    // Full-batch training never draws random numbers; kept for config echo.
    std::uint64_t seed = 0;
};

void validate(const HeadTrainConfig& cfg);

struct HeadTrainStats {
    std::size_t steps = 0;
    double final_loss = 0.0;
    bool reached_high = false;  // loss <= target_loss_high
    bool reached_low = false;   // loss <= target_loss_low
    std::size_t examples = 0;
    std::vector<double> loss_history;  // loss before each step, plus the final loss
};

// Full-batch Adam on the mean cross-entropy of a zero-initialised softmax
// regression whose training set is exactly the pool's label vectors. Stops
// once the loss is <= target_loss_high or after max_steps updates.
LinearClassifier train_head(const Pool& pool, const HeadTrainConfig& cfg,
                            HeadTrainStats* stats = nullptr);

// Argmax of the logits; ties go to the smallest ClassId.
ClassId predict(const LinearClassifier& head, const Embedding& query);

std::vector<ClassId> predict_batch(const LinearClassifier& head, std::span<const Embedding> queries,
                                   unsigned threads = 1);

// Per class: the Mixed-IT entries when `pool_it` has the class, otherwise the
// image-mean entries of `pool_i`.
Pool select_head_inputs(const Pool& pool_i, const Pool* pool_it);

namespace detail {

struct LabeledExample {
    std::span<const float> x;
    std::size_t label;  // index into the class list
};

// Shared trainer; `classes` must be sorted. Used by train_head and by the
// all-records upper bound in the harness.
LinearClassifier train_softmax_regression(std::size_t dim, std::vector<ClassId> classes,
                                          std::span<const LabeledExample> examples,
                                          const HeadTrainConfig& cfg, HeadTrainStats* stats);

}  // namespace detail

}  // namespace lvp
