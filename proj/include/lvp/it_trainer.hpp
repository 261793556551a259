#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lvp/core_types.hpp"

namespace lvp {

// Per-class mixing vectors: IT = alpha * T + beta * M (elementwise).
struct ClassMix {
    std::vector<double> alpha;
    std::vector<double> beta;

    bool operator==(const ClassMix&) const = default;
};

// Parameters owned by one task. `domain_id` is set for domain-incremental
// tasks and selects which image mean of a class the mix applies to.
struct ITParams {
    std::uint32_t task_index = 1;
    std::optional<std::uint32_t> domain_id;
    std::map<ClassId, ClassMix> mix;

    bool operator==(const ITParams&) const = default;
};

struct ITTrainConfig {
    double learning_rate = 1e-4;
    std::uint32_t epochs = 10;
    std::uint32_t batch_size = 256;
    // Logit scale for training only; inference argmax does not depend on it.
    double inverse_temperature = 100.0;
    std::uint64_t seed = 0;
    double alpha_init = 0.5;
    double beta_init = 1.0;
};

void validate(const ITTrainConfig& cfg);

// The single Text entry of `cls`; DataError("text-free class ...") if absent.
const Embedding& text_vector_for(const Pool& text_pool, const ClassId& cls);

// The image-mean entry of `cls` for `domain` (or the sole entry when the
// class has exactly one and no domain is requested).
const Embedding& image_mean_for(const Pool& image_pool, const ClassId& cls,
                                std::optional<std::uint32_t> domain);

Embedding compose_it(const ITParams& params, const ClassId& cls, const Embedding& text,
                     const Embedding& image_mean);
// Looks the text vector up in `text_pool`.
Embedding compose_it(const ITParams& params, const ClassId& cls, const Pool& text_pool,
                     const Embedding& image_mean);

struct ITLossGrads {
    double loss = 0.0;
    std::map<ClassId, ClassMix> grads;
};

// Mean cross-entropy over `records` of softmax(tau * cos(IT^k, x)) with the
// denominator restricted to the classes in `params`. Gradients include the
// normalisation term of the cosine.
ITLossGrads it_loss_and_grads(const ITParams& params, std::span<const Record> records,
                              const Pool& text_pool, const Pool& image_pool,
                              const ITTrainConfig& cfg);

struct ITTrainTrace {
    // Full-data loss before training and after each epoch.
    std::vector<double> epoch_losses;
};

// Mini-batch SGD over the task's records, shuffled per epoch from cfg.seed.
// Returned parameters are rounded to float precision (their stored width).
ITParams train_it_task(const TaskSpec& task, const Pool& text_pool, const Pool& image_pool,
                       const ITTrainConfig& cfg, ITTrainTrace* trace = nullptr);

// Replaces every entry of `pool_i` with its composed Mixed-IT vector. Each
// entry needs a parameter set with matching domain that covers its class (the
// last such set wins) and the class needs a text vector; otherwise DataError
// lists every offender.
Pool build_lvp_it(const Pool& pool_i, const Pool& text_pool, std::span<const ITParams> params);

}  // namespace lvp
