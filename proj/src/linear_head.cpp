#include "lvp/linear_head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lvp/errors.hpp"
#include "lvp/parallel.hpp"

namespace lvp {

std::vector<double> LinearClassifier::logits(std::span<const float> query) const {
    if (query.size() != dim)
        throw InvalidInput("head expects dimension " + std::to_string(dim) + ", got " +
                           std::to_string(query.size()));
    std::vector<double> out(rows());
    for (std::size_t k = 0; k < rows(); ++k) {
        const double* w = weights.data() + k * dim;
        double s = bias[k];
        for (std::size_t i = 0; i < dim; ++i) s += w[i] * static_cast<double>(query[i]);
        out[k] = s;
    }
    return out;
}

void validate(const HeadTrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
        throw InvalidInput("head learning rate must be positive and finite");
    if (!(cfg.target_loss_low > 0.0) || !(cfg.target_loss_low <= cfg.target_loss_high) ||
        !std::isfinite(cfg.target_loss_high))
        throw InvalidInput("head target losses must satisfy 0 < low <= high");
    if (cfg.max_steps == 0) throw InvalidInput("head max_steps must be >= 1");
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) ||
        !(cfg.epsilon > 0.0))
        throw InvalidInput("invalid Adam constants");
}

namespace detail {

LinearClassifier train_softmax_regression(std::size_t dim, std::vector<ClassId> classes,
                                          std::span<const LabeledExample> examples,
                                          const HeadTrainConfig& cfg, HeadTrainStats* stats) {
    validate(cfg);
    const std::size_t k_count = classes.size();
    if (k_count < 2) throw InvalidInput("a linear head needs at least two classes");
    if (examples.empty()) throw InvalidInput("a linear head needs training examples");

    LinearClassifier head;
    head.dim = dim;
    head.class_order = std::move(classes);
    head.weights.assign(k_count * dim, 0.0);
    head.bias.assign(k_count, 0.0);

    const std::size_t n_params = k_count * (dim + 1);
    std::vector<double> grad(n_params), m(n_params, 0.0), v(n_params, 0.0);
    std::vector<double> logits(k_count);
    const double inv_n = 1.0 / static_cast<double>(examples.size());

    // Mean cross-entropy and its gradient; grad layout is [W | b].
    auto loss_and_grad = [&] {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (const auto& ex : examples) {
            double zmax = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < k_count; ++k) {
                const double* w = head.weights.data() + k * dim;
                double s = head.bias[k];
                for (std::size_t i = 0; i < dim; ++i) s += w[i] * static_cast<double>(ex.x[i]);
                logits[k] = s;
                zmax = std::max(zmax, s);
            }
            double z = 0.0;
            for (std::size_t k = 0; k < k_count; ++k) z += std::exp(logits[k] - zmax);
            const double lse = zmax + std::log(z);
            loss += (lse - logits[ex.label]) * inv_n;
            for (std::size_t k = 0; k < k_count; ++k) {
                const double g = (std::exp(logits[k] - lse) - (k == ex.label ? 1.0 : 0.0)) * inv_n;
                double* gw = grad.data() + k * dim;
                for (std::size_t i = 0; i < dim; ++i) gw[i] += g * static_cast<double>(ex.x[i]);
                grad[k_count * dim + k] += g;
            }
        }
        return loss;
    };

    HeadTrainStats local;
    local.examples = examples.size();
    double loss = loss_and_grad();
    std::size_t step = 0;
    double b1_pow = 1.0, b2_pow = 1.0;
    while (true) {
        if (!std::isfinite(loss))
            throw NumericError("linear head training diverged (loss is not finite at step " +
                               std::to_string(step) + ")");
        local.loss_history.push_back(loss);
        if (loss <= cfg.target_loss_high || step == cfg.max_steps) break;

        b1_pow *= cfg.beta1;
        b2_pow *= cfg.beta2;
        const double c1 = 1.0 - b1_pow;
        const double c2 = 1.0 - b2_pow;
        for (std::size_t j = 0; j < n_params; ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
            const double update = cfg.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.epsilon);
            if (j < k_count * dim)
                head.weights[j] -= update;
            else
                head.bias[j - k_count * dim] -= update;
        }
        ++step;
        loss = loss_and_grad();
    }

    local.steps = step;
    local.final_loss = loss;
    local.reached_high = loss <= cfg.target_loss_high;
    local.reached_low = loss <= cfg.target_loss_low;
    if (stats) *stats = std::move(local);
    return head;
}

}  // namespace detail

LinearClassifier train_head(const Pool& pool, const HeadTrainConfig& cfg, HeadTrainStats* stats) {
    if (pool.class_count() < 2) throw InvalidInput("a linear head needs a pool with >= 2 classes");
    std::vector<ClassId> classes = pool.classes();
    std::vector<detail::LabeledExample> examples;
    std::size_t label = 0;
    for (const auto& [_, list] : pool.entries()) {
        for (const auto& lv : list) examples.push_back({lv.vector.values(), label});
        ++label;
    }
    return detail::train_softmax_regression(pool.dim(), std::move(classes), examples, cfg, stats);
}

ClassId predict(const LinearClassifier& head, const Embedding& query) {
    if (head.rows() == 0) throw InvalidInput("head has no rows");
    const auto z = head.logits(query.values());
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.size(); ++k)
        if (z[k] > z[best]) best = k;
    return head.class_order[best];
}

std::vector<ClassId> predict_batch(const LinearClassifier& head, std::span<const Embedding> queries,
                                   unsigned threads) {
    std::vector<ClassId> out(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t i) { out[i] = predict(head, queries[i]); });
    return out;
}

Pool select_head_inputs(const Pool& pool_i, const Pool* pool_it) {
    if (pool_it == nullptr) return pool_i;
    if (pool_it->dim() != pool_i.dim())
        throw InvalidInput("image and IT pools differ in dimension");
    PoolEntries entries;
    for (const auto& [cls, list] : pool_i.entries())
        entries.emplace(cls, pool_it->contains(cls) ? pool_it->at(cls) : list);
    for (const auto& [cls, list] : pool_it->entries()) entries.emplace(cls, list);
    auto names = pool_i.display_names();
    for (const auto& kv : pool_it->display_names()) names.emplace(kv);
    return Pool(pool_i.dim(), std::move(entries), pool_it->provenance(), std::move(names));
}

}  // namespace lvp
