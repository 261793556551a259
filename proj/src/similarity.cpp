#include "lvp/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "lvp/errors.hpp"
#include "lvp/kernels.hpp"
#include "lvp/parallel.hpp"

namespace lvp {

namespace {

void check_dims(std::size_t a, std::size_t b) {
    if (a != b)
        throw InvalidInput("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

double cosine_from_parts(const kernels::CosineParts& p) {
    if (p.norm_a_sq == 0.0 || p.norm_b_sq == 0.0)
        throw InvalidInput("cosine similarity of a zero vector");
    return p.dot / (std::sqrt(p.norm_a_sq) * std::sqrt(p.norm_b_sq));
}

}  // namespace

const char* to_string(SimilarityKind kind) {
    switch (kind) {
        case SimilarityKind::L1: return "l1";
        case SimilarityKind::L2: return "l2";
        case SimilarityKind::Cosine: return "cosine";
    }
    return "unknown";
}

SimilarityKind parse_similarity(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "l1") return SimilarityKind::L1;
    if (lower == "l2") return SimilarityKind::L2;
    if (lower == "cosine" || lower == "cos") return SimilarityKind::Cosine;
    throw InvalidInput("unknown similarity '" + std::string(name) + "' (expected l1, l2 or cosine)");
}

void validate(const SoftmaxConfig& cfg) {
    if (!(cfg.inverse_temperature > 0.0) || !std::isfinite(cfg.inverse_temperature))
        throw InvalidInput("inverse temperature must be positive and finite");
}

double sim(SimilarityKind kind, std::span<const float> a, std::span<const float> b) {
    check_dims(a.size(), b.size());
    switch (kind) {
        case SimilarityKind::L1: return -kernels::l1(a, b);
        case SimilarityKind::L2: return -std::sqrt(kernels::l2_squared(a, b));
        case SimilarityKind::Cosine: return cosine_from_parts(kernels::cosine_parts(a, b));
    }
    throw InvalidInput("unknown similarity kind");
}

double sim(SimilarityKind kind, const Embedding& a, const Embedding& b) {
    return sim(kind, a.values(), b.values());
}

double sim_reference(SimilarityKind kind, std::span<const float> a, std::span<const float> b) {
    check_dims(a.size(), b.size());
    switch (kind) {
        case SimilarityKind::L1: return -kernels::l1_reference(a, b);
        case SimilarityKind::L2: return -std::sqrt(kernels::l2_squared_reference(a, b));
        case SimilarityKind::Cosine: return cosine_from_parts(kernels::cosine_parts_reference(a, b));
    }
    throw InvalidInput("unknown similarity kind");
}

double sim(SimilarityKind kind, std::span<const double> a, std::span<const float> b) {
    check_dims(a.size(), b.size());
    switch (kind) {
        case SimilarityKind::L1: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - static_cast<double>(b[i]));
            return -s;
        }
        case SimilarityKind::L2: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - static_cast<double>(b[i]);
                s += d * d;
            }
            return -std::sqrt(s);
        }
        case SimilarityKind::Cosine: {
            kernels::CosineParts p;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double y = b[i];
                p.dot += a[i] * y;
                p.norm_a_sq += a[i] * a[i];
                p.norm_b_sq += y * y;
            }
            return cosine_from_parts(p);
        }
    }
    throw InvalidInput("unknown similarity kind");
}

double pool_similarity(SimilarityKind kind, std::span<const LabelVector> entries,
                       std::span<const float> query) {
    if (entries.empty()) throw InvalidInput("pool entry list is empty");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& lv : entries) best = std::max(best, sim(kind, lv.vector.values(), query));
    return best;
}

ScoreMap class_scores(SimilarityKind kind, const Pool& pool, const Embedding& query,
                      std::size_t* evaluations) {
    if (pool.empty()) throw InvalidInput("cannot score against an empty pool");
    check_dims(pool.dim(), query.dim());
    ScoreMap scores;
    for (const auto& [cls, list] : pool.entries()) {
        scores.emplace_hint(scores.end(), cls, pool_similarity(kind, list, query.values()));
        if (evaluations) *evaluations += list.size();
    }
    return scores;
}

std::map<ClassId, double> class_probabilities(const ScoreMap& scores, const SoftmaxConfig& cfg) {
    validate(cfg);
    if (scores.empty()) throw InvalidInput("no scores to normalise");
    const double tau = cfg.inverse_temperature;
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [_, s] : scores) {
        if (!std::isfinite(s)) throw InvalidInput("non-finite score");
        m = std::max(m, tau * s);
    }
    std::map<ClassId, double> probs;
    double z = 0.0;
    for (const auto& [cls, s] : scores) {
        const double e = std::exp(tau * s - m);
        probs.emplace_hint(probs.end(), cls, e);
        z += e;
    }
    for (auto& [_, p] : probs) p /= z;
    return probs;
}

ClassId argmax_class(const ScoreMap& scores) {
    if (scores.empty()) throw InvalidInput("no scores to choose from");
    auto best = scores.begin();
    for (auto it = std::next(scores.begin()); it != scores.end(); ++it)
        if (it->second > best->second) best = it;
    return best->first;
}

Classification classify(SimilarityKind kind, const Pool& pool, const Embedding& query,
                        const SoftmaxConfig& cfg) {
    const ScoreMap scores = class_scores(kind, pool, query);
    return {argmax_class(scores), class_probabilities(scores, cfg)};
}

ClassId classify_label(SimilarityKind kind, const Pool& pool, const Embedding& query) {
    if (pool.empty()) throw InvalidInput("cannot classify against an empty pool");
    check_dims(pool.dim(), query.dim());
    const ClassId* best = nullptr;
    double best_score = 0.0;
    for (const auto& [cls, list] : pool.entries()) {
        const double s = pool_similarity(kind, list, query.values());
        if (best == nullptr || s > best_score) {
            best = &cls;
            best_score = s;
        }
    }
    return *best;
}

std::vector<ClassId> classify_batch(SimilarityKind kind, const Pool& pool,
                                    std::span<const Embedding> queries, unsigned threads) {
    std::vector<ClassId> out(queries.size());
    parallel_for(queries.size(), threads,
                 [&](std::size_t i) { out[i] = classify_label(kind, pool, queries[i]); });
    return out;
}

}  // namespace lvp
