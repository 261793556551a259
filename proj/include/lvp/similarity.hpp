#pragma once

#include <map>
#include <span>
#include <vector>

#include "lvp/core_types.hpp"

namespace lvp {

// All kinds return "higher = more similar": distances are negated.
enum class SimilarityKind { L1, L2, Cosine };

const char* to_string(SimilarityKind kind);
// Accepts "l1", "l2", "cosine" (case-insensitive); throws InvalidInput otherwise.
SimilarityKind parse_similarity(std::string_view name);

struct SoftmaxConfig {
    double inverse_temperature = 1.0;
};

void validate(const SoftmaxConfig& cfg);

// Dispatches to the fastest kernel available on this CPU.
double sim(SimilarityKind kind, std::span<const float> a, std::span<const float> b);
double sim(SimilarityKind kind, const Embedding& a, const Embedding& b);

// Single-accumulator scalar loops; the baseline the optimised paths are
// checked against.
double sim_reference(SimilarityKind kind, std::span<const float> a, std::span<const float> b);

// Mixed precision (double reference vector, float query); used for vectors
// that are kept in double such as gate means.
double sim(SimilarityKind kind, std::span<const double> a, std::span<const float> b);

// Max over the entries' similarities to the query.
double pool_similarity(SimilarityKind kind, std::span<const LabelVector> entries,
                       std::span<const float> query);

using ScoreMap = std::map<ClassId, double>;

// One score per class. If `evaluations` is given, it is incremented by the
// number of kernel calls made (sum of pool sizes).
ScoreMap class_scores(SimilarityKind kind, const Pool& pool, const Embedding& query,
                      std::size_t* evaluations = nullptr);

// Max-subtracted softmax of inverse_temperature * score.
std::map<ClassId, double> class_probabilities(const ScoreMap& scores, const SoftmaxConfig& cfg = {});

// Highest score; ties go to the smallest ClassId.
ClassId argmax_class(const ScoreMap& scores);

struct Classification {
    ClassId label;
    std::map<ClassId, double> probabilities;
};

// The decision is taken on the raw scores, so it cannot depend on the
// temperature.
Classification classify(SimilarityKind kind, const Pool& pool, const Embedding& query,
                        const SoftmaxConfig& cfg = {});

// Label only, no probabilities.
ClassId classify_label(SimilarityKind kind, const Pool& pool, const Embedding& query);

std::vector<ClassId> classify_batch(SimilarityKind kind, const Pool& pool,
                                    std::span<const Embedding> queries, unsigned threads = 1);

}  // namespace lvp
