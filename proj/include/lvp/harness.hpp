#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvp/core_types.hpp"
#include "lvp/it_trainer.hpp"
#include "lvp/linear_head.hpp"
#include "lvp/similarity.hpp"

namespace lvp {

enum class ProtocolKind { CIL, DIL, CTIL };
enum class Variant { I, IT, C };

const char* to_string(ProtocolKind k);
const char* to_string(Variant v);
Variant parse_variant(std::string_view name);
ProtocolKind parse_protocol(std::string_view name);

struct Protocol {
    ProtocolKind kind = ProtocolKind::CIL;
    Variant variant = Variant::I;
    // Unset: L1 for LVP-I, cosine for LVP-IT. Ignored by LVP-C.
    std::optional<SimilarityKind> similarity;
    ITTrainConfig it;
    HeadTrainConfig head;
    std::uint64_t seed = 0;
    // Evaluation and pool-building parallelism; never changes any result.
    unsigned threads = 1;
};

SimilarityKind effective_similarity(const Protocol& protocol);

// Final model state plus the accuracy matrix.
struct RunResult {
    EvalReport report;
    Pool pool_i;
    std::optional<Pool> pool_it;
    std::vector<ITParams> it_params;
    std::optional<LinearClassifier> head;
};

// Sequentially learns `train` and, after every stage, evaluates each test task
// whose classes are all learned. LVP-IT needs `text_pool` covering every
// class; LVP-C mixes text in for tasks whose classes all have text vectors.
RunResult run(const Protocol& protocol, std::span<const TaskSpec> train,
              std::span<const TaskSpec> tests, const Pool* text_pool = nullptr);

// Per test-task column with >= 2 evaluated stages: max over s < s' of
// acc[s] - acc[s'].
std::map<std::size_t, double> forgetting_audit(const EvalReport& report);

// Linear head trained on every record at once; task-uniform mean accuracy.
double upper_bound(std::span<const Record> train_records, std::span<const TaskSpec> tests,
                   const HeadTrainConfig& cfg, unsigned threads = 1);

double pool_accuracy(SimilarityKind kind, const Pool& pool, const TaskSpec& test, unsigned threads = 1);
double head_accuracy(const LinearClassifier& head, const TaskSpec& test, unsigned threads = 1);

// Concatenates several task streams and shuffles the task order with `seed`;
// tasks are renumbered 1..N and keep their labels.
std::vector<TaskSpec> interleave_streams(std::vector<std::vector<TaskSpec>> streams,
                                         std::uint64_t seed);

// How a flat record list is cut into tasks.
struct TaskLayout {
    enum class Kind { Single, ClassBlocks, Domain } kind = Kind::Single;
    std::uint32_t classes_per_task = 0;
    std::uint32_t expected_tasks = 0;  // 0: not checked

    // "single", "domain", "classes:N" or "TxN" (T tasks of N classes).
    static TaskLayout parse(std::string_view text);
};

// ClassBlocks groups consecutive classes in sorted ClassId order; Domain makes
// one DIL task per domain id (ascending). Record order is preserved.
std::vector<TaskSpec> split_tasks(std::span<const Record> records, const TaskLayout& layout,
                                  const std::string& label_prefix = {});

// Human-readable matrix: one row per stage, one column per test task.
std::string format_table(const EvalReport& report);

}  // namespace lvp
