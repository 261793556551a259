#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lvp/core_types.hpp"

namespace lvp {

// Incremental mean of one (class, domain) key in 64-bit. After n updates the
// mean equals the arithmetic mean of the inputs up to accumulated rounding.
class MeanAccumulator {
public:
    MeanAccumulator(ClassId class_id, std::optional<std::uint32_t> domain_id, std::size_t dim);

    // mean += (e - mean) / (count + 1)
    void accumulate(std::span<const float> e);
    void accumulate(const Embedding& e) { accumulate(e.values()); }

    const ClassId& class_id() const { return class_id_; }
    std::optional<std::uint32_t> domain_id() const { return domain_id_; }
    const std::vector<double>& mean() const { return mean_; }
    std::uint64_t count() const { return count_; }

    // Requires count() >= 1.
    LabelVector to_label_vector() const;

private:
    ClassId class_id_;
    std::optional<std::uint32_t> domain_id_;
    std::vector<double> mean_;
    std::uint64_t count_ = 0;
};

// One image-mean label vector per class (CIL) or per (class, domain) (DIL).
// Records are grouped by key and each key is reduced sequentially in record
// order, so the result is bit-identical for any thread count.
Pool build_lvp_i(const TaskSpec& task, unsigned threads = 1);

// Every record becomes its own label vector (P^k = number of records of k):
// the whole-training-set pool.
Pool build_record_pool(std::span<const Record> records);

enum class MergePolicy {
    Append,             // concatenate entry lists of shared classes
    WeightedMeanMerge,  // fold image means with equal (class, domain) by count
    Error,              // shared classes are rejected
};

// Unions the class sets. Disjoint classes are copied verbatim. Entry lists are
// kept in a canonical order (domain, modality, count, bytes), so the result
// does not depend on the order of `pools`. Provenance is concatenated in
// argument order.
Pool merge(std::span<const Pool> pools, MergePolicy policy);
Pool merge(const Pool& a, const Pool& b, MergePolicy policy);

// O = sum over classes of P^k: kernel evaluations per query.
std::size_t complexity(const Pool& pool);

// Stored scalars: O * D.
std::size_t memory_floats(const Pool& pool);

}  // namespace lvp
