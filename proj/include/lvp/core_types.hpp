#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lvp {

// A D-dimensional vector in 32-bit floats. Construction rejects empty or
// non-finite input, so every Embedding in the engine is valid.
class Embedding {
public:
    explicit Embedding(std::vector<float> values);

    // Rounds each component to float; the result must still be finite.
    static Embedding from_doubles(std::span<const double> values);

    std::size_t dim() const { return values_.size(); }
    std::span<const float> values() const { return values_; }
    float operator[](std::size_t i) const { return values_[i]; }

    std::vector<double> to_doubles() const;

    // Value equality (IEEE comparison). Use bit_equal for byte identity.
    bool operator==(const Embedding&) const = default;

private:
    std::vector<float> values_;
};

bool bit_equal(const Embedding& a, const Embedding& b);

// Class identity. Ordering is namespace (lexicographic) then local id; the
// smallest ClassId wins every tie in the engine.
struct ClassId {
    std::string ns;
    std::uint32_t local_id = 0;

    auto operator<=>(const ClassId&) const = default;
    bool operator==(const ClassId&) const = default;

    std::string to_string() const;
};

enum class Modality : std::uint8_t { ImageMean = 0, Text = 1, MixedIT = 2 };

const char* to_string(Modality m);

struct LabelVector {
    LabelVector(Embedding vector, ClassId class_id, std::optional<std::uint32_t> domain_id,
                Modality modality, std::uint64_t sample_count);

    Embedding vector;
    ClassId class_id;
    std::optional<std::uint32_t> domain_id;
    Modality modality;
    std::uint64_t sample_count;

    bool operator==(const LabelVector&) const = default;
};

using PoolEntries = std::map<ClassId, std::vector<LabelVector>>;

// Class id -> label vectors. Immutable after construction; transformations
// produce new pools. Equality compares dimension and entries only (provenance
// and display names are descriptive).
class Pool {
public:
    // An empty pool of the given dimension.
    explicit Pool(std::size_t dim);
    Pool(std::size_t dim, PoolEntries entries, std::vector<std::string> provenance = {},
         std::map<ClassId, std::string> display_names = {});

    std::size_t dim() const { return dim_; }
    const PoolEntries& entries() const { return entries_; }
    const std::vector<std::string>& provenance() const { return provenance_; }
    const std::map<ClassId, std::string>& display_names() const { return display_names_; }

    std::size_t class_count() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    bool contains(const ClassId& c) const { return entries_.count(c) != 0; }
    const std::vector<LabelVector>& at(const ClassId& c) const;
    // Empty when the class has no name.
    std::string display_name(const ClassId& c) const;
    std::vector<ClassId> classes() const;

    bool operator==(const Pool& other) const {
        return dim_ == other.dim_ && entries_ == other.entries_;
    }

private:
    std::size_t dim_;
    PoolEntries entries_;
    std::vector<std::string> provenance_;
    std::map<ClassId, std::string> display_names_;
};

// Bytewise equality of every vector, count, domain and modality.
bool bit_equal(const Pool& a, const Pool& b);

// Keeps only the listed classes; provenance and names carry over.
Pool restrict_pool(const Pool& pool, std::span<const ClassId> classes);

struct Record {
    Embedding embedding;
    ClassId class_id;
    std::optional<std::uint32_t> domain_id;
};

enum class TaskKind { CIL, DIL };

struct TaskSpec {
    std::uint32_t index = 1;
    TaskKind kind = TaskKind::CIL;
    std::vector<Record> records;
    // Display label; "Task <index>" when empty.
    std::string label;

    std::string display_label() const;

    std::vector<ClassId> classes() const;
};

// rows: learning stages, columns: test tasks; nullopt where the test task's
// classes were not yet learned.
struct EvalReport {
    std::vector<std::string> stage_labels;
    std::vector<std::string> test_labels;
    std::vector<std::size_t> test_sizes;
    std::vector<std::vector<std::optional<double>>> accuracy;
    double final_average = 0.0;
    // Test-count-weighted mean of the last row ("ideal"-style comparison).
    double weighted_final_average = 0.0;
    std::map<std::string, std::string> metadata;
};

// Mean of the present entries of the last row; 0 when nothing is present.
double final_row_average(const EvalReport& report);
double final_row_weighted_average(const EvalReport& report);

}  // namespace lvp
