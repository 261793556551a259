#include "lvp/pool_builder.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <string>
#include <utility>

#include "lvp/errors.hpp"
#include "lvp/parallel.hpp"

namespace lvp {

MeanAccumulator::MeanAccumulator(ClassId class_id, std::optional<std::uint32_t> domain_id,
                                 std::size_t dim)
    : class_id_(std::move(class_id)), domain_id_(domain_id), mean_(dim, 0.0) {
    if (dim == 0) throw InvalidInput("accumulator dimension must be >= 1");
}

void MeanAccumulator::accumulate(std::span<const float> e) {
    if (e.size() != mean_.size())
        throw InvalidInput("accumulator expects dimension " + std::to_string(mean_.size()) +
                           ", got " + std::to_string(e.size()));
    ++count_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < mean_.size(); ++i)
        mean_[i] += (static_cast<double>(e[i]) - mean_[i]) * inv;
}

LabelVector MeanAccumulator::to_label_vector() const {
    if (count_ == 0) throw InvalidInput("accumulator for " + class_id_.to_string() + " is empty");
    return LabelVector(Embedding::from_doubles(mean_), class_id_, domain_id_, Modality::ImageMean,
                       count_);
}

Pool build_lvp_i(const TaskSpec& task, unsigned threads) {
    if (task.records.empty())
        throw InvalidInput("task " + std::to_string(task.index) + " has no records");
    const std::size_t dim = task.records.front().embedding.dim();

    using Key = std::pair<ClassId, std::optional<std::uint32_t>>;
    std::map<Key, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < task.records.size(); ++i) {
        const Record& r = task.records[i];
        if (r.embedding.dim() != dim)
            throw InvalidInput("record " + std::to_string(i) + " has dimension " +
                               std::to_string(r.embedding.dim()) + ", expected " +
                               std::to_string(dim));
        std::optional<std::uint32_t> domain;
        if (task.kind == TaskKind::DIL) {
            if (!r.domain_id)
                throw InvalidInput("domain-incremental record " + std::to_string(i) +
                                   " has no domain id");
            domain = r.domain_id;
        }
        groups[{r.class_id, domain}].push_back(i);
    }

    std::vector<const Key*> keys;
    std::vector<const std::vector<std::size_t>*> members;
    for (const auto& [k, idx] : groups) {
        keys.push_back(&k);
        members.push_back(&idx);
    }
    std::vector<std::optional<LabelVector>> vectors(keys.size());
    parallel_for(keys.size(), threads, [&](std::size_t g) {
        MeanAccumulator acc(keys[g]->first, keys[g]->second, dim);
        for (std::size_t i : *members[g]) acc.accumulate(task.records[i].embedding);
        vectors[g] = acc.to_label_vector();
    });

    PoolEntries entries;
    for (auto& lv : vectors) {
        ClassId c = lv->class_id;
        entries[c].push_back(std::move(*lv));
    }
    std::string line = "lvp-i task " + std::to_string(task.index) + ": " +
                       std::to_string(entries.size()) + " classes, " +
                       std::to_string(vectors.size()) + " vectors, " +
                       std::to_string(task.records.size()) + " records";
    return Pool(dim, std::move(entries), {std::move(line)});
}

Pool build_record_pool(std::span<const Record> records) {
    if (records.empty()) throw InvalidInput("record pool needs at least one record");
    PoolEntries entries;
    for (const auto& r : records)
        entries[r.class_id].emplace_back(r.embedding, r.class_id, r.domain_id, Modality::ImageMean, 1);
    return Pool(records.front().embedding.dim(), std::move(entries),
                {"record pool: " + std::to_string(records.size()) + " records"});
}

namespace {

bool canonical_less(const LabelVector& a, const LabelVector& b) {
    if (a.domain_id != b.domain_id) return a.domain_id < b.domain_id;
    if (a.modality != b.modality) return a.modality < b.modality;
    if (a.sample_count != b.sample_count) return a.sample_count < b.sample_count;
    return std::memcmp(a.vector.values().data(), b.vector.values().data(),
                       a.vector.dim() * sizeof(float)) < 0;
}

LabelVector weighted_mean(const LabelVector& a, const LabelVector& b) {
    const double ca = static_cast<double>(a.sample_count);
    const double cb = static_cast<double>(b.sample_count);
    const double total = ca + cb;
    std::vector<double> m(a.vector.dim());
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = (static_cast<double>(a.vector[i]) * ca + static_cast<double>(b.vector[i]) * cb) / total;
    return LabelVector(Embedding::from_doubles(m), a.class_id, a.domain_id, Modality::ImageMean,
                       a.sample_count + b.sample_count);
}

}  // namespace

Pool merge(std::span<const Pool> pools, MergePolicy policy) {
    if (pools.empty()) throw InvalidInput("merge needs at least one pool");
    const std::size_t dim = pools.front().dim();
    PoolEntries entries;
    std::vector<std::string> provenance;
    std::map<ClassId, std::string> names;

    for (const Pool& p : pools) {
        if (p.dim() != dim)
            throw InvalidInput("cannot merge pools of dimension " + std::to_string(dim) + " and " +
                               std::to_string(p.dim()));
        provenance.insert(provenance.end(), p.provenance().begin(), p.provenance().end());
        for (const auto& [c, n] : p.display_names()) names.emplace(c, n);

        for (const auto& [cls, list] : p.entries()) {
            auto it = entries.find(cls);
            if (it == entries.end()) {
                entries.emplace(cls, list);
                continue;
            }
            switch (policy) {
                case MergePolicy::Error:
                    throw DataError("class " + cls.to_string() + " appears in more than one pool");
                case MergePolicy::Append:
                    it->second.insert(it->second.end(), list.begin(), list.end());
                    break;
                case MergePolicy::WeightedMeanMerge:
                    for (const auto& incoming : list) {
                        auto same = std::find_if(it->second.begin(), it->second.end(),
                                                 [&](const LabelVector& lv) {
                                                     return lv.modality == Modality::ImageMean &&
                                                            incoming.modality == Modality::ImageMean &&
                                                            lv.domain_id == incoming.domain_id;
                                                 });
                        if (same != it->second.end())
                            *same = weighted_mean(*same, incoming);
                        else
                            it->second.push_back(incoming);
                    }
                    break;
            }
        }
    }
    // Classes owned by a single pool keep their list verbatim; lists fed by
    // several pools are sorted so the outcome is independent of pool order.
    std::map<ClassId, int> sources;
    for (const Pool& p : pools)
        for (const auto& kv : p.entries()) ++sources[kv.first];
    for (auto& [cls, list] : entries)
        if (sources[cls] > 1) std::stable_sort(list.begin(), list.end(), canonical_less);

    return Pool(dim, std::move(entries), std::move(provenance), std::move(names));
}

Pool merge(const Pool& a, const Pool& b, MergePolicy policy) {
    const Pool pools[] = {a, b};
    return merge(pools, policy);
}

std::size_t complexity(const Pool& pool) {
    std::size_t o = 0;
    for (const auto& [_, list] : pool.entries()) o += list.size();
    return o;
}

std::size_t memory_floats(const Pool& pool) { return complexity(pool) * pool.dim(); }

}  // namespace lvp
