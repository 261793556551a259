#include "lvp/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "lvp/errors.hpp"

namespace lvp {

Embedding::Embedding(std::vector<float> values) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidInput("embedding must have at least one dimension");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw InvalidInput("embedding component " + std::to_string(i) + " is not finite");
    }
}

Embedding Embedding::from_doubles(std::span<const double> values) {
    std::vector<float> v(values.size());
    std::transform(values.begin(), values.end(), v.begin(),
                   [](double x) { return static_cast<float>(x); });
    return Embedding(std::move(v));
}

std::vector<double> Embedding::to_doubles() const {
    return {values_.begin(), values_.end()};
}

bool bit_equal(const Embedding& a, const Embedding& b) {
    return a.dim() == b.dim() &&
           std::memcmp(a.values().data(), b.values().data(), a.dim() * sizeof(float)) == 0;
}

std::string ClassId::to_string() const { return ns + ":" + std::to_string(local_id); }

const char* to_string(Modality m) {
    switch (m) {
        case Modality::ImageMean: return "image-mean";
        case Modality::Text: return "text";
        case Modality::MixedIT: return "mixed-it";
    }
    return "unknown";
}

LabelVector::LabelVector(Embedding v, ClassId c, std::optional<std::uint32_t> d, Modality m,
                         std::uint64_t n)
    : vector(std::move(v)), class_id(std::move(c)), domain_id(d), modality(m), sample_count(n) {
    if (modality == Modality::ImageMean && sample_count == 0)
        throw InvalidInput("image-mean label vector for " + class_id.to_string() +
                           " needs sample_count >= 1");
}

Pool::Pool(std::size_t dim) : Pool(dim, {}) {}

Pool::Pool(std::size_t dim, PoolEntries entries, std::vector<std::string> provenance,
           std::map<ClassId, std::string> display_names)
    : dim_(dim),
      entries_(std::move(entries)),
      provenance_(std::move(provenance)),
      display_names_(std::move(display_names)) {
    if (dim_ == 0) throw InvalidInput("pool dimension must be >= 1");
    for (const auto& [cls, list] : entries_) {
        if (list.empty()) throw InvalidInput("class " + cls.to_string() + " has no label vectors");
        for (const auto& lv : list) {
            if (lv.vector.dim() != dim_)
                throw InvalidInput("label vector of " + cls.to_string() + " has dimension " +
                                   std::to_string(lv.vector.dim()) + ", pool expects " +
                                   std::to_string(dim_));
            if (lv.class_id != cls)
                throw InvalidInput("label vector tagged " + lv.class_id.to_string() +
                                   " stored under " + cls.to_string());
        }
    }
}

const std::vector<LabelVector>& Pool::at(const ClassId& c) const {
    auto it = entries_.find(c);
    if (it == entries_.end()) throw InvalidInput("class " + c.to_string() + " not in pool");
    return it->second;
}

std::string Pool::display_name(const ClassId& c) const {
    auto it = display_names_.find(c);
    return it == display_names_.end() ? std::string{} : it->second;
}

std::vector<ClassId> Pool::classes() const {
    std::vector<ClassId> out;
    out.reserve(entries_.size());
    for (const auto& kv : entries_) out.push_back(kv.first);
    return out;
}

bool bit_equal(const Pool& a, const Pool& b) {
    if (a.dim() != b.dim() || a.class_count() != b.class_count()) return false;
    auto ia = a.entries().begin();
    auto ib = b.entries().begin();
    for (; ia != a.entries().end(); ++ia, ++ib) {
        if (ia->first != ib->first || ia->second.size() != ib->second.size()) return false;
        for (std::size_t i = 0; i < ia->second.size(); ++i) {
            const auto& x = ia->second[i];
            const auto& y = ib->second[i];
            if (x.domain_id != y.domain_id || x.modality != y.modality ||
                x.sample_count != y.sample_count || !bit_equal(x.vector, y.vector))
                return false;
        }
    }
    return true;
}

Pool restrict_pool(const Pool& pool, std::span<const ClassId> classes) {
    PoolEntries entries;
    std::map<ClassId, std::string> names;
    for (const auto& c : classes) {
        entries.emplace(c, pool.at(c));
        if (auto n = pool.display_name(c); !n.empty()) names.emplace(c, n);
    }
    return Pool(pool.dim(), std::move(entries), pool.provenance(), std::move(names));
}

std::string TaskSpec::display_label() const {
    return label.empty() ? "Task " + std::to_string(index) : label;
}

std::vector<ClassId> TaskSpec::classes() const {
    std::set<ClassId> seen;
    for (const auto& r : records) seen.insert(r.class_id);
    return {seen.begin(), seen.end()};
}

double final_row_average(const EvalReport& report) {
    if (report.accuracy.empty()) return 0.0;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& a : report.accuracy.back()) {
        if (a) {
            sum += *a;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double final_row_weighted_average(const EvalReport& report) {
    if (report.accuracy.empty()) return 0.0;
    const auto& row = report.accuracy.back();
    double sum = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (!row[j]) continue;
        const double w = j < report.test_sizes.size() ? static_cast<double>(report.test_sizes[j]) : 1.0;
        sum += *row[j] * w;
        total += w;
    }
    return total == 0.0 ? 0.0 : sum / total;
}

}  // namespace lvp
