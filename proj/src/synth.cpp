#include "lvp/synth.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lvp/errors.hpp"
#include "lvp/rng.hpp"

namespace lvp {

namespace {

enum StreamTag : std::uint64_t { kMean = 1, kDomain = 2, kTrain = 3, kTest = 4, kText = 5 };
constexpr std::uint64_t kNoDomain = 0xFFFFFFFFull;

std::vector<double> gaussian_vector(Rng& rng, std::size_t d, double scale) {
    std::vector<double> v(d);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

void append_records(std::vector<Record>& out, const ClassId& cls, std::optional<std::uint32_t> domain,
                    const std::vector<double>& center, double std_dev, std::uint32_t count,
                    Rng rng) {
    std::vector<double> x(center.size());
    for (std::uint32_t n = 0; n < count; ++n) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = center[i] + std_dev * rng.normal();
        out.push_back(Record{Embedding::from_doubles(x), cls, domain});
    }
}

double naive_similarity(SimilarityKind kind, const std::vector<double>& a, std::span<const float> b) {
    double acc = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double y = b[i];
        switch (kind) {
            case SimilarityKind::L1: acc += std::fabs(a[i] - y); break;
            case SimilarityKind::L2: acc += (a[i] - y) * (a[i] - y); break;
            case SimilarityKind::Cosine:
                acc += a[i] * y;
                na += a[i] * a[i];
                nb += y * y;
                break;
        }
    }
    switch (kind) {
        case SimilarityKind::L1: return -acc;
        case SimilarityKind::L2: return -std::sqrt(acc);
        case SimilarityKind::Cosine: return acc / (std::sqrt(na) * std::sqrt(nb));
    }
    return 0.0;
}

}  // namespace

void validate(const SynthSpec& spec) {
    if (spec.num_classes == 0 || spec.dim == 0)
        throw InvalidInput("synthetic spec needs at least one class and one dimension");
    if (spec.train_per_class == 0 || spec.test_per_class == 0)
        throw InvalidInput("synthetic spec needs at least one train and test record per class");
    auto bad = [](double v) { return !(v >= 0.0) || !std::isfinite(v); };
    if (bad(spec.mean_scale) || bad(spec.within_std))
        throw InvalidInput("synthetic scales must be finite and >= 0");
    for (double s : spec.domain_offsets)
        if (bad(s)) throw InvalidInput("domain offset scales must be finite and >= 0");
    if (spec.text_noise && bad(*spec.text_noise))
        throw InvalidInput("text noise must be finite and >= 0");
    if (!spec.domain_offsets.empty() && spec.classes_per_task != 0)
        throw InvalidInput("domain-incremental specs use one task per domain; leave classes_per_task at 0");
}

SynthDataset generate(const SynthSpec& spec) {
    validate(spec);
    SynthDataset ds;
    const std::size_t d = spec.dim;

    std::vector<ClassId> classes;
    for (std::uint32_t c = 0; c < spec.num_classes; ++c) {
        classes.push_back(ClassId{spec.ns, c});
        Rng rng = Rng::stream(spec.seed, {kMean, c});
        ds.true_means.emplace(classes.back(), gaussian_vector(rng, d, spec.mean_scale));
    }
    for (std::uint32_t dom = 0; dom < spec.domain_offsets.size(); ++dom) {
        Rng rng = Rng::stream(spec.seed, {kDomain, dom});
        ds.domain_offsets.push_back(gaussian_vector(rng, d, spec.domain_offsets[dom]));
    }

    if (spec.domain_offsets.empty()) {
        const std::uint32_t per_task = spec.classes_per_task == 0 ? spec.num_classes : spec.classes_per_task;
        std::uint32_t task_index = 1;
        for (std::uint32_t first = 0; first < spec.num_classes; first += per_task, ++task_index) {
            TaskSpec train{task_index, TaskKind::CIL, {}, {}};
            TaskSpec test{task_index, TaskKind::CIL, {}, {}};
            for (std::uint32_t c = first; c < std::min(spec.num_classes, first + per_task); ++c) {
                const auto& mean = ds.true_means.at(classes[c]);
                append_records(train.records, classes[c], std::nullopt, mean, spec.within_std,
                               spec.train_per_class, Rng::stream(spec.seed, {kTrain, c, kNoDomain}));
                append_records(test.records, classes[c], std::nullopt, mean, spec.within_std,
                               spec.test_per_class, Rng::stream(spec.seed, {kTest, c, kNoDomain}));
            }
            ds.train.push_back(std::move(train));
            ds.test.push_back(std::move(test));
        }
    } else {
        for (std::uint32_t dom = 0; dom < spec.domain_offsets.size(); ++dom) {
            TaskSpec train{dom + 1, TaskKind::DIL, {}, {}};
            TaskSpec test{dom + 1, TaskKind::DIL, {}, {}};
            for (std::uint32_t c = 0; c < spec.num_classes; ++c) {
                std::vector<double> center = ds.true_means.at(classes[c]);
                for (std::size_t i = 0; i < d; ++i) center[i] += ds.domain_offsets[dom][i];
                append_records(train.records, classes[c], dom, center, spec.within_std,
                               spec.train_per_class, Rng::stream(spec.seed, {kTrain, c, dom}));
                append_records(test.records, classes[c], dom, center, spec.within_std,
                               spec.test_per_class, Rng::stream(spec.seed, {kTest, c, dom}));
            }
            ds.train.push_back(std::move(train));
            ds.test.push_back(std::move(test));
        }
    }

    if (spec.text_noise) {
        PoolEntries entries;
        for (std::uint32_t c = 0; c < spec.num_classes; ++c) {
            Rng rng = Rng::stream(spec.seed, {kText, c});
            std::vector<double> t = ds.true_means.at(classes[c]);
            for (auto& x : t) x += *spec.text_noise * rng.normal();
            entries[classes[c]].emplace_back(Embedding::from_doubles(t), classes[c], std::nullopt,
                                             Modality::Text, 0);
        }
        ds.text_pool = Pool(d, std::move(entries), {"synthetic text vectors"});
    }
    return ds;
}

std::vector<Record> flatten(std::span<const TaskSpec> tasks) {
    std::vector<Record> out;
    for (const auto& t : tasks) out.insert(out.end(), t.records.begin(), t.records.end());
    return out;
}

ClassId oracle_nearest_class_mean(const std::map<ClassId, std::vector<double>>& means,
                                  SimilarityKind kind, std::span<const float> query) {
    if (means.empty()) throw InvalidInput("oracle needs at least one mean");
    const ClassId* best = nullptr;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (const auto& [cls, mean] : means) {
        if (mean.size() != query.size()) throw InvalidInput("oracle dimension mismatch");
        const double s = naive_similarity(kind, mean, query);
        if (best == nullptr || s > best_sim) {
            best = &cls;
            best_sim = s;
        }
    }
    return *best;
}

ClassId oracle_nearest_neighbor(std::span<const Record> references, SimilarityKind kind,
                                std::span<const float> query) {
    if (references.empty()) throw InvalidInput("oracle needs at least one reference");
    const Record* best = nullptr;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (const auto& r : references) {
        const auto v = r.embedding.values();
        const std::vector<double> ref(v.begin(), v.end());
        const double s = naive_similarity(kind, ref, query);
        if (best == nullptr || s > best_sim || (s == best_sim && r.class_id < best->class_id)) {
            best = &r;
            best_sim = s;
        }
    }
    return best->class_id;
}

std::map<ClassId, double> oracle_softmax(const std::map<ClassId, double>& scores, double tau) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [_, s] : scores) m = std::max(m, tau * s);
    double z = 0.0;
    for (const auto& [_, s] : scores) z += std::exp(tau * s - m);
    std::map<ClassId, double> out;
    for (const auto& [c, s] : scores) out[c] = std::exp(tau * s - m) / z;
    return out;
}

}  // namespace lvp
