#include "lvp/it_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lvp/errors.hpp"
#include "lvp/rng.hpp"

namespace lvp {

void validate(const ITTrainConfig& cfg) {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(cfg.learning_rate)) throw InvalidInput("IT learning rate must be positive");
    if (cfg.batch_size == 0) throw InvalidInput("IT batch size must be positive");
    if (!positive(cfg.inverse_temperature))
        throw InvalidInput("IT inverse temperature must be positive");
    if (!std::isfinite(cfg.alpha_init) || !std::isfinite(cfg.beta_init))
        throw InvalidInput("IT initial values must be finite");
}

const Embedding& text_vector_for(const Pool& text_pool, const ClassId& cls) {
    if (!text_pool.contains(cls)) throw DataError("text-free class " + cls.to_string());
    const auto& list = text_pool.at(cls);
    if (list.size() != 1)
        throw DataError("class " + cls.to_string() + " has " + std::to_string(list.size()) +
                        " text vectors, expected 1");
    return list.front().vector;
}

const Embedding& image_mean_for(const Pool& image_pool, const ClassId& cls,
                                std::optional<std::uint32_t> domain) {
    if (!image_pool.contains(cls)) throw DataError("no image mean for class " + cls.to_string());
    const auto& list = image_pool.at(cls);
    for (const auto& lv : list)
        if (lv.modality == Modality::ImageMean && lv.domain_id == domain) return lv.vector;
    if (!domain && list.size() == 1) return list.front().vector;
    throw DataError("no image mean for class " + cls.to_string() +
                    (domain ? " in domain " + std::to_string(*domain) : std::string{}));
}

Embedding compose_it(const ITParams& params, const ClassId& cls, const Embedding& text,
                     const Embedding& image_mean) {
    auto it = params.mix.find(cls);
    if (it == params.mix.end())
        throw DataError("no IT parameters for class " + cls.to_string());
    const ClassMix& m = it->second;
    const std::size_t d = image_mean.dim();
    if (text.dim() != d || m.alpha.size() != d || m.beta.size() != d)
        throw InvalidInput("IT composition dimension mismatch for class " + cls.to_string());
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i)
        out[i] = m.alpha[i] * static_cast<double>(text[i]) +
                 m.beta[i] * static_cast<double>(image_mean[i]);
    return Embedding::from_doubles(out);
}

Embedding compose_it(const ITParams& params, const ClassId& cls, const Pool& text_pool,
                     const Embedding& image_mean) {
    return compose_it(params, cls, text_vector_for(text_pool, cls), image_mean);
}

namespace {

// Dense, index-addressed view of one task's training problem.
struct Problem {
    std::vector<ClassId> classes;
    std::vector<std::vector<double>> text;
    std::vector<std::vector<double>> image;
    std::size_t dim = 0;
};

Problem make_problem(const std::vector<ClassId>& classes, std::optional<std::uint32_t> domain,
                     const Pool& text_pool, const Pool& image_pool) {
    Problem p;
    p.classes = classes;
    for (const auto& c : classes) {
        p.text.push_back(text_vector_for(text_pool, c).to_doubles());
        p.image.push_back(image_mean_for(image_pool, c, domain).to_doubles());
        if (p.text.back().size() != p.image.back().size())
            throw InvalidInput("text and image vectors of " + c.to_string() + " differ in dimension");
    }
    p.dim = p.text.empty() ? 0 : p.text.front().size();
    return p;
}

std::vector<std::size_t> label_indices(const Problem& p, std::span<const Record> records) {
    std::vector<std::size_t> labels(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        auto it = std::lower_bound(p.classes.begin(), p.classes.end(), records[r].class_id);
        if (it == p.classes.end() || *it != records[r].class_id)
            throw InvalidInput("record of class " + records[r].class_id.to_string() +
                               " is not part of this task");
        if (records[r].embedding.dim() != p.dim)
            throw InvalidInput("record dimension does not match the task's label vectors");
        labels[r] = static_cast<std::size_t>(it - p.classes.begin());
    }
    return labels;
}

struct LossGrads {
    double loss = 0.0;
    std::vector<ClassMix> grads;
};

// Loss (and optionally gradients) over records[subset[i]]. Accumulation runs
// in subset order, so results are deterministic.
LossGrads evaluate(const Problem& p, const std::vector<ClassMix>& mix,
                   std::span<const Record> records, std::span<const std::size_t> labels,
                   std::span<const std::size_t> subset, double tau, bool want_grads) {
    const std::size_t k_count = p.classes.size();
    const std::size_t d = p.dim;

    std::vector<std::vector<double>> v(k_count, std::vector<double>(d));
    std::vector<double> vnorm(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        double ss = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            v[k][i] = mix[k].alpha[i] * p.text[k][i] + mix[k].beta[i] * p.image[k][i];
            ss += v[k][i] * v[k][i];
        }
        if (!(ss > 0.0))
            throw NumericError("IT vector of class " + p.classes[k].to_string() +
                               " collapsed to zero norm");
        vnorm[k] = std::sqrt(ss);
    }

    LossGrads out;
    std::vector<std::vector<double>> weighted_x;  // sum_r (g_kr / |x_r|) x_r
    std::vector<double> weighted_c(k_count, 0.0);  // sum_r g_kr c_kr
    if (want_grads) weighted_x.assign(k_count, std::vector<double>(d, 0.0));

    const double inv_n = 1.0 / static_cast<double>(subset.size());
    std::vector<double> cosines(k_count), logits(k_count);
    for (std::size_t r : subset) {
        const auto x = records[r].embedding.values();
        double xx = 0.0;
        for (std::size_t i = 0; i < d; ++i) xx += static_cast<double>(x[i]) * x[i];
        if (!(xx > 0.0)) throw InvalidInput("zero-norm training record");
        const double xnorm = std::sqrt(xx);

        double zmax = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < k_count; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += v[k][i] * static_cast<double>(x[i]);
            cosines[k] = dot / (vnorm[k] * xnorm);
            logits[k] = tau * cosines[k];
            zmax = std::max(zmax, logits[k]);
        }
        double z = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) z += std::exp(logits[k] - zmax);
        const double lse = zmax + std::log(z);
        const std::size_t y = labels[r];
        out.loss += (lse - logits[y]) * inv_n;

        if (!want_grads) continue;
        for (std::size_t k = 0; k < k_count; ++k) {
            const double pk = std::exp(logits[k] - lse);
            const double g = (pk - (k == y ? 1.0 : 0.0)) * tau * inv_n;
            if (g == 0.0) continue;
            weighted_c[k] += g * cosines[k];
            const double s = g / xnorm;
            for (std::size_t i = 0; i < d; ++i) weighted_x[k][i] += s * static_cast<double>(x[i]);
        }
    }

    if (want_grads) {
        out.grads.resize(k_count);
        for (std::size_t k = 0; k < k_count; ++k) {
            auto& gm = out.grads[k];
            gm.alpha.resize(d);
            gm.beta.resize(d);
            const double inv_norm = 1.0 / vnorm[k];
            const double radial = weighted_c[k] * inv_norm * inv_norm;
            for (std::size_t i = 0; i < d; ++i) {
                const double gv = weighted_x[k][i] * inv_norm - v[k][i] * radial;
                gm.alpha[i] = gv * p.text[k][i];
                gm.beta[i] = gv * p.image[k][i];
            }
        }
    }
    if (!std::isfinite(out.loss)) throw NumericError("IT loss is not finite");
    return out;
}

std::vector<ClassMix> mix_vector(const Problem& p, const ITParams& params) {
    std::vector<ClassMix> mix;
    for (const auto& c : p.classes) {
        auto it = params.mix.find(c);
        if (it == params.mix.end()) throw DataError("no IT parameters for class " + c.to_string());
        if (it->second.alpha.size() != p.dim || it->second.beta.size() != p.dim)
            throw InvalidInput("IT parameters of " + c.to_string() + " have the wrong dimension");
        mix.push_back(it->second);
    }
    return mix;
}

}  // namespace

ITLossGrads it_loss_and_grads(const ITParams& params, std::span<const Record> records,
                              const Pool& text_pool, const Pool& image_pool,
                              const ITTrainConfig& cfg) {
    validate(cfg);
    if (records.empty()) throw InvalidInput("IT loss needs at least one record");
    std::vector<ClassId> classes;
    for (const auto& kv : params.mix) classes.push_back(kv.first);
    const Problem p = make_problem(classes, params.domain_id, text_pool, image_pool);
    const auto labels = label_indices(p, records);
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    LossGrads lg = evaluate(p, mix_vector(p, params), records, labels, all,
                            cfg.inverse_temperature, true);
    ITLossGrads out;
    out.loss = lg.loss;
    for (std::size_t k = 0; k < p.classes.size(); ++k) out.grads.emplace(p.classes[k], std::move(lg.grads[k]));
    return out;
}

ITParams train_it_task(const TaskSpec& task, const Pool& text_pool, const Pool& image_pool,
                       const ITTrainConfig& cfg, ITTrainTrace* trace) {
    validate(cfg);
    if (task.records.empty())
        throw InvalidInput("task " + std::to_string(task.index) + " has no records");

    std::optional<std::uint32_t> domain;
    if (task.kind == TaskKind::DIL) {
        domain = task.records.front().domain_id;
        for (const auto& r : task.records)
            if (r.domain_id != domain)
                throw InvalidInput("domain-incremental task " + std::to_string(task.index) +
                                   " mixes several domains");
    }
    const Problem p = make_problem(task.classes(), domain, text_pool, image_pool);
    const auto labels = label_indices(p, task.records);

    std::vector<ClassMix> mix(p.classes.size(),
                              ClassMix{std::vector<double>(p.dim, cfg.alpha_init),
                                       std::vector<double>(p.dim, cfg.beta_init)});

    std::vector<std::size_t> all(task.records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto full_loss = [&] {
        return evaluate(p, mix, task.records, labels, all, cfg.inverse_temperature, false).loss;
    };
    if (trace) trace->epoch_losses = {full_loss()};

    std::vector<std::size_t> order = all;
    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng = Rng::stream(cfg.seed, {task.index, epoch});
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> batch(order.data() + start, end - start);
            const LossGrads lg =
                evaluate(p, mix, task.records, labels, batch, cfg.inverse_temperature, true);
            for (std::size_t k = 0; k < mix.size(); ++k) {
                for (std::size_t i = 0; i < p.dim; ++i) {
                    mix[k].alpha[i] -= cfg.learning_rate * lg.grads[k].alpha[i];
                    mix[k].beta[i] -= cfg.learning_rate * lg.grads[k].beta[i];
                }
            }
        }
        if (trace) trace->epoch_losses.push_back(full_loss());
    }

    ITParams out;
    out.task_index = task.index;
    out.domain_id = domain;
    for (std::size_t k = 0; k < p.classes.size(); ++k) {
        for (auto& a : mix[k].alpha) a = static_cast<double>(static_cast<float>(a));
        for (auto& b : mix[k].beta) b = static_cast<double>(static_cast<float>(b));
        out.mix.emplace(p.classes[k], std::move(mix[k]));
    }
    return out;
}

Pool build_lvp_it(const Pool& pool_i, const Pool& text_pool, std::span<const ITParams> params) {
    std::vector<std::string> offenders;
    PoolEntries entries;
    std::size_t composed = 0;

    for (const auto& [cls, list] : pool_i.entries()) {
        if (!text_pool.contains(cls)) {
            offenders.push_back(cls.to_string() + " (no text vector)");
            continue;
        }
        std::vector<LabelVector> out;
        for (const auto& lv : list) {
            const ITParams* owner = nullptr;
            for (const auto& ps : params)
                if (ps.domain_id == lv.domain_id && ps.mix.count(cls)) owner = &ps;
            if (owner == nullptr) {
                offenders.push_back(cls.to_string() + " (no IT parameters" +
                                    (lv.domain_id ? " for domain " + std::to_string(*lv.domain_id)
                                                  : std::string{}) +
                                    ")");
                continue;
            }
            out.emplace_back(compose_it(*owner, cls, text_pool, lv.vector), cls, lv.domain_id,
                             Modality::MixedIT, lv.sample_count);
            ++composed;
        }
        if (!out.empty()) entries.emplace(cls, std::move(out));
    }
    for (const auto& ps : params)
        for (const auto& [cls, _] : ps.mix)
            if (!pool_i.contains(cls))
                offenders.push_back(cls.to_string() + " (IT parameters without image mean)");

    if (!offenders.empty()) {
        std::string msg = "LVP-IT class sets do not align:";
        for (const auto& o : offenders) msg += " " + o + ";";
        throw DataError(msg);
    }
    auto provenance = pool_i.provenance();
    provenance.push_back("lvp-it: composed " + std::to_string(composed) + " vectors from " +
                         std::to_string(params.size()) + " task parameter sets");
    return Pool(pool_i.dim(), std::move(entries), std::move(provenance), pool_i.display_names());
}

}  // namespace lvp
