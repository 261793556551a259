#include "lvp/harness.hpp"

#include <cctype>
#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "lvp/errors.hpp"
#include "lvp/parallel.hpp"
#include "lvp/pool_builder.hpp"
#include "lvp/rng.hpp"

namespace lvp {

const char* to_string(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::CIL: return "cil";
        case ProtocolKind::DIL: return "dil";
        case ProtocolKind::CTIL: return "ctil";
    }
    return "unknown";
}

const char* to_string(Variant v) {
    switch (v) {
        case Variant::I: return "lvp-i";
        case Variant::IT: return "lvp-it";
        case Variant::C: return "lvp-c";
    }
    return "unknown";
}

namespace {

std::string lowered(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

Variant parse_variant(std::string_view raw) {
    const std::string name = lowered(raw);
    if (name == "i" || name == "lvp-i") return Variant::I;
    if (name == "it" || name == "lvp-it") return Variant::IT;
    if (name == "c" || name == "lvp-c") return Variant::C;
    throw InvalidInput("unknown variant '" + std::string(raw) + "' (expected i, it or c)");
}

ProtocolKind parse_protocol(std::string_view raw) {
    const std::string name = lowered(raw);
    if (name == "cil") return ProtocolKind::CIL;
    if (name == "dil") return ProtocolKind::DIL;
    if (name == "ctil") return ProtocolKind::CTIL;
    throw InvalidInput("unknown protocol '" + std::string(raw) + "' (expected cil, dil or ctil)");
}

SimilarityKind effective_similarity(const Protocol& protocol) {
    if (protocol.similarity) return *protocol.similarity;
    return protocol.variant == Variant::IT ? SimilarityKind::Cosine : SimilarityKind::L1;
}

namespace {

bool has_text_for(const Pool* text_pool, const std::vector<ClassId>& classes) {
    if (text_pool == nullptr) return false;
    return std::all_of(classes.begin(), classes.end(),
                       [&](const ClassId& c) { return text_pool->contains(c); });
}

void validate_stream(const Protocol& protocol, std::span<const TaskSpec> train,
                     std::span<const TaskSpec> tests, const Pool* text_pool) {
    if (train.empty()) throw InvalidInput("training stream is empty");
    const std::size_t dim = [&] {
        for (const auto& t : train)
            if (!t.records.empty()) return t.records.front().embedding.dim();
        throw InvalidInput("training stream has no records");
    }();
    std::set<ClassId> seen;
    for (const auto& t : train) {
        if (t.records.empty()) throw InvalidInput("training task " + t.display_label() + " is empty");
        for (const auto& r : t.records)
            if (r.embedding.dim() != dim) throw InvalidInput("training records differ in dimension");
        if (protocol.kind == ProtocolKind::CIL && t.kind != TaskKind::CIL)
            throw InvalidInput("class-incremental protocol got a domain-incremental task");
        if (protocol.kind == ProtocolKind::DIL && t.kind != TaskKind::DIL)
            throw InvalidInput("domain-incremental protocol got a class-incremental task");
        const auto classes = t.classes();
        if (t.kind == TaskKind::CIL) {
            for (const auto& c : classes)
                if (seen.count(c))
                    throw InvalidInput("class " + c.to_string() + " of " + t.display_label() +
                                       " was introduced by an earlier task");
        }
        seen.insert(classes.begin(), classes.end());
        if (protocol.variant == Variant::IT) {
            if (text_pool == nullptr)
                throw DataError("LVP-IT needs text vectors, none were supplied");
            for (const auto& c : classes) text_vector_for(*text_pool, c);
        }
    }
    for (const auto& t : tests) {
        if (t.records.empty()) throw InvalidInput("test task " + t.display_label() + " is empty");
        for (const auto& r : t.records)
            if (r.embedding.dim() != dim) throw InvalidInput("test records differ in dimension");
    }
}

std::vector<Embedding> queries_of(const TaskSpec& t) {
    std::vector<Embedding> q;
    q.reserve(t.records.size());
    for (const auto& r : t.records) q.push_back(r.embedding);
    return q;
}

double fraction_correct(const TaskSpec& t, const std::vector<ClassId>& predicted) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == t.records[i].class_id) ++correct;
    return static_cast<double>(correct) / static_cast<double>(t.records.size());
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double pool_accuracy(SimilarityKind kind, const Pool& pool, const TaskSpec& test, unsigned threads) {
    if (test.records.empty()) throw InvalidInput("test task is empty");
    const auto q = queries_of(test);
    return fraction_correct(test, classify_batch(kind, pool, q, threads));
}

double head_accuracy(const LinearClassifier& head, const TaskSpec& test, unsigned threads) {
    if (test.records.empty()) throw InvalidInput("test task is empty");
    const auto q = queries_of(test);
    return fraction_correct(test, predict_batch(head, q, threads));
}

RunResult run(const Protocol& protocol, std::span<const TaskSpec> train,
              std::span<const TaskSpec> tests, const Pool* text_pool) {
    validate_stream(protocol, train, tests, text_pool);
    validate(protocol.it);
    validate(protocol.head);
    const SimilarityKind kind = effective_similarity(protocol);
    const std::size_t dim = train.front().records.front().embedding.dim();

    RunResult result{EvalReport{}, Pool(dim), std::nullopt, {}, std::nullopt};
    EvalReport& report = result.report;
    for (const auto& t : tests) {
        report.test_labels.push_back(t.display_label());
        report.test_sizes.push_back(t.records.size());
    }
    report.metadata = {
        {"protocol", to_string(protocol.kind)},
        {"variant", to_string(protocol.variant)},
        {"similarity", protocol.variant == Variant::C ? "n/a" : to_string(kind)},
        {"seed", std::to_string(protocol.seed)},
        {"it.learning_rate", format_double(protocol.it.learning_rate)},
        {"it.epochs", std::to_string(protocol.it.epochs)},
        {"it.batch_size", std::to_string(protocol.it.batch_size)},
        {"it.inverse_temperature", format_double(protocol.it.inverse_temperature)},
        {"it.alpha_init", format_double(protocol.it.alpha_init)},
        {"it.beta_init", format_double(protocol.it.beta_init)},
        {"it.seed", std::to_string(protocol.it.seed)},
        {"head.learning_rate", format_double(protocol.head.learning_rate)},
        {"head.target_loss_low", format_double(protocol.head.target_loss_low)},
        {"head.target_loss_high", format_double(protocol.head.target_loss_high)},
        {"head.max_steps", std::to_string(protocol.head.max_steps)},
    };

    const std::vector<std::set<ClassId>> test_classes = [&] {
        std::vector<std::set<ClassId>> out;
        for (const auto& t : tests) {
            auto c = t.classes();
            out.emplace_back(c.begin(), c.end());
        }
        return out;
    }();

    for (const TaskSpec& task : train) {
        const Pool stage_pool = build_lvp_i(task, protocol.threads);
        result.pool_i = result.pool_i.empty() ? stage_pool
                                              : merge(result.pool_i, stage_pool, MergePolicy::Append);

        const bool wants_it = protocol.variant == Variant::IT ||
                              (protocol.variant == Variant::C && has_text_for(text_pool, task.classes()));
        if (wants_it) {
            result.it_params.push_back(train_it_task(task, *text_pool, stage_pool, protocol.it));
            std::vector<ClassId> covered;
            for (const auto& c : result.pool_i.classes()) {
                bool any = false;
                for (const auto& ps : result.it_params) any = any || ps.mix.count(c) != 0;
                if (any) covered.push_back(c);
            }
            result.pool_it = build_lvp_it(restrict_pool(result.pool_i, covered), *text_pool,
                                          result.it_params);
        }
        if (protocol.variant == Variant::C) {
            const Pool inputs = select_head_inputs(result.pool_i, result.pool_it ? &*result.pool_it : nullptr);
            if (inputs.class_count() >= 2) result.head = train_head(inputs, protocol.head);
        }

        std::vector<std::optional<double>> row(tests.size());
        const std::set<ClassId> learned = [&] {
            auto c = result.pool_i.classes();
            return std::set<ClassId>(c.begin(), c.end());
        }();
        for (std::size_t j = 0; j < tests.size(); ++j) {
            if (!std::includes(learned.begin(), learned.end(), test_classes[j].begin(),
                               test_classes[j].end()))
                continue;
            switch (protocol.variant) {
                case Variant::I:
                    row[j] = pool_accuracy(kind, result.pool_i, tests[j], protocol.threads);
                    break;
                case Variant::IT:
                    row[j] = pool_accuracy(kind, *result.pool_it, tests[j], protocol.threads);
                    break;
                case Variant::C:
                    // One learned class: the head degenerates to a constant.
                    row[j] = result.head ? head_accuracy(*result.head, tests[j], protocol.threads)
                                         : pool_accuracy(SimilarityKind::L1, result.pool_i, tests[j],
                                                         protocol.threads);
                    break;
            }
        }
        report.stage_labels.push_back("after " + task.display_label());
        report.accuracy.push_back(std::move(row));
    }
    report.final_average = final_row_average(report);
    report.weighted_final_average = final_row_weighted_average(report);
    return result;
}

std::map<std::size_t, double> forgetting_audit(const EvalReport& report) {
    std::map<std::size_t, double> drops;
    const std::size_t cols = report.test_labels.size();
    for (std::size_t j = 0; j < cols; ++j) {
        std::optional<double> worst;
        std::optional<double> best_before;
        for (const auto& row : report.accuracy) {
            if (j >= row.size() || !row[j]) continue;
            if (best_before) {
                const double drop = *best_before - *row[j];
                worst = worst ? std::max(*worst, drop) : drop;
            }
            best_before = best_before ? std::max(*best_before, *row[j]) : *row[j];
        }
        if (worst) drops[j] = *worst;
    }
    return drops;
}

double upper_bound(std::span<const Record> train_records, std::span<const TaskSpec> tests,
                   const HeadTrainConfig& cfg, unsigned threads) {
    if (train_records.empty()) throw InvalidInput("upper bound needs training records");
    if (tests.empty()) throw InvalidInput("upper bound needs test tasks");
    std::set<ClassId> class_set;
    for (const auto& r : train_records) class_set.insert(r.class_id);
    std::vector<ClassId> classes(class_set.begin(), class_set.end());
    std::vector<detail::LabeledExample> examples;
    examples.reserve(train_records.size());
    for (const auto& r : train_records) {
        const auto it = std::lower_bound(classes.begin(), classes.end(), r.class_id);
        examples.push_back({r.embedding.values(), static_cast<std::size_t>(it - classes.begin())});
    }
    const LinearClassifier head = detail::train_softmax_regression(
        train_records.front().embedding.dim(), classes, examples, cfg, nullptr);
    double sum = 0.0;
    for (const auto& t : tests) sum += head_accuracy(head, t, threads);
    return sum / static_cast<double>(tests.size());
}

std::vector<TaskSpec> interleave_streams(std::vector<std::vector<TaskSpec>> streams,
                                         std::uint64_t seed) {
    std::vector<TaskSpec> all;
    for (auto& s : streams)
        for (auto& t : s) {
            if (t.label.empty()) {
                const std::string ns = t.records.empty() ? std::string{} : t.records.front().class_id.ns;
                t.label = ns + " task " + std::to_string(t.index);
            }
            all.push_back(std::move(t));
        }
    Rng rng = Rng::stream(seed, {0x43544C});
    rng.shuffle(std::span<TaskSpec>(all));
    for (std::size_t i = 0; i < all.size(); ++i) all[i].index = static_cast<std::uint32_t>(i + 1);
    return all;
}

TaskLayout TaskLayout::parse(std::string_view text) {
    TaskLayout layout;
    auto to_u32 = [&](std::string_view s) -> std::uint32_t {
        if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), ::isdigit))
            throw InvalidInput("bad task layout '" + std::string(text) + "'");
        const auto v = static_cast<std::uint32_t>(std::stoul(std::string(s)));
        if (v == 0) throw InvalidInput("task layout counts must be positive");
        return v;
    };
    if (text == "single") return layout;
    if (text == "domain") {
        layout.kind = Kind::Domain;
        return layout;
    }
    if (text.rfind("classes:", 0) == 0) {
        layout.kind = Kind::ClassBlocks;
        layout.classes_per_task = to_u32(text.substr(8));
        return layout;
    }
    if (const auto x = text.find('x'); x != std::string_view::npos) {
        layout.kind = Kind::ClassBlocks;
        layout.expected_tasks = to_u32(text.substr(0, x));
        layout.classes_per_task = to_u32(text.substr(x + 1));
        return layout;
    }
    throw InvalidInput("bad task layout '" + std::string(text) +
                       "' (expected single, domain, classes:N or TxN)");
}

std::vector<TaskSpec> split_tasks(std::span<const Record> records, const TaskLayout& layout,
                                  const std::string& label_prefix) {
    if (records.empty()) throw InvalidInput("no records to split into tasks");
    std::vector<TaskSpec> tasks;
    auto label = [&](std::uint32_t index) {
        return label_prefix.empty() ? std::string{} : label_prefix + " task " + std::to_string(index);
    };
    switch (layout.kind) {
        case TaskLayout::Kind::Single:
            tasks.push_back(TaskSpec{1, TaskKind::CIL, {records.begin(), records.end()}, label(1)});
            break;
        case TaskLayout::Kind::ClassBlocks: {
            std::set<ClassId> class_set;
            for (const auto& r : records) class_set.insert(r.class_id);
            const std::vector<ClassId> classes(class_set.begin(), class_set.end());
            const std::size_t n_tasks =
                (classes.size() + layout.classes_per_task - 1) / layout.classes_per_task;
            if (layout.expected_tasks != 0 &&
                (n_tasks != layout.expected_tasks ||
                 classes.size() != std::size_t{layout.expected_tasks} * layout.classes_per_task))
                throw InvalidInput("layout " + std::to_string(layout.expected_tasks) + "x" +
                                   std::to_string(layout.classes_per_task) + " does not match " +
                                   std::to_string(classes.size()) + " classes");
            for (std::size_t t = 0; t < n_tasks; ++t) {
                const auto idx = static_cast<std::uint32_t>(t + 1);
                tasks.push_back(TaskSpec{idx, TaskKind::CIL, {}, label(idx)});
            }
            for (const auto& r : records) {
                const auto pos = static_cast<std::size_t>(
                    std::lower_bound(classes.begin(), classes.end(), r.class_id) - classes.begin());
                tasks[pos / layout.classes_per_task].records.push_back(r);
            }
            break;
        }
        case TaskLayout::Kind::Domain: {
            std::map<std::uint32_t, std::vector<Record>> by_domain;
            for (const auto& r : records) {
                if (!r.domain_id) throw InvalidInput("domain layout needs a domain id on every record");
                by_domain[*r.domain_id].push_back(r);
            }
            std::uint32_t idx = 1;
            for (auto& [dom, recs] : by_domain) {
                tasks.push_back(TaskSpec{idx, TaskKind::DIL, std::move(recs), label(idx)});
                ++idx;
            }
            break;
        }
    }
    return tasks;
}

std::string format_table(const EvalReport& report) {
    std::ostringstream os;
    std::size_t first = 14;
    for (const auto& s : report.stage_labels) first = std::max(first, s.size() + 2);
    std::vector<std::size_t> widths;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(first), "Stage");
    os << buf;
    for (const auto& l : report.test_labels) {
        widths.push_back(std::max<std::size_t>(8, l.size() + 2));
        std::snprintf(buf, sizeof buf, "%*s", static_cast<int>(widths.back()), l.c_str());
        os << buf;
    }
    os << "   Average\n";
    for (std::size_t s = 0; s < report.accuracy.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(first),
                      s < report.stage_labels.size() ? report.stage_labels[s].c_str() : "");
        os << buf;
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t j = 0; j < widths.size(); ++j) {
            const auto& a = j < report.accuracy[s].size() ? report.accuracy[s][j] : std::nullopt;
            if (a) {
                std::snprintf(buf, sizeof buf, "%*.1f", static_cast<int>(widths[j]), *a * 100.0);
                sum += *a;
                ++n;
            } else {
                std::snprintf(buf, sizeof buf, "%*s", static_cast<int>(widths[j]), "-");
            }
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%10.1f\n", n ? sum / static_cast<double>(n) * 100.0 : 0.0);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "final average: %.2f%%  (test-size weighted: %.2f%%)\n",
                  report.final_average * 100.0, report.weighted_final_average * 100.0);
    os << buf;
    return os.str();
}

}  // namespace lvp
