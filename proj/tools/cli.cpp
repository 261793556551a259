#include "cli.hpp"

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "lvp/domain_gate.hpp"
#include "lvp/errors.hpp"
#include "lvp/harness.hpp"
#include "lvp/pool_builder.hpp"
#include "lvp/storage.hpp"
#include "lvp/synth.hpp"

namespace lvp::cli {

namespace fs = std::filesystem;

namespace {

// Flag problems detected before any file is touched.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GlobalFlags {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string similarity;
    double tau = 1.0;
};

struct TrainingFlags {
    double it_lr = ITTrainConfig{}.learning_rate;
    std::uint32_t it_epochs = ITTrainConfig{}.epochs;
    std::uint32_t it_batch = ITTrainConfig{}.batch_size;
    double it_tau = ITTrainConfig{}.inverse_temperature;
    double alpha_init = ITTrainConfig{}.alpha_init;
    double beta_init = ITTrainConfig{}.beta_init;
    double head_lr = HeadTrainConfig{}.learning_rate;
    std::uint32_t head_max_steps = HeadTrainConfig{}.max_steps;
};

void add_training_flags(CLI::App* cmd, TrainingFlags& t) {
    cmd->add_option("--it-lr", t.it_lr, "LVP-IT SGD learning rate")->capture_default_str();
    cmd->add_option("--it-epochs", t.it_epochs, "LVP-IT epochs per task")->capture_default_str();
    cmd->add_option("--it-batch", t.it_batch, "LVP-IT mini-batch size")->capture_default_str();
    cmd->add_option("--it-tau", t.it_tau, "LVP-IT training logit scale")->capture_default_str();
    cmd->add_option("--alpha-init", t.alpha_init, "initial text weight")->capture_default_str();
    cmd->add_option("--beta-init", t.beta_init, "initial image weight")->capture_default_str();
    cmd->add_option("--head-lr", t.head_lr, "LVP-C Adam learning rate")->capture_default_str();
    cmd->add_option("--head-max-steps", t.head_max_steps, "LVP-C step cap")->capture_default_str();
}

Protocol make_protocol(const GlobalFlags& g, const TrainingFlags& t, const std::string& variant,
                       const std::string& protocol) {
    Protocol p;
    try {
        p.variant = parse_variant(variant);
        p.kind = parse_protocol(protocol);
        if (!g.similarity.empty()) p.similarity = parse_similarity(g.similarity);
        p.it.learning_rate = t.it_lr;
        p.it.epochs = t.it_epochs;
        p.it.batch_size = t.it_batch;
        p.it.inverse_temperature = t.it_tau;
        p.it.alpha_init = t.alpha_init;
        p.it.beta_init = t.beta_init;
        p.it.seed = g.seed;
        p.head.learning_rate = t.head_lr;
        p.head.max_steps = t.head_max_steps;
        p.head.seed = g.seed;
        p.seed = g.seed;
        p.threads = g.threads;
        validate(p.it);
        validate(p.head);
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    return p;
}

std::vector<TaskLayout> parse_layouts(const std::vector<std::string>& specs, std::size_t files) {
    std::vector<TaskLayout> out;
    try {
        for (const auto& s : specs) out.push_back(TaskLayout::parse(s));
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    if (out.empty()) out.push_back(TaskLayout{});
    if (out.size() == 1) out.resize(files, out.front());
    if (out.size() != files)
        throw UsageError("give one --tasks layout, or one per input file (" + std::to_string(files) + ")");
    return out;
}

std::pair<std::uint32_t, std::uint32_t> parse_range(const std::string& text) {
    if (text.empty()) return {1, std::numeric_limits<std::uint32_t>::max()};
    const auto dash = text.find('-');
    try {
        if (dash == std::string::npos) {
            const auto v = static_cast<std::uint32_t>(std::stoul(text));
            return {v, v};
        }
        return {static_cast<std::uint32_t>(std::stoul(text.substr(0, dash))),
                static_cast<std::uint32_t>(std::stoul(text.substr(dash + 1)))};
    } catch (const std::exception&) {
        throw UsageError("bad task range '" + text + "' (expected N or A-B)");
    }
}

struct LoadedStreams {
    std::vector<std::vector<TaskSpec>> per_file;
    std::uint32_t dim = 0;
};

LoadedStreams load_streams(const std::vector<std::string>& files, const std::vector<TaskLayout>& layouts,
                           bool normalize) {
    LoadedStreams s;
    for (std::size_t i = 0; i < files.size(); ++i) {
        EmbeddingDataset ds = read_embeddings(files[i], ReadOptions{normalize});
        if (s.dim != 0 && ds.dim != s.dim)
            throw DataError(files[i] + " has dimension " + std::to_string(ds.dim) + ", expected " +
                            std::to_string(s.dim));
        s.dim = ds.dim;
        const std::string prefix = files.size() > 1 ? ds.ns : std::string{};
        s.per_file.push_back(split_tasks(ds.records, layouts[i], prefix));
    }
    return s;
}

std::vector<TaskSpec> concat(std::vector<std::vector<TaskSpec>> streams) {
    std::vector<TaskSpec> out;
    std::uint32_t idx = 1;
    for (auto& s : streams)
        for (auto& t : s) {
            t.index = idx++;
            out.push_back(std::move(t));
        }
    return out;
}

std::optional<Pool> load_text(const std::vector<std::string>& files) {
    if (files.empty()) return std::nullopt;
    std::vector<Pool> pools;
    for (const auto& f : files) pools.push_back(read_pool(f));
    return merge(pools, MergePolicy::Error);
}

std::string format_count(std::size_t n) {
    std::string s = std::to_string(n);
    for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
    return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"lvp: continual learning over embedding vectors with label vector pools"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (0 = all cores)")->capture_default_str();
    app.add_option("--similarity", g.similarity, "l1, l2 or cosine (default: per variant)");
    app.add_option("--tau", g.tau, "softmax inverse temperature for printed probabilities")
        ->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic embedding dataset");
    SynthSpec spec;
    std::string synth_out;
    std::vector<double> domain_offsets;
    double text_noise = -1.0;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--namespace", spec.ns, "class namespace")->capture_default_str();
    synth->add_option("--classes", spec.num_classes, "number of classes")->capture_default_str();
    synth->add_option("--dim", spec.dim, "embedding dimension")->capture_default_str();
    synth->add_option("--classes-per-task", spec.classes_per_task, "classes per CIL task (0 = one task)")
        ->capture_default_str();
    synth->add_option("--mean-scale", spec.mean_scale, "class-mean draw scale")->capture_default_str();
    synth->add_option("--std", spec.within_std, "within-class standard deviation")->capture_default_str();
    synth->add_option("--train-per-class", spec.train_per_class)->capture_default_str();
    synth->add_option("--test-per-class", spec.test_per_class)->capture_default_str();
    synth->add_option("--domain-offsets", domain_offsets, "per-domain offset scales (enables DIL)")
        ->delimiter(',');
    synth->add_option("--text-noise", text_noise, "write pseudo-text vectors with this noise");

    // build
    auto* build = app.add_subcommand("build", "learn a task stream and write the model files");
    std::vector<std::string> build_train, build_text, build_layouts;
    std::string build_variant = "i", build_protocol = "cil", build_out, build_only;
    bool build_normalize = false;
    TrainingFlags build_tf;
    build->add_option("--train", build_train, "LVPE training files")->required();
    build->add_option("--tasks", build_layouts, "task layout(s): single, domain, classes:N, TxN");
    build->add_option("--variant", build_variant, "i, it or c")->capture_default_str();
    build->add_option("--protocol", build_protocol, "cil, dil or ctil")->capture_default_str();
    build->add_option("--text", build_text, "LVPP text-vector pools");
    build->add_option("--out", build_out, "output directory")->required();
    build->add_option("--only-tasks", build_only, "learn only tasks N or A-B (shard builds)");
    build->add_flag("--normalize", build_normalize, "L2-normalise embeddings on load");
    add_training_flags(build, build_tf);

    // merge
    auto* merge_cmd = app.add_subcommand("merge", "merge pool files");
    std::vector<std::string> merge_inputs;
    std::string merge_policy = "error", merge_out;
    merge_cmd->add_option("pools", merge_inputs, "LVPP files")->required();
    merge_cmd->add_option("--policy", merge_policy, "append, weighted or error")->capture_default_str();
    merge_cmd->add_option("--out", merge_out, "output LVPP file")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a pool or head on test files");
    std::string eval_pool, eval_head, eval_report;
    std::vector<std::string> eval_tests, eval_layouts;
    bool eval_normalize = false;
    std::size_t eval_probs = 0;
    eval->add_option("--pool", eval_pool, "LVPP pool (similarity search)");
    eval->add_option("--head", eval_head, "LVPH linear head");
    eval->add_option("--test", eval_tests, "LVPE test files")->required();
    eval->add_option("--tasks", eval_layouts, "test task layout(s)");
    eval->add_option("--report", eval_report, "write the JSON report here");
    eval->add_option("--probabilities", eval_probs, "print class probabilities of the first N queries");
    eval->add_flag("--normalize", eval_normalize, "L2-normalise embeddings on load");

    // run
    auto* run_cmd = app.add_subcommand("run", "learn stagewise and evaluate after every task");
    std::vector<std::string> run_train, run_test, run_text, run_layouts;
    std::string run_variant = "i", run_protocol = "cil", run_report;
    bool run_normalize = false, run_upper = false;
    TrainingFlags run_tf;
    run_cmd->add_option("--train", run_train, "LVPE training files")->required();
    run_cmd->add_option("--test", run_test, "LVPE test files")->required();
    run_cmd->add_option("--tasks", run_layouts, "task layout(s), applied to train and test files");
    run_cmd->add_option("--variant", run_variant, "i, it or c")->capture_default_str();
    run_cmd->add_option("--protocol", run_protocol, "cil, dil or ctil")->capture_default_str();
    run_cmd->add_option("--text", run_text, "LVPP text-vector pools");
    run_cmd->add_option("--report", run_report, "write the JSON report here");
    run_cmd->add_flag("--normalize", run_normalize, "L2-normalise embeddings on load");
    run_cmd->add_flag("--upper-bound", run_upper, "also train a head on all records");
    add_training_flags(run_cmd, run_tf);

    // info
    auto* info = app.add_subcommand("info", "summarise a pool file");
    std::string info_path;
    info->add_option("pool", info_path, "LVPP file")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (g.threads > 1024) throw UsageError("--threads must be <= 1024");
        if (!(g.tau > 0.0) || !std::isfinite(g.tau)) throw UsageError("--tau must be positive");
        if (!g.similarity.empty()) {
            try {
                parse_similarity(g.similarity);
            } catch (const InvalidInput& e) {
                throw UsageError(e.what());
            }
        }

        if (*synth) {
            spec.seed = g.seed;
            spec.domain_offsets = domain_offsets;
            if (text_noise >= 0.0) spec.text_noise = text_noise;
            try {
                validate(spec);
            } catch (const InvalidInput& e) {
                throw UsageError(e.what());
            }
            const SynthDataset ds = generate(spec);
            fs::create_directories(synth_out);
            EmbeddingDataset train{spec.ns, spec.dim, 0, flatten(ds.train)};
            EmbeddingDataset test{spec.ns, spec.dim, 0, flatten(ds.test)};
            write_embeddings(fs::path(synth_out) / "train.lvpe", train);
            write_embeddings(fs::path(synth_out) / "test.lvpe", test);
            if (ds.text_pool) write_pool(fs::path(synth_out) / "text.lvpp", *ds.text_pool);

            out << "synthetic dataset\n"
                << "  namespace        " << spec.ns << "\n"
                << "  classes          " << spec.num_classes << "\n"
                << "  dim              " << spec.dim << "\n"
                << "  classes/task     " << spec.classes_per_task << "\n"
                << "  mean scale       " << spec.mean_scale << "\n"
                << "  within std       " << spec.within_std << "\n"
                << "  train/class      " << spec.train_per_class << "\n"
                << "  test/class       " << spec.test_per_class << "\n"
                << "  domains          " << spec.domain_offsets.size() << "\n"
                << "  text noise       " << (spec.text_noise ? std::to_string(*spec.text_noise) : "none") << "\n"
                << "  seed             " << spec.seed << "\n"
                << "  train records    " << train.records.size() << "\n"
                << "  test records     " << test.records.size() << "\n"
                << "  suggested layout "
                << (!spec.domain_offsets.empty() ? std::string("domain")
                    : spec.classes_per_task ? "classes:" + std::to_string(spec.classes_per_task)
                                            : std::string("single"))
                << "\n";
            return kOk;
        }

        if (*build || *run_cmd) {
            const bool is_run = static_cast<bool>(*run_cmd);
            const auto& train_files = is_run ? run_train : build_train;
            const auto& text_files = is_run ? run_text : build_text;
            const Protocol protocol = make_protocol(g, is_run ? run_tf : build_tf,
                                                    is_run ? run_variant : build_variant,
                                                    is_run ? run_protocol : build_protocol);
            const auto layouts = parse_layouts(is_run ? run_layouts : build_layouts, train_files.size());
            const auto range = parse_range(is_run ? std::string{} : build_only);
            const bool normalize = is_run ? run_normalize : build_normalize;
            if (protocol.variant == Variant::IT && text_files.empty())
                throw DataError("LVP-IT needs a text-vector pool (--text)");
            if (is_run && run_test.size() != train_files.size() && layouts.size() > 1)
                throw UsageError("per-file layouts need one --test file per --train file");

            LoadedStreams train = load_streams(train_files, layouts, normalize);
            std::vector<TaskSpec> stream = protocol.kind == ProtocolKind::CTIL
                                               ? interleave_streams(std::move(train.per_file), protocol.seed)
                                               : concat(std::move(train.per_file));
            std::vector<TaskSpec> selected;
            for (auto& t : stream)
                if (t.index >= range.first && t.index <= range.second) selected.push_back(std::move(t));
            if (selected.empty()) throw UsageError("--only-tasks selects no task");

            std::vector<TaskSpec> tests;
            if (is_run) {
                const auto test_layouts =
                    layouts.size() == run_test.size() ? layouts : std::vector<TaskLayout>(run_test.size(), layouts.front());
                tests = concat(load_streams(run_test, test_layouts, normalize).per_file);
            }
            const std::optional<Pool> text = load_text(text_files);
            RunResult result = lvp::run(protocol, selected, tests, text ? &*text : nullptr);

            if (!is_run) {
                fs::create_directories(build_out);
                write_pool(fs::path(build_out) / "pool.lvpp", result.pool_i);
                if (!result.it_params.empty()) {
                    write_it_params(fs::path(build_out) / "it_params.lvpa", result.it_params);
                    write_pool(fs::path(build_out) / "pool_it.lvpp", *result.pool_it);
                }
                if (result.head) write_head(fs::path(build_out) / "head.lvph", *result.head);
                out << "built " << to_string(protocol.variant) << " over " << selected.size()
                    << " task(s): K=" << result.pool_i.class_count()
                    << " O=" << complexity(result.pool_i) << "\n";
                for (const auto& line : result.pool_i.provenance()) out << "  " << line << "\n";
                return kOk;
            }

            if (run_upper) {
                const auto all = flatten(selected);
                result.report.metadata["upper_bound"] =
                    std::to_string(upper_bound(all, tests, protocol.head, protocol.threads));
            }
            out << format_table(result.report);
            if (run_upper) out << "upper bound: " << result.report.metadata["upper_bound"] << "\n";
            if (!run_report.empty()) write_report(run_report, result.report);
            return kOk;
        }

        if (*merge_cmd) {
            MergePolicy policy;
            if (merge_policy == "append") policy = MergePolicy::Append;
            else if (merge_policy == "weighted") policy = MergePolicy::WeightedMeanMerge;
            else if (merge_policy == "error") policy = MergePolicy::Error;
            else throw UsageError("unknown merge policy '" + merge_policy + "'");
            std::vector<Pool> pools;
            for (const auto& p : merge_inputs) pools.push_back(read_pool(p));
            const Pool merged = merge(pools, policy);
            write_pool(merge_out, merged);
            out << "merged " << pools.size() << " pools: K=" << merged.class_count()
                << " O=" << complexity(merged) << "\n";
            return kOk;
        }

        if (*eval) {
            if (eval_pool.empty() == eval_head.empty())
                throw UsageError("give exactly one of --pool or --head");
            const auto layouts = parse_layouts(eval_layouts, eval_tests.size());
            std::optional<Pool> pool;
            std::optional<LinearClassifier> head;
            if (!eval_pool.empty()) pool = read_pool(eval_pool);
            else head = read_head(eval_head);
            const auto tests = concat(load_streams(eval_tests, layouts, eval_normalize).per_file);

            SimilarityKind kind = SimilarityKind::L1;
            if (!g.similarity.empty()) {
                kind = parse_similarity(g.similarity);
            } else if (pool) {
                bool mixed = false;
                for (const auto& [_, list] : pool->entries())
                    for (const auto& lv : list) mixed = mixed || lv.modality != Modality::ImageMean;
                if (mixed) kind = SimilarityKind::Cosine;
            }

            EvalReport report;
            report.stage_labels = {"final"};
            std::vector<std::optional<double>> row;
            for (const auto& t : tests) {
                report.test_labels.push_back(t.display_label());
                report.test_sizes.push_back(t.records.size());
                row.push_back(pool ? pool_accuracy(kind, *pool, t, g.threads)
                                   : head_accuracy(*head, t, g.threads));
            }
            report.accuracy.push_back(std::move(row));
            report.final_average = final_row_average(report);
            report.weighted_final_average = final_row_weighted_average(report);
            report.metadata = {{"model", pool ? eval_pool : eval_head},
                               {"similarity", pool ? to_string(kind) : "n/a"}};
            out << format_table(report);

            if (eval_probs > 0 && pool) {
                std::size_t shown = 0;
                for (const auto& t : tests)
                    for (const auto& r : t.records) {
                        if (shown == eval_probs) break;
                        ++shown;
                        const auto c = classify(kind, *pool, r.embedding, SoftmaxConfig{g.tau});
                        out << "query " << shown << ": " << c.label.to_string() << " p="
                            << std::setprecision(6) << c.probabilities.at(c.label) << " (true "
                            << r.class_id.to_string() << ")\n";
                    }
            }
            if (!eval_report.empty()) write_report(eval_report, report);
            return kOk;
        }

        if (*info) {
            const Pool pool = read_pool(info_path);
            std::map<std::size_t, std::size_t> sizes;
            for (const auto& [_, list] : pool.entries()) ++sizes[list.size()];
            out << "pool " << info_path << "\n"
                << "  dim D           " << pool.dim() << "\n"
                << "  classes K       " << format_count(pool.class_count()) << "\n"
                << "  pool sizes P    ";
            bool first = true;
            for (const auto& [p, n] : sizes) {
                out << (first ? "" : ", ") << "P=" << p << " x" << n;
                first = false;
            }
            out << "\n"
                << "  complexity O    " << format_count(complexity(pool)) << "\n"
                << "  memory floats   " << format_count(memory_floats(pool)) << "\n"
                << "  file bytes      " << format_count(fs::file_size(info_path)) << "\n"
                << "  provenance\n";
            for (const auto& line : pool.provenance()) out << "    " << line << "\n";
            return kOk;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const InvalidInput& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    }
    return kUsage;
}

}  // namespace lvp::cli
