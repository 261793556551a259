#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "lvp/pool_builder.hpp"
#include "lvp/storage.hpp"
#include "test_util.hpp"

using namespace lvp;
using lvp::test::TempDir;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result lvp_cmd(std::vector<std::string> args) {
    args.insert(args.begin(), "lvp");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

void synth_into(const TempDir& dir, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"synth", "--out", dir.path().string(), "--classes", "20", "--dim", "8",
                                  "--classes-per-task", "5", "--text-noise", "0.1"};
    args.insert(args.end(), extra.begin(), extra.end());
    const Result r = lvp_cmd(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
    CHECK(lvp_cmd({"--help"}).code == cli::kOk);
    const Result none = lvp_cmd({});
    CHECK(none.code == cli::kUsage);
    const Result info = lvp_cmd({"info"});
    CHECK(info.code == cli::kUsage);
    CHECK(info.err.find("pool") != std::string::npos);
    CHECK(lvp_cmd({"frobnicate"}).code == cli::kUsage);
    CHECK(lvp_cmd({"--similarity", "hamming", "info", "x.lvpp"}).code == cli::kUsage);
    CHECK(lvp_cmd({"--tau", "0", "info", "x.lvpp"}).code == cli::kUsage);
}

TEST_CASE("synth writes readable, reproducible files") {
    TempDir a("cli_synth_a"), b("cli_synth_b");
    synth_into(a, {"--seed", "5"});
    synth_into(b, {"--seed", "5"});
    for (const char* f : {"train.lvpe", "test.lvpe", "text.lvpp"})
        CHECK(read_file(a.path() / f) == read_file(b.path() / f));
    const auto train = read_embeddings(a.path() / "train.lvpe");
    CHECK(train.records.size() == 20 * 50);
    CHECK(train.dim == 8);
    CHECK(read_pool(a.path() / "text.lvpp").class_count() == 20);

    TempDir c("cli_synth_default");
    const Result r = lvp_cmd({"synth", "--out", c.path().string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("classes          10") != std::string::npos);
    CHECK_NOTHROW(read_embeddings(c.path() / "test.lvpe"));
}

TEST_CASE("invalid synth spec is rejected before writing") {
    TempDir dir("cli_synth_bad");
    const auto out = (dir.path() / "sub").string();
    CHECK(lvp_cmd({"synth", "--out", out, "--classes", "0"}).code == cli::kUsage);
    CHECK(lvp_cmd({"synth", "--out", out, "--std", "-1"}).code == cli::kUsage);
    CHECK_FALSE(std::filesystem::exists(out));
}

TEST_CASE("one-task build equals a direct build") {
    TempDir dir("cli_build1");
    synth_into(dir);
    CHECK(lvp_cmd({"build", "--train", dir / "train.lvpe", "--out", dir / "m"}).code == 0);
    const auto train = read_embeddings(dir.path() / "train.lvpe");
    TaskSpec t;
    t.records = train.records;
    CHECK(read_file(dir.path() / "m" / "pool.lvpp") == encode_pool(build_lvp_i(t)));
}

TEST_CASE("ten by ten layout and shard merge") {
    TempDir dir("cli_shards");
    const Result s = lvp_cmd({"synth", "--out", dir.path().string(), "--classes", "100", "--dim", "8",
                              "--train-per-class", "5", "--test-per-class", "2"});
    REQUIRE(s.code == 0);
    const std::string train = dir / "train.lvpe";
    REQUIRE(lvp_cmd({"build", "--train", train, "--tasks", "10x10", "--out", dir / "full"}).code == 0);
    REQUIRE(lvp_cmd({"build", "--train", train, "--tasks", "10x10", "--only-tasks", "1-5", "--out", dir / "a"}).code == 0);
    REQUIRE(lvp_cmd({"build", "--train", train, "--tasks", "10x10", "--only-tasks", "6-10", "--out", dir / "b"}).code == 0);
    REQUIRE(lvp_cmd({"merge", dir / "a/pool.lvpp", dir / "b/pool.lvpp", "--out", dir / "merged.lvpp"}).code == 0);
    CHECK(read_file(dir.path() / "merged.lvpp") == read_file(dir.path() / "full" / "pool.lvpp"));

    CHECK(lvp_cmd({"build", "--train", train, "--tasks", "9x10", "--out", dir / "bad"}).code == cli::kDataError);
    CHECK(lvp_cmd({"build", "--train", train, "--tasks", "tenxten", "--out", dir / "bad"}).code == cli::kUsage);
    CHECK(lvp_cmd({"merge", dir / "a/pool.lvpp", dir / "a/pool.lvpp", "--out", dir / "x.lvpp"}).code ==
          cli::kDataError);
    CHECK(lvp_cmd({"merge", dir / "a/pool.lvpp", "--policy", "average", "--out", dir / "x.lvpp"}).code ==
          cli::kUsage);
}

TEST_CASE("variant outputs") {
    TempDir dir("cli_variants");
    synth_into(dir);
    const std::string train = dir / "train.lvpe", text = dir / "text.lvpp";
    const Result missing = lvp_cmd({"build", "--train", train, "--variant", "it", "--out", dir / "it"});
    CHECK(missing.code == cli::kDataError);
    CHECK(missing.err.find("--text") != std::string::npos);

    REQUIRE(lvp_cmd({"build", "--train", train, "--tasks", "classes:5", "--variant", "it", "--text", text, "--out",
                     dir / "it"}).code == 0);
    CHECK(read_it_params(dir.path() / "it" / "it_params.lvpa").size() == 4);
    CHECK(read_pool(dir.path() / "it" / "pool_it.lvpp").class_count() == 20);

    REQUIRE(lvp_cmd({"build", "--train", train, "--tasks", "classes:5", "--variant", "c", "--out", dir / "c"}).code == 0);
    CHECK(read_head(dir.path() / "c" / "head.lvph").rows() == 20);

    const Result ev = lvp_cmd({"eval", "--head", dir / "c/head.lvph", "--test", dir / "test.lvpe", "--tasks",
                               "classes:5"});
    CHECK(ev.code == 0);
    CHECK(ev.out.find("Task 4") != std::string::npos);
    CHECK(lvp_cmd({"eval", "--pool", dir / "it/pool_it.lvpp", "--head", dir / "c/head.lvph", "--test",
                   dir / "test.lvpe"}).code == cli::kUsage);
}

TEST_CASE("noiseless training data evaluates perfectly") {
    TempDir dir("cli_eval");
    synth_into(dir, {"--std", "0"});
    REQUIRE(lvp_cmd({"build", "--train", dir / "train.lvpe", "--out", dir / "m"}).code == 0);
    const Result r = lvp_cmd({"eval", "--pool", dir / "m/pool.lvpp", "--test", dir / "train.lvpe", "--tasks",
                              "classes:5", "--report", dir / "r.json"});
    REQUIRE(r.code == 0);
    const EvalReport rep = read_report(dir.path() / "r.json");
    CHECK(rep.final_average == 1.0);
    CHECK(final_row_average(rep) == rep.final_average);
    CHECK(rep.test_labels == std::vector<std::string>{"Task 1", "Task 2", "Task 3", "Task 4"});
    CHECK(r.out.find("Task 1") != std::string::npos);
}

TEST_CASE("run is byte-identical across thread counts") {
    TempDir dir("cli_threads");
    synth_into(dir, {"--std", "0.5"});
    std::vector<std::string> base{"run", "--train", dir / "train.lvpe", "--test", dir / "test.lvpe", "--tasks",
                                  "classes:5", "--variant", "it", "--text", dir / "text.lvpp"};
    auto one = base, four = base;
    one.insert(one.end(), {"--report", dir / "one.json"});
    four.insert(four.end(), {"--report", dir / "four.json", "--threads", "4"});
    const Result r1 = lvp_cmd(one), r4 = lvp_cmd(four);
    REQUIRE(r1.code == 0);
    REQUIRE(r4.code == 0);
    CHECK(r1.out == r4.out);
    CHECK(read_file(dir.path() / "one.json") == read_file(dir.path() / "four.json"));
    const Result again = lvp_cmd(one);
    CHECK(again.out == r1.out);
}

TEST_CASE("info reports accounting") {
    TempDir dir("cli_info");
    const Result s = lvp_cmd({"synth", "--out", dir.path().string(), "--classes", "100", "--dim", "768",
                              "--train-per-class", "2", "--test-per-class", "1"});
    REQUIRE(s.code == 0);
    REQUIRE(lvp_cmd({"build", "--train", dir / "train.lvpe", "--out", dir / "m"}).code == 0);
    const Result r = lvp_cmd({"info", dir / "m/pool.lvpp"});
    CHECK(r.code == 0);
    CHECK(r.out.find("complexity O    100\n") != std::string::npos);
    CHECK(r.out.find("memory floats   76,800\n") != std::string::npos);
    CHECK(r.out.find("P=1 x100") != std::string::npos);
}

TEST_CASE("data and numeric failures map to exit codes") {
    TempDir dir("cli_codes");
    synth_into(dir);
    write_file_atomic(dir.path() / "junk.lvpp", "not a pool");
    const Result bad = lvp_cmd({"info", dir / "junk.lvpp"});
    CHECK(bad.code == cli::kDataError);
    CHECK(bad.err.find("magic") != std::string::npos);
    CHECK(lvp_cmd({"info", dir / "absent.lvpp"}).code == cli::kDataError);
    CHECK(lvp_cmd({"build", "--train", dir / "train.lvpe", "--variant", "c", "--head-lr", "1e308", "--out",
                   dir / "c"}).code == cli::kNumericError);
    CHECK(lvp_cmd({"build", "--train", dir / "train.lvpe", "--it-lr", "-1", "--out", dir / "x"}).code ==
          cli::kUsage);
}

}  // TEST_SUITE
