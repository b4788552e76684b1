#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <sys/wait.h>

#include <doctest.h>
#include <json.hpp>

#include "helpers.hpp"
#include "ragpipe/cli.hpp"

using namespace ragpipe;
using doctest::Approx;
using testutil::TempDir;
using testutil::fixtures_dir;

namespace {

bool has(const std::string& haystack, std::string_view needle) {
    return haystack.find(needle) != std::string::npos;
}

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("ragpipe");
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliResult r;
    r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing file: " << path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::size_t line_count(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::vector<nlohmann::json> parse_lines(const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
    return rows;
}

/// Fixture config with the index path redirected into `dir`, plus any extra
/// patch the test needs (dead endpoints, judge scripts, ...).
std::string write_config(const TempDir& dir,
                         const std::function<void(nlohmann::json&)>& patch = {}) {
    auto cfg = nlohmann::json::parse(slurp(fixtures_dir() / "config.json"));
    cfg["index"] = {{"path", (dir.path() / "index").string()}};
    if (patch) patch(cfg);
    auto path = dir.path() / "config.json";
    io::write_file(path, cfg.dump(2) + "\n");
    return path.string();
}

void build_index(const std::string& config_path) {
    auto r = run({"--config", config_path, "index", "--corpus",
                  (fixtures_dir() / "corpus.jsonl").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
}

}  // namespace

TEST_CASE("cli rejects bad invocations before doing any work") {
    auto none = run({});
    CHECK(none.code == 1);
    CHECK_MESSAGE(has(none.err, "subcommand"), none.err);

    auto help = run({"--help"});
    CHECK(help.code == 0);
    CHECK_MESSAGE(has(help.out, "ingest"), help.out);
    CHECK_MESSAGE(has(help.out, "query"), help.out);
    CHECK_MESSAGE(has(help.out, "bench-sample"), help.out);

    auto unknown = run({"frobnicate"});
    CHECK(unknown.code == 1);
    CHECK_MESSAGE(has(unknown.err, "subcommand is required"), unknown.err);

    auto missing_arg = run({"query"});
    CHECK(missing_arg.code == 1);
    CHECK_MESSAGE(has(missing_arg.err, "question"), missing_arg.err);
}

TEST_CASE("ingest validates the corpus and writes the tagged store") {
    TempDir tmp;
    auto cfg = write_config(tmp);
    auto out_path = (tmp.path() / "normalized.jsonl").string();

    auto r = run({"--config", cfg, "ingest", "--corpus", (fixtures_dir() / "corpus.jsonl").string(),
                  "--tags", (fixtures_dir() / "tags.jsonl").string(), "--out", out_path});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK_MESSAGE(has(r.out, "ingested 240 passages into 24 namespaces (0 untagged); wrote "), r.out);
    CHECK_MESSAGE(has(r.out, "sports: 10\n"), r.out);

    auto rows = parse_lines(out_path);
    REQUIRE(rows.size() == 240);
    CHECK(rows[0].at("id") == "arts-001");
    CHECK(rows[0].at("namespace") == "arts");
    CHECK(rows[0].at("topic") == "arts");
    CHECK(rows[0].contains("format"));

    SUBCASE("needs a config file") {
        auto bare = run({"ingest", "--corpus", (fixtures_dir() / "corpus.jsonl").string()});
        CHECK(bare.code == 1);
        CHECK_MESSAGE(has(bare.err, "error: this command needs a config file"), bare.err);
    }

    SUBCASE("rejects namespaces the config does not know") {
        auto rogue = tmp.path() / "rogue.jsonl";
        io::write_file(rogue, R"({"id":"x1","text":"lost city notes","namespace":"atlantis"})"
                              "\n");
        auto bad = run({"--config", cfg, "ingest", "--corpus", rogue.string()});
        CHECK(bad.code == 2);
        CHECK_MESSAGE(has(bad.err, "corpus uses namespaces missing from the config: atlantis"), bad.err);
    }

    SUBCASE("missing corpus is a data error") {
        auto gone = run({"--config", cfg, "ingest", "--corpus",
                         (tmp.path() / "nope.jsonl").string()});
        CHECK(gone.code == 2);
        CHECK_MESSAGE(has(gone.err, "error: "), gone.err);
    }
}

TEST_CASE("index embeds the corpus into a loadable local store") {
    TempDir tmp;
    auto cfg = write_config(tmp);

    auto r = run({"--config", cfg, "index", "--corpus",
                  (fixtures_dir() / "corpus.jsonl").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK_MESSAGE(has(r.out, "indexed 240 passages into 24 namespaces; saved "), r.out);
    CHECK_MESSAGE(has(r.out, "arts: 10\n"), r.out);

    LocalIndex index = LocalIndex::load(tmp.path() / "index");
    CHECK(index.dimension() == 64);
    CHECK(index.total_count() == 240);

    SUBCASE("--out overrides the config path") {
        auto alt = (tmp.path() / "elsewhere").string();
        auto moved = run({"--config", cfg, "index", "--corpus",
                          (fixtures_dir() / "corpus.jsonl").string(), "--out", alt});
        REQUIRE(moved.code == 0);
        CHECK(LocalIndex::load(alt).total_count() == 240);
    }
}

TEST_CASE("query answers through the full pipeline and records a trace") {
    TempDir tmp;
    auto cfg = write_config(tmp);
    build_index(cfg);
    auto trace_path = tmp.path() / "trace.json";

    auto r = run({"--config", cfg, "query",
                  "What are the  steps for handling the sports playoff schedule?", "--id", "a01",
                  "--trace", trace_path.string(), "--deterministic-timing"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK_FALSE(r.out.empty());

    auto trace = nlohmann::json::parse(slurp(trace_path));
    CHECK(trace.at("id") == "a01");
    CHECK(trace.at("profile") == "+Rewrite");
    CHECK(trace.at("rewritten") ==
          "What are the steps for handling the sports playoff schedule?");
    CHECK(trace.at("timings").at("total") == Approx(0.15));
    REQUIRE(trace.at("stages").contains("rerank"));
    CHECK(trace.at("stages").at("rerank").size() == 10);
    auto routed = trace.at("routed_namespaces").get<std::vector<std::string>>();
    CHECK(routed.size() == 2);
    CHECK(std::count(routed.begin(), routed.end(), "sports") == 1);
    CHECK(trace.at("answer").get<std::string>() + "\n" == r.out);

    SUBCASE("baseline profile skips every optional stage") {
        auto base_path = tmp.path() / "base.json";
        auto base = run({"--config", cfg, "query", "Which seasoning advice appears?", "--profile",
                         "Baseline", "--trace", base_path.string(), "--deterministic-timing"});
        REQUIRE(base.code == 0);
        auto t = nlohmann::json::parse(slurp(base_path));
        CHECK(t.at("profile") == "Baseline");
        CHECK(t.at("rewritten").is_null());
        CHECK(t.at("routed_namespaces").empty());
        CHECK(t.at("timings").at("total") == Approx(0.07));
        CHECK(t.at("stages").contains("dense"));
        CHECK_FALSE(t.at("stages").contains("rerank"));
        CHECK(t.at("scanned_fraction") == Approx(1.0));
    }

    SUBCASE("unknown profile is a usage error") {
        auto bad = run({"--config", cfg, "query", "hi", "--profile", "+Everything"});
        CHECK(bad.code == 1);
        CHECK_MESSAGE(has(bad.err, "unknown profile: +Everything"), bad.err);
    }

    SUBCASE("blank question is rejected before the index opens") {
        auto blank = run({"--config", cfg, "query", "   "});
        CHECK(blank.code == 1);
        CHECK_MESSAGE(has(blank.err, "question must be non-empty"), blank.err);
    }

    SUBCASE("missing index is a data error") {
        TempDir empty;
        auto cfg2 = write_config(empty);
        auto lost = run({"--config", cfg2, "query", "hello there"});
        CHECK(lost.code == 2);
        CHECK_MESSAGE(has(lost.err, "cannot open index manifest"), lost.err);
    }
}

TEST_CASE("query surfaces backend failures with a partial trace") {
    TempDir tmp;
    auto cfg = write_config(tmp, [](nlohmann::json& c) {
        c["backends"]["chat"] = {{"endpoint", "http://127.0.0.1:9"}};
    });
    build_index(cfg);
    auto trace_path = tmp.path() / "failed.json";

    auto r = run({"--config", cfg, "query", "Which seasoning advice appears?", "--profile",
                  "Baseline", "--trace", trace_path.string()});
    CHECK(r.code == 3);
    CHECK_MESSAGE(has(r.err, "query failed at generate: "), r.err);

    auto trace = nlohmann::json::parse(slurp(trace_path));
    CHECK(trace.at("profile") == "Baseline");
    CHECK(trace.at("error").get<std::string>().find("generate") != std::string::npos);
    CHECK(trace.at("stages").contains("dense"));
}

TEST_CASE("batch output is byte-stable across reruns and concurrency") {
    TempDir tmp;
    auto cfg = write_config(tmp);
    build_index(cfg);
    auto questions = (fixtures_dir() / "ablate_questions.jsonl").string();
    auto first = tmp.path() / "t1.jsonl";
    auto second = tmp.path() / "t2.jsonl";

    auto r1 = run({"--config", cfg, "batch", "--questions", questions, "--out", first.string(),
                   "--profile", "Baseline", "--deterministic-timing"});
    REQUIRE_MESSAGE(r1.code == 0, r1.err);
    CHECK_MESSAGE(has(r1.out, "ran 5 questions under Baseline; 0 failed; wrote "), r1.out);

    auto r2 = run({"--config", cfg, "batch", "--questions", questions, "--out", second.string(),
                   "--profile", "Baseline", "--deterministic-timing", "--concurrency", "5"});
    REQUIRE(r2.code == 0);
    CHECK(slurp(first) == slurp(second));

    auto rows = parse_lines(first);
    REQUIRE(rows.size() == 5);
    const char* expected[] = {"a01", "a02", "a03", "a04", "a05"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].at("id") == expected[i]);
        CHECK(rows[i].at("timings").at("total") == Approx(0.07));
        CHECK_FALSE(rows[i].contains("error"));
    }
}

TEST_CASE("batch keeps going when the chat backend is down") {
    TempDir tmp;
    auto cfg = write_config(tmp, [](nlohmann::json& c) {
        c["backends"]["chat"] = {{"endpoint", "http://127.0.0.1:9"}};
    });
    build_index(cfg);
    auto out_path = tmp.path() / "failed.jsonl";

    auto r = run({"--config", cfg, "batch", "--questions",
                  (fixtures_dir() / "ablate_questions.jsonl").string(), "--out", out_path.string(),
                  "--profile", "Baseline", "--concurrency", "5"});
    CHECK(r.code == 0);
    CHECK_MESSAGE(has(r.out, "ran 5 questions under Baseline; 5 failed; wrote "), r.out);

    auto rows = parse_lines(out_path);
    REQUIRE(rows.size() == 5);
    for (const auto& row : rows) {
        CHECK(row.at("error").get<std::string>().find("generate") != std::string::npos);
        CHECK(row.at("answer") == "");
    }
}

TEST_CASE("ablate runs the ladder and reports judged means") {
    TempDir tmp;
    auto cfg = write_config(tmp, [](nlohmann::json& c) {
        c["backends"]["judge"] = {
            {"script_path", (fixtures_dir() / "judge_script.jsonl").string()}};
    });
    build_index(cfg);
    auto out_dir = tmp.path() / "ablation";
    auto report_path = tmp.path() / "report.txt";
    auto json_path = tmp.path() / "report.json";

    auto r = run({"--config", cfg, "ablate", "--questions",
                  (fixtures_dir() / "ablate_questions.jsonl").string(), "--profiles",
                  "Baseline,+Rewrite", "--out-dir", out_dir.string(), "--report",
                  report_path.string(), "--json", json_path.string(), "--deterministic-timing"});
    REQUIRE_MESSAGE(r.code == 0, r.err);

    CHECK_MESSAGE(has(r.out, "Baseline"), r.out);
    CHECK_MESSAGE(has(r.out, "+Rewrite"), r.out);
    CHECK_MESSAGE(has(r.out, "Corr.<=300w"), r.out);
    CHECK_MESSAGE(has(r.out, "0.700"), r.out);
    CHECK_MESSAGE(has(r.out, "0.350"), r.out);
    CHECK_MESSAGE(has(r.out, "0.07"), r.out);
    CHECK_MESSAGE(has(r.out, "0.15"), r.out);
    CHECK(r.out == slurp(report_path));

    CHECK(line_count(slurp(out_dir / "traces-baseline.jsonl")) == 5);
    CHECK(line_count(slurp(out_dir / "traces-rewrite.jsonl")) == 5);
    CHECK(line_count(slurp(out_dir / "eval.jsonl")) == 10);

    auto report = nlohmann::json::parse(slurp(json_path));
    CHECK(report.at("judge") == "judge");
    REQUIRE(report.at("profiles").size() == 2);
    const auto& base = report.at("profiles").at(0);
    CHECK(base.at("profile") == "Baseline");
    CHECK(base.at("questions") == 5);
    CHECK(base.at("correctness").at("mean") == Approx(0.7));
    CHECK(base.at("faithfulness").at("mean") == Approx(0.35));
    CHECK(base.at("sec_per_question") == Approx(0.07));
    const auto& rewrite = report.at("profiles").at(1);
    CHECK(rewrite.at("profile") == "+Rewrite");
    CHECK(rewrite.at("sec_per_question") == Approx(0.15));
    CHECK(rewrite.at("correctness").at("mean") == Approx(0.7));
}

TEST_CASE("bench-sample is deterministic and reports rejects") {
    TempDir tmp;
    auto qa = (fixtures_dir() / "qa.jsonl").string();
    auto tags = (fixtures_dir() / "tags.jsonl").string();
    auto first = tmp.path() / "s1.jsonl";
    auto second = tmp.path() / "s2.jsonl";

    auto r1 = run({"bench-sample", "--qa", qa, "--tags", tags, "--out", first.string(),
                   "--target", "24", "--seed", "7"});
    REQUIRE_MESSAGE(r1.code == 0, r1.err);
    CHECK_MESSAGE(has(r1.out, "sampled 24 of 60 candidates across "), r1.out);
    CHECK_MESSAGE(has(r1.out, "(0 rejected); wrote "), r1.out);
    CHECK(r1.err.empty());

    auto r2 = run({"bench-sample", "--qa", qa, "--tags", tags, "--out", second.string(),
                   "--target", "24", "--seed", "7"});
    REQUIRE(r2.code == 0);
    CHECK(slurp(first) == slurp(second));

    auto rows = parse_lines(first);
    REQUIRE(rows.size() == 24);
    for (const auto& row : rows) {
        CHECK_FALSE(row.at("id").get<std::string>().empty());
        CHECK(row.contains("category"));
        CHECK(row.contains("gold_ids"));
    }

    SUBCASE("an unreachable target is a data error") {
        auto over = run({"bench-sample", "--qa", qa, "--tags", tags, "--out",
                         (tmp.path() / "s3.jsonl").string(), "--target", "100"});
        CHECK(over.code == 2);
        CHECK_MESSAGE(has(over.err, "cannot fill"), over.err);
    }

    SUBCASE("bad candidates are rejected but the run continues") {
        auto custom = tmp.path() / "custom_qa.jsonl";
        io::write_file(custom,
                       R"({"id":"g1","question":"Which steps?","answer":"These.","category":"Procedural","gold_ids":["sports-003"]})"
                       "\n"
                       R"({"id":"b1","question":"And this?","answer":"No.","gold_ids":["sports-001"]})"
                       "\n");
        auto r = run({"bench-sample", "--qa", custom.string(), "--tags", tags, "--out",
                      (tmp.path() / "s4.jsonl").string(), "--target", "1"});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        CHECK_MESSAGE(has(r.err, "rejected "), r.err);
        CHECK_MESSAGE(has(r.err, "missing category"), r.err);
        CHECK_MESSAGE(has(r.out, "sampled 1 of 1 candidates across 1 strata (1 rejected); wrote "), r.out);
    }
}

TEST_CASE("evaluate grades saved traces with scripted judges") {
    TempDir tmp;
    auto cfg = write_config(tmp);
    build_index(cfg);
    auto questions = (fixtures_dir() / "ablate_questions.jsonl").string();
    auto script = (fixtures_dir() / "judge_script.jsonl").string();
    auto traces = tmp.path() / "traces.jsonl";
    REQUIRE(run({"--config", cfg, "batch", "--questions", questions, "--out", traces.string(),
                 "--profile", "Baseline", "--deterministic-timing"})
                .code == 0);

    auto eval_path = tmp.path() / "eval.jsonl";
    auto r = run({"evaluate", "--traces", traces.string(), "--qa", questions, "--out",
                  eval_path.string(), "--judge-script", script});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK_MESSAGE(has(r.out, "graded 5 answers with 1 judge(s); 0 failed trace(s) skipped; "
                            "0 without gold ids; wrote "), r.out);

    auto rows = parse_lines(eval_path);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].at("id") == "a01");
    CHECK(rows[4].at("id") == "a05");
    const auto& first = rows[0].at("judges").at("judge");
    CHECK(first.at("correctness").at("value") == Approx(2.0));
    CHECK(first.at("faithfulness").at("value") == Approx(1.0));
    CHECK(first.at("correctness_capped").at("value") == Approx(2.0));
    CHECK(rows[0].at("seconds") == Approx(0.07));

    SUBCASE("a second judge adds the agreement block") {
        auto both = run({"evaluate", "--traces", traces.string(), "--qa", questions, "--out",
                         (tmp.path() / "eval2.jsonl").string(), "--judge-script", script,
                         "--second-judge-script", script});
        REQUIRE(both.code == 0);
        CHECK_MESSAGE(has(both.out, "graded 5 answers with 2 judge(s)"), both.out);
        CHECK_MESSAGE(has(both.out, "judge agreement over shared records (judge vs second-judge):"), both.out);
        CHECK_MESSAGE(has(both.out, "0.700 vs 0.700 (n=5)"), both.out);
        CHECK_MESSAGE(has(both.out, "0.350 vs 0.350 (n=5)"), both.out);
    }

    SUBCASE("unscripted records come back with a null score") {
        auto partial = tmp.path() / "partial_script.jsonl";
        io::write_file(partial,
                       R"({"id":"a01","metric":"correctness","score":1.0})"
                       "\n");
        auto sparse = run({"evaluate", "--traces", traces.string(), "--qa", questions, "--out",
                           (tmp.path() / "eval3.jsonl").string(), "--judge-script",
                           partial.string()});
        REQUIRE(sparse.code == 0);
        auto sparse_rows = parse_lines(tmp.path() / "eval3.jsonl");
        CHECK(sparse_rows[0].at("judges").at("judge").at("correctness").at("value") == Approx(1.0));
        CHECK(sparse_rows[0].at("judges").at("judge").at("faithfulness").at("value").is_null());
        CHECK(sparse_rows[1].at("judges").at("judge").at("correctness").at("value").is_null());
    }

    SUBCASE("empty trace files are a data error") {
        auto hollow = tmp.path() / "none.jsonl";
        io::write_file(hollow, "");
        auto r2 = run({"evaluate", "--traces", hollow.string(), "--qa", questions, "--out",
                       (tmp.path() / "eval4.jsonl").string(), "--judge-script", script});
        CHECK(r2.code == 2);
        CHECK_MESSAGE(has(r2.err, "no traces in "), r2.err);
    }

    SUBCASE("traces without a matching question are a data error") {
        auto r2 = run({"evaluate", "--traces", traces.string(), "--qa",
                       (fixtures_dir() / "qa.jsonl").string(), "--out",
                       (tmp.path() / "eval5.jsonl").string(), "--judge-script", script});
        CHECK(r2.code == 2);
        CHECK_MESSAGE(has(r2.err, "a01"), r2.err);
    }
}

TEST_CASE("report renders saved evaluation records") {
    TempDir tmp;
    auto cfg = write_config(tmp);
    build_index(cfg);
    auto questions = (fixtures_dir() / "ablate_questions.jsonl").string();
    auto script = (fixtures_dir() / "judge_script.jsonl").string();
    auto traces = tmp.path() / "traces.jsonl";
    auto eval_path = tmp.path() / "eval.jsonl";
    REQUIRE(run({"--config", cfg, "batch", "--questions", questions, "--out", traces.string(),
                 "--profile", "Baseline", "--deterministic-timing"})
                .code == 0);
    REQUIRE(run({"evaluate", "--traces", traces.string(), "--qa", questions, "--out",
                 eval_path.string(), "--judge-script", script, "--second-judge-script", script})
                .code == 0);

    auto r = run({"report", "--eval", eval_path.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK_MESSAGE(has(r.out, "Baseline"), r.out);
    CHECK_MESSAGE(has(r.out, "0.700"), r.out);
    CHECK_MESSAGE(has(r.out, "0.350"), r.out);
    CHECK_MESSAGE(has(r.out, "judge: judge; scores are means over graded answers"), r.out);
    CHECK_MESSAGE(has(r.out, "judge agreement over shared records (judge vs second-judge):"), r.out);

    auto json_path = tmp.path() / "report.json";
    auto with_json = run({"report", "--eval", eval_path.string(), "--json", json_path.string()});
    REQUIRE(with_json.code == 0);
    auto report = nlohmann::json::parse(slurp(json_path));
    CHECK(report.at("profiles").at(0).at("profile") == "Baseline");
    CHECK(report.at("profiles").at(0).at("correctness").at("mean") == Approx(0.7));

    SUBCASE("asking for an absent profile is a data error") {
        auto bad = run({"report", "--eval", eval_path.string(), "--profiles", "+Rewrite"});
        CHECK(bad.code == 2);
        CHECK_MESSAGE(has(bad.err, "+Rewrite"), bad.err);
    }

    SUBCASE("asking for an absent judge is a data error") {
        auto bad = run({"report", "--eval", eval_path.string(), "--judge", "other-judge"});
        CHECK(bad.code == 2);
        CHECK_MESSAGE(has(bad.err, "other-judge"), bad.err);
    }

    SUBCASE("an empty record file is a data error") {
        auto hollow = tmp.path() / "empty.jsonl";
        io::write_file(hollow, "");
        auto bad = run({"report", "--eval", hollow.string()});
        CHECK(bad.code == 2);
        CHECK_MESSAGE(has(bad.err, "no evaluation records"), bad.err);
    }
}

TEST_CASE("the installed binary behaves like the in-process entry point") {
    TempDir tmp;
    auto out_file = tmp.path() / "help.txt";
    std::string help_cmd =
        std::string(RAGPIPE_CLI_PATH) + " --help > " + out_file.string() + " 2>&1";
    int help_status = std::system(help_cmd.c_str());
    REQUIRE(help_status != -1);
    CHECK(WEXITSTATUS(help_status) == 0);
    CHECK(has(slurp(out_file), "ingest"));

    auto cfg = write_config(tmp);
    std::string bad_cmd = std::string(RAGPIPE_CLI_PATH) + " --config " + cfg +
                          " ingest --corpus " + (tmp.path() / "absent.jsonl").string() +
                          " > /dev/null 2>&1";
    int bad_status = std::system(bad_cmd.c_str());
    REQUIRE(bad_status != -1);
    CHECK(WEXITSTATUS(bad_status) == 2);
}
