#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ragpipe/benchgen.hpp"
#include "ragpipe/config.hpp"
#include "ragpipe/core.hpp"
#include "ragpipe/evaluation.hpp"
#include "ragpipe/http_clients.hpp"
#include "ragpipe/io.hpp"
#include "ragpipe/pipeline.hpp"
#include "ragpipe/prompts.hpp"
#include "ragpipe/remote_index.hpp"
#include "ragpipe/service.hpp"
#include "ragpipe/vector_store.hpp"

namespace ragpipe::cli {

// Exit codes: 0 success, 1 usage or config, 2 data, 3 backend.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return 1;
        case ErrorKind::data: return 2;
        case ErrorKind::backend: return 3;
    }
    return 1;
}

inline PipelineConfig require_config(const std::string& path) {
    if (path.empty()) throw ConfigError("this command needs a config file (--config PATH)");
    return load_config(path);
}

struct Backends {
    std::unique_ptr<Embedder> embedder;
    std::unique_ptr<ChatClient> chat;
    std::unique_ptr<Reranker> reranker;
};

inline Backends make_backends(const PipelineConfig& config) {
    Backends b;
    b.embedder = make_embedder(config.embedder);
    b.chat = make_chat(config.chat);
    b.reranker = make_reranker(config.reranker);
    return b;
}

struct StoreHandle {
    std::shared_ptr<VectorStore> store;
    std::shared_ptr<LocalIndex> local;  // null when the store is remote
};

inline StoreHandle open_store(const PipelineConfig& config) {
    StoreHandle h;
    if (!config.index_remote_endpoint.empty()) {
        BackendConfig remote;
        remote.endpoint = config.index_remote_endpoint;
        remote.dimension = config.embedder.dimension;
        h.store = std::make_shared<RemoteIndexClient>(remote);
    } else {
        h.local = std::make_shared<LocalIndex>(LocalIndex::load(config.index_path));
        h.store = h.local;
    }
    return h;
}

inline std::string profile_slug(const std::string& name) {
    std::string s;
    for (unsigned char c : name) {
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            s.push_back(static_cast<char>(c));
        } else if (c >= 'A' && c <= 'Z') {
            s.push_back(text::fold(c));
        } else if (!s.empty() && s.back() != '-') {
            s.push_back('-');
        }
    }
    while (!s.empty() && s.back() == '-') s.pop_back();
    return s;
}

inline AblationProfile require_profile(const std::string& name) {
    auto p = parse_profile(name);
    if (!p) throw ConfigError("unknown profile: " + name);
    return *p;
}

inline std::vector<AblationProfile> parse_profiles_csv(const std::string& csv) {
    std::vector<AblationProfile> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        std::string piece =
            text::trim(csv.substr(start, comma == std::string::npos ? csv.size() - start : comma - start));
        if (!piece.empty()) out.push_back(require_profile(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("no profiles requested");
    return out;
}

struct BatchOutcome {
    std::vector<AnswerTrace> traces;  // input order
    std::size_t failures = 0;
};

/// Runs every question under one profile, up to `concurrency` in flight.
/// Failed queries become partial traces with the error field set; the run
/// continues. Output order is input order so re-runs are byte-stable.
inline BatchOutcome run_batch(const std::vector<io::QaRecord>& questions, AblationProfile profile,
                              const PipelineConfig& config, const PromptSet& prompts,
                              const VectorStore& store, Backends& backends, int concurrency,
                              bool deterministic_timing) {
    if (concurrency < 1) throw ConfigError("concurrency must be positive");
    BatchOutcome outcome;
    outcome.traces.resize(questions.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failures{0};
    SteadyClock shared_clock;

    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= questions.size()) return;
            TickClock tick;
            Clock& clock = deterministic_timing ? static_cast<Clock&>(tick) : shared_clock;
            PipelineDeps deps{config,          prompts,        store, *backends.embedder,
                              *backends.chat,  *backends.reranker, clock};
            try {
                outcome.traces[i] = run_query(questions[i].question, questions[i].id, profile, deps);
            } catch (const RunError& e) {
                outcome.traces[i] = e.partial_trace();
                failures.fetch_add(1);
            } catch (const Error& e) {
                AnswerTrace t;
                t.id = questions[i].id;
                t.question = questions[i].question;
                t.profile = profile_name(profile);
                t.error = e.what();
                outcome.traces[i] = std::move(t);
                failures.fetch_add(1);
            }
        }
    };

    std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(concurrency), questions.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    outcome.failures = failures.load();
    return outcome;
}

inline void write_traces(const std::filesystem::path& path, const std::vector<AnswerTrace>& traces) {
    std::vector<nlohmann::ordered_json> rows;
    rows.reserve(traces.size());
    for (const auto& t : traces) rows.push_back(t.to_json());
    io::write_jsonl(path, rows);
}

inline int cmd_ingest(const std::string& config_path, const std::string& corpus_path,
                      const std::string& tags_path, const std::string& out_path,
                      std::ostream& out) {
    PipelineConfig config = require_config(config_path);
    std::vector<Passage> corpus = io::load_corpus(corpus_path);
    if (corpus.empty()) throw DataError("empty corpus: " + corpus_path);

    std::set<std::string> unknown;
    for (const auto& p : corpus)
        if (!config.namespaces.contains(p.ns.name())) unknown.insert(p.ns.name());
    if (!unknown.empty()) {
        std::string msg = "corpus uses namespaces missing from the config:";
        for (const auto& ns : unknown) msg += " " + ns;
        throw DataError(msg);
    }

    std::size_t untagged = 0;
    if (!tags_path.empty()) {
        auto tags = bench::load_tags(tags_path);
        for (auto& p : corpus) {
            auto it = tags.find(p.id);
            if (it == tags.end()) {
                ++untagged;
                continue;
            }
            p.topic_tag = it->second.topic;
            p.format_tag = it->second.format;
        }
    }

    std::vector<nlohmann::ordered_json> rows;
    std::map<std::string, std::size_t> counts;
    for (const auto& p : corpus) {
        rows.push_back(io::passage_to_json(p));
        ++counts[config.namespaces.require(p.ns.name()).name()];
    }
    io::write_jsonl(out_path, rows);

    for (const auto& [name, count] : counts) out << name << ": " << count << "\n";
    out << "ingested " << corpus.size() << " passages into " << counts.size() << " namespaces";
    if (!tags_path.empty()) out << " (" << untagged << " untagged)";
    out << "; wrote " << out_path << "\n";
    return 0;
}

inline int cmd_index(const std::string& config_path, const std::string& corpus_path,
                     const std::string& out_dir, std::ostream& out) {
    PipelineConfig config = require_config(config_path);
    std::vector<Passage> corpus = io::load_corpus(corpus_path);
    if (corpus.empty()) throw DataError("empty corpus: " + corpus_path);

    auto embedder = make_embedder(config.embedder);
    std::shared_ptr<LocalIndex> local;
    std::shared_ptr<VectorStore> store;
    if (!config.index_remote_endpoint.empty()) {
        BackendConfig remote;
        remote.endpoint = config.index_remote_endpoint;
        remote.dimension = embedder->dimension();
        store = std::make_shared<RemoteIndexClient>(remote);
    } else {
        local = std::make_shared<LocalIndex>(embedder->dimension(), config.namespaces);
        store = local;
    }

    std::map<std::string, std::vector<const Passage*>> grouped;
    for (const auto& p : corpus)
        grouped[config.namespaces.require(p.ns.name()).name()].push_back(&p);

    constexpr std::size_t kChunk = 64;
    std::size_t total = 0;
    for (const auto& [name, passages] : grouped) {
        NamespaceLabel label = config.namespaces.require(name);
        std::vector<std::pair<Passage, EmbeddingVector>> entries;
        entries.reserve(passages.size());
        for (std::size_t start = 0; start < passages.size(); start += kChunk) {
            std::size_t end = std::min(start + kChunk, passages.size());
            std::vector<std::string> texts;
            for (std::size_t i = start; i < end; ++i) texts.push_back(passages[i]->text);
            std::vector<EmbeddingVector> vectors = embedder->embed(texts);
            for (std::size_t i = start; i < end; ++i)
                entries.emplace_back(*passages[i], std::move(vectors[i - start]));
        }
        total += store->upsert(label, entries);
        out << name << ": " << passages.size() << "\n";
    }

    if (local) {
        std::string dir = out_dir.empty() ? config.index_path : out_dir;
        local->save(dir);
        out << "indexed " << total << " passages into " << grouped.size()
            << " namespaces; saved " << dir << "\n";
    } else {
        out << "indexed " << total << " passages into " << grouped.size()
            << " namespaces at " << config.index_remote_endpoint << "\n";
    }
    return 0;
}

inline int cmd_query(const std::string& config_path, const std::string& question,
                     const std::string& id, const std::string& profile_name_arg,
                     const std::string& trace_path, bool deterministic_timing, std::ostream& out,
                     std::ostream& err) {
    PipelineConfig config = require_config(config_path);
    AblationProfile profile = require_profile(profile_name_arg);
    if (text::trim(question).empty()) throw ConfigError("question must be non-empty");

    StoreHandle store = open_store(config);
    Backends backends = make_backends(config);
    PromptSet prompts = PromptSet::from_config(config.prompts);
    TickClock tick;
    SteadyClock steady;
    Clock& clock = deterministic_timing ? static_cast<Clock&>(tick) : steady;
    PipelineDeps deps{config,         prompts,           *store.store, *backends.embedder,
                      *backends.chat, *backends.reranker, clock};

    try {
        AnswerTrace trace = run_query(question, id, profile, deps);
        if (!trace_path.empty()) io::write_file(trace_path, trace.to_json().dump() + "\n");
        out << trace.answer << "\n";
        return 0;
    } catch (const RunError& e) {
        if (!trace_path.empty())
            io::write_file(trace_path, e.partial_trace().to_json().dump() + "\n");
        err << "query failed at " << e.what() << "\n";
        return exit_code(e.kind());
    }
}

inline int cmd_batch(const std::string& config_path, const std::string& questions_path,
                     const std::string& out_path, const std::string& profile_name_arg,
                     int concurrency, bool deterministic_timing, std::ostream& out) {
    PipelineConfig config = require_config(config_path);
    AblationProfile profile = require_profile(profile_name_arg);
    std::vector<io::QaRecord> questions = io::load_qa(questions_path);
    if (questions.empty()) throw DataError("no questions in " + questions_path);
    if (concurrency < 0) concurrency = config.batch_concurrency;

    StoreHandle store = open_store(config);
    Backends backends = make_backends(config);
    PromptSet prompts = PromptSet::from_config(config.prompts);
    BatchOutcome outcome = run_batch(questions, profile, config, prompts, *store.store, backends,
                                     concurrency, deterministic_timing);
    write_traces(out_path, outcome.traces);
    out << "ran " << questions.size() << " questions under " << profile_name(profile) << "; "
        << outcome.failures << " failed; wrote " << out_path << "\n";
    return 0;
}

inline std::string render_agreement(const std::vector<eval::AgreementRow>& rows,
                                    const std::string& judge_a, const std::string& judge_b) {
    std::string out = "judge agreement over shared records (" + judge_a + " vs " + judge_b + "):\n";
    for (const auto& r : rows) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "  %-20s %.3f vs %.3f (n=%zu)\n", r.cell.c_str(), r.mean_a,
                      r.mean_b, r.shared);
        out += buf;
    }
    return out;
}

inline int cmd_ablate(const std::string& config_path, const std::string& questions_path,
                      const std::string& profiles_csv, const std::string& out_dir,
                      const std::string& report_path, const std::string& json_path,
                      int concurrency, int cap_words, bool deterministic_timing,
                      std::ostream& out) {
    PipelineConfig config = require_config(config_path);
    std::vector<AblationProfile> profiles = parse_profiles_csv(profiles_csv);
    std::vector<io::QaRecord> questions = io::load_qa(questions_path);
    if (questions.empty()) throw DataError("no questions in " + questions_path);
    if (concurrency < 0) concurrency = config.batch_concurrency;
    if (cap_words < 0) cap_words = config.cap_words;

    StoreHandle store = open_store(config);
    Backends backends = make_backends(config);
    PromptSet prompts = PromptSet::from_config(config.prompts);
    auto judge = make_judge(config.judge);
    std::unique_ptr<ChatClient> second;
    std::vector<eval::NamedJudge> judges{{"judge", judge.get()}};
    if (!config.second_judge.endpoint.empty()) {
        second = make_judge(config.second_judge);
        judges.push_back({"second-judge", second.get()});
    }

    std::filesystem::create_directories(out_dir);
    std::vector<eval::EvalRecord> records;
    std::vector<std::string> profile_names;
    std::size_t failures = 0;
    for (AblationProfile profile : profiles) {
        BatchOutcome outcome = run_batch(questions, profile, config, prompts, *store.store,
                                         backends, concurrency, deterministic_timing);
        failures += outcome.failures;
        std::string slug = profile_slug(profile_name(profile));
        write_traces(std::filesystem::path(out_dir) / ("traces-" + slug + ".jsonl"),
                     outcome.traces);
        eval::EvalRunSummary summary = eval::evaluate_traces(outcome.traces, questions, judges,
                                                             prompts, cap_words, 10, concurrency);
        records.insert(records.end(), summary.records.begin(), summary.records.end());
        profile_names.push_back(profile_name(profile));
    }

    std::vector<nlohmann::ordered_json> rows;
    for (const auto& r : records) rows.push_back(r.to_json());
    io::write_jsonl(std::filesystem::path(out_dir) / "eval.jsonl", rows);

    eval::AblationReport report =
        eval::ablation_report(records, profile_names, "judge", cap_words, 10);
    std::string table = report.render_table();
    if (failures > 0) table += std::to_string(failures) + " query failure(s) excluded\n";
    if (judges.size() > 1)
        table += render_agreement(eval::judge_agreement(records, "judge", "second-judge"), "judge",
                                  "second-judge");
    out << table;
    if (!report_path.empty()) io::write_file(report_path, table);
    if (!json_path.empty()) io::write_file(json_path, report.to_json().dump(2) + "\n");
    return 0;
}

inline int cmd_bench_sample(const std::string& qa_path, const std::string& tags_path,
                            const std::string& out_path, std::size_t target, std::uint64_t seed,
                            std::ostream& out, std::ostream& err) {
    bench::IngestResult joined = bench::ingest_tagged(qa_path, tags_path);
    for (const auto& reject : joined.rejects) err << "rejected " << reject << "\n";
    if (joined.candidates.empty()) throw DataError("no usable candidates in " + qa_path);

    auto counts = bench::count_strata(joined.candidates);
    auto allocation = bench::allocate(counts, target);
    std::vector<io::QaRecord> sampled = bench::sample(joined.candidates, allocation, seed);

    std::vector<nlohmann::ordered_json> rows;
    for (const auto& r : sampled) rows.push_back(r.to_json());
    io::write_jsonl(out_path, rows);
    out << "sampled " << sampled.size() << " of " << joined.candidates.size()
        << " candidates across " << counts.size() << " strata (" << joined.rejects.size()
        << " rejected); wrote " << out_path << "\n";
    return 0;
}

inline int cmd_evaluate(const std::string& config_path, const std::string& traces_path,
                        const std::string& qa_path, const std::string& out_path, int cap_words,
                        int recall_k, int concurrency, const std::string& judge_script,
                        const std::string& second_judge_script, std::ostream& out) {
    std::optional<PipelineConfig> config;
    if (!config_path.empty()) config = load_config(config_path);

    BackendConfig judge_cfg = config ? config->judge : BackendConfig{.endpoint = "mock:judge"};
    if (!judge_script.empty()) {
        judge_cfg.endpoint = "mock:judge";
        judge_cfg.script_path = judge_script;
    }
    BackendConfig second_cfg = config ? config->second_judge : BackendConfig{.endpoint = ""};
    if (!second_judge_script.empty()) {
        second_cfg.endpoint = "mock:judge";
        second_cfg.script_path = second_judge_script;
    }
    if (cap_words < 0) cap_words = config ? config->cap_words : 300;
    if (concurrency < 0) concurrency = config ? config->batch_concurrency : 4;

    PromptSet prompts =
        config ? PromptSet::from_config(config->prompts) : PromptSet{};
    auto judge = make_judge(judge_cfg);
    std::unique_ptr<ChatClient> second;
    std::vector<eval::NamedJudge> judges{{"judge", judge.get()}};
    if (!second_cfg.endpoint.empty()) {
        second = make_judge(second_cfg);
        judges.push_back({"second-judge", second.get()});
    }

    std::vector<AnswerTrace> traces = io::load_traces(traces_path);
    if (traces.empty()) throw DataError("no traces in " + traces_path);
    std::vector<io::QaRecord> qa = io::load_qa(qa_path);

    eval::EvalRunSummary summary =
        eval::evaluate_traces(traces, qa, judges, prompts, cap_words, recall_k, concurrency);
    std::vector<nlohmann::ordered_json> rows;
    for (const auto& r : summary.records) rows.push_back(r.to_json());
    io::write_jsonl(out_path, rows);

    out << "graded " << summary.records.size() << " answers with " << judges.size()
        << " judge(s); " << summary.failed_traces << " failed trace(s) skipped; "
        << summary.no_gold_ids << " without gold ids; wrote " << out_path << "\n";
    if (judges.size() > 1)
        out << render_agreement(eval::judge_agreement(summary.records, "judge", "second-judge"),
                                "judge", "second-judge");
    return 0;
}

inline int cmd_report(const std::string& eval_path, const std::string& profiles_csv,
                      const std::string& judge_name, const std::string& json_path, int cap_words,
                      int recall_k, std::ostream& out) {
    std::vector<eval::EvalRecord> records;
    for (const auto& j : io::read_jsonl(eval_path)) {
        try {
            records.push_back(eval::EvalRecord::from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(eval_path + ": " + e.what());
        }
    }
    if (records.empty()) throw DataError("no evaluation records in " + eval_path);

    std::vector<std::string> order;
    if (!profiles_csv.empty()) {
        for (AblationProfile p : parse_profiles_csv(profiles_csv)) order.push_back(profile_name(p));
    } else {
        std::set<std::string> present;
        for (const auto& r : records) present.insert(r.profile);
        for (AblationProfile p : ablation_ladder())
            if (present.erase(profile_name(p))) order.push_back(profile_name(p));
        for (const auto& r : records)
            if (present.erase(r.profile)) order.push_back(r.profile);
    }

    eval::AblationReport report =
        eval::ablation_report(records, order, judge_name, cap_words, recall_k);
    std::string table = report.render_table();

    std::set<std::string> judge_names;
    for (const auto& r : records)
        for (const auto& [name, scores] : r.judges) judge_names.insert(name);
    if (judge_names.size() >= 2) {
        auto it = judge_names.begin();
        std::string a = *it++;
        std::string b = *it;
        table += render_agreement(eval::judge_agreement(records, a, b), a, b);
    }

    out << table;
    if (!json_path.empty()) io::write_file(json_path, report.to_json().dump(2) + "\n");
    return 0;
}

inline int cmd_serve(const std::string& config_path, const std::string& host_override,
                     int port_override, std::ostream& out) {
    PipelineConfig config = require_config(config_path);
    if (!config.index_remote_endpoint.empty())
        throw ConfigError("serve needs a local index; index.remote_endpoint is set");
    if (!host_override.empty()) config.service.host = host_override;
    if (port_override > 0) config.service.port = port_override;

    auto local = std::make_shared<LocalIndex>(LocalIndex::load(config.index_path));
    PromptSet prompts = PromptSet::from_config(config.prompts);
    Service service(config, prompts, local, make_embedder(config.embedder),
                    make_chat(config.chat), make_reranker(config.reranker));
    out << "listening on " << config.service.host << ":" << config.service.port << "\n"
        << std::flush;
    service.run();
    return 0;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"namespace-routed retrieval pipeline"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file");

    int result = 0;

    auto* ingest = app.add_subcommand("ingest", "validate a corpus file and build the passage store");
    std::string ingest_corpus, ingest_tags, ingest_out = "data/corpus.jsonl";
    ingest->add_option("--corpus", ingest_corpus, "corpus JSONL file")->required();
    ingest->add_option("--tags", ingest_tags, "document tag JSONL file");
    ingest->add_option("--out", ingest_out, "normalized corpus output path");
    ingest->callback(
        [&] { result = cmd_ingest(config_path, ingest_corpus, ingest_tags, ingest_out, out); });

    auto* index = app.add_subcommand("index", "embed a corpus and build the vector index");
    std::string index_corpus, index_out;
    index->add_option("--corpus", index_corpus, "corpus JSONL file")->required();
    index->add_option("--out", index_out, "index directory (default: config index.path)");
    index->callback([&] { result = cmd_index(config_path, index_corpus, index_out, out); });

    auto* query = app.add_subcommand("query", "answer one question");
    std::string query_question, query_id = "query", query_profile = "+Rewrite", query_trace;
    bool query_tick = false;
    query->add_option("question", query_question, "the question")->required();
    query->add_option("--id", query_id, "question id recorded in the trace");
    query->add_option("--profile", query_profile, "pipeline profile");
    query->add_option("--trace", query_trace, "write the answer trace here");
    query->add_flag("--deterministic-timing", query_tick,
                    "fixed-tick stage timings for regression fixtures");
    query->callback([&] {
        result = cmd_query(config_path, query_question, query_id, query_profile, query_trace,
                           query_tick, out, err);
    });

    auto* batch = app.add_subcommand("batch", "answer a question file");
    std::string batch_questions, batch_out, batch_profile = "+Rewrite";
    int batch_concurrency = -1;
    bool batch_tick = false;
    batch->add_option("--questions", batch_questions, "question JSONL file")->required();
    batch->add_option("--out", batch_out, "trace output path")->required();
    batch->add_option("--profile", batch_profile, "pipeline profile");
    batch->add_option("--concurrency", batch_concurrency, "max in-flight queries");
    batch->add_flag("--deterministic-timing", batch_tick,
                    "fixed-tick stage timings for regression fixtures");
    batch->callback([&] {
        result = cmd_batch(config_path, batch_questions, batch_out, batch_profile,
                           batch_concurrency, batch_tick, out);
    });

    auto* ablate = app.add_subcommand("ablate", "run the profile ladder and report judged means");
    std::string ablate_questions, ablate_out_dir = "ablation", ablate_report, ablate_json;
    std::string ablate_profiles = "Baseline,+Arctic-M,+Routing,+Pruning,+Rerank,+Rewrite";
    int ablate_concurrency = -1, ablate_cap = -1;
    bool ablate_tick = false;
    ablate->add_option("--questions", ablate_questions, "question JSONL file")->required();
    ablate->add_option("--profiles", ablate_profiles, "comma-separated profile names");
    ablate->add_option("--out-dir", ablate_out_dir, "directory for traces and eval records");
    ablate->add_option("--report", ablate_report, "write the text table here");
    ablate->add_option("--json", ablate_json, "write the structured report here");
    ablate->add_option("--concurrency", ablate_concurrency, "max in-flight queries");
    ablate->add_option("--cap-words", ablate_cap, "word cap for the capped judge columns");
    ablate->add_flag("--deterministic-timing", ablate_tick,
                     "fixed-tick stage timings for regression fixtures");
    ablate->callback([&] {
        result = cmd_ablate(config_path, ablate_questions, ablate_profiles, ablate_out_dir,
                            ablate_report, ablate_json, ablate_concurrency, ablate_cap,
                            ablate_tick, out);
    });

    auto* bench_cmd = app.add_subcommand("bench-sample", "stratified benchmark sample");
    std::string bench_qa, bench_tags, bench_out;
    std::size_t bench_target = 500;
    std::uint64_t bench_seed = 42;
    bench_cmd->add_option("--qa", bench_qa, "candidate Q&A JSONL file")->required();
    bench_cmd->add_option("--tags", bench_tags, "document tag JSONL file")->required();
    bench_cmd->add_option("--out", bench_out, "benchmark output path")->required();
    bench_cmd->add_option("--target", bench_target, "benchmark size");
    bench_cmd->add_option("--seed", bench_seed, "sampling seed");
    bench_cmd->callback([&] {
        result = cmd_bench_sample(bench_qa, bench_tags, bench_out, bench_target, bench_seed, out,
                                  err);
    });

    auto* evaluate = app.add_subcommand("evaluate", "grade answer traces with the judges");
    std::string eval_traces, eval_qa, eval_out, eval_judge_script, eval_second_script;
    int eval_cap = -1, eval_recall_k = 10, eval_concurrency = -1;
    evaluate->add_option("--traces", eval_traces, "trace JSONL file")->required();
    evaluate->add_option("--qa", eval_qa, "Q&A JSONL file with gold answers")->required();
    evaluate->add_option("--out", eval_out, "evaluation record output path")->required();
    evaluate->add_option("--cap-words", eval_cap, "word cap for the capped columns (default 300)");
    evaluate->add_option("--recall-k", eval_recall_k, "k for recall");
    evaluate->add_option("--concurrency", eval_concurrency, "concurrent judge calls");
    evaluate->add_option("--judge-script", eval_judge_script, "scripted judge verdict file");
    evaluate->add_option("--second-judge-script", eval_second_script,
                         "scripted second judge verdict file");
    evaluate->callback([&] {
        result = cmd_evaluate(config_path, eval_traces, eval_qa, eval_out, eval_cap, eval_recall_k,
                              eval_concurrency, eval_judge_script, eval_second_script, out);
    });

    auto* report = app.add_subcommand("report", "render an ablation table from eval records");
    std::string report_eval, report_profiles, report_judge = "judge", report_json;
    int report_cap = 300, report_recall_k = 10;
    report->add_option("--eval", report_eval, "evaluation record JSONL file")->required();
    report->add_option("--profiles", report_profiles, "comma-separated profile order");
    report->add_option("--judge", report_judge, "judge name for the table means");
    report->add_option("--json", report_json, "write the structured report here");
    report->add_option("--cap-words", report_cap, "cap shown in the column headers");
    report->add_option("--recall-k", report_recall_k, "k shown in the recall header");
    report->callback([&] {
        result = cmd_report(report_eval, report_profiles, report_judge, report_json, report_cap,
                            report_recall_k, out);
    });

    auto* serve = app.add_subcommand("serve", "serve the pipeline and the index over HTTP");
    std::string serve_host;
    int serve_port = 0;
    serve->add_option("--host", serve_host, "bind host (default: config service.host)");
    serve->add_option("--port", serve_port, "bind port (default: config service.port)");
    serve->callback([&] { result = cmd_serve(config_path, serve_host, serve_port, out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::stringstream capture_out, capture_err;
        int code = app.exit(e, capture_out, capture_err);
        out << capture_out.str();
        err << capture_err.str();
        return code == 0 ? 0 : 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return result;
}

}  // namespace ragpipe::cli
