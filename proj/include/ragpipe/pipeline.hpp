#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ragpipe/clients.hpp"
#include "ragpipe/config.hpp"
#include "ragpipe/core.hpp"
#include "ragpipe/prompts.hpp"
#include "ragpipe/retrieval.hpp"
#include "ragpipe/routing.hpp"
#include "ragpipe/text.hpp"
#include "ragpipe/vector_store.hpp"

namespace ragpipe {

using text::count_tokens;

/// Monotonic time source in seconds. Injectable so traces can be made
/// byte-reproducible in tests and golden runs.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() = 0;
};

class SteadyClock final : public Clock {
public:
    double now() override {
        auto t = std::chrono::steady_clock::now().time_since_epoch();
        return std::chrono::duration<double>(t).count();
    }
};

/// Advances a fixed tick per reading; every stage then takes exactly one tick.
class TickClock final : public Clock {
public:
    explicit TickClock(double tick = 0.01) : tick_(tick) {}
    double now() override { return t_ += tick_; }

private:
    double t_ = 0.0;
    double tick_;
};

struct AggregatedContext {
    std::vector<std::pair<std::string, std::string>> passages;  // (id, text), rerank order
    std::size_t total_tokens = 0;
    bool truncated = false;

    std::string joined() const {
        std::string out;
        for (std::size_t i = 0; i < passages.size(); ++i) {
            if (i) out += "\n\n";
            out += passages[i].second;
        }
        return out;
    }
};

/// Concatenates passages under the token budget. When over budget, passage i
/// keeps its leading floor(t_i * budget / T) tokens, at least one per
/// non-empty passage. Floor-plus-minimum can still overshoot by a few tokens
/// when many passages hit the minimum, so a final pass trims the largest
/// allocations (ties: later passage first) until the total fits.
inline AggregatedContext aggregate_context(
    const std::vector<std::pair<std::string, std::string>>& passages, int budget) {
    if (passages.empty()) throw DataError("aggregate_context: no passages");
    if (budget < 1) throw DataError("aggregate_context: budget must be positive");

    std::vector<std::size_t> counts;
    counts.reserve(passages.size());
    std::size_t total = 0;
    for (const auto& [id, body] : passages) {
        counts.push_back(count_tokens(body));
        total += counts.back();
    }

    AggregatedContext out;
    if (total <= static_cast<std::size_t>(budget)) {
        out.passages = passages;
        out.total_tokens = total;
        return out;
    }

    if (static_cast<std::size_t>(budget) < passages.size())
        throw DataError("aggregate_context: budget " + std::to_string(budget) +
                        " cannot give each of " + std::to_string(passages.size()) +
                        " passages at least one token");

    std::vector<std::size_t> target(passages.size());
    std::size_t target_total = 0;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        std::size_t raw = static_cast<std::size_t>(
            (static_cast<unsigned long long>(counts[i]) * static_cast<unsigned long long>(budget)) /
            total);
        target[i] = std::max<std::size_t>(raw, counts[i] > 0 ? 1 : 0);
        target_total += target[i];
    }
    while (target_total > static_cast<std::size_t>(budget)) {
        std::size_t pick = 0;
        for (std::size_t i = 0; i < target.size(); ++i)
            if (target[i] >= target[pick]) pick = i;
        --target[pick];
        --target_total;
    }

    out.truncated = true;
    out.total_tokens = target_total;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        const auto& [id, body] = passages[i];
        if (target[i] >= counts[i]) {
            out.passages.emplace_back(id, body);
        } else {
            out.passages.emplace_back(id, body.substr(0, text::end_of_token(body, target[i])));
        }
    }
    return out;
}

// The ablation ladder. Each profile fixes one stage-switch combination plus
// the k overrides that keep the cascade consistent with it; Baseline retrieves
// the final passage count directly, and with rerank off the pruning stage cuts
// straight to rerank_k.
enum class AblationProfile { baseline, arctic_m, routing, pruning, rerank, rewrite };

inline const std::vector<AblationProfile>& ablation_ladder() {
    static const std::vector<AblationProfile> ladder = {
        AblationProfile::baseline, AblationProfile::arctic_m, AblationProfile::routing,
        AblationProfile::pruning,  AblationProfile::rerank,   AblationProfile::rewrite};
    return ladder;
}

inline std::string profile_name(AblationProfile p) {
    switch (p) {
        case AblationProfile::baseline: return "Baseline";
        case AblationProfile::arctic_m: return "+Arctic-M";
        case AblationProfile::routing: return "+Routing";
        case AblationProfile::pruning: return "+Pruning";
        case AblationProfile::rerank: return "+Rerank";
        case AblationProfile::rewrite: return "+Rewrite";
    }
    throw ConfigError("unhandled profile");
}

inline std::optional<AblationProfile> parse_profile(const std::string& name) {
    std::string n = text::lowercase_ascii(text::trim(name));
    for (AblationProfile p : ablation_ladder())
        if (text::lowercase_ascii(profile_name(p)) == n) return p;
    return std::nullopt;
}

inline PipelineConfig apply_profile(AblationProfile p, PipelineConfig c) {
    switch (p) {
        case AblationProfile::baseline:
        case AblationProfile::arctic_m:
            c.stages = {false, false, false, false};
            c.dense_k = c.rerank_k;
            c.prune_k = c.rerank_k;
            break;
        case AblationProfile::routing:
            c.stages = {false, true, false, false};
            c.dense_k = c.rerank_k;
            c.prune_k = c.rerank_k;
            break;
        case AblationProfile::pruning:
            c.stages = {false, true, true, false};
            c.prune_k = c.rerank_k;
            break;
        case AblationProfile::rerank:
            c.stages = {false, true, true, true};
            break;
        case AblationProfile::rewrite:
            c.stages = {true, true, true, true};
            break;
    }
    return c;
}

struct RewriteOutcome {
    std::string query;
    bool degraded = false;
};

/// Stage 1: low-temperature rewrite. Backend failure after retries passes the
/// raw query through with the degraded flag set.
inline RewriteOutcome rewrite_query(const std::string& raw, const PipelineConfig& config,
                                    ChatClient& chat, const PromptSet& prompts) {
    if (raw.empty()) throw DataError("rewrite_query: empty query");
    if (!config.stages.rewrite) return {raw, false};
    ChatRequest req;
    req.system_prompt = prompts.rewrite_system;
    req.user_content = raw;
    req.temperature = 0.0;  // "low-temp" pinned to zero
    req.max_output_tokens = config.generation_max_tokens;
    try {
        std::string out = text::trim(chat.complete(req));
        return {out.empty() ? raw : out, false};
    } catch (const BackendError&) {
        return {raw, true};
    }
}

/// Stage 5: fills the generation prompt with the aggregated context and the
/// (rewritten) query. Backend failures are fatal for the query.
inline std::string generate_answer(const AggregatedContext& context, const std::string& query,
                                   const PipelineConfig& config, ChatClient& chat,
                                   const PromptSet& prompts) {
    ChatRequest req;
    req.system_prompt = prompts::kAssistantSystem;
    req.user_content = prompts.fill_generation(context.joined(), query);
    req.temperature = config.generation_temperature;
    req.max_output_tokens = config.generation_max_tokens;
    return chat.complete(req);
}

/// Everything one query's journey produced. Serialized as one JSON object per
/// line; the evaluation tooling consumes these records.
struct AnswerTrace {
    std::string id;
    std::string question;
    std::string profile;
    std::optional<std::string> rewritten;
    std::vector<std::string> routed_namespaces;
    std::vector<std::pair<std::string, std::vector<std::string>>> stage_ids;  // execution order
    std::vector<std::pair<std::string, double>> timings;                      // execution order
    bool degraded_rewrite = false;
    bool degraded_rerank = false;
    std::optional<double> scanned_fraction;
    std::string context;
    bool truncated = false;
    std::string answer;
    std::string error;  // non-empty = partial trace

    const std::vector<std::string>* ids_for(const std::string& stage) const {
        for (const auto& [name, ids] : stage_ids)
            if (name == stage) return &ids;
        return nullptr;
    }

    /// Ids surviving the last retrieval stage that ran.
    std::vector<std::string> final_ids() const {
        for (const char* stage : {"rerank", "prune", "dense"})
            if (const auto* ids = ids_for(stage)) return *ids;
        return {};
    }

    double total_seconds() const {
        for (const auto& [name, secs] : timings)
            if (name == "total") return secs;
        return 0.0;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["id"] = id;
        j["question"] = question;
        j["profile"] = profile;
        j["rewritten"] = rewritten ? nlohmann::ordered_json(*rewritten) : nullptr;
        j["routed_namespaces"] = routed_namespaces;
        auto& stages = j["stages"] = nlohmann::ordered_json::object();
        for (const auto& [name, ids] : stage_ids) stages[name] = ids;
        auto& times = j["timings"] = nlohmann::ordered_json::object();
        for (const auto& [name, secs] : timings)
            times[name] = std::round(secs * 100.0) / 100.0;  // seconds, 2-decimal
        j["degraded"] = {{"rewrite", degraded_rewrite}, {"rerank", degraded_rerank}};
        j["scanned_fraction"] =
            scanned_fraction ? nlohmann::ordered_json(*scanned_fraction) : nullptr;
        j["context"] = context;
        j["truncated"] = truncated;
        j["answer"] = answer;
        if (!error.empty()) j["error"] = error;
        return j;
    }

    static AnswerTrace from_json(const nlohmann::json& j) {
        AnswerTrace t;
        t.id = j.at("id").get<std::string>();
        t.question = j.at("question").get<std::string>();
        t.profile = j.at("profile").get<std::string>();
        if (!j.at("rewritten").is_null()) t.rewritten = j.at("rewritten").get<std::string>();
        t.routed_namespaces = j.at("routed_namespaces").get<std::vector<std::string>>();
        for (const auto& [name, ids] : j.at("stages").items())
            t.stage_ids.emplace_back(name, ids.get<std::vector<std::string>>());
        for (const auto& [name, secs] : j.at("timings").items())
            t.timings.emplace_back(name, secs.get<double>());
        t.degraded_rewrite = j.at("degraded").at("rewrite").get<bool>();
        t.degraded_rerank = j.at("degraded").at("rerank").get<bool>();
        if (!j.at("scanned_fraction").is_null())
            t.scanned_fraction = j.at("scanned_fraction").get<double>();
        t.context = j.at("context").get<std::string>();
        t.truncated = j.at("truncated").get<bool>();
        t.answer = j.at("answer").get<std::string>();
        if (j.contains("error")) t.error = j.at("error").get<std::string>();
        return t;
    }
};

/// Fatal stage failure carrying whatever the trace held when it happened.
class RunError : public Error {
public:
    RunError(ErrorKind kind, const std::string& msg, AnswerTrace partial)
        : Error(kind, msg), partial_(std::move(partial)) {}
    const AnswerTrace& partial_trace() const { return partial_; }

private:
    AnswerTrace partial_;
};

struct PipelineDeps {
    const PipelineConfig& config;  // base config; profiles override per run
    const PromptSet& prompts;
    const VectorStore& store;
    Embedder& embedder;
    ChatClient& chat;
    Reranker& reranker;
    Clock& clock;
};

/// Runs exactly the stages the profile enables, in order
/// rewrite -> route -> dense -> prune -> rerank -> aggregate -> generate,
/// recording per-stage timings, candidate ids, and degradation flags.
inline AnswerTrace run_query(const std::string& raw, const std::string& id,
                             AblationProfile profile, PipelineDeps deps) {
    const PipelineConfig config = apply_profile(profile, deps.config);
    AnswerTrace trace;
    trace.id = id;
    trace.question = raw;
    trace.profile = profile_name(profile);

    auto ids_of = [](const std::vector<RetrievalCandidate>& cs) {
        std::vector<std::string> ids;
        ids.reserve(cs.size());
        for (const auto& c : cs) ids.push_back(c.passage.id);
        return ids;
    };

    double t_start = deps.clock.now();
    const char* stage = "setup";
    try {
        QueryRecord query;
        query.raw_query = raw;

        if (config.stages.rewrite) {
            stage = "rewrite";
            double t0 = deps.clock.now();
            RewriteOutcome rw = rewrite_query(raw, config, deps.chat, deps.prompts);
            trace.timings.emplace_back("rewrite", deps.clock.now() - t0);
            query.rewritten_query = rw.query;
            trace.rewritten = rw.query;
            trace.degraded_rewrite = rw.degraded;
        }

        std::vector<NamespaceLabel> search_scope;
        if (config.stages.routing) {
            stage = "route";
            double t0 = deps.clock.now();
            std::vector<NamespaceLabel> fallback;
            if (!config.fallback_namespaces.empty()) {
                for (const auto& name : config.fallback_namespaces)
                    fallback.push_back(config.namespaces.require(name));
            } else {
                fallback = largest_namespaces(deps.store.namespace_counts(), config.route_top_n);
            }
            search_scope = route(query.effective_query(), config, deps.chat, deps.prompts, fallback);
            trace.timings.emplace_back("route", deps.clock.now() - t0);
            query.routed_namespaces = search_scope;
            for (const auto& ns : search_scope) trace.routed_namespaces.push_back(ns.name());
        } else {
            search_scope = config.namespaces.labels();
        }

        if (deps.store.total_count() > 0)
            trace.scanned_fraction = deps.store.scanned_fraction(search_scope);

        stage = "dense";
        double t0 = deps.clock.now();
        std::vector<RetrievalCandidate> candidates =
            dense_stage(query, search_scope, config, deps.store, deps.embedder);
        trace.timings.emplace_back("dense", deps.clock.now() - t0);
        trace.stage_ids.emplace_back("dense", ids_of(candidates));

        if (config.stages.pruning) {
            stage = "prune";
            t0 = deps.clock.now();
            candidates = prune_stage(query, std::move(candidates), config);
            trace.timings.emplace_back("prune", deps.clock.now() - t0);
            trace.stage_ids.emplace_back("prune", ids_of(candidates));
        }

        if (config.stages.rerank) {
            stage = "rerank";
            t0 = deps.clock.now();
            RerankOutcome rr = rerank_stage(query, std::move(candidates), config, deps.reranker);
            trace.timings.emplace_back("rerank", deps.clock.now() - t0);
            candidates = std::move(rr.candidates);
            trace.degraded_rerank = rr.degraded;
            trace.stage_ids.emplace_back("rerank", ids_of(candidates));
        }

        stage = "aggregate";
        t0 = deps.clock.now();
        AggregatedContext context;
        if (!candidates.empty()) {
            std::vector<std::pair<std::string, std::string>> passages;
            for (const auto& c : candidates) passages.emplace_back(c.passage.id, c.passage.text);
            context = aggregate_context(passages, config.token_budget);
        }
        trace.timings.emplace_back("aggregate", deps.clock.now() - t0);
        trace.context = context.joined();
        trace.truncated = context.truncated;

        stage = "generate";
        t0 = deps.clock.now();
        trace.answer =
            generate_answer(context, query.effective_query(), config, deps.chat, deps.prompts);
        trace.timings.emplace_back("generate", deps.clock.now() - t0);
    } catch (const Error& e) {
        std::string msg = std::string(stage) + ": " + e.what();
        trace.error = msg;
        trace.timings.emplace_back("total", deps.clock.now() - t_start);
        throw RunError(e.kind(), msg, trace);
    }

    trace.timings.emplace_back("total", deps.clock.now() - t_start);
    return trace;
}

}  // namespace ragpipe
