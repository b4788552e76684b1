#pragma once

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragpipe/core.hpp"

namespace ragpipe {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct BackendConfig {
    std::string endpoint;                       // "mock:..." or http(s) URL
    std::string auth_header = "Authorization";
    std::string credential_env;                 // env var holding the credential
    std::string script_path;                    // scripted mock fixture, if any
    int dimension = 64;                         // embedder only
};

struct PromptPaths {
    std::string rewrite;
    std::string routing;
    std::string generation;
    std::string judge_correctness;
    std::string judge_faithfulness;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string token_env;  // when set, /query requires this bearer token
};

struct PipelineConfig {
    // retrieval.*
    int dense_k = 100;
    int prune_k = 20;
    int rerank_k = 10;
    Bm25Params bm25;

    // routing.*
    int vote_count = 4;
    int route_top_n = 2;
    double vote_temperature = 0.7;
    double route_timeout_seconds = 20.0;
    bool parallel_votes = true;
    std::vector<std::string> fallback_namespaces;

    // context.* / generation.*
    int token_budget = 8192;
    double generation_temperature = 0.0;
    int generation_max_tokens = 1024;

    NamespaceSet namespaces;
    StageSwitches stages;

    BackendConfig embedder{.endpoint = "mock:embedder"};
    BackendConfig chat{.endpoint = "mock:chat"};
    BackendConfig reranker{.endpoint = "mock:rerank"};
    BackendConfig judge{.endpoint = "mock:judge"};
    BackendConfig second_judge{.endpoint = ""};  // empty endpoint = single-judge runs

    std::string index_path = "index";
    std::string index_remote_endpoint;  // non-empty selects the remote store

    PromptPaths prompts;
    ServiceConfig service;

    int batch_concurrency = 4;
    int cap_words = 300;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const {
        std::ostringstream os;
        for (const auto& v : violations) os << v << '\n';
        return os.str();
    }
};

/// Checks every declared constraint and reports all violations, not just the
/// first; the caller decides whether they are fatal.
inline ValidationReport validate_config(const PipelineConfig& c) {
    ValidationReport r;
    auto fail = [&](const std::string& msg) { r.violations.push_back(msg); };

    if (c.dense_k < 1) fail("retrieval.dense_k must be positive");
    if (c.prune_k < 1) fail("retrieval.prune_k must be positive");
    if (c.rerank_k < 1) fail("retrieval.rerank_k must be positive");
    if (c.prune_k > c.dense_k) fail("prune_k > dense_k");
    if (c.rerank_k > c.prune_k) fail("rerank_k > prune_k");
    if (c.bm25.k1 <= 0.0) fail("retrieval.bm25.k1 must be positive");
    if (c.bm25.b < 0.0 || c.bm25.b > 1.0) fail("retrieval.bm25.b must be in [0, 1]");

    if (c.vote_count < 1) fail("routing.vote_count must be positive");
    if (c.route_top_n < 1) fail("routing.route_top_n must be positive");
    if (c.namespaces.empty()) fail("namespaces must be non-empty");
    if (c.route_top_n > static_cast<int>(c.namespaces.size()))
        fail("route_top_n > |namespace_set|");
    if (c.vote_temperature < 0.0) fail("routing.vote_temperature must be >= 0");
    if (c.route_timeout_seconds <= 0.0) fail("routing.timeout_seconds must be positive");
    for (const auto& f : c.fallback_namespaces)
        if (!c.namespaces.contains(f)) fail("routing.fallback namespace not configured: " + f);

    if (c.token_budget < 1) fail("context.token_budget must be positive");
    if (c.generation_temperature < 0.0) fail("generation.temperature must be >= 0");
    if (c.generation_max_tokens < 1) fail("generation.max_output_tokens must be positive");
    if (c.embedder.dimension < 1) fail("backends.embedder.dimension must be positive");
    if (c.batch_concurrency < 1) fail("batch.concurrency must be positive");
    if (c.cap_words < 1) fail("evaluation.cap_words must be positive");
    if (c.service.port < 1 || c.service.port > 65535) fail("service.port out of range");

    return r;
}

namespace config_detail {

inline nlohmann::json defaults_json() {
    return nlohmann::json{
        {"namespaces", nlohmann::json::array()},
        {"retrieval",
         {{"dense_k", 100},
          {"prune_k", 20},
          {"rerank_k", 10},
          {"bm25", {{"k1", 1.2}, {"b", 0.75}}}}},
        {"routing",
         {{"vote_count", 4},
          {"route_top_n", 2},
          {"vote_temperature", 0.7},
          {"timeout_seconds", 20.0},
          {"parallel_votes", true},
          {"fallback_namespaces", nlohmann::json::array()}}},
        {"context", {{"token_budget", 8192}}},
        {"generation", {{"temperature", 0.0}, {"max_output_tokens", 1024}}},
        {"stages",
         {{"rewrite", true}, {"routing", true}, {"pruning", true}, {"rerank", true}}},
        {"index", {{"path", "index"}, {"remote_endpoint", ""}}},
        {"backends",
         {{"embedder",
           {{"endpoint", "mock:embedder"},
            {"dimension", 64},
            {"auth_header", "Authorization"},
            {"credential_env", ""},
            {"script_path", ""}}},
          {"chat",
           {{"endpoint", "mock:chat"},
            {"auth_header", "Authorization"},
            {"credential_env", ""},
            {"script_path", ""}}},
          {"reranker",
           {{"endpoint", "mock:rerank"},
            {"auth_header", "Authorization"},
            {"credential_env", ""},
            {"script_path", ""}}},
          {"judge",
           {{"endpoint", "mock:judge"},
            {"auth_header", "Authorization"},
            {"credential_env", ""},
            {"script_path", ""}}},
          {"second_judge",
           {{"endpoint", ""},
            {"auth_header", "Authorization"},
            {"credential_env", ""},
            {"script_path", ""}}}}},
        {"prompts",
         {{"rewrite_path", ""},
          {"routing_path", ""},
          {"generation_path", ""},
          {"judge_correctness_path", ""},
          {"judge_faithfulness_path", ""}}},
        {"service", {{"host", "127.0.0.1"}, {"port", 8080}, {"token_env", ""}}},
        {"batch", {{"concurrency", 4}}},
        {"evaluation", {{"cap_words", 300}}},
    };
}

// Reports keys that exist in `doc` but not in the defaults tree, so config
// typos surface instead of being silently ignored.
inline void collect_unknown_keys(const nlohmann::json& doc, const nlohmann::json& known,
                                 const std::string& prefix, std::vector<std::string>& out) {
    if (!doc.is_object() || !known.is_object()) return;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!known.contains(it.key())) {
            out.push_back("unknown config key: " + path);
        } else {
            collect_unknown_keys(it.value(), known.at(it.key()), path, out);
        }
    }
}

inline BackendConfig backend_from(const nlohmann::json& j) {
    BackendConfig b;
    b.endpoint = j.at("endpoint").get<std::string>();
    b.auth_header = j.at("auth_header").get<std::string>();
    b.credential_env = j.at("credential_env").get<std::string>();
    b.script_path = j.at("script_path").get<std::string>();
    if (j.contains("dimension")) b.dimension = j.at("dimension").get<int>();
    return b;
}

}  // namespace config_detail

/// Dotted-path lookup, e.g. get_path(doc, "retrieval.dense_k").
inline std::optional<nlohmann::json> get_path(const nlohmann::json& doc, std::string_view path) {
    const nlohmann::json* cur = &doc;
    std::size_t start = 0;
    while (start <= path.size()) {
        std::size_t dot = path.find('.', start);
        std::string_view key =
            path.substr(start, dot == std::string_view::npos ? path.size() - start : dot - start);
        if (!cur->is_object() || !cur->contains(std::string(key))) return std::nullopt;
        cur = &cur->at(std::string(key));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return *cur;
}

/// Builds a typed config from a JSON document layered over the defaults.
/// Unknown keys and constraint violations throw ConfigError with every
/// problem listed.
inline PipelineConfig config_from_json(const nlohmann::json& user) {
    std::vector<std::string> problems;
    config_detail::collect_unknown_keys(user, config_detail::defaults_json(), "", problems);

    nlohmann::json doc = config_detail::defaults_json();
    doc.merge_patch(user);

    PipelineConfig c;
    try {
        c.dense_k = doc.at("retrieval").at("dense_k").get<int>();
        c.prune_k = doc.at("retrieval").at("prune_k").get<int>();
        c.rerank_k = doc.at("retrieval").at("rerank_k").get<int>();
        c.bm25.k1 = doc.at("retrieval").at("bm25").at("k1").get<double>();
        c.bm25.b = doc.at("retrieval").at("bm25").at("b").get<double>();

        c.vote_count = doc.at("routing").at("vote_count").get<int>();
        c.route_top_n = doc.at("routing").at("route_top_n").get<int>();
        c.vote_temperature = doc.at("routing").at("vote_temperature").get<double>();
        c.route_timeout_seconds = doc.at("routing").at("timeout_seconds").get<double>();
        c.parallel_votes = doc.at("routing").at("parallel_votes").get<bool>();
        c.fallback_namespaces =
            doc.at("routing").at("fallback_namespaces").get<std::vector<std::string>>();

        c.token_budget = doc.at("context").at("token_budget").get<int>();
        c.generation_temperature = doc.at("generation").at("temperature").get<double>();
        c.generation_max_tokens = doc.at("generation").at("max_output_tokens").get<int>();

        c.namespaces = NamespaceSet(doc.at("namespaces").get<std::vector<std::string>>());

        c.stages.rewrite = doc.at("stages").at("rewrite").get<bool>();
        c.stages.routing = doc.at("stages").at("routing").get<bool>();
        c.stages.pruning = doc.at("stages").at("pruning").get<bool>();
        c.stages.rerank = doc.at("stages").at("rerank").get<bool>();

        c.embedder = config_detail::backend_from(doc.at("backends").at("embedder"));
        c.chat = config_detail::backend_from(doc.at("backends").at("chat"));
        c.reranker = config_detail::backend_from(doc.at("backends").at("reranker"));
        c.judge = config_detail::backend_from(doc.at("backends").at("judge"));
        c.second_judge = config_detail::backend_from(doc.at("backends").at("second_judge"));

        c.index_path = doc.at("index").at("path").get<std::string>();
        c.index_remote_endpoint = doc.at("index").at("remote_endpoint").get<std::string>();

        c.prompts.rewrite = doc.at("prompts").at("rewrite_path").get<std::string>();
        c.prompts.routing = doc.at("prompts").at("routing_path").get<std::string>();
        c.prompts.generation = doc.at("prompts").at("generation_path").get<std::string>();
        c.prompts.judge_correctness =
            doc.at("prompts").at("judge_correctness_path").get<std::string>();
        c.prompts.judge_faithfulness =
            doc.at("prompts").at("judge_faithfulness_path").get<std::string>();

        c.service.host = doc.at("service").at("host").get<std::string>();
        c.service.port = doc.at("service").at("port").get<int>();
        c.service.token_env = doc.at("service").at("token_env").get<std::string>();

        c.batch_concurrency = doc.at("batch").at("concurrency").get<int>();
        c.cap_words = doc.at("evaluation").at("cap_words").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }

    ValidationReport report = validate_config(c);
    problems.insert(problems.end(), report.violations.begin(), report.violations.end());
    if (!problems.empty()) {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
    return c;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(doc);
}

/// Credential values come from the environment, never the config file; the
/// config names the variable.
inline std::string resolve_credential(const BackendConfig& b) {
    if (b.credential_env.empty()) return {};
    const char* v = std::getenv(b.credential_env.c_str());
    return v ? std::string(v) : std::string();
}

}  // namespace ragpipe
