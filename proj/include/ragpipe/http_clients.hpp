#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ragpipe/clients.hpp"
#include "ragpipe/config.hpp"
#include "ragpipe/mock_clients.hpp"

namespace ragpipe {

// Remote backends speak JSON over HTTP:
//   POST {endpoint}/embed     {"texts": [s, ...]}            -> {"vectors": [[f, ...], ...]}
//   POST {endpoint}/complete  {"system_prompt", "user_content",
//                              "temperature", "max_output_tokens"} -> {"text": s}
//   POST {endpoint}/rerank    {"query", "documents", "top_n"}
//                             -> {"results": [{"index": i, "score": f}, ...]}
// Connection failures and 5xx responses are retryable; other failures are
// fatal for the call.

namespace http_detail {

class Transport {
public:
    Transport(const BackendConfig& cfg, double timeout_seconds, RetryPolicy policy)
        : endpoint_(cfg.endpoint),
          auth_header_(cfg.auth_header),
          credential_(resolve_credential(cfg)),
          timeout_seconds_(timeout_seconds),
          policy_(std::move(policy)) {}

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
        return with_retries(policy_, [&] { return round_trip(path, &body); });
    }

    nlohmann::json get(const std::string& path) const {
        return with_retries(policy_, [&] { return round_trip(path, nullptr); });
    }

private:
    nlohmann::json round_trip(const std::string& path, const nlohmann::json* body) const {
        httplib::Client client(endpoint_);
        auto secs = static_cast<time_t>(timeout_seconds_);
        auto usecs = static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        httplib::Headers headers;
        if (!credential_.empty()) headers.emplace(auth_header_, credential_);

        auto res = body ? client.Post(path, headers, body->dump(), "application/json")
                        : client.Get(path, headers);
        if (!res) throw TransportError("no response from " + endpoint_ + path);
        if (res->status >= 500)
            throw TransportError(endpoint_ + path + " returned " + std::to_string(res->status));
        if (res->status != 200)
            throw BackendError(endpoint_ + path + " returned " + std::to_string(res->status) +
                               ": " + res->body);
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("malformed response from " + endpoint_ + path + ": " + e.what());
        }
    }

    std::string endpoint_;
    std::string auth_header_;
    std::string credential_;
    double timeout_seconds_;
    RetryPolicy policy_;
};

}  // namespace http_detail

class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(const BackendConfig& cfg, double timeout_seconds = 60.0, RetryPolicy policy = {})
        : transport_(cfg, timeout_seconds, std::move(policy)), dim_(cfg.dimension) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        if (texts.empty()) throw DataError("embed: empty input list");
        for (const auto& t : texts)
            if (text::trim(t).empty()) throw DataError("embed: empty text after trim");

        auto reply = transport_.post("/embed", nlohmann::json{{"texts", texts}});
        std::vector<EmbeddingVector> out;
        try {
            for (const auto& row : reply.at("vectors")) {
                EmbeddingVector v;
                v.values = row.get<std::vector<float>>();
                out.push_back(normalize(std::move(v)));
            }
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("embed response schema: ") + e.what());
        }
        if (out.size() != texts.size())
            throw BackendError("embed returned " + std::to_string(out.size()) + " vectors for " +
                               std::to_string(texts.size()) + " texts");
        for (const auto& v : out)
            if (static_cast<int>(v.dimension()) != dim_)
                throw BackendError("embedding dimension " + std::to_string(v.dimension()) +
                                   " does not match configured " + std::to_string(dim_));
        return out;
    }

    int dimension() const override { return dim_; }

private:
    // Normalization is enforced at the client boundary regardless of what the
    // remote service returned.
    static EmbeddingVector normalize(EmbeddingVector v) {
        double n = v.norm();
        if (n == 0.0) throw BackendError("embed returned a zero vector");
        for (auto& x : v.values) x = static_cast<float>(static_cast<double>(x) / n);
        return v;
    }

    http_detail::Transport transport_;
    int dim_;
};

class HttpChat final : public ChatClient {
public:
    explicit HttpChat(const BackendConfig& cfg, double timeout_seconds = 60.0,
                      RetryPolicy policy = {})
        : transport_(cfg, timeout_seconds, std::move(policy)) {}

    std::string complete(const ChatRequest& request) override {
        auto reply = transport_.post("/complete",
                                     nlohmann::json{{"system_prompt", request.system_prompt},
                                                    {"user_content", request.user_content},
                                                    {"temperature", request.temperature},
                                                    {"max_output_tokens", request.max_output_tokens}});
        try {
            return reply.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("complete response schema: ") + e.what());
        }
    }

private:
    http_detail::Transport transport_;
};

class HttpReranker final : public Reranker {
public:
    explicit HttpReranker(const BackendConfig& cfg, double timeout_seconds = 60.0,
                          RetryPolicy policy = {})
        : transport_(cfg, timeout_seconds, std::move(policy)) {}

    std::vector<RerankHit> rerank(const RerankRequest& request) override {
        if (request.documents.empty()) throw DataError("rerank: empty document list");
        auto reply = transport_.post("/rerank", nlohmann::json{{"query", request.query},
                                                               {"documents", request.documents},
                                                               {"top_n", request.top_n}});
        std::vector<RerankHit> hits;
        try {
            for (const auto& row : reply.at("results"))
                hits.push_back({row.at("index").get<int>(), row.at("score").get<double>()});
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("rerank response schema: ") + e.what());
        }
        for (const auto& h : hits)
            if (h.index < 0 || h.index >= static_cast<int>(request.documents.size()))
                throw BackendError("rerank returned out-of-range index " + std::to_string(h.index));
        return hits;
    }

private:
    http_detail::Transport transport_;
};

inline bool is_mock_endpoint(const std::string& endpoint) {
    return text::starts_with(endpoint, "mock:");
}

inline std::unique_ptr<Embedder> make_embedder(const BackendConfig& cfg,
                                               double timeout_seconds = 60.0,
                                               RetryPolicy policy = {}) {
    if (is_mock_endpoint(cfg.endpoint)) return std::make_unique<MockEmbedder>(cfg.dimension);
    return std::make_unique<HttpEmbedder>(cfg, timeout_seconds, std::move(policy));
}

inline std::unique_ptr<ChatClient> make_chat(const BackendConfig& cfg,
                                             double timeout_seconds = 60.0,
                                             RetryPolicy policy = {}) {
    if (is_mock_endpoint(cfg.endpoint)) {
        if (!cfg.script_path.empty())
            return std::make_unique<ScriptedChat>(ScriptedChat::from_file(cfg.script_path));
        return std::make_unique<MockChat>();
    }
    return std::make_unique<HttpChat>(cfg, timeout_seconds, std::move(policy));
}

inline std::unique_ptr<ChatClient> make_judge(const BackendConfig& cfg,
                                              double timeout_seconds = 60.0,
                                              RetryPolicy policy = {}) {
    if (is_mock_endpoint(cfg.endpoint)) {
        if (!cfg.script_path.empty())
            return std::make_unique<ScriptedJudgeChat>(ScriptedJudgeChat::from_file(cfg.script_path));
        return std::make_unique<MockChat>();
    }
    return std::make_unique<HttpChat>(cfg, timeout_seconds, std::move(policy));
}

inline std::unique_ptr<Reranker> make_reranker(const BackendConfig& cfg,
                                               double timeout_seconds = 60.0,
                                               RetryPolicy policy = {}) {
    if (is_mock_endpoint(cfg.endpoint)) return std::make_unique<MockReranker>();
    return std::make_unique<HttpReranker>(cfg, timeout_seconds, std::move(policy));
}

}  // namespace ragpipe
