#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "ragpipe/core.hpp"

namespace ragpipe {

/// An L2-normalized embedding. Dot product equals cosine similarity.
struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dimension() const { return values.size(); }

    double dot(const EmbeddingVector& other) const {
        double s = 0.0;
        std::size_t n = values.size();
        for (std::size_t i = 0; i < n; ++i)
            s += static_cast<double>(values[i]) * static_cast<double>(other.values[i]);
        return s;
    }

    double norm() const {
        double s = 0.0;
        for (float v : values) s += static_cast<double>(v) * static_cast<double>(v);
        return std::sqrt(s);
    }
};

struct ChatRequest {
    std::string system_prompt;
    std::string user_content;
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

struct RerankRequest {
    std::string query;
    std::vector<std::string> documents;
    int top_n = 0;
};

struct RerankHit {
    int index = 0;  // position in the request's document list
    double score = 0.0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// One vector per input, order-preserving, all L2-normalized.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
    virtual int dimension() const = 0;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

class Reranker {
public:
    virtual ~Reranker() = default;
    /// top_n hits, descending score, ties broken by lower document index.
    virtual std::vector<RerankHit> rerank(const RerankRequest& request) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    // Injectable so tests run without wall-clock sleeps.
    std::function<void(std::chrono::milliseconds)> sleep =
        [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
};

/// Runs `fn`, retrying TransportError with exponential backoff. Non-transport
/// errors propagate immediately.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    std::chrono::milliseconds backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const TransportError&) {
            if (attempt >= policy.max_attempts) throw;
            policy.sleep(backoff);
            backoff *= 2;
        }
    }
}

}  // namespace ragpipe
