#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ragpipe/core.hpp"
#include "ragpipe/http_clients.hpp"
#include "ragpipe/vector_store.hpp"

namespace ragpipe {

// Remote index service, same contract as the local store:
//   POST {endpoint}/vectors/upsert  {"namespace", "entries": [{"id", "text",
//        "topic"?, "format"?, "vector": [f, ...]}]}          -> {"count": n}
//   POST {endpoint}/vectors/search  {"namespaces": [s, ...], "vector": [f, ...],
//        "k": n} -> {"hits": [{"id", "text", "namespace", "topic"?, "format"?,
//        "score"}, ...], "scanned": n}
//   GET  {endpoint}/vectors/stats   -> {"dimension": d,
//        "namespaces": [{"name", "count"}, ...]}
// The remote service may search approximately; oracle-exact tests run against
// the local store only.
class RemoteIndexClient final : public VectorStore {
public:
    explicit RemoteIndexClient(const BackendConfig& cfg, double timeout_seconds = 60.0,
                               RetryPolicy policy = {})
        : transport_(cfg, timeout_seconds, std::move(policy)), dim_(cfg.dimension) {}

    std::size_t upsert(const NamespaceLabel& ns,
                       const std::vector<std::pair<Passage, EmbeddingVector>>& entries) override {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& [passage, vec] : entries) {
            if (static_cast<int>(vec.dimension()) != dim_)
                throw DataError("upsert: vector dimension " + std::to_string(vec.dimension()) +
                                " does not match configured " + std::to_string(dim_));
            nlohmann::json row{{"id", passage.id}, {"text", passage.text}, {"vector", vec.values}};
            if (passage.topic_tag) row["topic"] = *passage.topic_tag;
            if (passage.format_tag) row["format"] = *passage.format_tag;
            rows.push_back(std::move(row));
        }
        auto reply = transport_.post("/vectors/upsert",
                                     nlohmann::json{{"namespace", ns.name()}, {"entries", rows}});
        try {
            return reply.at("count").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("upsert response schema: ") + e.what());
        }
    }

    SearchResponse search(const std::vector<NamespaceLabel>& namespaces,
                          const EmbeddingVector& query, int k) const override {
        if (namespaces.empty()) throw DataError("search: no namespaces given");
        if (k < 1) throw DataError("search: k must be positive");
        if (static_cast<int>(query.dimension()) != dim_)
            throw DataError("search: query dimension " + std::to_string(query.dimension()) +
                            " does not match configured " + std::to_string(dim_));
        std::vector<std::string> names;
        for (const auto& ns : namespaces) names.push_back(ns.name());
        auto reply = transport_.post(
            "/vectors/search",
            nlohmann::json{{"namespaces", names}, {"vector", query.values}, {"k", k}});
        SearchResponse out;
        try {
            out.scanned = reply.at("scanned").get<std::size_t>();
            int rank = 1;
            for (const auto& row : reply.at("hits")) {
                RetrievalCandidate c;
                c.passage.id = row.at("id").get<std::string>();
                c.passage.text = row.at("text").get<std::string>();
                c.passage.ns = NamespaceLabel(row.at("namespace").get<std::string>());
                if (row.contains("topic")) c.passage.topic_tag = row.at("topic").get<std::string>();
                if (row.contains("format"))
                    c.passage.format_tag = row.at("format").get<std::string>();
                c.dense_score = row.at("score").get<double>();
                c.rank = rank++;
                out.hits.push_back(std::move(c));
            }
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("search response schema: ") + e.what());
        }
        return out;
    }

    std::vector<NamespaceCount> namespace_counts() const override {
        auto reply = transport_.get("/vectors/stats");
        std::vector<NamespaceCount> out;
        try {
            for (const auto& row : reply.at("namespaces"))
                out.push_back({NamespaceLabel(row.at("name").get<std::string>()),
                               row.at("count").get<std::size_t>()});
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("stats response schema: ") + e.what());
        }
        return out;
    }

    int dimension() const override { return dim_; }

private:
    http_detail::Transport transport_;
    int dim_;
};

}  // namespace ragpipe
