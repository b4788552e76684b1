#pragma once

#include <cstdlib>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ragpipe/config.hpp"
#include "ragpipe/core.hpp"
#include "ragpipe/http_clients.hpp"
#include "ragpipe/pipeline.hpp"
#include "ragpipe/prompts.hpp"
#include "ragpipe/vector_store.hpp"

namespace ragpipe {

// Endpoints:
//   GET  /health          -> {"status": "ok", "dimension", "passages", "namespaces"}
//   POST /query           {"question", "id"?, "profile"?} -> AnswerTrace record
//   POST /vectors/upsert  \
//   POST /vectors/search   } same wire contract RemoteIndexClient speaks
//   GET  /vectors/stats   /
// When the configured token env var holds a value, every endpoint except
// /health requires "Authorization: Bearer <token>".
class Service {
public:
    Service(PipelineConfig config, PromptSet prompts, std::shared_ptr<LocalIndex> index,
            std::unique_ptr<Embedder> embedder, std::unique_ptr<ChatClient> chat,
            std::unique_ptr<Reranker> reranker, std::unique_ptr<Clock> clock = nullptr)
        : config_(std::move(config)),
          prompts_(std::move(prompts)),
          index_(std::move(index)),
          embedder_(std::move(embedder)),
          chat_(std::move(chat)),
          reranker_(std::move(reranker)),
          clock_(clock ? std::move(clock) : std::make_unique<SteadyClock>()) {
        if (!config_.service.token_env.empty()) {
            if (const char* v = std::getenv(config_.service.token_env.c_str())) token_ = v;
        }
        attach(server_);
    }

    /// Blocks serving the configured host and port.
    void run() {
        if (!server_.listen(config_.service.host, config_.service.port))
            throw BackendError("cannot listen on " + config_.service.host + ":" +
                               std::to_string(config_.service.port));
    }

    /// Binds an ephemeral port and returns it; serve with listen_after_bind
    /// on a caller-owned thread. Test hook.
    int bind_any_port() {
        int port = server_.bind_to_any_port(config_.service.host);
        if (port <= 0) throw BackendError("cannot bind to " + config_.service.host);
        return port;
    }

    void listen_after_bind() { server_.listen_after_bind(); }
    void stop() { server_.stop(); }

private:
    static int status_for(ErrorKind kind) {
        switch (kind) {
            case ErrorKind::config: return 400;
            case ErrorKind::data: return 422;
            case ErrorKind::backend: return 502;
        }
        return 500;
    }

    static void reply_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    bool authorized(const httplib::Request& req) const {
        if (token_.empty()) return true;
        auto it = req.headers.find("Authorization");
        return it != req.headers.end() && it->second == "Bearer " + token_;
    }

    template <typename Fn>
    void guarded(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
        if (!authorized(req)) {
            reply_json(res, 401, {{"error", "unauthorized"}});
            return;
        }
        try {
            fn();
        } catch (const nlohmann::json::exception& e) {
            reply_json(res, 400, {{"error", std::string("bad request: ") + e.what()}});
        } catch (const Error& e) {
            reply_json(res, status_for(e.kind()), {{"error", e.what()}});
        } catch (const std::exception& e) {
            reply_json(res, 500, {{"error", e.what()}});
        }
    }

    void attach(httplib::Server& server) {
        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            reply_json(res, 200,
                       {{"status", "ok"},
                        {"dimension", index_->dimension()},
                        {"passages", index_->total_count()},
                        {"namespaces", index_->namespace_counts().size()}});
        });

        server.Post("/query", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(req, res, [&] {
                auto body = nlohmann::json::parse(req.body);
                std::string question = body.at("question").get<std::string>();
                std::string id = body.value("id", "query");
                std::string profile_name = body.value("profile", "+Rewrite");
                auto profile = parse_profile(profile_name);
                if (!profile) {
                    reply_json(res, 400, {{"error", "unknown profile " + profile_name}});
                    return;
                }
                PipelineDeps deps{config_, prompts_, *index_, *embedder_, *chat_, *reranker_, *clock_};
                try {
                    AnswerTrace trace = run_query(question, id, *profile, deps);
                    reply_json(res, 200, trace.to_json());
                } catch (const RunError& e) {
                    nlohmann::ordered_json out{{"error", e.what()}};
                    out["trace"] = e.partial_trace().to_json();
                    reply_json(res, status_for(e.kind()), out);
                }
            });
        });

        server.Post("/vectors/upsert", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(req, res, [&] {
                auto body = nlohmann::json::parse(req.body);
                NamespaceLabel ns(body.at("namespace").get<std::string>());
                std::vector<std::pair<Passage, EmbeddingVector>> entries;
                for (const auto& row : body.at("entries")) {
                    Passage p;
                    p.id = row.at("id").get<std::string>();
                    p.text = row.at("text").get<std::string>();
                    p.ns = ns;
                    if (row.contains("topic")) p.topic_tag = row.at("topic").get<std::string>();
                    if (row.contains("format")) p.format_tag = row.at("format").get<std::string>();
                    EmbeddingVector v;
                    v.values = row.at("vector").get<std::vector<float>>();
                    entries.emplace_back(std::move(p), std::move(v));
                }
                std::size_t count = index_->upsert(ns, entries);
                reply_json(res, 200, {{"count", count}});
            });
        });

        server.Post("/vectors/search", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(req, res, [&] {
                auto body = nlohmann::json::parse(req.body);
                std::vector<NamespaceLabel> namespaces;
                for (const auto& name : body.at("namespaces"))
                    namespaces.emplace_back(name.get<std::string>());
                EmbeddingVector query;
                query.values = body.at("vector").get<std::vector<float>>();
                int k = body.at("k").get<int>();
                SearchResponse found = index_->search(namespaces, query, k);
                nlohmann::ordered_json hits = nlohmann::ordered_json::array();
                for (const auto& c : found.hits) {
                    nlohmann::ordered_json row{{"id", c.passage.id},
                                               {"text", c.passage.text},
                                               {"namespace", c.passage.ns.name()},
                                               {"score", c.dense_score}};
                    if (c.passage.topic_tag) row["topic"] = *c.passage.topic_tag;
                    if (c.passage.format_tag) row["format"] = *c.passage.format_tag;
                    hits.push_back(std::move(row));
                }
                reply_json(res, 200, {{"hits", std::move(hits)}, {"scanned", found.scanned}});
            });
        });

        server.Get("/vectors/stats", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(req, res, [&] {
                nlohmann::ordered_json namespaces = nlohmann::ordered_json::array();
                for (const auto& c : index_->namespace_counts())
                    namespaces.push_back({{"name", c.ns.name()}, {"count", c.count}});
                reply_json(res, 200,
                           {{"dimension", index_->dimension()},
                            {"namespaces", std::move(namespaces)}});
            });
        });
    }

    PipelineConfig config_;
    PromptSet prompts_;
    std::shared_ptr<LocalIndex> index_;
    std::unique_ptr<Embedder> embedder_;
    std::unique_ptr<ChatClient> chat_;
    std::unique_ptr<Reranker> reranker_;
    std::unique_ptr<Clock> clock_;
    std::string token_;
    httplib::Server server_;
};

}  // namespace ragpipe
