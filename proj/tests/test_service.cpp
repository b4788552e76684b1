#include <doctest.h>

#include <httplib.h>

#include <cstdlib>
#include <memory>
#include <thread>

#include "helpers.hpp"
#include "ragpipe/remote_index.hpp"
#include "ragpipe/service.hpp"

using namespace ragpipe;

namespace {

class RefusingChat final : public ChatClient {
public:
    std::string complete(const ChatRequest&) override { throw BackendError("chat down"); }
};

/// Service over the fixture corpus with mock backends, bound to an ephemeral
/// port and served on its own thread.
class ServiceHarness {
public:
    explicit ServiceHarness(std::unique_ptr<ChatClient> chat = nullptr,
                            const std::string& token_env = "") {
        PipelineConfig config = testutil::fixture_config();
        config.service.token_env = token_env;
        auto index = std::make_shared<LocalIndex>(testutil::fixture_index(config));
        service_ = std::make_unique<Service>(
            config, PromptSet{}, index, std::make_unique<MockEmbedder>(config.embedder.dimension),
            chat ? std::move(chat) : std::make_unique<MockChat>(), std::make_unique<MockReranker>(),
            std::make_unique<TickClock>());
        port_ = service_->bind_any_port();
        thread_ = std::thread([this] { service_->listen_after_bind(); });
        wait_ready();
    }

    ~ServiceHarness() {
        service_->stop();
        thread_.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(10, 0);
        return c;
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    void wait_ready() const {
        auto c = client();
        for (int i = 0; i < 200; ++i) {
            if (auto res = c.Get("/health"); res && res->status == 200) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        throw std::runtime_error("service did not come up");
    }

    std::unique_ptr<Service> service_;
    std::thread thread_;
    int port_ = 0;
};

nlohmann::json body_of(const httplib::Result& res) {
    REQUIRE(res);
    return nlohmann::json::parse(res->body);
}

}  // namespace

TEST_CASE("health reports index shape") {
    ServiceHarness harness;
    auto res = harness.client().Get("/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto j = body_of(res);
    CHECK(j.at("status") == "ok");
    CHECK(j.at("dimension").get<int>() == 64);
    CHECK(j.at("passages").get<int>() == 240);
    CHECK(j.at("namespaces").get<int>() == 24);
}

TEST_CASE("query answers with a full trace") {
    ServiceHarness harness;
    nlohmann::json req{{"question", "What are the steps for the sports playoff schedule?"},
                       {"id", "s01"},
                       {"profile", "+Rewrite"}};
    auto res = harness.client().Post("/query", req.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto j = body_of(res);
    CHECK(j.at("id") == "s01");
    CHECK(j.at("profile") == "+Rewrite");
    CHECK(!j.at("answer").get<std::string>().empty());
    CHECK(j.at("timings").at("total").get<double>() == 0.15);
    CHECK(j.at("stages").contains("rerank"));
    auto routed = j.at("routed_namespaces").get<std::vector<std::string>>();
    CHECK(std::count(routed.begin(), routed.end(), "sports") == 1);

    // profile and id fall back to defaults when omitted
    auto bare = harness.client().Post(
        "/query", nlohmann::json{{"question", "a cooking recipe question"}}.dump(),
        "application/json");
    auto bj = body_of(bare);
    CHECK(bare->status == 200);
    CHECK(bj.at("id") == "query");
    CHECK(bj.at("profile") == "+Rewrite");
}

TEST_CASE("query maps failures onto status codes") {
    ServiceHarness harness;
    auto client = harness.client();

    auto res = client.Post("/query",
                           nlohmann::json{{"question", "x"}, {"profile", "+Nope"}}.dump(),
                           "application/json");
    CHECK(res->status == 400);
    CHECK(body_of(res).at("error").get<std::string>().find("unknown profile") != std::string::npos);

    res = client.Post("/query", nlohmann::json{{"id", "oops"}}.dump(), "application/json");
    CHECK(res->status == 400);
    CHECK(body_of(res).at("error").get<std::string>().find("bad request") != std::string::npos);

    res = client.Post("/query", "{not json", "application/json");
    CHECK(res->status == 400);

    // a blank question survives the rewrite untouched and dies as bad data
    // when the dense stage tries to embed it
    res = client.Post("/query", nlohmann::json{{"question", "   "}}.dump(), "application/json");
    CHECK(res->status == 422);
    auto j = body_of(res);
    CHECK(j.at("error").get<std::string>().find("dense:") != std::string::npos);
    CHECK(j.contains("trace"));
}

TEST_CASE("a dead chat backend surfaces as 502 with the partial trace") {
    ServiceHarness harness(std::make_unique<RefusingChat>());
    auto res = harness.client().Post(
        "/query", nlohmann::json{{"question", "a sports question"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 502);
    auto j = body_of(res);
    CHECK(j.at("error").get<std::string>().find("generate: chat down") != std::string::npos);
    REQUIRE(j.contains("trace"));
    CHECK(j.at("trace").at("degraded").at("rewrite").get<bool>());
    CHECK(j.at("trace").at("stages").contains("rerank"));
    CHECK(j.at("trace").at("error").get<std::string>().find("generate") != std::string::npos);
}

TEST_CASE("bearer token guards every endpoint except health") {
    setenv("RAGPIPE_TEST_SERVICE_TOKEN", "secret-token", 1);
    ServiceHarness harness(nullptr, "RAGPIPE_TEST_SERVICE_TOKEN");
    unsetenv("RAGPIPE_TEST_SERVICE_TOKEN");
    auto client = harness.client();

    CHECK(client.Get("/health")->status == 200);

    nlohmann::json req{{"question", "a sports question"}};
    CHECK(client.Post("/query", req.dump(), "application/json")->status == 401);
    CHECK(client.Get("/vectors/stats")->status == 401);

    httplib::Headers wrong{{"Authorization", "Bearer nope"}};
    CHECK(client.Post("/query", wrong, req.dump(), "application/json")->status == 401);

    httplib::Headers good{{"Authorization", "Bearer secret-token"}};
    CHECK(client.Post("/query", good, req.dump(), "application/json")->status == 200);
    CHECK(client.Get("/vectors/stats", good)->status == 200);
}

TEST_CASE("vector endpoints speak the remote index wire format") {
    ServiceHarness harness;
    auto client = harness.client();

    std::vector<float> unit(64, 0.0f);
    unit[0] = 1.0f;
    nlohmann::json upsert{{"namespace", "sports"},
                          {"entries",
                           {{{"id", "x1"},
                             {"text", "hand-planted entry"},
                             {"topic", "sports"},
                             {"format", "faq"},
                             {"vector", unit}}}}};
    auto res = client.Post("/vectors/upsert", upsert.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(body_of(res).at("count").get<int>() == 1);

    auto stats = body_of(client.Get("/vectors/stats"));
    CHECK(stats.at("dimension").get<int>() == 64);
    bool found = false;
    for (const auto& row : stats.at("namespaces"))
        if (row.at("name") == "sports") {
            CHECK(row.at("count").get<int>() == 11);
            found = true;
        }
    CHECK(found);

    nlohmann::json search{{"namespaces", {"sports"}}, {"vector", unit}, {"k", 1}};
    auto sres = body_of(client.Post("/vectors/search", search.dump(), "application/json"));
    REQUIRE(sres.at("hits").size() == 1);
    const auto& hit = sres.at("hits").at(0);
    CHECK(hit.at("id") == "x1");
    CHECK(hit.at("text") == "hand-planted entry");
    CHECK(hit.at("namespace") == "sports");
    CHECK(hit.at("topic") == "sports");
    CHECK(hit.at("format") == "faq");
    CHECK(hit.at("score").get<double>() == doctest::Approx(1.0));
    CHECK(sres.at("scanned").get<int>() == 11);

    // data violations map to 422
    nlohmann::json bad_dim = upsert;
    bad_dim["entries"][0]["vector"] = std::vector<float>{1.0f, 0.0f};
    CHECK(client.Post("/vectors/upsert", bad_dim.dump(), "application/json")->status == 422);
    nlohmann::json bad_ns = upsert;
    bad_ns["namespace"] = "atlantis";
    CHECK(client.Post("/vectors/upsert", bad_ns.dump(), "application/json")->status == 422);
    nlohmann::json bad_k{{"namespaces", {"sports"}}, {"vector", unit}, {"k", 0}};
    CHECK(client.Post("/vectors/search", bad_k.dump(), "application/json")->status == 422);
    CHECK(client.Post("/vectors/search", "{}", "application/json")->status == 400);
}

TEST_CASE("RemoteIndexClient round-trips against the service") {
    ServiceHarness harness;
    BackendConfig cfg;
    cfg.endpoint = harness.endpoint();
    cfg.dimension = 64;
    RemoteIndexClient remote(cfg);

    CHECK(remote.dimension() == 64);
    auto counts = remote.namespace_counts();
    CHECK(counts.size() == 24);
    std::size_t total = 0;
    for (const auto& c : counts) total += c.count;
    CHECK(total == 240);
    CHECK(remote.total_count() == 240);

    Passage p;
    p.id = "r1";
    p.text = "remote upsert probe";
    p.ns = NamespaceLabel("music");
    p.topic_tag = "music";
    p.format_tag = "guide";
    EmbeddingVector v;
    v.values.assign(64, 0.0f);
    v.values[1] = 1.0f;
    CHECK(remote.upsert(NamespaceLabel("music"), {{p, v}}) == 1);

    auto found = remote.search({NamespaceLabel("music")}, v, 3);
    REQUIRE(found.hits.size() == 3);
    CHECK(found.hits[0].passage.id == "r1");
    CHECK(found.hits[0].passage.ns.name() == "music");
    CHECK(found.hits[0].passage.topic_tag == "music");
    CHECK(found.hits[0].passage.format_tag == "guide");
    CHECK(found.hits[0].dense_score == doctest::Approx(1.0));
    CHECK(found.hits[0].rank == 1);
    CHECK(found.hits[1].rank == 2);
    CHECK(found.hits[2].rank == 3);
    CHECK(found.scanned == 11);

    EmbeddingVector wrong;
    wrong.values.assign(8, 1.0f);
    CHECK_THROWS_AS(remote.upsert(NamespaceLabel("music"), {{p, wrong}}), DataError);
    CHECK_THROWS_AS(remote.search({NamespaceLabel("music")}, wrong, 3), DataError);
    CHECK_THROWS_AS(remote.search({}, v, 3), DataError);
    CHECK_THROWS_AS(remote.search({NamespaceLabel("music")}, v, 0), DataError);

    // server-side data errors come back as backend failures for the client
    CHECK_THROWS_AS(remote.search({NamespaceLabel("atlantis")}, v, 3), BackendError);
}

TEST_CASE("RemoteIndexClient authenticates with the configured header") {
    setenv("RAGPIPE_TEST_SERVICE_TOKEN", "secret-token", 1);
    ServiceHarness harness(nullptr, "RAGPIPE_TEST_SERVICE_TOKEN");
    unsetenv("RAGPIPE_TEST_SERVICE_TOKEN");

    BackendConfig anon;
    anon.endpoint = harness.endpoint();
    anon.dimension = 64;
    RemoteIndexClient unauthorized(anon);
    CHECK_THROWS_WITH_AS(unauthorized.namespace_counts(), doctest::Contains("401"), BackendError);

    setenv("RAGPIPE_TEST_INDEX_CRED", "Bearer secret-token", 1);
    BackendConfig authed = anon;
    authed.credential_env = "RAGPIPE_TEST_INDEX_CRED";
    RemoteIndexClient ok(authed);
    CHECK(ok.namespace_counts().size() == 24);
    unsetenv("RAGPIPE_TEST_INDEX_CRED");
}

namespace {

/// Minimal stand-in returning whatever JSON it was told to.
class CannedServer {
public:
    explicit CannedServer(std::string body) {
        server_.Post("/vectors/search", [body](const httplib::Request&, httplib::Response& res) {
            res.set_content(body, "application/json");
        });
        server_.Get("/vectors/stats", [body](const httplib::Request&, httplib::Response& res) {
            res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~CannedServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST_CASE("RemoteIndexClient rejects replies that break the schema") {
    CannedServer canned(R"({"hits": 5})");
    BackendConfig cfg;
    cfg.endpoint = canned.endpoint();
    cfg.dimension = 4;
    RemoteIndexClient remote(cfg);
    EmbeddingVector v;
    v.values.assign(4, 0.5f);
    CHECK_THROWS_WITH_AS(remote.search({NamespaceLabel("a")}, v, 1),
                         doctest::Contains("search response schema"), BackendError);
    CHECK_THROWS_WITH_AS(remote.namespace_counts(), doctest::Contains("stats response schema"),
                         BackendError);
}
