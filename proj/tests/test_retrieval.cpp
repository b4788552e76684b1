#include <doctest.h>

#include "helpers.hpp"
#include "ragpipe/retrieval.hpp"

using namespace ragpipe;

namespace {

RetrievalCandidate candidate(const std::string& id, const std::string& body, double dense) {
    RetrievalCandidate c;
    c.passage.id = id;
    c.passage.text = body;
    c.passage.ns = NamespaceLabel("n");
    c.dense_score = dense;
    return c;
}

}  // namespace

TEST_CASE("bm25 matches hand-computed scores") {
    std::vector<TokenizedDoc> docs = {
        tokenize_doc("apple banana apple"),
        tokenize_doc("banana cherry"),
        tokenize_doc("cherry date fig"),
        tokenize_doc("apple"),
    };
    Bm25Params params;  // k1 = 1.2, b = 0.75
    auto scores = bm25_scores({"apple", "cherry"}, docs, params);
    REQUIRE(scores.size() == 4);
    CHECK(scores[0] == doctest::Approx(0.8713850269896455).epsilon(1e-12));
    CHECK(scores[1] == doctest::Approx(0.7261541891580381).epsilon(1e-12));
    CHECK(scores[2] == doctest::Approx(0.6099695188927519).epsilon(1e-12));
    CHECK(scores[3] == doctest::Approx(0.8970139983716940).epsilon(1e-12));
}

TEST_CASE("bm25 single-document term hit scores exactly ln(4/3)") {
    // one doc, tf = 1, dl = avg_len: the length norm and (k1+1)/(tf+k1)
    // cancel, leaving pure idf = ln((0.5 / 1.5) + 1)
    auto scores = bm25_scores({"term"}, {tokenize_doc("term")}, Bm25Params{});
    REQUIRE(scores.size() == 1);
    CHECK(scores[0] == doctest::Approx(0.28768207245178085).epsilon(1e-13));
}

TEST_CASE("bm25 counts repeated query tokens once per occurrence") {
    auto once = bm25_scores({"apple"}, {tokenize_doc("apple"), tokenize_doc("pear")}, Bm25Params{});
    auto twice = bm25_scores({"apple", "apple"}, {tokenize_doc("apple"), tokenize_doc("pear")},
                             Bm25Params{});
    CHECK(twice[0] == doctest::Approx(2.0 * once[0]));
    CHECK(twice[1] == 0.0);
}

TEST_CASE("bm25 edge cases") {
    CHECK_THROWS_AS(bm25_scores({"x"}, {}, Bm25Params{}), DataError);
    auto empty_docs = bm25_scores({"x"}, {tokenize_doc(""), tokenize_doc("...")}, Bm25Params{});
    CHECK(empty_docs == std::vector<double>{0.0, 0.0});
    auto no_query = bm25_scores({}, {tokenize_doc("a b")}, Bm25Params{});
    CHECK(no_query == std::vector<double>{0.0});
    // idf stays positive even when a term is in every document
    auto common = bm25_scores({"the"}, {tokenize_doc("the cat"), tokenize_doc("the dog")},
                              Bm25Params{});
    CHECK(common[0] > 0.0);
}

TEST_CASE("prune_stage keeps the lexical top prune_k with dense tie-breaks") {
    PipelineConfig config = config_from_json(
        nlohmann::json{{"namespaces", {"n"}}, {"routing", {{"route_top_n", 1}}}});
    config.prune_k = 3;
    QueryRecord query;
    query.raw_query = "blue whale";

    std::vector<RetrievalCandidate> in = {
        candidate("d1", "red fish", 0.9),
        candidate("d2", "blue whale blue whale", 0.1),
        candidate("d3", "the blue whale", 0.5),
        candidate("d4", "whale", 0.8),
        candidate("d5", "green tree", 0.95),
    };
    auto out = prune_stage(query, in, config);
    REQUIRE(out.size() == 3);
    CHECK(out[0].passage.id == "d2");
    CHECK(out[1].passage.id == "d3");
    CHECK(out[2].passage.id == "d4");
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].rank == static_cast<int>(i) + 1);
        REQUIRE(out[i].lexical_score.has_value());
    }
    CHECK(*out[0].lexical_score > *out[1].lexical_score);

    // zero lexical overlap everywhere: dense order, then id
    QueryRecord blank;
    blank.raw_query = "zzz";
    auto tied = prune_stage(blank, in, config);
    CHECK(tied[0].passage.id == "d5");
    CHECK(tied[1].passage.id == "d1");
    CHECK(tied[2].passage.id == "d4");

    CHECK(prune_stage(query, {}, config).empty());

    // fewer candidates than prune_k: all survive, re-ranked
    config.prune_k = 50;
    CHECK(prune_stage(query, in, config).size() == 5);
}

TEST_CASE("prune_stage uses the rewritten query when present") {
    PipelineConfig config = config_from_json(
        nlohmann::json{{"namespaces", {"n"}}, {"routing", {{"route_top_n", 1}}}});
    config.prune_k = 1;
    QueryRecord query;
    query.raw_query = "completely unrelated";
    query.rewritten_query = "blue whale";
    std::vector<RetrievalCandidate> in = {
        candidate("d1", "blue whale", 0.0),
        candidate("d2", "unrelated words completely", 0.0),
    };
    auto out = prune_stage(query, in, config);
    REQUIRE(out.size() == 1);
    CHECK(out[0].passage.id == "d1");
}

TEST_CASE("rerank_stage orders by reranker score and trims to rerank_k") {
    PipelineConfig config = config_from_json(
        nlohmann::json{{"namespaces", {"n"}}, {"routing", {{"route_top_n", 1}}}});
    config.rerank_k = 2;
    QueryRecord query;
    query.raw_query = "blue whale";
    std::vector<RetrievalCandidate> in = {
        candidate("d1", "red fish swims", 0.9),
        candidate("d2", "blue whale sings", 0.1),
        candidate("d3", "whale", 0.5),
    };
    MockReranker reranker;
    auto out = rerank_stage(query, in, config, reranker);
    CHECK(!out.degraded);
    REQUIRE(out.candidates.size() == 2);
    CHECK(out.candidates[0].passage.id == "d2");
    CHECK(out.candidates[1].passage.id == "d3");
    REQUIRE(out.candidates[0].rerank_score.has_value());
    CHECK(*out.candidates[0].rerank_score == doctest::Approx(2.0 / 3.0));
    CHECK(*out.candidates[1].rerank_score == doctest::Approx(0.5));
    CHECK(out.candidates[0].rank == 1);
    CHECK(out.candidates[1].rank == 2);

    CHECK(rerank_stage(query, {}, config, reranker).candidates.empty());
}

namespace {

class DownReranker final : public Reranker {
public:
    std::vector<RerankHit> rerank(const RerankRequest&) override {
        throw TransportError("reranker unreachable");
    }
};

class BrokenReranker final : public Reranker {
public:
    std::vector<RerankHit> rerank(const RerankRequest&) override {
        throw BackendError("reranker rejected the request");
    }
};

}  // namespace

TEST_CASE("rerank_stage degrades to lexical order when transport fails") {
    PipelineConfig config = config_from_json(
        nlohmann::json{{"namespaces", {"n"}}, {"routing", {{"route_top_n", 1}}}});
    config.rerank_k = 2;
    QueryRecord query;
    query.raw_query = "q";
    std::vector<RetrievalCandidate> in = {
        candidate("d1", "a", 0.9),
        candidate("d2", "b", 0.8),
        candidate("d3", "c", 0.7),
    };
    DownReranker down;
    auto out = rerank_stage(query, in, config, down);
    CHECK(out.degraded);
    REQUIRE(out.candidates.size() == 2);
    CHECK(out.candidates[0].passage.id == "d1");
    CHECK(out.candidates[1].passage.id == "d2");
    CHECK(!out.candidates[0].rerank_score.has_value());

    // non-transport backend errors are not masked
    BrokenReranker broken;
    CHECK_THROWS_AS(rerank_stage(query, in, config, broken), BackendError);
}

TEST_CASE("dense_stage embeds the effective query and caps at dense_k") {
    PipelineConfig config = config_from_json(
        nlohmann::json{{"namespaces", {"n"}}, {"routing", {{"route_top_n", 1}}}});
    config.dense_k = 2;
    NamespaceSet set({"n"});
    LocalIndex index(8, set);
    MockEmbedder embedder(8);
    std::vector<std::pair<Passage, EmbeddingVector>> entries;
    std::vector<std::string> texts = {"blue whale song", "red fish tale", "blue whale"};
    auto vectors = embedder.embed(texts);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Passage p;
        p.id = "d" + std::to_string(i);
        p.text = texts[i];
        p.ns = set.require("n");
        entries.emplace_back(p, vectors[i]);
    }
    index.upsert(set.require("n"), entries);

    QueryRecord query;
    query.raw_query = "blue whale";
    auto hits = dense_stage(query, {set.require("n")}, config, index, embedder);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].passage.id == "d2");  // exact token match scores highest
}
