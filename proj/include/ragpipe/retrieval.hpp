#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ragpipe/clients.hpp"
#include "ragpipe/config.hpp"
#include "ragpipe/core.hpp"
#include "ragpipe/text.hpp"
#include "ragpipe/vector_store.hpp"

namespace ragpipe {

struct TokenizedDoc {
    std::vector<std::string> tokens;
    std::size_t length = 0;
};

inline TokenizedDoc tokenize_doc(const std::string& body) {
    TokenizedDoc d;
    d.tokens = text::tokenize(body);
    d.length = d.tokens.size();
    return d;
}

/// Okapi BM25 with the +1-inside-log IDF, which never goes negative:
///   idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1)
/// Document frequency and average length are computed over exactly the
/// candidate set passed in; there is no global lexical index. Query tokens
/// contribute once per occurrence.
inline std::vector<double> bm25_scores(const std::vector<std::string>& query_tokens,
                                       const std::vector<TokenizedDoc>& docs,
                                       const Bm25Params& params) {
    if (docs.empty()) throw DataError("bm25_scores: empty candidate set");

    const double n_docs = static_cast<double>(docs.size());
    double total_len = 0.0;
    std::vector<std::map<std::string, int>> term_counts(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        total_len += static_cast<double>(docs[d].length);
        for (const auto& t : docs[d].tokens) ++term_counts[d][t];
    }
    const double avg_len = total_len / n_docs;

    std::map<std::string, double> idf_cache;
    auto idf = [&](const std::string& term) {
        auto it = idf_cache.find(term);
        if (it != idf_cache.end()) return it->second;
        double df = 0.0;
        for (const auto& counts : term_counts)
            if (counts.count(term)) df += 1.0;
        double v = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
        idf_cache.emplace(term, v);
        return v;
    };

    std::vector<double> scores(docs.size(), 0.0);
    if (avg_len == 0.0) return scores;  // all-empty candidate set

    for (std::size_t d = 0; d < docs.size(); ++d) {
        const double dl = static_cast<double>(docs[d].length);
        const double norm = params.k1 * (1.0 - params.b + params.b * dl / avg_len);
        for (const auto& term : query_tokens) {
            auto it = term_counts[d].find(term);
            if (it == term_counts[d].end()) continue;
            const double tf = static_cast<double>(it->second);
            scores[d] += idf(term) * (tf * (params.k1 + 1.0)) / (tf + norm);
        }
    }
    return scores;
}

/// Stage 3a: dense fan-out over the given namespaces, up to dense_k hits.
inline std::vector<RetrievalCandidate> dense_stage(const QueryRecord& query,
                                                   const std::vector<NamespaceLabel>& namespaces,
                                                   const PipelineConfig& config,
                                                   const VectorStore& store, Embedder& embedder) {
    auto vectors = embedder.embed({query.effective_query()});
    return store.search(namespaces, vectors.front(), config.dense_k).hits;
}

/// Stage 3b: BM25 pruning to the top prune_k. Statistics are candidate-local.
/// Ties fall back to dense score, then ascending id, so zero lexical overlap
/// degrades to dense order.
inline std::vector<RetrievalCandidate> prune_stage(const QueryRecord& query,
                                                   std::vector<RetrievalCandidate> candidates,
                                                   const PipelineConfig& config) {
    if (candidates.empty()) return candidates;

    std::vector<TokenizedDoc> docs;
    docs.reserve(candidates.size());
    for (const auto& c : candidates) docs.push_back(tokenize_doc(c.passage.text));
    auto scores = bm25_scores(text::tokenize(query.effective_query()), docs, config.bm25);

    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].lexical_score = scores[i];
    std::sort(candidates.begin(), candidates.end(),
              [](const RetrievalCandidate& a, const RetrievalCandidate& b) {
                  if (*a.lexical_score != *b.lexical_score)
                      return *a.lexical_score > *b.lexical_score;
                  if (a.dense_score != b.dense_score) return a.dense_score > b.dense_score;
                  return a.passage.id < b.passage.id;
              });
    if (candidates.size() > static_cast<std::size_t>(config.prune_k))
        candidates.resize(static_cast<std::size_t>(config.prune_k));
    for (std::size_t i = 0; i < candidates.size(); ++i)
        candidates[i].rank = static_cast<int>(i) + 1;
    return candidates;
}

struct RerankOutcome {
    std::vector<RetrievalCandidate> candidates;
    bool degraded = false;  // reranker unreachable, lexical order kept
};

/// Stage 3c: cross-encoder rerank to the top rerank_k. If the reranker stays
/// unreachable after retries, the top rerank_k by lexical order survive and
/// the trace is flagged degraded.
inline RerankOutcome rerank_stage(const QueryRecord& query,
                                  std::vector<RetrievalCandidate> candidates,
                                  const PipelineConfig& config, Reranker& reranker) {
    RerankOutcome out;
    if (candidates.empty()) return out;

    const auto top_n = std::min<std::size_t>(candidates.size(),
                                             static_cast<std::size_t>(config.rerank_k));
    RerankRequest req;
    req.query = query.effective_query();
    for (const auto& c : candidates) req.documents.push_back(c.passage.text);
    req.top_n = static_cast<int>(top_n);

    try {
        auto hits = reranker.rerank(req);
        for (const auto& h : hits) {
            RetrievalCandidate c = candidates[static_cast<std::size_t>(h.index)];
            c.rerank_score = h.score;
            c.rank = static_cast<int>(out.candidates.size()) + 1;
            out.candidates.push_back(std::move(c));
        }
    } catch (const TransportError&) {
        out.degraded = true;
        candidates.resize(top_n);  // already in lexical order from pruning
        for (std::size_t i = 0; i < candidates.size(); ++i)
            candidates[i].rank = static_cast<int>(i) + 1;
        out.candidates = std::move(candidates);
    }
    return out;
}

}  // namespace ragpipe
