#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragpipe/clients.hpp"
#include "ragpipe/text.hpp"

namespace ragpipe {

/// Deterministic hash embedder: lowercase alphanumeric tokens, FNV-1a 64 into
/// one of `dim` buckets, count, L2-normalize. Shared vocabulary between two
/// texts yields higher cosine, which is all the pipeline tests need.
class MockEmbedder final : public Embedder {
public:
    explicit MockEmbedder(int dim = 64) : dim_(dim) {
        if (dim < 1) throw ConfigError("embedder dimension must be positive");
    }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        if (texts.empty()) throw DataError("embed: empty input list");
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            if (text::trim(t).empty()) throw DataError("embed: empty text after trim");
            out.push_back(embed_one(t));
        }
        return out;
    }

    int dimension() const override { return dim_; }

private:
    EmbeddingVector embed_one(const std::string& t) const {
        std::vector<double> counts(static_cast<std::size_t>(dim_), 0.0);
        for (const auto& tok : text::tokenize(t))
            counts[text::fnv1a64(tok) % static_cast<std::uint64_t>(dim_)] += 1.0;
        double norm = 0.0;
        for (double c : counts) norm += c * c;
        norm = std::sqrt(norm);
        EmbeddingVector v;
        v.values.resize(counts.size());
        if (norm == 0.0) {
            // Text with no token characters: a fixed unit basis vector.
            v.values[0] = 1.0f;
        } else {
            for (std::size_t i = 0; i < counts.size(); ++i)
                v.values[i] = static_cast<float>(counts[i] / norm);
        }
        return v;
    }

    int dim_;
};

namespace mock_detail {

// picks the top-n choices by token overlap with the question, ties by listed order
inline std::vector<std::string> overlap_top_choices(const std::string& question,
                                                    const std::vector<std::string>& choices,
                                                    std::size_t n) {
    auto qtokens = text::tokenize(question);
    std::set<std::string> qset(qtokens.begin(), qtokens.end());
    std::vector<std::pair<int, std::size_t>> scored;  // (-overlap, listed index)
    for (std::size_t i = 0; i < choices.size(); ++i) {
        int overlap = 0;
        for (const auto& tok : text::tokenize(choices[i]))
            if (qset.count(tok)) ++overlap;
        scored.emplace_back(-overlap, i);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < n; ++i)
        out.push_back(choices[scored[i].second]);
    return out;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace mock_detail

/// Pure-function chat mock. Recognizes the three pipeline prompt shapes and
/// answers each deterministically:
///   - routing prompts: top-2 namespaces by token overlap with the question
///   - generation prompts: echoes the first context line
///   - rewrite prompts: whitespace-normalized input
/// Anything else gets a digest reply. Byte-identical inputs always produce
/// byte-identical outputs.
class MockChat final : public ChatClient {
public:
    std::string complete(const ChatRequest& request) override {
        const std::string& user = request.user_content;

        if (user.find("Available namespaces:") != std::string::npos) return route_reply(user);
        if (text::starts_with(user, "Context:")) return generate_reply(user);
        if (request.system_prompt.find("correcting typos") != std::string::npos)
            return text::collapse_whitespace(user);

        return "mock-reply:" + text::fnv1a64_hex(request.system_prompt + '\x1f' + user);
    }

private:
    static std::string route_reply(const std::string& user) {
        std::string question;
        std::vector<std::string> choices;
        bool in_choices = false;
        for (const auto& line : text::split_lines(user)) {
            if (text::starts_with(line, "Q: ")) {
                question = line.substr(3);
            } else if (text::starts_with(line, "Available namespaces:")) {
                in_choices = true;
            } else if (in_choices) {
                if (text::starts_with(line, "- ")) {
                    choices.push_back(text::trim(line.substr(2)));
                } else if (!text::trim(line).empty()) {
                    in_choices = false;
                }
            }
        }
        auto picked = mock_detail::overlap_top_choices(question, choices, 2);
        return "Step1: Identified the subject of the question.\n"
               "Step2: Matched it against the available namespaces.\n"
               "Step3: \\boxed{" + mock_detail::join(picked, ", ") + "}";
    }

    static std::string generate_reply(const std::string& user) {
        auto lines = text::split_lines(user);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (text::starts_with(lines[i], "Question:")) break;
            std::string t = text::trim(lines[i]);
            if (!t.empty()) return t;
        }
        return "No supporting passages were available.";
    }
};

/// Replays a fixed list of replies in call order, cycling when exhausted.
/// Stateful by design; order-sensitive tests must issue calls sequentially.
class ScriptedChat final : public ChatClient {
public:
    explicit ScriptedChat(std::vector<std::string> replies) : replies_(std::move(replies)) {
        if (replies_.empty()) throw ConfigError("scripted chat needs at least one reply");
    }

    ScriptedChat(ScriptedChat&& other) noexcept
        : replies_(std::move(other.replies_)), next_(other.next_.load()) {}

    static ScriptedChat from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open chat script: " + path);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("chat script parse error in " + path + ": " + e.what());
        }
        if (!doc.is_array()) throw ConfigError("chat script must be a JSON array of strings");
        return ScriptedChat(doc.get<std::vector<std::string>>());
    }

    std::string complete(const ChatRequest&) override {
        std::size_t i = next_.fetch_add(1);
        return replies_[i % replies_.size()];
    }

private:
    std::vector<std::string> replies_;
    std::atomic<std::size_t> next_{0};
};

/// Token-overlap reranker: Jaccard similarity between the query's and each
/// document's token sets. Ties resolve to the lower document index.
class MockReranker final : public Reranker {
public:
    std::vector<RerankHit> rerank(const RerankRequest& request) override {
        if (request.documents.empty()) throw DataError("rerank: empty document list");
        if (request.top_n < 1 || request.top_n > static_cast<int>(request.documents.size()))
            throw DataError("rerank: top_n out of range");

        auto qtokens = text::tokenize(request.query);
        std::set<std::string> qset(qtokens.begin(), qtokens.end());

        std::vector<RerankHit> hits;
        hits.reserve(request.documents.size());
        for (std::size_t i = 0; i < request.documents.size(); ++i) {
            hits.push_back({static_cast<int>(i), overlap_score(qset, request.documents[i])});
        }
        std::stable_sort(hits.begin(), hits.end(), [](const RerankHit& a, const RerankHit& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.index < b.index;
        });
        hits.resize(static_cast<std::size_t>(request.top_n));
        return hits;
    }

    static double overlap_score(const std::set<std::string>& qset, const std::string& doc) {
        auto dtokens = text::tokenize(doc);
        std::set<std::string> dset(dtokens.begin(), dtokens.end());
        std::size_t inter = 0;
        for (const auto& t : dset)
            if (qset.count(t)) ++inter;
        std::size_t uni = qset.size() + dset.size() - inter;
        return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
};

/// Judge mock driven by a JSONL fixture. Each entry scores one
/// (question id, metric) pair:
///
///   {"id": "q1", "metric": "correctness", "score": 1.5}
///   {"id": "q2", "metric": "faithfulness", "score": 0.7,
///    "requires": "SOURCE-7", "score_absent": 0.336}
///
/// With `requires`, the score applies only when the candidate answer contains
/// the substring; otherwise `score_absent` is returned. That makes truncation
/// effects observable under a fully scripted judge.
class ScriptedJudgeChat final : public ChatClient {
public:
    struct Entry {
        double score = 0.0;
        std::string requires_text;
        double score_absent = 0.0;
    };

    static ScriptedJudgeChat from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open judge script: " + path);
        ScriptedJudgeChat judge;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (text::trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("judge script line " + std::to_string(lineno) + ": " + e.what());
            }
            Entry e;
            e.score = j.at("score").get<double>();
            if (j.contains("requires")) {
                e.requires_text = j.at("requires").get<std::string>();
                e.score_absent = j.at("score_absent").get<double>();
            }
            judge.entries_[{j.at("id").get<std::string>(), j.at("metric").get<std::string>()}] = e;
        }
        return judge;
    }

    void add(const std::string& id, const std::string& metric, Entry e) {
        entries_[{id, metric}] = std::move(e);
    }

    std::string complete(const ChatRequest& request) override {
        std::string id = field_after(request.user_content, "Question ID: ");
        std::string metric =
            request.system_prompt.find("faithfulness") != std::string::npos ? "faithfulness"
                                                                            : "correctness";
        auto it = entries_.find({id, metric});
        if (it == entries_.end())
            return "No scripted verdict for record " + id + ".";

        const Entry& e = it->second;
        double score = e.score;
        if (!e.requires_text.empty()) {
            std::string answer = answer_section(request.user_content);
            if (answer.find(e.requires_text) == std::string::npos) score = e.score_absent;
        }
        return "Scripted verdict for record " + id + ".\nSCORE: " +
               mock_detail::format_score(score);
    }

private:
    static std::string field_after(const std::string& body, const std::string& marker) {
        for (const auto& line : text::split_lines(body))
            if (text::starts_with(line, marker)) return text::trim(line.substr(marker.size()));
        return {};
    }

    static std::string answer_section(const std::string& body) {
        std::size_t pos = body.find("Candidate answer:");
        return pos == std::string::npos ? body : body.substr(pos);
    }

    std::map<std::pair<std::string, std::string>, Entry> entries_;
};

}  // namespace ragpipe
