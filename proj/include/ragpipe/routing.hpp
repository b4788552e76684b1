#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ragpipe/clients.hpp"
#include "ragpipe/config.hpp"
#include "ragpipe/core.hpp"
#include "ragpipe/prompts.hpp"
#include "ragpipe/vector_store.hpp"

namespace ragpipe {

/// The raw material of one routing decision: each vote is the set of
/// namespaces one classification named (possibly empty = abstention).
struct VoteSet {
    std::vector<std::set<NamespaceLabel>> votes;

    std::map<NamespaceLabel, int> tally() const {
        std::map<NamespaceLabel, int> t;
        for (const auto& vote : votes)
            for (const auto& ns : vote) ++t[ns];
        return t;
    }

    bool all_abstained() const {
        for (const auto& vote : votes)
            if (!vote.empty()) return false;
        return true;
    }
};

/// Extracts namespace labels from the last brace-balanced boxed{...} group.
/// Content splits on commas and semicolons; labels match the configured set
/// case-insensitively; unknown labels are dropped; duplicates collapse.
inline std::set<NamespaceLabel> parse_boxed(const std::string& reply,
                                            const NamespaceSet& namespace_set) {
    std::string content;
    bool found = false;
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = reply.find("boxed{", pos);
        if (hit == std::string::npos) break;
        std::size_t start = hit + 6;
        int depth = 1;
        std::size_t i = start;
        for (; i < reply.size() && depth > 0; ++i) {
            if (reply[i] == '{') ++depth;
            else if (reply[i] == '}') --depth;
        }
        if (depth == 0) {
            content = reply.substr(start, i - 1 - start);
            found = true;
        }
        pos = hit + 6;
    }

    std::set<NamespaceLabel> out;
    if (!found) return out;

    std::string piece;
    auto flush = [&] {
        std::string name = text::trim(piece);
        piece.clear();
        if (name.empty()) return;
        if (auto label = namespace_set.find(name)) out.insert(*label);
    };
    for (char c : content) {
        if (c == ',' || c == ';') flush();
        else piece.push_back(c);
    }
    flush();
    return out;
}

inline std::string choices_str(const NamespaceSet& namespace_set) {
    std::string out;
    for (const auto& l : namespace_set.labels()) {
        if (!out.empty()) out += '\n';
        out += "- " + l.name();
    }
    return out;
}

/// One classification call. Transport failures and unparseable replies both
/// degrade to an abstaining (empty) vote.
inline std::set<NamespaceLabel> classify_once(const std::string& question,
                                              const NamespaceSet& namespace_set, ChatClient& chat,
                                              const PromptSet& prompts, double temperature) {
    if (namespace_set.empty()) throw ConfigError("classify_once: empty namespace set");
    ChatRequest req;
    req.system_prompt = prompts::kAssistantSystem;
    req.user_content = prompts.fill_routing(question, choices_str(namespace_set));
    req.temperature = temperature;
    req.max_output_tokens = 256;
    try {
        return parse_boxed(chat.complete(req), namespace_set);
    } catch (const BackendError&) {
        return {};
    }
}

/// Ranks every configured namespace by (tally desc, earliest first appearance
/// across votes asc, label asc) and keeps the top n. Pure; the exhaustive
/// voting tests drive this directly.
inline std::vector<NamespaceLabel> rank_votes(const VoteSet& votes,
                                              const NamespaceSet& namespace_set, int top_n) {
    auto tally = votes.tally();
    auto first_appearance = [&](const NamespaceLabel& ns) {
        for (std::size_t i = 0; i < votes.votes.size(); ++i)
            if (votes.votes[i].count(ns)) return i;
        return votes.votes.size();  // never named
    };

    std::vector<NamespaceLabel> ranked = namespace_set.labels();
    std::sort(ranked.begin(), ranked.end(),
              [&](const NamespaceLabel& a, const NamespaceLabel& b) {
                  int ta = tally.count(a) ? tally.at(a) : 0;
                  int tb = tally.count(b) ? tally.at(b) : 0;
                  if (ta != tb) return ta > tb;
                  std::size_t fa = first_appearance(a), fb = first_appearance(b);
                  if (fa != fb) return fa < fb;
                  return a.normalized() < b.normalized();
              });
    if (ranked.size() > static_cast<std::size_t>(top_n))
        ranked.resize(static_cast<std::size_t>(top_n));
    return ranked;
}

/// Runs vote_count independent classifications and picks the top namespaces.
/// When every vote abstains, returns the caller-supplied fallback.
inline std::vector<NamespaceLabel> route(const std::string& question, const PipelineConfig& config,
                                         ChatClient& chat, const PromptSet& prompts,
                                         const std::vector<NamespaceLabel>& fallback) {
    VoteSet votes;
    votes.votes.resize(static_cast<std::size_t>(config.vote_count));

    if (config.parallel_votes && config.vote_count > 1) {
        std::vector<std::future<std::set<NamespaceLabel>>> futures;
        futures.reserve(votes.votes.size());
        for (int i = 0; i < config.vote_count; ++i)
            futures.push_back(std::async(std::launch::async, [&] {
                return classify_once(question, config.namespaces, chat, prompts,
                                     config.vote_temperature);
            }));
        for (std::size_t i = 0; i < futures.size(); ++i) votes.votes[i] = futures[i].get();
    } else {
        for (int i = 0; i < config.vote_count; ++i)
            votes.votes[static_cast<std::size_t>(i)] = classify_once(
                question, config.namespaces, chat, prompts, config.vote_temperature);
    }

    if (votes.all_abstained() && !fallback.empty()) {
        std::vector<NamespaceLabel> out = fallback;
        if (out.size() > static_cast<std::size_t>(config.route_top_n))
            out.resize(static_cast<std::size_t>(config.route_top_n));
        return out;
    }
    return rank_votes(votes, config.namespaces, config.route_top_n);
}

/// Default abstention fallback: the namespaces holding the most vectors.
inline std::vector<NamespaceLabel> largest_namespaces(
    const std::vector<NamespaceCount>& counts, int n) {
    std::vector<NamespaceCount> sorted = counts;
    std::sort(sorted.begin(), sorted.end(), [](const NamespaceCount& a, const NamespaceCount& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.ns.normalized() < b.ns.normalized();
    });
    std::vector<NamespaceLabel> out;
    for (const auto& c : sorted) {
        if (static_cast<int>(out.size()) >= n) break;
        out.push_back(c.ns);
    }
    return out;
}

}  // namespace ragpipe
