#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ragpipe/core.hpp"
#include "ragpipe/io.hpp"
#include "ragpipe/text.hpp"

namespace ragpipe::bench {

struct QuestionCategory {
    std::string name;
    int required_docs;
    std::string description;
};

/// The eight question formulations the benchmark distinguishes, with how many
/// distinct source documents each one needs.
inline const std::vector<QuestionCategory>& question_categories() {
    static const std::vector<QuestionCategory> categories = {
        {"Multi-aspect", 2,
         "Asks about two different facets of one subject, with each facet covered by its own "
         "document."},
        {"Comparison", 2,
         "Sets two subjects side by side; the facts about each subject come from a separate "
         "document."},
        {"Temporal-evolution", 2,
         "Asks how something changed over time, with the earlier and the later state described "
         "in different documents."},
        {"Problem-solution", 2,
         "Pairs a problem described in one document with a remedy described in another."},
        {"Procedural", 1, "Asks for the steps to accomplish something, all found in one document."},
        {"Causal", 1, "Asks why something happens; a single document states the cause."},
        {"Quantitative", 1, "Asks for a number or measurement taken from one document."},
        {"Verification", 1, "Asks whether a claim holds, checkable against one document."}};
    return categories;
}

inline std::string normalize_category(std::string_view name) {
    std::string out;
    for (unsigned char c : text::trim(name)) {
        if (c == ' ' || c == '_') c = '-';
        out.push_back(text::fold(c));
    }
    return out;
}

inline const QuestionCategory* find_category(std::string_view name) {
    std::string norm = normalize_category(name);
    for (const auto& c : question_categories())
        if (normalize_category(c.name) == norm) return &c;
    return nullptr;
}

using Stratum = std::pair<std::string, std::string>;  // (topic_tag, format_tag)

struct StratumAllocation {
    Stratum stratum;
    std::size_t candidates = 0;  // N_c
    std::size_t allocated = 0;   // n_c
};

/// Raw quota per stratum: ceil(N_c / Sigma N * T).
inline std::size_t raw_quota(std::size_t n_c, std::size_t total, std::size_t target) {
    unsigned long long num =
        static_cast<unsigned long long>(n_c) * static_cast<unsigned long long>(target);
    return static_cast<std::size_t>((num + total - 1) / total);
}

/// Proportional allocation. Ceilings overshoot the target, so the surplus is
/// trimmed by repeatedly decrementing the stratum whose quota exceeds its
/// exact share by the most (ties: ascending stratum key), keeping at least one
/// item per non-empty stratum while that is still feasible.
inline std::vector<StratumAllocation> allocate(const std::map<Stratum, std::size_t>& counts,
                                               std::size_t target) {
    if (target < 1) throw ConfigError("allocate: target must be positive");
    unsigned long long total = 0;
    for (const auto& [key, n] : counts) total += n;
    if (total < target)
        throw DataError("allocate: " + std::to_string(total) + " candidates cannot fill a target of " +
                        std::to_string(target));

    std::vector<StratumAllocation> out;
    out.reserve(counts.size());
    unsigned long long sum = 0;
    for (const auto& [key, n] : counts) {
        StratumAllocation a;
        a.stratum = key;
        a.candidates = n;
        a.allocated = n == 0 ? 0 : std::min(raw_quota(n, static_cast<std::size_t>(total), target), n);
        sum += a.allocated;
        out.push_back(std::move(a));
    }

    // Rounding gain scaled by Sigma N so ties compare exactly in integers:
    // gain_c * total = allocated * total - candidates * target.
    auto scaled_gain = [&](const StratumAllocation& a) {
        return static_cast<long long>(a.allocated) * static_cast<long long>(total) -
               static_cast<long long>(a.candidates) * static_cast<long long>(target);
    };
    for (bool keep_one : {true, false}) {
        while (sum > target) {
            StratumAllocation* pick = nullptr;
            for (auto& a : out) {
                std::size_t floor = keep_one && a.candidates > 0 ? 1 : 0;
                if (a.allocated <= floor) continue;
                if (!pick || scaled_gain(a) > scaled_gain(*pick)) pick = &a;
            }
            if (!pick) break;
            --pick->allocated;
            --sum;
        }
    }
    return out;
}

/// Fixed published generator (splitmix64) so draws reproduce across platforms
/// and standard libraries.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, n) by rejection, no modulo bias.
    std::uint64_t bounded(std::uint64_t n) {
        std::uint64_t cutoff = (0 - n) % n;  // 2^64 mod n
        while (true) {
            std::uint64_t r = next();
            if (r >= cutoff) return r % n;
        }
    }

private:
    std::uint64_t state_;
};

inline Stratum stratum_of(const io::QaRecord& r) {
    return {r.topic.value_or(""), r.format.value_or("")};
}

inline std::map<Stratum, std::size_t> count_strata(const std::vector<io::QaRecord>& candidates) {
    std::map<Stratum, std::size_t> counts;
    for (const auto& r : candidates) ++counts[stratum_of(r)];
    return counts;
}

/// Draws each stratum's quota uniformly without replacement. The per-stratum
/// stream is seeded from (seed, stratum key), so results do not depend on
/// stratum iteration order or candidate file order. Output sorted by
/// (topic, format, question id).
inline std::vector<io::QaRecord> sample(const std::vector<io::QaRecord>& candidates,
                                        const std::vector<StratumAllocation>& allocation,
                                        std::uint64_t seed) {
    std::map<Stratum, std::vector<const io::QaRecord*>> pools;
    for (const auto& r : candidates) pools[stratum_of(r)].push_back(&r);
    for (auto& [key, pool] : pools)
        std::sort(pool.begin(), pool.end(),
                  [](const io::QaRecord* a, const io::QaRecord* b) { return a->id < b->id; });

    std::vector<io::QaRecord> out;
    for (const auto& a : allocation) {
        if (a.allocated == 0) continue;
        auto it = pools.find(a.stratum);
        std::size_t population = it == pools.end() ? 0 : it->second.size();
        if (a.allocated > population)
            throw DataError("sample: stratum (" + a.stratum.first + ", " + a.stratum.second +
                            ") has " + std::to_string(population) + " candidates, needs " +
                            std::to_string(a.allocated));
        auto pool = it->second;  // copy; partial Fisher-Yates below mutates
        SplitMix64 rng(seed ^ text::fnv1a64(a.stratum.first + '\x1f' + a.stratum.second));
        for (std::size_t i = 0; i < a.allocated; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.bounded(pool.size() - i));
            std::swap(pool[i], pool[j]);
            out.push_back(*pool[i]);
        }
    }
    std::sort(out.begin(), out.end(), [](const io::QaRecord& a, const io::QaRecord& b) {
        return std::make_tuple(a.topic.value_or(""), a.format.value_or(""), a.id) <
               std::make_tuple(b.topic.value_or(""), b.format.value_or(""), b.id);
    });
    return out;
}

struct DocTags {
    std::string topic;
    std::string format;
};

/// Tag file: one {"id", "topic", "format"} object per line, keyed by document id.
inline std::map<std::string, DocTags> load_tags(const std::filesystem::path& path) {
    std::map<std::string, DocTags> tags;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        std::string where = path.string() + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        std::string id, topic, format;
        try {
            id = j.at("id").get<std::string>();
            topic = j.at("topic").get<std::string>();
            format = j.at("format").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        if (id.empty() || topic.empty() || format.empty())
            throw DataError(where + ": id, topic, and format must be non-empty");
        if (!tags.emplace(id, DocTags{topic, format}).second)
            throw DataError(where + ": duplicate document id " + id);
    }
    return tags;
}

struct IngestResult {
    std::vector<io::QaRecord> candidates;
    std::vector<std::string> rejects;  // one line-numbered reason per rejected record
};

/// Joins Q&A records to document tags and enforces the per-category document
/// count. Records that violate a rule are rejected, not fatal; the stratum of
/// an accepted record comes from its first gold document.
inline IngestResult ingest_tagged(const std::filesystem::path& qa_path,
                                  const std::filesystem::path& tag_path) {
    std::map<std::string, DocTags> tags = load_tags(tag_path);
    IngestResult result;
    std::ifstream in(qa_path, std::ios::binary);
    if (!in) throw DataError("cannot read " + qa_path.string());
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        std::string where = qa_path.string() + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        io::QaRecord r = io::QaRecord::from_json(j, where);
        if (!seen.insert(r.id).second) throw DataError(where + ": duplicate question id " + r.id);
        if (!r.category) {
            result.rejects.push_back(where + ": missing category");
            continue;
        }
        const QuestionCategory* cat = find_category(*r.category);
        if (!cat) {
            result.rejects.push_back(where + ": unknown category " + *r.category);
            continue;
        }
        if (static_cast<int>(r.gold_ids.size()) != cat->required_docs) {
            result.rejects.push_back(where + ": category " + cat->name + " requires " +
                                     std::to_string(cat->required_docs) + " document(s), got " +
                                     std::to_string(r.gold_ids.size()));
            continue;
        }
        bool dangling = false;
        for (const auto& doc : r.gold_ids) {
            if (!tags.count(doc)) {
                result.rejects.push_back(where + ": document id " + doc + " has no tags");
                dangling = true;
                break;
            }
        }
        if (dangling) continue;
        const DocTags& t = tags.at(r.gold_ids.front());
        r.category = cat->name;
        r.topic = t.topic;
        r.format = t.format;
        result.candidates.push_back(std::move(r));
    }
    return result;
}

}  // namespace ragpipe::bench
