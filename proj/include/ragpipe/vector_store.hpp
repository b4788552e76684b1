#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ragpipe/clients.hpp"
#include "ragpipe/core.hpp"

namespace ragpipe {

struct SearchResponse {
    std::vector<RetrievalCandidate> hits;  // descending dense_score, ids unique
    std::size_t scanned = 0;               // vectors examined, for instrumentation
};

struct NamespaceCount {
    NamespaceLabel ns;
    std::size_t count = 0;
};

/// Namespaced dense index with exact cosine top-k search.
class VectorStore {
public:
    virtual ~VectorStore() = default;

    /// Re-upserting an id replaces its vector. Returns entries written.
    virtual std::size_t upsert(const NamespaceLabel& ns,
                               const std::vector<std::pair<Passage, EmbeddingVector>>& entries) = 0;

    virtual SearchResponse search(const std::vector<NamespaceLabel>& namespaces,
                                  const EmbeddingVector& query, int k) const = 0;

    virtual std::vector<NamespaceCount> namespace_counts() const = 0;
    virtual int dimension() const = 0;

    std::size_t total_count() const {
        std::size_t n = 0;
        for (const auto& c : namespace_counts()) n += c.count;
        return n;
    }

    /// Fraction of stored vectors that live in the searched namespaces.
    double scanned_fraction(const std::vector<NamespaceLabel>& searched) const {
        auto counts = namespace_counts();
        std::size_t total = 0, hit = 0;
        for (const auto& c : counts) {
            total += c.count;
            for (const auto& s : searched)
                if (s == c.ns) {
                    hit += c.count;
                    break;
                }
        }
        if (total == 0) throw DataError("scanned_fraction: index is empty");
        return static_cast<double>(hit) / static_cast<double>(total);
    }
};

namespace store_detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::string slug(const std::string& normalized_name) {
    std::string s;
    for (unsigned char c : normalized_name)
        s.push_back(((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) ? static_cast<char>(c) : '_');
    if (s.size() > 40) s.resize(40);
    return s + "-" + text::fnv1a64_hex(normalized_name).substr(0, 8) + ".rec";
}

}  // namespace store_detail

/// In-memory exact index with file persistence. Search does a full scan per
/// namespace; at desk scale that is both fast enough and an exact oracle.
///
/// On disk: manifest.json (dimension, namespace list, counts, record files)
/// plus one append-only record file per namespace. Strings are length-prefixed
/// UTF-8 (u32 little-endian lengths); vector payloads are little-endian 32-bit
/// floats. A later record for an existing id replaces the earlier one on load.
class LocalIndex final : public VectorStore {
public:
    LocalIndex(int dimension, NamespaceSet namespaces)
        : dim_(dimension), namespaces_(std::move(namespaces)) {
        if (dim_ < 1) throw ConfigError("index dimension must be positive");
        for (const auto& l : namespaces_.labels())
            shards_.push_back(std::make_unique<Shard>(l));
    }

    std::size_t upsert(const NamespaceLabel& ns,
                       const std::vector<std::pair<Passage, EmbeddingVector>>& entries) override {
        Shard& shard = require_shard(ns);
        std::unique_lock lock(shard.mu);
        for (const auto& [passage, vec] : entries) {
            if (static_cast<int>(vec.dimension()) != dim_)
                throw DataError("vector dimension " + std::to_string(vec.dimension()) +
                                " does not match index dimension " + std::to_string(dim_));
            auto it = shard.by_id.find(passage.id);
            if (it == shard.by_id.end()) {
                shard.by_id.emplace(passage.id, shard.entries.size());
                shard.entries.push_back({passage, vec});
            } else {
                shard.entries[it->second] = {passage, vec};
            }
        }
        return entries.size();
    }

    SearchResponse search(const std::vector<NamespaceLabel>& namespaces,
                          const EmbeddingVector& query, int k) const override {
        if (namespaces.empty()) throw DataError("search: no namespaces given");
        if (k < 1) throw DataError("search: k must be positive");
        if (static_cast<int>(query.dimension()) != dim_)
            throw DataError("search: query dimension mismatch");

        std::vector<const Shard*> shards;
        for (const auto& ns : namespaces) shards.push_back(&require_shard(ns));

        std::vector<SearchResponse> parts(shards.size());
        if (shards.size() > 1) {
            std::vector<std::future<SearchResponse>> futures;
            for (const Shard* s : shards)
                futures.push_back(std::async(std::launch::async,
                                             [this, s, &query] { return scan_shard(*s, query); }));
            for (std::size_t i = 0; i < futures.size(); ++i) parts[i] = futures[i].get();
        } else {
            parts[0] = scan_shard(*shards[0], query);
        }

        SearchResponse merged;
        for (auto& p : parts) {
            merged.scanned += p.scanned;
            merged.hits.insert(merged.hits.end(), std::make_move_iterator(p.hits.begin()),
                               std::make_move_iterator(p.hits.end()));
        }
        std::sort(merged.hits.begin(), merged.hits.end(),
                  [](const RetrievalCandidate& a, const RetrievalCandidate& b) {
                      if (a.dense_score != b.dense_score) return a.dense_score > b.dense_score;
                      return a.passage.id < b.passage.id;
                  });
        if (merged.hits.size() > static_cast<std::size_t>(k))
            merged.hits.resize(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < merged.hits.size(); ++i)
            merged.hits[i].rank = static_cast<int>(i) + 1;
        return merged;
    }

    std::vector<NamespaceCount> namespace_counts() const override {
        std::vector<NamespaceCount> out;
        for (const auto& shard : shards_) {
            std::shared_lock lock(shard->mu);
            out.push_back({shard->label, shard->entries.size()});
        }
        return out;
    }

    int dimension() const override { return dim_; }
    const NamespaceSet& namespaces() const { return namespaces_; }

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        nlohmann::json manifest;
        manifest["dimension"] = dim_;
        auto& arr = manifest["namespaces"] = nlohmann::json::array();
        for (const auto& shard : shards_) {
            std::shared_lock lock(shard->mu);
            std::string file = store_detail::slug(shard->label.normalized());
            std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
            if (!out) throw DataError("cannot write record file: " + (dir / file).string());
            for (const auto& e : shard->entries) out << encode_record(e);
            arr.push_back({{"name", shard->label.name()},
                           {"file", file},
                           {"count", shard->entries.size()}});
        }
        std::ofstream mout(dir / "manifest.json", std::ios::trunc);
        if (!mout) throw DataError("cannot write manifest: " + (dir / "manifest.json").string());
        mout << manifest.dump(2) << '\n';
    }

    static LocalIndex load(const std::filesystem::path& dir) {
        std::ifstream min(dir / "manifest.json");
        if (!min) throw DataError("cannot open index manifest: " + (dir / "manifest.json").string());
        nlohmann::json manifest;
        try {
            min >> manifest;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("index manifest parse error: ") + e.what());
        }

        std::vector<std::string> names;
        for (const auto& n : manifest.at("namespaces")) names.push_back(n.at("name").get<std::string>());
        LocalIndex index(manifest.at("dimension").get<int>(), NamespaceSet(names));

        for (const auto& n : manifest.at("namespaces")) {
            NamespaceLabel label = index.namespaces_.require(n.at("name").get<std::string>());
            auto path = dir / n.at("file").get<std::string>();
            std::ifstream in(path, std::ios::binary);
            if (!in) throw DataError("cannot open record file: " + path.string());
            std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            index.load_records(label, data, path.string());
        }
        return index;
    }

private:
    struct Entry {
        Passage passage;
        EmbeddingVector vec;
    };

    struct Shard {
        explicit Shard(NamespaceLabel l) : label(std::move(l)) {}
        NamespaceLabel label;
        mutable std::shared_mutex mu;
        std::vector<Entry> entries;
        std::unordered_map<std::string, std::size_t> by_id;
    };

    Shard& require_shard(const NamespaceLabel& ns) const {
        for (const auto& shard : shards_)
            if (shard->label == ns) return *shard;
        throw DataError("unknown namespace: " + ns.name());
    }

    SearchResponse scan_shard(const Shard& shard, const EmbeddingVector& query) const {
        SearchResponse r;
        std::shared_lock lock(shard.mu);
        r.scanned = shard.entries.size();
        r.hits.reserve(shard.entries.size());
        for (const auto& e : shard.entries) {
            RetrievalCandidate c;
            c.passage = e.passage;
            c.dense_score = query.dot(e.vec);
            r.hits.push_back(std::move(c));
        }
        return r;
    }

    std::string encode_record(const Entry& e) const {
        std::string out;
        auto put_str = [&out](const std::string& s) {
            store_detail::put_u32le(out, static_cast<std::uint32_t>(s.size()));
            out.append(s);
        };
        put_str(e.passage.id);
        put_str(e.passage.text);
        out.push_back(e.passage.topic_tag ? 1 : 0);
        if (e.passage.topic_tag) put_str(*e.passage.topic_tag);
        out.push_back(e.passage.format_tag ? 1 : 0);
        if (e.passage.format_tag) put_str(*e.passage.format_tag);
        for (float f : e.vec.values)
            store_detail::put_u32le(out, std::bit_cast<std::uint32_t>(f));
        return out;
    }

    void load_records(const NamespaceLabel& ns, const std::string& data, const std::string& path) {
        const auto* p = reinterpret_cast<const unsigned char*>(data.data());
        std::size_t pos = 0, size = data.size();
        auto need = [&](std::size_t n) {
            if (pos + n > size) throw DataError("truncated record file: " + path);
        };
        auto read_str = [&]() {
            need(4);
            std::uint32_t len = store_detail::get_u32le(p + pos);
            pos += 4;
            need(len);
            std::string s(data, pos, len);
            pos += len;
            return s;
        };

        std::vector<std::pair<Passage, EmbeddingVector>> batch;
        while (pos < size) {
            Passage pass;
            pass.id = read_str();
            pass.text = read_str();
            pass.ns = ns;
            need(1);
            if (p[pos++]) pass.topic_tag = read_str();
            need(1);
            if (p[pos++]) pass.format_tag = read_str();
            EmbeddingVector v;
            v.values.resize(static_cast<std::size_t>(dim_));
            for (int i = 0; i < dim_; ++i) {
                need(4);
                v.values[static_cast<std::size_t>(i)] =
                    std::bit_cast<float>(store_detail::get_u32le(p + pos));
                pos += 4;
            }
            batch.emplace_back(std::move(pass), std::move(v));
        }
        upsert(ns, batch);
    }

    int dim_;
    NamespaceSet namespaces_;
    std::vector<std::unique_ptr<Shard>> shards_;
};

}  // namespace ragpipe
