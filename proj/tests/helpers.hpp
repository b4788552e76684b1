#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "ragpipe/ragpipe.hpp"

namespace testutil {

inline std::filesystem::path fixtures_dir() { return RAGPIPE_FIXTURES_DIR; }

/// Fresh directory under the system temp root, removed when the object dies.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        path_ = base / ("ragpipe-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::vector<ragpipe::Passage> fixture_corpus() {
    auto passages = ragpipe::io::load_corpus(fixtures_dir() / "corpus.jsonl");
    auto tags = ragpipe::bench::load_tags(fixtures_dir() / "tags.jsonl");
    for (auto& p : passages) {
        auto it = tags.find(p.id);
        if (it != tags.end()) {
            p.topic_tag = it->second.topic;
            p.format_tag = it->second.format;
        }
    }
    return passages;
}

inline ragpipe::PipelineConfig fixture_config() {
    return ragpipe::load_config(fixtures_dir() / "config.json");
}

/// Local index over the fixture corpus, embedded with the mock embedder.
inline ragpipe::LocalIndex fixture_index(const ragpipe::PipelineConfig& config) {
    ragpipe::MockEmbedder embedder(config.embedder.dimension);
    ragpipe::LocalIndex index(embedder.dimension(), config.namespaces);
    auto corpus = fixture_corpus();
    std::map<std::string, std::vector<ragpipe::Passage>> by_ns;
    for (const auto& p : corpus) by_ns[p.ns.name()].push_back(p);
    for (const auto& [ns, group] : by_ns) {
        std::vector<std::string> texts;
        for (const auto& p : group) texts.push_back(p.text);
        auto vectors = embedder.embed(texts);
        std::vector<std::pair<ragpipe::Passage, ragpipe::EmbeddingVector>> entries;
        for (std::size_t i = 0; i < group.size(); ++i) entries.emplace_back(group[i], vectors[i]);
        index.upsert(config.namespaces.require(ns), entries);
    }
    return index;
}

}  // namespace testutil
