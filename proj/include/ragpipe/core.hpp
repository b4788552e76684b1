#pragma once

#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ragpipe/text.hpp"

namespace ragpipe {

// Error categories map onto the CLI exit-code contract:
// config/usage -> 1, data -> 2, backend -> 3.
enum class ErrorKind { config, data, backend };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ErrorKind::config, msg) {}
};

struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

struct BackendError : Error {
    explicit BackendError(const std::string& msg) : Error(ErrorKind::backend, msg) {}
};

// Retryable transport failure; anything else from a backend is fatal.
struct TransportError : BackendError {
    explicit TransportError(const std::string& msg) : BackendError(msg) {}
};

/// A namespace name with its case-normalized form. Labels order and compare
/// by the normalized form so tie-breaks are case-insensitive and stable.
class NamespaceLabel {
public:
    NamespaceLabel() = default;
    explicit NamespaceLabel(std::string name)
        : name_(text::trim(name)), norm_(text::lowercase_ascii(name_)) {
        if (name_.empty()) throw ConfigError("namespace label must be non-empty");
    }

    const std::string& name() const { return name_; }
    const std::string& normalized() const { return norm_; }

    friend bool operator==(const NamespaceLabel& a, const NamespaceLabel& b) {
        return a.norm_ == b.norm_;
    }
    friend std::strong_ordering operator<=>(const NamespaceLabel& a, const NamespaceLabel& b) {
        return a.norm_ <=> b.norm_;
    }

private:
    std::string name_;
    std::string norm_;
};

/// The configured namespace universe. Every label used anywhere in the
/// pipeline is minted through this set, which is how membership gets checked
/// at construction time.
class NamespaceSet {
public:
    NamespaceSet() = default;
    explicit NamespaceSet(const std::vector<std::string>& names) {
        for (const auto& n : names) add(n);
    }

    void add(const std::string& name) {
        NamespaceLabel label(name);
        for (const auto& existing : labels_) {
            if (existing == label)
                throw ConfigError("duplicate namespace label: " + label.name());
        }
        labels_.push_back(std::move(label));
    }

    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }
    const std::vector<NamespaceLabel>& labels() const { return labels_; }

    std::optional<NamespaceLabel> find(std::string_view name) const {
        std::string norm = text::lowercase_ascii(text::trim(name));
        for (const auto& l : labels_)
            if (l.normalized() == norm) return l;
        return std::nullopt;
    }

    bool contains(std::string_view name) const { return find(name).has_value(); }

    /// Membership-checked construction; unknown names are a config error.
    NamespaceLabel require(std::string_view name) const {
        if (auto l = find(name)) return *l;
        throw ConfigError("unknown namespace: " + std::string(name));
    }

private:
    std::vector<NamespaceLabel> labels_;
};

/// One retrievable text unit.
struct Passage {
    std::string id;
    std::string text;
    NamespaceLabel ns;
    std::optional<std::string> topic_tag;
    std::optional<std::string> format_tag;
};

/// A question and its per-stage state as it flows through the pipeline.
struct QueryRecord {
    std::string raw_query;
    std::optional<std::string> rewritten_query;
    std::vector<NamespaceLabel> routed_namespaces;
    std::map<std::string, double> stage_timings;  // stage name -> seconds

    // The query text downstream stages operate on.
    const std::string& effective_query() const {
        return rewritten_query ? *rewritten_query : raw_query;
    }
};

/// A passage carrying the scores it accumulated through the cascade.
struct RetrievalCandidate {
    Passage passage;
    double dense_score = 0.0;                  // cosine similarity, in [-1, 1]
    std::optional<double> lexical_score;       // set by the pruning stage
    std::optional<double> rerank_score;        // set by the rerank stage
    int rank = 0;                              // 1-based within its stage output
};

struct StageSwitches {
    bool rewrite = true;
    bool routing = true;
    bool pruning = true;
    bool rerank = true;
};

}  // namespace ragpipe
