#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ragpipe::text {

// Whitespace set used for token counting and word caps. Fixed byte set so
// results do not depend on the process locale.
inline bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Token characters for lexical scoring: ASCII alphanumerics plus any byte
// >= 0x80, so multi-byte UTF-8 sequences stay inside one token. Only ASCII
// letters are case-folded.
inline bool is_token_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')
        || c >= 0x80;
}

inline char fold(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

inline std::string lowercase_ascii(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) out.push_back(fold(c));
    return out;
}

/// Splits on any non-token character, folds ASCII case, drops empty tokens.
/// No stemming, no stopword removal.
inline std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (is_token_char(c)) {
            cur.push_back(fold(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

/// Number of maximal non-whitespace runs.
inline std::size_t count_tokens(std::string_view s) {
    std::size_t n = 0;
    bool in_run = false;
    for (unsigned char c : s) {
        if (is_space(c)) {
            in_run = false;
        } else if (!in_run) {
            in_run = true;
            ++n;
        }
    }
    return n;
}

/// Byte offset one past the end of the n-th whitespace run (n >= 1).
/// Returns s.size() if the text has fewer than n runs. Used to truncate a
/// passage to its leading tokens while preserving internal whitespace.
inline std::size_t end_of_token(std::string_view s, std::size_t n) {
    std::size_t seen = 0;
    bool in_run = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (is_space(static_cast<unsigned char>(s[i]))) {
            if (in_run && seen == n) return i;
            in_run = false;
        } else if (!in_run) {
            in_run = true;
            ++seen;
        }
    }
    return s.size();
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

/// Trims and collapses every internal whitespace run to a single space.
inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

// FNV-1a, 64-bit. Fixed published constants; the mock embedder's bucket hash.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view s) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(s);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

inline std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '\n') {
            std::string_view line = s.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            out.emplace_back(line);
            start = i + 1;
        }
    }
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = s.find(from, pos);
        if (hit == std::string::npos) {
            out.append(s, pos, std::string::npos);
            return out;
        }
        out.append(s, pos, hit - pos);
        out.append(to);
        pos = hit + from.size();
    }
}

}  // namespace ragpipe::text
