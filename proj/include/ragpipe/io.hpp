#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ragpipe/core.hpp"
#include "ragpipe/pipeline.hpp"

namespace ragpipe::io {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("write failed for " + path.string());
}

/// One parsed object per non-empty line; errors carry path:line.
inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::vector<nlohmann::json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

template <typename Json>
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
    std::string body;
    for (const auto& r : records) {
        body += r.dump();
        body += '\n';
    }
    write_file(path, body);
}

inline nlohmann::ordered_json passage_to_json(const Passage& p) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["text"] = p.text;
    j["namespace"] = p.ns.name();
    if (p.topic_tag) j["topic"] = *p.topic_tag;
    if (p.format_tag) j["format"] = *p.format_tag;
    return j;
}

inline Passage passage_from_json(const nlohmann::json& j, const std::string& where) {
    Passage p;
    std::string ns;
    try {
        p.id = j.at("id").get<std::string>();
        p.text = j.at("text").get<std::string>();
        ns = j.at("namespace").get<std::string>();
        if (j.contains("topic")) p.topic_tag = j.at("topic").get<std::string>();
        if (j.contains("format")) p.format_tag = j.at("format").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(where + ": " + e.what());
    }
    if (p.id.empty()) throw DataError(where + ": empty passage id");
    if (text::trim(p.text).empty()) throw DataError(where + ": empty passage text");
    if (text::trim(ns).empty()) throw DataError(where + ": empty namespace");
    p.ns = NamespaceLabel(ns);
    return p;
}

/// Corpus file: one passage object per line. Duplicate ids are data errors.
inline std::vector<Passage> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::vector<Passage> out;
    std::unordered_set<std::string> seen;
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
        Passage p = passage_from_json(j, where);
        if (!seen.insert(p.id).second) throw DataError(where + ": duplicate passage id " + p.id);
        out.push_back(std::move(p));
    }
    return out;
}

/// A benchmark question: gold answer for the correctness judge, gold passage
/// ids for recall, topic and format tags for stratified sampling.
struct QaRecord {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::optional<std::string> category;
    std::vector<std::string> gold_ids;
    std::optional<std::string> topic;
    std::optional<std::string> format;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["id"] = id;
        j["question"] = question;
        j["answer"] = gold_answer;
        if (category) j["category"] = *category;
        j["gold_ids"] = gold_ids;
        if (topic) j["topic"] = *topic;
        if (format) j["format"] = *format;
        return j;
    }

    static QaRecord from_json(const nlohmann::json& j, const std::string& where) {
        QaRecord r;
        try {
            r.id = j.at("id").get<std::string>();
            r.question = j.at("question").get<std::string>();
            r.gold_answer = j.at("answer").get<std::string>();
            if (j.contains("category")) r.category = j.at("category").get<std::string>();
            if (j.contains("gold_ids")) r.gold_ids = j.at("gold_ids").get<std::vector<std::string>>();
            if (j.contains("topic")) r.topic = j.at("topic").get<std::string>();
            if (j.contains("format")) r.format = j.at("format").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        if (r.id.empty()) throw DataError(where + ": empty question id");
        if (text::trim(r.question).empty()) throw DataError(where + ": empty question");
        return r;
    }
};

inline std::vector<QaRecord> load_qa(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::vector<QaRecord> out;
    std::unordered_set<std::string> seen;
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
        QaRecord r = QaRecord::from_json(j, where);
        if (!seen.insert(r.id).second) throw DataError(where + ": duplicate question id " + r.id);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<AnswerTrace> load_traces(const std::filesystem::path& path) {
    std::vector<AnswerTrace> out;
    std::size_t lineno = 0;
    for (const auto& j : read_jsonl(path)) {
        ++lineno;
        try {
            out.push_back(AnswerTrace::from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ": record " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace ragpipe::io
