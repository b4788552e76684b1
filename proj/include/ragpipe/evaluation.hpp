#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ragpipe/clients.hpp"
#include "ragpipe/core.hpp"
#include "ragpipe/io.hpp"
#include "ragpipe/pipeline.hpp"
#include "ragpipe/prompts.hpp"
#include "ragpipe/text.hpp"

namespace ragpipe::eval {

enum class Metric { correctness, faithfulness };

inline std::string metric_name(Metric m) {
    return m == Metric::correctness ? "correctness" : "faithfulness";
}

inline std::pair<double, double> metric_range(Metric m) {
    return m == Metric::correctness ? std::pair{-1.0, 2.0} : std::pair{-1.0, 1.0};
}

struct JudgeScore {
    Metric metric = Metric::correctness;
    double value = 0.0;
    std::string rationale;
    bool clamped = false;
    bool missing = false;  // no parseable verdict after the re-asks; excluded from means
};

/// Identity when the answer is within cap; otherwise the first cap words
/// joined by single spaces.
inline std::string apply_word_cap(const std::string& answer, int cap) {
    if (cap < 1) throw ConfigError("word cap must be positive");
    if (text::count_tokens(answer) <= static_cast<std::size_t>(cap)) return answer;
    std::string out;
    int kept = 0;
    std::size_t i = 0;
    while (i < answer.size() && kept < cap) {
        while (i < answer.size() && text::is_space(static_cast<unsigned char>(answer[i]))) ++i;
        std::size_t start = i;
        while (i < answer.size() && !text::is_space(static_cast<unsigned char>(answer[i]))) ++i;
        if (i > start) {
            if (kept) out += ' ';
            out.append(answer, start, i - start);
            ++kept;
        }
    }
    return out;
}

/// The verdict is the last line of the form "SCORE: <number>".
inline std::optional<double> parse_verdict(const std::string& reply) {
    std::optional<double> found;
    for (const std::string& raw : text::split_lines(reply)) {
        std::string line = text::trim(raw);
        if (!text::starts_with(line, "SCORE:")) continue;
        std::string num = text::trim(line.substr(6));
        if (num.empty()) continue;
        char* end = nullptr;
        double v = std::strtod(num.c_str(), &end);
        if (end == num.c_str()) continue;
        while (*end == ' ') ++end;
        if (*end != '\0') continue;
        found = v;
    }
    return found;
}

struct JudgeInput {
    std::string id;
    std::string question;
    std::string gold_answer;  // correctness rubric
    std::string context;      // faithfulness rubric
    std::string answer;
};

/// One graded verdict. Re-asks up to two times on an unparseable reply, then
/// records the score as missing. Out-of-range verdicts are clamped and
/// flagged. Backend failures after retries count as failed attempts.
inline JudgeScore judge(const JudgeInput& input, Metric metric, bool capped, ChatClient& client,
                        const PromptSet& prompts, int cap_words = 300) {
    ChatRequest req;
    req.temperature = 0.0;
    req.max_output_tokens = 512;
    std::string answer = capped ? apply_word_cap(input.answer, cap_words) : input.answer;
    if (metric == Metric::correctness) {
        req.system_prompt = prompts.judge_correctness_system;
        std::string body = prompts.judge_correctness_template;
        body = text::replace_all(std::move(body), "{id}", input.id);
        body = text::replace_all(std::move(body), "{question}", input.question);
        body = text::replace_all(std::move(body), "{gold}", input.gold_answer);
        body = text::replace_all(std::move(body), "{answer}", answer);
        req.user_content = body;
    } else {
        req.system_prompt = prompts.judge_faithfulness_system;
        std::string body = prompts.judge_faithfulness_template;
        body = text::replace_all(std::move(body), "{id}", input.id);
        body = text::replace_all(std::move(body), "{question}", input.question);
        body = text::replace_all(std::move(body), "{context}", input.context);
        body = text::replace_all(std::move(body), "{answer}", answer);
        req.user_content = body;
    }

    JudgeScore score;
    score.metric = metric;
    for (int attempt = 0; attempt < 3; ++attempt) {
        std::string reply;
        try {
            reply = client.complete(req);
        } catch (const BackendError& e) {
            score.rationale = e.what();
            continue;
        }
        if (auto v = parse_verdict(reply)) {
            auto [lo, hi] = metric_range(metric);
            score.value = std::clamp(*v, lo, hi);
            score.clamped = (*v < lo || *v > hi);
            std::size_t cut = reply.rfind("SCORE:");
            score.rationale = text::trim(reply.substr(0, cut));
            return score;
        }
        score.rationale = text::trim(reply);
    }
    score.missing = true;
    return score;
}

/// Fraction of gold ids present among the first k retrieved ids.
inline double recall_at_k(const std::vector<std::string>& retrieved,
                          const std::vector<std::string>& gold, int k) {
    if (k < 1) throw DataError("recall_at_k: k must be positive");
    std::set<std::string> gold_set(gold.begin(), gold.end());
    if (gold_set.empty()) throw DataError("recall_at_k: empty gold set");
    std::size_t hits = 0;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < retrieved.size() && i < static_cast<std::size_t>(k); ++i)
        if (gold_set.count(retrieved[i]) && seen.insert(retrieved[i]).second) ++hits;
    return static_cast<double>(hits) / static_cast<double>(gold_set.size());
}

/// The four graded cells one judge produces for one answer.
struct RecordScores {
    JudgeScore correctness;
    JudgeScore faithfulness;
    JudgeScore correctness_capped;
    JudgeScore faithfulness_capped;

    const JudgeScore& cell(Metric m, bool capped) const {
        if (m == Metric::correctness) return capped ? correctness_capped : correctness;
        return capped ? faithfulness_capped : faithfulness;
    }
};

struct EvalRecord {
    std::string id;
    std::string profile;
    std::string question;
    std::string gold_answer;
    std::string answer;
    std::vector<std::string> gold_ids;
    std::vector<std::string> retrieved_ids;
    std::optional<double> recall;  // at the configured k; absent without gold ids
    double seconds = 0.0;
    std::map<std::string, RecordScores> judges;  // judge name, insertion-stable by map order

    nlohmann::ordered_json to_json() const {
        auto score_json = [](const JudgeScore& s) {
            nlohmann::ordered_json j;
            j["value"] = s.missing ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(s.value);
            j["clamped"] = s.clamped;
            j["rationale"] = s.rationale;
            return j;
        };
        nlohmann::ordered_json j;
        j["id"] = id;
        j["profile"] = profile;
        j["question"] = question;
        j["gold_answer"] = gold_answer;
        j["answer"] = answer;
        j["gold_ids"] = gold_ids;
        j["retrieved_ids"] = retrieved_ids;
        j["recall"] = recall ? nlohmann::ordered_json(*recall) : nullptr;
        j["seconds"] = seconds;
        auto& js = j["judges"] = nlohmann::ordered_json::object();
        for (const auto& [name, scores] : judges) {
            js[name] = {{"correctness", score_json(scores.correctness)},
                        {"faithfulness", score_json(scores.faithfulness)},
                        {"correctness_capped", score_json(scores.correctness_capped)},
                        {"faithfulness_capped", score_json(scores.faithfulness_capped)}};
        }
        return j;
    }

    static EvalRecord from_json(const nlohmann::json& j) {
        auto score_from = [](const nlohmann::json& s, Metric m) {
            JudgeScore out;
            out.metric = m;
            if (s.at("value").is_null()) {
                out.missing = true;
            } else {
                out.value = s.at("value").get<double>();
            }
            out.clamped = s.at("clamped").get<bool>();
            out.rationale = s.at("rationale").get<std::string>();
            return out;
        };
        EvalRecord r;
        r.id = j.at("id").get<std::string>();
        r.profile = j.at("profile").get<std::string>();
        r.question = j.at("question").get<std::string>();
        r.gold_answer = j.at("gold_answer").get<std::string>();
        r.answer = j.at("answer").get<std::string>();
        r.gold_ids = j.at("gold_ids").get<std::vector<std::string>>();
        r.retrieved_ids = j.at("retrieved_ids").get<std::vector<std::string>>();
        if (!j.at("recall").is_null()) r.recall = j.at("recall").get<double>();
        r.seconds = j.at("seconds").get<double>();
        for (const auto& [name, scores] : j.at("judges").items()) {
            RecordScores rs;
            rs.correctness = score_from(scores.at("correctness"), Metric::correctness);
            rs.faithfulness = score_from(scores.at("faithfulness"), Metric::faithfulness);
            rs.correctness_capped = score_from(scores.at("correctness_capped"), Metric::correctness);
            rs.faithfulness_capped = score_from(scores.at("faithfulness_capped"), Metric::faithfulness);
            r.judges[name] = std::move(rs);
        }
        return r;
    }
};

struct NamedJudge {
    std::string name;
    ChatClient* client = nullptr;
};

struct EvalRunSummary {
    std::vector<EvalRecord> records;  // ascending question id
    std::size_t failed_traces = 0;    // traces carrying an error field, skipped
    std::size_t no_gold_ids = 0;      // records without gold ids, recall skipped
};

/// Grades every completed trace against its Q&A record with each judge, both
/// uncut and word-capped. Distinct records run concurrently; output order is
/// ascending question id regardless.
inline EvalRunSummary evaluate_traces(const std::vector<AnswerTrace>& traces,
                                      const std::vector<io::QaRecord>& qa,
                                      const std::vector<NamedJudge>& judges,
                                      const PromptSet& prompts, int cap_words = 300,
                                      int recall_k = 10, int concurrency = 4) {
    if (judges.empty()) throw ConfigError("evaluate_traces: no judges");
    if (concurrency < 1) throw ConfigError("evaluate_traces: concurrency must be positive");
    std::map<std::string, const io::QaRecord*> qa_by_id;
    for (const auto& r : qa) qa_by_id[r.id] = &r;

    EvalRunSummary summary;
    std::vector<const AnswerTrace*> work;
    for (const auto& t : traces) {
        if (!t.error.empty()) {
            ++summary.failed_traces;
            continue;
        }
        if (!qa_by_id.count(t.id)) throw DataError("no Q&A record for question id " + t.id);
        work.push_back(&t);
    }

    std::vector<EvalRecord> records(work.size());
    auto grade = [&](std::size_t i) {
        const AnswerTrace& t = *work[i];
        const io::QaRecord& q = *qa_by_id.at(t.id);
        EvalRecord r;
        r.id = t.id;
        r.profile = t.profile;
        r.question = q.question;
        r.gold_answer = q.gold_answer;
        r.answer = t.answer;
        r.gold_ids = q.gold_ids;
        r.retrieved_ids = t.final_ids();
        r.seconds = t.total_seconds();
        if (!q.gold_ids.empty()) r.recall = recall_at_k(r.retrieved_ids, q.gold_ids, recall_k);

        JudgeInput input{t.id, q.question, q.gold_answer, t.context, t.answer};
        for (const auto& [name, client] : judges) {
            RecordScores rs;
            rs.correctness = judge(input, Metric::correctness, false, *client, prompts, cap_words);
            rs.faithfulness = judge(input, Metric::faithfulness, false, *client, prompts, cap_words);
            rs.correctness_capped =
                judge(input, Metric::correctness, true, *client, prompts, cap_words);
            rs.faithfulness_capped =
                judge(input, Metric::faithfulness, true, *client, prompts, cap_words);
            r.judges[name] = std::move(rs);
        }
        records[i] = std::move(r);
    };

    if (concurrency == 1 || work.size() <= 1) {
        for (std::size_t i = 0; i < work.size(); ++i) grade(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(concurrency), work.size());
        for (std::size_t t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= records.size()) return;
                    grade(i);
                }
            });
        for (auto& th : pool) th.join();
    }

    for (const auto& r : records)
        if (!r.recall) ++summary.no_gold_ids;
    std::sort(records.begin(), records.end(),
              [](const EvalRecord& a, const EvalRecord& b) { return a.id < b.id; });
    summary.records = std::move(records);
    return summary;
}

struct MetricMean {
    double mean = 0.0;
    std::size_t counted = 0;
    std::size_t missing = 0;
};

inline std::string format_mean(const MetricMean& m) {
    if (m.counted == 0) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", m.mean);
    return buf;
}

struct ProfileRow {
    std::string profile;
    std::size_t questions = 0;
    MetricMean correctness;
    MetricMean faithfulness;
    MetricMean correctness_capped;
    MetricMean faithfulness_capped;
    MetricMean recall;
    double sec_per_question = 0.0;

    std::size_t missing_total() const {
        return correctness.missing + faithfulness.missing + correctness_capped.missing +
               faithfulness_capped.missing;
    }
};

struct AblationReport {
    std::string judge_name;
    int cap_words = 300;
    int recall_k = 10;
    std::vector<ProfileRow> rows;  // requested profile order

    std::string render_table() const {
        auto pad = [](std::string s, std::size_t w) {
            if (s.size() < w) s.append(w - s.size(), ' ');
            return s;
        };
        std::string cap = "<=" + std::to_string(cap_words) + "w";
        std::string out;
        out += pad("Pipeline", 14) + pad("Corr.", 8) + pad("Faith.", 8) +
               pad("Corr." + cap, 13) + pad("Faith." + cap, 13) +
               pad("Recall@" + std::to_string(recall_k), 11) + pad("Sec/Q", 8) + pad("N", 5) +
               "Missing\n";
        for (const auto& r : rows) {
            char secs[32];
            std::snprintf(secs, sizeof(secs), "%.2f", r.sec_per_question);
            out += pad(r.profile, 14) + pad(format_mean(r.correctness), 8) +
                   pad(format_mean(r.faithfulness), 8) + pad(format_mean(r.correctness_capped), 13) +
                   pad(format_mean(r.faithfulness_capped), 13) + pad(format_mean(r.recall), 11) +
                   pad(secs, 8) + pad(std::to_string(r.questions), 5) +
                   std::to_string(r.missing_total()) + "\n";
        }
        std::size_t missing = 0;
        for (const auto& r : rows) missing += r.missing_total();
        out += "judge: " + judge_name + "; scores are means over graded answers; " +
               std::to_string(missing) + " missing verdict(s) excluded\n";
        return out;
    }

    nlohmann::ordered_json to_json() const {
        auto mean_json = [](const MetricMean& m) {
            nlohmann::ordered_json j;
            j["mean"] = m.counted ? nlohmann::ordered_json(m.mean) : nullptr;
            j["counted"] = m.counted;
            j["missing"] = m.missing;
            return j;
        };
        nlohmann::ordered_json j;
        j["judge"] = judge_name;
        j["cap_words"] = cap_words;
        j["recall_k"] = recall_k;
        auto& rows_json = j["profiles"] = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            nlohmann::ordered_json row;
            row["profile"] = r.profile;
            row["questions"] = r.questions;
            row["correctness"] = mean_json(r.correctness);
            row["faithfulness"] = mean_json(r.faithfulness);
            row["correctness_capped"] = mean_json(r.correctness_capped);
            row["faithfulness_capped"] = mean_json(r.faithfulness_capped);
            row["recall"] = mean_json(r.recall);
            row["sec_per_question"] = std::round(r.sec_per_question * 100.0) / 100.0;
            rows_json.push_back(std::move(row));
        }
        return j;
    }
};

/// Means exclude missing verdicts; fold order is ascending question id so the
/// numbers are a pure function of the records.
inline AblationReport ablation_report(const std::vector<EvalRecord>& records,
                                      const std::vector<std::string>& profile_order,
                                      const std::string& judge_name, int cap_words = 300,
                                      int recall_k = 10) {
    if (records.empty()) throw DataError("ablation_report: no records");
    AblationReport report;
    report.judge_name = judge_name;
    report.cap_words = cap_words;
    report.recall_k = recall_k;

    for (const std::string& profile : profile_order) {
        std::vector<const EvalRecord*> subset;
        for (const auto& r : records)
            if (r.profile == profile) subset.push_back(&r);
        if (subset.empty()) throw DataError("ablation_report: no records for profile " + profile);
        std::sort(subset.begin(), subset.end(),
                  [](const EvalRecord* a, const EvalRecord* b) { return a->id < b->id; });

        ProfileRow row;
        row.profile = profile;
        row.questions = subset.size();
        auto fold = [&](MetricMean& m, auto&& pick) {
            double sum = 0.0;
            for (const EvalRecord* r : subset) {
                std::optional<double> v = pick(*r);
                if (!v) {
                    ++m.missing;
                    continue;
                }
                sum += *v;
                ++m.counted;
            }
            if (m.counted) m.mean = sum / static_cast<double>(m.counted);
        };
        auto cell = [&](const EvalRecord& r, Metric m, bool capped) -> std::optional<double> {
            auto it = r.judges.find(judge_name);
            if (it == r.judges.end()) throw DataError("record " + r.id + " lacks judge " + judge_name);
            const JudgeScore& s = it->second.cell(m, capped);
            if (s.missing) return std::nullopt;
            return s.value;
        };
        fold(row.correctness, [&](const EvalRecord& r) { return cell(r, Metric::correctness, false); });
        fold(row.faithfulness,
             [&](const EvalRecord& r) { return cell(r, Metric::faithfulness, false); });
        fold(row.correctness_capped,
             [&](const EvalRecord& r) { return cell(r, Metric::correctness, true); });
        fold(row.faithfulness_capped,
             [&](const EvalRecord& r) { return cell(r, Metric::faithfulness, true); });
        fold(row.recall, [](const EvalRecord& r) { return r.recall; });
        double total = 0.0;
        for (const EvalRecord* r : subset) total += r->seconds;
        row.sec_per_question = total / static_cast<double>(subset.size());
        report.rows.push_back(std::move(row));
    }
    return report;
}

struct AgreementRow {
    std::string cell;  // correctness, faithfulness, correctness_capped, faithfulness_capped
    std::size_t shared = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
};

/// Per-judge means over the records both judges scored, cell by cell.
inline std::vector<AgreementRow> judge_agreement(const std::vector<EvalRecord>& records,
                                                 const std::string& judge_a,
                                                 const std::string& judge_b) {
    struct CellRef {
        const char* name;
        Metric metric;
        bool capped;
    };
    static const CellRef cells[] = {{"correctness", Metric::correctness, false},
                                    {"faithfulness", Metric::faithfulness, false},
                                    {"correctness_capped", Metric::correctness, true},
                                    {"faithfulness_capped", Metric::faithfulness, true}};
    std::vector<AgreementRow> rows;
    std::size_t any_shared = 0;
    for (const auto& c : cells) {
        AgreementRow row;
        row.cell = c.name;
        double sum_a = 0.0, sum_b = 0.0;
        for (const auto& r : records) {
            auto a = r.judges.find(judge_a);
            auto b = r.judges.find(judge_b);
            if (a == r.judges.end() || b == r.judges.end()) continue;
            const JudgeScore& sa = a->second.cell(c.metric, c.capped);
            const JudgeScore& sb = b->second.cell(c.metric, c.capped);
            if (sa.missing || sb.missing) continue;
            sum_a += sa.value;
            sum_b += sb.value;
            ++row.shared;
        }
        if (row.shared) {
            row.mean_a = sum_a / static_cast<double>(row.shared);
            row.mean_b = sum_b / static_cast<double>(row.shared);
        }
        any_shared += row.shared;
        rows.push_back(std::move(row));
    }
    if (any_shared == 0)
        throw DataError("judge_agreement: judges " + judge_a + " and " + judge_b +
                        " share no scored records");
    return rows;
}

}  // namespace ragpipe::eval
