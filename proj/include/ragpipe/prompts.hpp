#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "ragpipe/config.hpp"
#include "ragpipe/core.hpp"
#include "ragpipe/text.hpp"

namespace ragpipe {

namespace prompts {

inline constexpr const char* kRewriteSystem =
    "You are a helpful assistant. Your task is to rewrite sentences by correcting typos "
    "and improving the wording to ensure they are written in clear, natural English. "
    "If a typo is intentional or acceptable as-is, leave it unchanged.";

// Placeholders: {question}, {choices_str}
inline constexpr const char* kRoutingTemplate =
    "Q: {question}\n"
    "\n"
    "Available namespaces:\n"
    "{choices_str}\n"
    "\n"
    "Step1: Identify what the question is about.\n"
    "Step2: Choose only the most relevant namespaces.\n"
    "Step3: Return final result in \\boxed{}.\n";

// Placeholders: {context}, {query}
inline constexpr const char* kGenerationTemplate =
    "Context:\n"
    "{context}\n"
    "\n"
    "Question:\n"
    "{query}\n";

inline constexpr const char* kAssistantSystem = "You are a helpful assistant.";

inline constexpr const char* kJudgeCorrectnessSystem =
    "You are an impartial judge of answer quality. Grade the candidate answer for "
    "correctness on a continuous scale from -1 to 2, where -1 means the answer is "
    "incorrect and 2 means the answer is fully correct and relevant with no extraneous "
    "information. Intermediate real values are allowed. End your reply with a final "
    "line of the form: SCORE: <number>";

inline constexpr const char* kJudgeFaithfulnessSystem =
    "You are an impartial judge of grounding. Grade the candidate answer for "
    "faithfulness on a continuous scale from -1 to 1, where -1 means the answer has no "
    "grounding at all in the retrieved passages and 1 means the entire answer is fully "
    "supported by the retrieved content. Intermediate real values are allowed. End your "
    "reply with a final line of the form: SCORE: <number>";

// Placeholders: {id}, {question}, {gold}, {answer}
inline constexpr const char* kJudgeCorrectnessTemplate =
    "Question ID: {id}\n"
    "\n"
    "Question:\n"
    "{question}\n"
    "\n"
    "Reference answer:\n"
    "{gold}\n"
    "\n"
    "Candidate answer:\n"
    "{answer}\n";

// Placeholders: {id}, {question}, {context}, {answer}
inline constexpr const char* kJudgeFaithfulnessTemplate =
    "Question ID: {id}\n"
    "\n"
    "Question:\n"
    "{question}\n"
    "\n"
    "Retrieved passages:\n"
    "{context}\n"
    "\n"
    "Candidate answer:\n"
    "{answer}\n";

}  // namespace prompts

/// The prompt texts used by the pipeline. Defaults are compiled in; any of
/// them can be replaced by a text asset named in the config.
struct PromptSet {
    std::string rewrite_system = prompts::kRewriteSystem;
    std::string routing_template = prompts::kRoutingTemplate;
    std::string generation_template = prompts::kGenerationTemplate;
    std::string judge_correctness_system = prompts::kJudgeCorrectnessSystem;
    std::string judge_faithfulness_system = prompts::kJudgeFaithfulnessSystem;
    std::string judge_correctness_template = prompts::kJudgeCorrectnessTemplate;
    std::string judge_faithfulness_template = prompts::kJudgeFaithfulnessTemplate;

    static PromptSet from_config(const PromptPaths& paths) {
        PromptSet p;
        auto load = [](const std::string& path, std::string& target) {
            if (path.empty()) return;
            std::ifstream in(path, std::ios::binary);
            if (!in) throw ConfigError("cannot open prompt asset: " + path);
            std::ostringstream os;
            os << in.rdbuf();
            target = os.str();
        };
        load(paths.rewrite, p.rewrite_system);
        load(paths.routing, p.routing_template);
        load(paths.generation, p.generation_template);
        load(paths.judge_correctness, p.judge_correctness_system);
        load(paths.judge_faithfulness, p.judge_faithfulness_system);
        return p;
    }

    std::string fill_routing(const std::string& question, const std::string& choices_str) const {
        std::string s = text::replace_all(routing_template, "{question}", question);
        return text::replace_all(std::move(s), "{choices_str}", choices_str);
    }

    std::string fill_generation(const std::string& context, const std::string& query) const {
        std::string s = text::replace_all(generation_template, "{context}", context);
        return text::replace_all(std::move(s), "{query}", query);
    }
};

}  // namespace ragpipe
