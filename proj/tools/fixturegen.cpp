// Regenerates the test fixture tree. Run from the repo root:
//   build/tools/fixturegen tests/fixtures
// Output is fully deterministic; the golden trace is the frozen reference the
// regression suite compares against byte for byte.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ragpipe/ragpipe.hpp"

using namespace ragpipe;

namespace {

const std::vector<std::string> kNamespaces = {
    "arts",      "automotive", "business",  "climate",  "cooking",  "economy",
    "education", "energy",     "fashion",   "finance",  "gaming",   "gardening",
    "geography", "health",     "history",   "law",      "music",    "politics",
    "science",   "software",   "sports",    "travel",   "weather",  "wildlife"};

const std::vector<std::string> kFormats = {
    "news-report",   "blog-post",    "tutorial",    "faq",          "review",
    "interview",     "guide",        "listicle",    "editorial",    "qa-thread",
    "press-release", "essay",        "transcript",  "product-page", "wiki-entry",
    "changelog",     "newsletter",   "recipe-card", "case-study",   "manual",
    "forum-thread",  "datasheet",    "timeline",    "glossary"};

const std::map<std::string, std::vector<std::string>> kVocab = {
    {"arts", {"gallery", "sculpture", "curator", "exhibition"}},
    {"automotive", {"engine", "chassis", "torque", "dealership"}},
    {"business", {"merger", "revenue", "startup", "quarterly"}},
    {"climate", {"emission", "carbon", "glacier", "mitigation"}},
    {"cooking", {"recipe", "simmer", "seasoning", "skillet"}},
    {"economy", {"inflation", "tariff", "labor", "forecast"}},
    {"education", {"curriculum", "tuition", "classroom", "literacy"}},
    {"energy", {"turbine", "grid", "reactor", "solar"}},
    {"fashion", {"runway", "fabric", "tailoring", "couture"}},
    {"finance", {"dividend", "portfolio", "hedge", "ledger"}},
    {"gaming", {"console", "quest", "multiplayer", "speedrun"}},
    {"gardening", {"compost", "mulch", "perennial", "trellis"}},
    {"geography", {"plateau", "archipelago", "delta", "longitude"}},
    {"health", {"vaccine", "nutrition", "diagnosis", "therapy"}},
    {"history", {"empire", "archive", "dynasty", "treaty"}},
    {"law", {"statute", "verdict", "plaintiff", "appeal"}},
    {"music", {"chord", "festival", "vinyl", "orchestra"}},
    {"politics", {"ballot", "senate", "coalition", "referendum"}},
    {"science", {"laboratory", "hypothesis", "particle", "peer"}},
    {"software", {"compiler", "debugging", "kernel", "refactor"}},
    {"sports", {"stadium", "tournament", "referee", "playoff"}},
    {"travel", {"itinerary", "hostel", "passport", "excursion"}},
    {"weather", {"cyclone", "humidity", "barometer", "frost"}},
    {"wildlife", {"habitat", "migration", "predator", "conservation"}}};

std::string passage_id(const std::string& ns, int j) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%03d", j);
    return ns + "-" + buf;
}

std::string passage_text(const std::string& ns, int j, const std::string& format) {
    const auto& words = kVocab.at(ns);
    const std::string& wa = words[static_cast<std::size_t>(j) % 4];
    const std::string& wb = words[static_cast<std::size_t>(j + 1) % 4];
    const std::string& wc = words[static_cast<std::size_t>(j + 2) % 4];
    std::string code = ns + std::to_string(j) + std::to_string(j);
    if (j % 2 == 0) {
        return "This " + format + " covers " + ns + " topic " + std::to_string(j) + ": " + wa +
               " trends, " + wb + " basics, and why " + wc + " matters. Filed under " + ns +
               " with reference code " + code + ".";
    }
    return "A " + format + " from the " + ns + " desk. It walks through " + wa + " and " + wb +
           " step by step, then returns to " + wc + " twice because " + wa +
           " keeps coming up. Reference code " + code + ".";
}

}  // namespace

int main(int argc, char** argv) {
    std::filesystem::path dir = argc > 1 ? argv[1] : "tests/fixtures";
    std::filesystem::create_directories(dir);
    std::filesystem::create_directories(dir / "golden");

    // corpus.jsonl, tags.jsonl, corpus_manifest.json
    std::vector<Passage> corpus;
    std::vector<nlohmann::ordered_json> corpus_rows, tag_rows;
    std::map<std::string, std::size_t> ns_counts;
    for (std::size_t n = 0; n < kNamespaces.size(); ++n) {
        const std::string& ns = kNamespaces[n];
        for (int j = 1; j <= 10; ++j) {
            const std::string& format = kFormats[(n * 10 + static_cast<std::size_t>(j)) % 24];
            Passage p;
            p.id = passage_id(ns, j);
            p.text = passage_text(ns, j, format);
            p.ns = NamespaceLabel(ns);
            p.topic_tag = ns;
            p.format_tag = format;
            corpus.push_back(p);
            ++ns_counts[ns];
            Passage bare = p;  // corpus file carries no tags; ingest joins them
            bare.topic_tag.reset();
            bare.format_tag.reset();
            corpus_rows.push_back(io::passage_to_json(bare));
            tag_rows.push_back({{"id", p.id}, {"topic", ns}, {"format", format}});
        }
    }
    io::write_jsonl(dir / "corpus.jsonl", corpus_rows);
    io::write_jsonl(dir / "tags.jsonl", tag_rows);

    nlohmann::ordered_json manifest;
    manifest["total"] = corpus.size();
    auto& per_ns = manifest["per_namespace"] = nlohmann::ordered_json::object();
    for (const auto& [ns, count] : ns_counts) per_ns[ns] = count;
    io::write_file(dir / "corpus_manifest.json", manifest.dump(2) + "\n");

    // qa.jsonl: two single-document questions per namespace plus one
    // two-document comparison per even namespace, 60 in all.
    std::vector<io::QaRecord> qa;
    int qnum = 0;
    auto next_qid = [&qnum] {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "q%03d", ++qnum);
        return std::string(buf);
    };
    for (std::size_t n = 0; n < kNamespaces.size(); ++n) {
        const std::string& ns = kNamespaces[n];
        const auto& words = kVocab.at(ns);
        int j1 = static_cast<int>(n % 10) + 1;
        int j2 = (j1 % 10) + 1;

        io::QaRecord steps;
        steps.id = next_qid();
        steps.question = "What are the steps the " + ns + " desk suggests for handling " +
                         words[static_cast<std::size_t>(j1) % 4] + "?";
        steps.gold_answer = passage_text(ns, j1, *corpus[n * 10 + static_cast<std::size_t>(j1) - 1]
                                                      .format_tag);
        steps.category = "Procedural";
        steps.gold_ids = {passage_id(ns, j1)};
        qa.push_back(steps);

        io::QaRecord count;
        count.id = next_qid();
        count.question = "Which reference code does the " + ns + " entry give for " +
                         words[static_cast<std::size_t>(j2) % 4] + "?";
        count.gold_answer = "Reference code " + ns + std::to_string(j2) + std::to_string(j2) + ".";
        count.category = "Quantitative";
        count.gold_ids = {passage_id(ns, j2)};
        qa.push_back(count);

        if (n % 2 == 0) {
            io::QaRecord compare;
            compare.id = next_qid();
            compare.question = "How does " + words[0] + " compare with " + words[2] +
                               " across the " + ns + " entries?";
            compare.gold_answer = "The two " + ns + " entries treat " + words[0] + " and " +
                                  words[2] + " differently.";
            compare.category = "Comparison";
            compare.gold_ids = {passage_id(ns, j1), passage_id(ns, j2)};
            qa.push_back(compare);
        }
    }
    {
        std::vector<nlohmann::ordered_json> rows;
        for (const auto& r : qa) rows.push_back(r.to_json());
        io::write_jsonl(dir / "qa.jsonl", rows);
    }

    // Five-question subset for the ablation ladder. The first one carries a
    // doubled space so the rewrite stage visibly normalizes it.
    std::vector<io::QaRecord> ablate;
    {
        io::QaRecord q;
        q.id = "a01";
        q.question = "What are the  steps for handling the sports playoff schedule?";
        q.gold_answer = passage_text("sports", 3, kFormats[(20 * 10 + 3) % 24]);
        q.category = "Procedural";
        q.gold_ids = {passage_id("sports", 3)};
        ablate.push_back(q);
    }
    {
        io::QaRecord q;
        q.id = "a02";
        q.question = "Which seasoning advice appears in the cooking notes?";
        q.gold_answer = passage_text("cooking", 2, kFormats[(4 * 10 + 2) % 24]);
        q.category = "Procedural";
        q.gold_ids = {passage_id("cooking", 2)};
        ablate.push_back(q);
    }
    {
        io::QaRecord q;
        q.id = "a03";
        q.question = "Why does the science desk keep returning to the hypothesis?";
        q.gold_answer = passage_text("science", 1, kFormats[(18 * 10 + 1) % 24]);
        q.category = "Causal";
        q.gold_ids = {passage_id("science", 1)};
        ablate.push_back(q);
    }
    {
        io::QaRecord q;
        q.id = "a04";
        q.question = "Which reference code does the travel entry give for the passport guide?";
        q.gold_answer = "Reference code travel44.";
        q.category = "Quantitative";
        q.gold_ids = {passage_id("travel", 4)};
        ablate.push_back(q);
    }
    {
        io::QaRecord q;
        q.id = "a05";
        q.question = "Does the music festival coverage mention vinyl at all?";
        q.gold_answer = "Yes, the music entry mentions vinyl.";
        q.category = "Verification";
        q.gold_ids = {passage_id("music", 5)};
        ablate.push_back(q);
    }
    {
        std::vector<nlohmann::ordered_json> rows;
        for (const auto& r : ablate) rows.push_back(r.to_json());
        io::write_jsonl(dir / "ablate_questions.jsonl", rows);
    }

    // Scripted verdicts for the ablation subset, one pair per question.
    {
        std::vector<nlohmann::ordered_json> rows;
        const double correctness[] = {2.0, 1.0, 0.0, 1.5, -1.0};
        const double faithfulness[] = {1.0, 0.5, 0.0, 0.75, -0.5};
        for (std::size_t i = 0; i < ablate.size(); ++i) {
            rows.push_back({{"id", ablate[i].id}, {"metric", "correctness"}, {"score", correctness[i]}});
            rows.push_back(
                {{"id", ablate[i].id}, {"metric", "faithfulness"}, {"score", faithfulness[i]}});
        }
        io::write_jsonl(dir / "judge_script.jsonl", rows);
    }

    // Config matching the fixture corpus; backends stay on the built-in mocks.
    {
        nlohmann::ordered_json cfg;
        cfg["namespaces"] = kNamespaces;
        cfg["index"] = {{"path", "fixture-index"}};
        io::write_file(dir / "config.json", cfg.dump(2) + "\n");
    }

    // Golden trace: full pipeline, all mocks, fixed-tick clock.
    {
        PipelineConfig config = config_from_json({{"namespaces", kNamespaces}});
        MockEmbedder embedder(config.embedder.dimension);
        LocalIndex index(embedder.dimension(), config.namespaces);
        for (std::size_t n = 0; n < kNamespaces.size(); ++n) {
            std::vector<std::pair<Passage, EmbeddingVector>> entries;
            std::vector<std::string> texts;
            for (int j = 1; j <= 10; ++j) texts.push_back(corpus[n * 10 + static_cast<std::size_t>(j) - 1].text);
            auto vectors = embedder.embed(texts);
            for (int j = 1; j <= 10; ++j)
                entries.emplace_back(corpus[n * 10 + static_cast<std::size_t>(j) - 1],
                                     vectors[static_cast<std::size_t>(j) - 1]);
            index.upsert(config.namespaces.require(kNamespaces[n]), entries);
        }
        MockChat chat;
        MockReranker reranker;
        PromptSet prompts;
        TickClock clock;
        PipelineDeps deps{config, prompts, index, embedder, chat, reranker, clock};
        AnswerTrace trace =
            run_query(ablate[0].question, ablate[0].id, AblationProfile::rewrite, deps);
        io::write_file(dir / "golden" / "trace_rewrite.jsonl", trace.to_json().dump() + "\n");
    }

    std::cout << "fixtures written to " << dir.string() << "\n";
    return 0;
}
