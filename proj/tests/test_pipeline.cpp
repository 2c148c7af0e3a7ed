#include "doctest.h"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "umae/errors.hpp"
#include "umae/fixture.hpp"
#include "umae/pipeline.hpp"
#include "umae/scorer.hpp"

using namespace umae;
using umae::testing::TempDir;
using umae::testing::make_instance;
using umae::testing::read_text;
using umae::testing::write_text;

namespace fs = std::filesystem;

TEST_CASE("parallel_map keeps results at their index for any worker count") {
    const std::function<size_t(size_t)> square = [](size_t i) { return i * i; };
    const std::vector<size_t> serial = parallel_map<size_t>(100, 1, square);
    const std::vector<size_t> threaded = parallel_map<size_t>(100, 7, square);
    const std::vector<size_t> overprovisioned = parallel_map<size_t>(3, 16, square);
    CHECK(serial == threaded);
    CHECK(serial[99] == 9801);
    CHECK(overprovisioned == std::vector<size_t>{0, 1, 4});
    CHECK(parallel_map<int>(0, 4, [](size_t) { return 1; }).empty());
}

TEST_CASE("parallel_map rethrows the first worker exception") {
    std::atomic<int> calls{0};
    const std::function<int(size_t)> boom = [&calls](size_t i) {
        ++calls;
        if (i == 5) {
            throw ValidationError("boom");
        }
        return 0;
    };
    CHECK_THROWS_AS(parallel_map<int>(20, 4, boom), ValidationError);
    CHECK(calls.load() >= 6); // at least up to the failing index
}

TEST_CASE("joint generations split on the separator, bare answers pass through") {
    CHECK(joint_parts("red <#SEP#> it is red", kDefaultSeparator) ==
          std::pair<std::string, std::string>{"red", "it is red"});
    CHECK(joint_parts("  red  ", kDefaultSeparator) == std::pair<std::string, std::string>{"red", ""});
    CHECK(joint_parts("", kDefaultSeparator) == std::pair<std::string, std::string>{"", ""});
}

TEST_CASE("scoring contexts are BOS plus the tokenized task input") {
    const PromptRegistry registry = PromptRegistry::defaults();
    const VqaInstance inst = make_instance("a");
    const std::vector<std::string> context =
        scoring_context(inst, TaskShape::kQToA, registry, BuildOptions{});
    CHECK(context == std::vector<std::string>{"<s>", "<#AOKA#>", "what", "color", "is", "the", "cat"});
}

TEST_CASE("answer options tokenize with a terminating EOS") {
    const auto lists = option_token_lists({"red", "not blue", "Red"});
    REQUIRE(lists.size() == 3);
    CHECK(lists[0] == std::vector<std::string>{"red", "</s>"});
    CHECK(lists[1] == std::vector<std::string>{"not", "blue", "</s>"});
    CHECK(lists[2] == std::vector<std::string>{"red", "</s>"}); // reference tokenizer lowercases
}

namespace {

Json minimal_config() {
    return Json{{"datasets", Json{{"AOKVQA", "a.jsonl"}}}, {"eval_dataset", "AOKVQA"}, {"selection", "ppl"}};
}

fs::path write_config(const TempDir& tmp, const Json& j, const std::string& name = "cfg.json") {
    write_text(tmp.file(name), j.dump());
    return tmp.file(name);
}

} // namespace

TEST_CASE("pipeline config defaults and relative-path resolution") {
    TempDir tmp;
    const PipelineConfig cfg = load_pipeline_config(write_config(tmp, minimal_config()));
    CHECK(cfg.seed == 0);
    CHECK(cfg.jobs == 1);
    CHECK(cfg.train_fraction == 0.8);
    CHECK(cfg.datasets.at(Dataset::kAokvqa) == tmp.file("a.jsonl"));
    CHECK(cfg.eval_dataset == Dataset::kAokvqa);
    CHECK(cfg.tasks.empty());
    CHECK(cfg.ngram_order == 3);
    CHECK(cfg.ngram_k == 0.1);
    CHECK(cfg.scorer_spec.empty());
    CHECK(cfg.decode.strategy == DecodeStrategy::kBeam);
    CHECK(cfg.selection == "ppl");
    CHECK(cfg.gate_mode == GateMode::kMc);
    CHECK(cfg.da_threshold == 0.0);
    CHECK_FALSE(cfg.strip_articles);
    CHECK_FALSE(cfg.objects_after_question);
    CHECK(cfg.model_name == "umae_ref");
    CHECK(cfg.out_dir == tmp.file("out"));

    // The echo names files without paths and omits resource-only knobs.
    const Json echo = cfg.to_json();
    CHECK(echo["datasets"]["AOKVQA"] == "a.jsonl");
    CHECK_FALSE(echo.contains("jobs"));
    CHECK_FALSE(echo.contains("out_dir"));
    CHECK_FALSE(echo.contains("scorer"));
}

TEST_CASE("pipeline config rejects out-of-range and inconsistent settings") {
    TempDir tmp;
    auto expect_config_error = [&tmp](const char* name, Json j) {
        CHECK_THROWS_AS(load_pipeline_config(write_config(tmp, j, name)), ConfigError);
    };

    Json j = minimal_config();
    j["jobs"] = 0;
    expect_config_error("jobs.json", j);

    j = minimal_config();
    j["train_fraction"] = 0.0;
    expect_config_error("tf0.json", j);
    j["train_fraction"] = 1.5;
    expect_config_error("tf2.json", j);

    j = minimal_config();
    j.erase("datasets");
    expect_config_error("nods.json", j);
    j["datasets"] = Json::object();
    expect_config_error("emptyds.json", j);

    j = minimal_config();
    j.erase("eval_dataset");
    expect_config_error("noeval.json", j);
    j["eval_dataset"] = "VCR"; // not among the dataset files
    expect_config_error("evalmiss.json", j);

    j = minimal_config();
    j["tasks"] = Json{{"AOKVQA", Json::array()}};
    expect_config_error("notasks.json", j);

    j = minimal_config();
    j["ngram"] = Json{{"order", 0}};
    expect_config_error("order.json", j);
    j["ngram"] = Json{{"k", 0.0}};
    expect_config_error("k.json", j);

    j = minimal_config();
    j["selection"] = "greedy";
    expect_config_error("sel.json", j);
    j["selection"] = "both"; // needs an embeddings file
    expect_config_error("emb.json", j);

    j = minimal_config();
    j["gate"] = Json{{"mode", "consensus"}};
    expect_config_error("gate.json", j);

    write_text(tmp.file("garbage.json"), "{nope");
    CHECK_THROWS_AS(load_pipeline_config(tmp.file("garbage.json")), ParseError);
    write_text(tmp.file("array.json"), "[]");
    CHECK_THROWS_AS(load_pipeline_config(tmp.file("array.json")), ParseError);
}

TEST_CASE("evaluate_generations gates answers and folds in external scores") {
    std::vector<VqaInstance> instances{make_instance("a"), make_instance("b"), make_instance("c")};
    instances[0].explanations = {"it is red", "it is really red"};
    instances[1].explanations = {"it is blue"};
    // c keeps no explanations: gated but never enters the explanation corpus.

    const std::map<std::string, std::string> generations{
        {"a", "red <#SEP#> it is red"},
        {"b", "blue <#SEP#> it is blue"},
        {"c", "red"},
    };
    const std::map<std::string, size_t> chosen{{"a", 0}, {"b", 1}, {"c", 0}};

    TempDir tmp;
    write_text(tmp.file("bert.csv"), "id,value\na,0.8\nc,0.6\n");
    EvaluateSpec spec;
    spec.model_name = "unit";
    spec.external_scores = {{"BERTScore", tmp.file("bert.csv")}};
    spec.config_echo = Json{{"x", 1}};

    const EvalReport report = evaluate_generations(instances, generations, chosen, spec);
    CHECK(report.model_name == "unit");
    CHECK(report.score.s_t == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(report.score.gated_count == 2);
    CHECK_FALSE(report.score.empty_gate);
    CHECK(report.correctness ==
          std::map<std::string, bool>{{"a", true}, {"b", false}, {"c", true}});

    // Answer-text consensus: "red" vs {red,red,blue} = 4/9; "blue" = 2/9.
    CHECK(report.per_instance.at("VQA-acc").at("a") == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
    CHECK(report.per_instance.at("VQA-acc").at("b") == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
    CHECK(report.corpus_metrics.at("VQA-acc") == doctest::Approx(1000.0 / 27.0).epsilon(1e-12));

    // Explanations score only on gated instances that carry gold explanations.
    CHECK(report.per_instance.at("ROUGE-L").size() == 1);
    CHECK(report.per_instance.at("ROUGE-L").count("a") == 1);
    CHECK(report.corpus_metrics.at("ROUGE-L") == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(report.corpus_metrics.at("BLEU-1") == doctest::Approx(100.0).epsilon(1e-12));

    // External rows outside the explanation subset are dropped before the mean.
    CHECK(report.corpus_metrics.at("BERTScore") == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(report.per_instance.at("BERTScore") == std::map<std::string, double>{{"a", 0.8}});
    CHECK(report.score.members == std::vector<std::string>{"ROUGE-L", "METEOR", "CIDEr"});
    CHECK(report.config_echo == Json{{"x", 1}});

    CHECK_THROWS_AS(evaluate_generations({}, {}, {}, spec), ValidationError);
    CHECK_THROWS_AS(evaluate_generations(instances, generations, {}, spec), MissingPrediction);
}

TEST_CASE("evaluate_generations in direct-answer mode thresholds the consensus") {
    std::vector<VqaInstance> instances{make_instance("a"), make_instance("b")};
    const std::map<std::string, std::string> generations{{"a", "red"}, {"b", "blue"}};
    EvaluateSpec spec;
    spec.gate_mode = GateMode::kDa;
    spec.da_threshold = 0.3; // 4/9 passes, 2/9 does not
    const EvalReport report = evaluate_generations(instances, generations, {}, spec);
    CHECK(report.score.s_t == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(report.correctness == std::map<std::string, bool>{{"a", true}, {"b", false}});
    // Neither instance has explanations, so the gate is empty by convention.
    CHECK(report.score.empty_gate);
    CHECK(report.score.s_o == 0.0);
    CHECK_FALSE(report.score.s_e.has_value());
}

TEST_CASE("the fixture pipeline runs end to end, deterministically") {
    TempDir tmp;
    write_fixture(tmp.file("fx"));
    PipelineConfig cfg = load_pipeline_config(tmp.file("fx") / "pipeline.json");
    cfg.out_dir = tmp.file("out1");
    const PipelineOutcome outcome = run_pipeline(cfg);

    // Scorecard: the reference model answers every held-out question
    // correctly; the composite explanation score is a frozen regression pin.
    const EvalReport& report = outcome.report;
    CHECK(report.score.s_t == 100.0);
    CHECK(report.score.gated_count == 12);
    CHECK(report.correctness.size() == 12);
    for (const auto& [id, correct] : report.correctness) {
        CHECK(correct);
    }
    REQUIRE(report.score.s_e.has_value());
    CHECK(*report.score.s_e == doctest::Approx(74.43854496195031).epsilon(1e-9));
    CHECK(report.score.s_o == doctest::Approx(*report.score.s_e).epsilon(1e-12));
    CHECK(*report.score.ngram_score == doctest::Approx(65.89204627708678).epsilon(1e-9));
    CHECK(report.score.members ==
          std::vector<std::string>{"ROUGE-L", "METEOR", "CIDEr", "SPICE"});
    CHECK(report.corpus_metrics.at("VQA-acc") == 100.0);
    CHECK(report.corpus_metrics.at("ROUGE-L") == doctest::Approx(200.0 / 3.0).epsilon(1e-9));
    CHECK(report.corpus_metrics.at("BLEU-1") == doctest::Approx(100.0 * std::exp(-0.5)).epsilon(1e-9));
    CHECK(report.corpus_metrics.at("BLEU-4") == 0.0);
    CHECK(report.corpus_metrics.at("METEOR") == doctest::Approx(65.43209876543212).epsilon(1e-9));
    CHECK(report.corpus_metrics.at("CIDEr") == doctest::Approx(288.1866383301342).epsilon(1e-9));
    CHECK(report.corpus_metrics.at("SPICE") == doctest::Approx(37.1025).epsilon(1e-9));
    CHECK(report.corpus_metrics.at("BERTScore") == doctest::Approx(85.5325).epsilon(1e-9));

    // Every stage leaves its artifact; choices only exist where options do.
    const fs::path out = tmp.file("out1");
    for (const char* name :
         {"mixed.jsonl", "model.json", "report.json", "report.txt", "examples_okvqa.jsonl",
          "examples_aokvqa.jsonl", "examples_vcr.jsonl", "generations_okvqa.jsonl",
          "generations_aokvqa.jsonl", "generations_vcr.jsonl", "choices_aokvqa.jsonl",
          "choices_vcr.jsonl"}) {
        CHECK(fs::exists(out / name));
    }
    CHECK_FALSE(fs::exists(out / "choices_okvqa.jsonl"));
    for (const char* name : {"okvqa", "aokvqa", "vcr"}) {
        CHECK(fs::exists(out / "splits" / (std::string(name) + "_train.jsonl")));
        CHECK(fs::exists(out / "splits" / (std::string(name) + "_val.jsonl")));
    }

    // The written report re-parses to the in-memory one.
    const EvalReport reloaded = report_from_json(Json::parse(read_text(outcome.report_json)));
    CHECK(reloaded.model_name == report.model_name);
    CHECK(reloaded.score.s_o == report.score.s_o);
    CHECK(reloaded.corpus_metrics == report.corpus_metrics);
    CHECK(read_text(outcome.report_txt) == render_table({report}));

    // Re-running, and running on three workers, reproduces every byte.
    PipelineConfig cfg2 = cfg;
    cfg2.out_dir = tmp.file("out2");
    run_pipeline(cfg2);
    PipelineConfig cfg3 = cfg;
    cfg3.jobs = 3;
    cfg3.out_dir = tmp.file("out3");
    run_pipeline(cfg3);
    for (const char* name : {"report.json", "generations_aokvqa.jsonl", "mixed.jsonl", "model.json"}) {
        const std::string first = read_text(out / name);
        CHECK(first == read_text(tmp.file("out2") / name));
        CHECK(first == read_text(tmp.file("out3") / name));
    }
}

TEST_CASE("stage failures carry the stage name") {
    TempDir tmp;
    Json j = minimal_config();
    j["datasets"]["AOKVQA"] = "missing.jsonl";
    const PipelineConfig cfg = load_pipeline_config(write_config(tmp, j));
    try {
        run_pipeline(cfg);
        FAIL("expected the split stage to fail");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).rfind("split: ", 0) == 0);
    }
}
