#include "umae/pipeline.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <utility>

#include "umae/errors.hpp"
#include "umae/extern_scorer.hpp"
#include "umae/jsonl.hpp"
#include "umae/metrics.hpp"
#include "umae/rng.hpp"
#include "umae/select.hpp"
#include "umae/text.hpp"

namespace umae {

namespace {

namespace fs = std::filesystem;

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute()) {
        return p;
    }
    return base / p;
}

// Runs one pipeline stage, prefixing any failure with the stage name so a
// multi-stage run reports where it died.
template <typename F>
void stage(const std::string& name, F&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        throw Error(name + ": " + e.what());
    }
}

std::string lower_name(Dataset ds) {
    return to_lower(dataset_name(ds));
}

bool iequals(const std::string& a, const std::string& b) {
    return to_lower(a) == to_lower(b);
}

} // namespace

std::pair<std::string, std::string> joint_parts(const std::string& text, const std::string& separator) {
    try {
        return parse_joint(text, separator);
    } catch (const NoSeparator&) {
        return {trim(text), std::string{}};
    }
}

std::vector<std::string> scoring_context(const VqaInstance& instance, TaskShape task,
                                         const PromptRegistry& registry, const BuildOptions& options) {
    std::vector<std::string> context{kBosToken};
    for (std::string& tok : ref_tokenize(generation_input(instance, task, registry, options))) {
        context.push_back(std::move(tok));
    }
    return context;
}

std::vector<std::vector<std::string>> option_token_lists(const std::vector<std::string>& options) {
    std::vector<std::vector<std::string>> lists;
    lists.reserve(options.size());
    for (const std::string& option : options) {
        std::vector<std::string> tokens = ref_tokenize(option);
        tokens.push_back(kEosToken);
        lists.push_back(std::move(tokens));
    }
    return lists;
}

Json PipelineConfig::to_json() const {
    // Paths are echoed by filename only so a report is byte-stable across
    // working directories.
    Json datasets_json = Json::object();
    for (const auto& [ds, path] : datasets) {
        datasets_json[std::string(dataset_name(ds))] = path.filename().string();
    }
    Json tasks_json = Json::object();
    for (const auto& [ds, shapes] : tasks) {
        Json names = Json::array();
        for (TaskShape task : shapes) {
            names.push_back(task_name(task));
        }
        tasks_json[std::string(dataset_name(ds))] = names;
    }
    Json scores_json = Json::object();
    for (const auto& [name, path] : external_scores) {
        scores_json[name] = path.filename().string();
    }
    // jobs and out_dir are resource knobs with no effect on results, so they
    // stay out of the echo and reports stay byte-stable across environments.
    Json j{
        {"seed", seed},
        {"train_fraction", train_fraction},
        {"datasets", datasets_json},
        {"eval_dataset", std::string(dataset_name(eval_dataset))},
        {"tasks", tasks_json},
        {"ngram", Json{{"order", ngram_order}, {"k", ngram_k}}},
        {"decode",
         Json{{"strategy", strategy_name(decode.strategy)},
              {"beam_size", decode.beam_size},
              {"k", decode.k},
              {"p", decode.p},
              {"tau", decode.tau},
              {"max_len", decode.max_len},
              {"length_normalize", decode.length_normalize}}},
        {"selection", selection},
        {"embeddings", embeddings.filename().string()},
        {"gate", Json{{"mode", gate_mode == GateMode::kMc ? "mc" : "da"}, {"da_threshold", da_threshold}}},
        {"external_scores", scores_json},
        {"strip_articles", strip_articles},
        {"objects_after_question", objects_after_question},
        {"model_name", model_name},
    };
    if (!scorer_spec.empty()) {
        j["scorer"] = scorer_spec;
    }
    return j;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ParseError(path.string() + ": config must be a JSON object");
    }
    const fs::path base = fs::absolute(path).parent_path();

    PipelineConfig cfg;
    cfg.seed = j.value("seed", uint64_t{0});
    cfg.jobs = j.value("jobs", 1);
    if (cfg.jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
    cfg.train_fraction = j.value("train_fraction", 0.8);
    if (!(cfg.train_fraction > 0.0) || cfg.train_fraction > 1.0) {
        throw ConfigError("train_fraction must lie in (0, 1]");
    }

    if (!j.contains("datasets") || !j["datasets"].is_object() || j["datasets"].empty()) {
        throw ConfigError("datasets: at least one dataset file is required");
    }
    for (const auto& [name, value] : j["datasets"].items()) {
        cfg.datasets[parse_dataset(name)] = resolve(base, fs::path(value.get<std::string>()));
    }
    if (!j.contains("eval_dataset")) {
        throw ConfigError("eval_dataset is required");
    }
    cfg.eval_dataset = parse_dataset(j["eval_dataset"].get<std::string>());
    if (cfg.datasets.count(cfg.eval_dataset) == 0) {
        throw ConfigError("eval_dataset has no entry under datasets");
    }

    if (j.contains("tasks")) {
        for (const auto& [name, arr] : j["tasks"].items()) {
            std::set<TaskShape> shapes;
            for (const auto& t : arr) {
                shapes.insert(parse_task(t.get<std::string>()));
            }
            if (shapes.empty()) {
                throw ConfigError("tasks." + name + " must list at least one task");
            }
            cfg.tasks[parse_dataset(name)] = std::move(shapes);
        }
    }

    if (j.contains("ngram")) {
        const Json& n = j["ngram"];
        cfg.ngram_order = n.value("order", 3);
        cfg.ngram_k = n.value("k", 0.1);
    }
    if (cfg.ngram_order < 1) {
        throw ConfigError("ngram.order must be >= 1");
    }
    if (!(cfg.ngram_k > 0.0)) {
        throw ConfigError("ngram.k must be positive");
    }
    cfg.scorer_spec = j.value("scorer", std::string{});

    if (j.contains("decode")) {
        const Json& d = j["decode"];
        cfg.decode.strategy = parse_strategy(d.value("strategy", std::string{"beam"}));
        cfg.decode.beam_size = d.value("beam_size", cfg.decode.beam_size);
        cfg.decode.k = d.value("k", cfg.decode.k);
        cfg.decode.p = d.value("p", cfg.decode.p);
        cfg.decode.tau = d.value("tau", cfg.decode.tau);
        cfg.decode.max_len = d.value("max_len", cfg.decode.max_len);
        cfg.decode.length_normalize = d.value("length_normalize", cfg.decode.length_normalize);
    }
    validate_config(cfg.decode);

    cfg.selection = j.value("selection", std::string{"both"});
    if (cfg.selection != "ppl" && cfg.selection != "embedding" && cfg.selection != "both") {
        throw ConfigError("selection must be one of ppl, embedding, both");
    }
    if (j.contains("embeddings")) {
        cfg.embeddings = resolve(base, fs::path(j["embeddings"].get<std::string>()));
    }
    if (cfg.selection != "ppl" && cfg.embeddings.empty()) {
        throw ConfigError("selection '" + cfg.selection + "' requires an embeddings file");
    }

    if (j.contains("gate")) {
        const Json& g = j["gate"];
        const std::string mode = g.value("mode", std::string{"mc"});
        if (mode == "mc") {
            cfg.gate_mode = GateMode::kMc;
        } else if (mode == "da") {
            cfg.gate_mode = GateMode::kDa;
        } else {
            throw ConfigError("gate.mode must be mc or da");
        }
        cfg.da_threshold = g.value("da_threshold", 0.0);
    }

    if (j.contains("external_scores")) {
        for (const auto& [name, value] : j["external_scores"].items()) {
            cfg.external_scores[name] = resolve(base, fs::path(value.get<std::string>()));
        }
    }

    cfg.strip_articles = j.value("strip_articles", false);
    cfg.objects_after_question = j.value("objects_after_question", false);
    cfg.model_name = j.value("model_name", std::string{"umae_ref"});
    cfg.out_dir = resolve(base, fs::path(j.value("out_dir", std::string{"out"})));
    return cfg;
}

EvalReport evaluate_generations(const std::vector<VqaInstance>& instances,
                                const std::map<std::string, std::string>& generations,
                                const std::map<std::string, size_t>& chosen, const EvaluateSpec& spec) {
    if (instances.empty()) {
        throw ValidationError("evaluation split is empty");
    }
    auto text_of = [&generations](const std::string& id) -> std::string {
        const auto it = generations.find(id);
        return it != generations.end() ? it->second : std::string{};
    };

    std::map<std::string, Prediction> predictions;
    for (const VqaInstance& inst : instances) {
        Prediction pred;
        pred.id = inst.id;
        pred.answer_text = joint_parts(text_of(inst.id), spec.separator).first;
        const auto it = chosen.find(inst.id);
        if (it != chosen.end()) {
            pred.chosen_index = it->second;
        }
        predictions[inst.id] = std::move(pred);
    }

    GateConfig gate_config;
    gate_config.mode = spec.gate_mode;
    gate_config.da_threshold = spec.da_threshold;
    gate_config.norm = spec.norm;
    const std::vector<std::string> gated = gate(instances, predictions, gate_config);
    const std::set<std::string> gated_set(gated.begin(), gated.end());
    const double s_t = 100.0 * static_cast<double>(gated.size()) / static_cast<double>(instances.size());

    // Explanation candidates exist only for gated instances that carry gold
    // explanations; a joint generation without a separator has none.
    std::vector<ScoredText> expl_corpus;
    std::set<std::string> expl_ids;
    for (const VqaInstance& inst : instances) {
        if (gated_set.count(inst.id) == 0 || inst.explanations.empty()) {
            continue;
        }
        const std::string expl = joint_parts(text_of(inst.id), spec.separator).second;
        expl_corpus.push_back(ScoredText{inst.id, expl, inst.explanations});
        expl_ids.insert(inst.id);
    }

    std::map<std::string, MetricValue> computed;
    if (!expl_corpus.empty()) {
        for (MetricValue& value : bleu(expl_corpus, 4, spec.norm)) {
            computed[value.name] = std::move(value);
        }
        computed["ROUGE-L"] = rouge_l(expl_corpus, spec.norm);
        computed["METEOR"] = meteor(expl_corpus, spec.norm);
        computed["CIDEr"] = cider(expl_corpus, spec.norm);
    }

    std::map<std::string, ExternalScores> externals;
    for (const auto& [name, path] : spec.external_scores) {
        externals[name] = load_external_scores(path, expl_ids, name);
    }
    auto external_mean = [&externals](const std::string& key) -> std::optional<double> {
        for (const auto& [name, scores] : externals) {
            if (!iequals(name, key) || scores.values.empty()) {
                continue;
            }
            double sum = 0.0;
            for (const auto& [id, value] : scores.values) {
                sum += value;
            }
            return sum / static_cast<double>(scores.values.size());
        }
        return std::nullopt;
    };

    // Answer-text quality against the direct-answer sets (reported next to
    // the gate rate; instances without gold answers are skipped).
    std::vector<std::pair<std::string, double>> vqa_per_instance;
    double vqa_sum = 0.0;
    for (const VqaInstance& inst : instances) {
        if (inst.direct_answers.empty()) {
            continue;
        }
        const double acc = vqa_accuracy(predictions[inst.id].answer_text, inst.direct_answers, spec.norm);
        vqa_per_instance.emplace_back(inst.id, acc);
        vqa_sum += acc;
    }

    ExplanationAggregates aggregates;
    auto computed_value = [&computed](const char* name) -> std::optional<double> {
        const auto it = computed.find(name);
        if (it == computed.end()) {
            return std::nullopt;
        }
        return it->second.corpus_value;
    };
    aggregates.rouge_l = computed_value("ROUGE-L");
    aggregates.meteor = computed_value("METEOR");
    aggregates.cider = computed_value("CIDEr");
    aggregates.spice = external_mean("SPICE");
    aggregates.bertscore = external_mean("BERTScore");

    EvalReport report;
    report.model_name = spec.model_name;
    report.score = evil_score(s_t, aggregates, gated.size(), expl_corpus.empty());
    for (const auto& [name, value] : computed) {
        report.corpus_metrics[name] = value.corpus_value * 100.0;
        std::map<std::string, double> per_id;
        for (const auto& [id, v] : value.per_instance) {
            per_id[id] = v;
        }
        report.per_instance[name] = std::move(per_id);
    }
    for (const auto& [name, scores] : externals) {
        if (scores.values.empty()) {
            continue;
        }
        double sum = 0.0;
        for (const auto& [id, v] : scores.values) {
            sum += v;
        }
        report.corpus_metrics[name] = 100.0 * sum / static_cast<double>(scores.values.size());
        report.per_instance[name] = scores.values;
    }
    if (!vqa_per_instance.empty()) {
        report.corpus_metrics["VQA-acc"] = 100.0 * vqa_sum / static_cast<double>(vqa_per_instance.size());
        std::map<std::string, double> per_id(vqa_per_instance.begin(), vqa_per_instance.end());
        report.per_instance["VQA-acc"] = std::move(per_id);
    }
    for (const VqaInstance& inst : instances) {
        report.correctness[inst.id] = gated_set.count(inst.id) != 0;
    }
    report.config_echo = spec.config_echo;
    return report;
}

PipelineOutcome run_pipeline(const PipelineConfig& config) {
    if (config.datasets.empty()) {
        throw ConfigError("pipeline: no datasets configured");
    }
    if (config.datasets.count(config.eval_dataset) == 0) {
        throw ConfigError("pipeline: eval_dataset has no input file");
    }
    if (config.jobs < 1) {
        throw ConfigError("pipeline: jobs must be >= 1");
    }
    const fs::path out = config.out_dir.empty() ? fs::path{"out"} : config.out_dir;
    fs::create_directories(out / "splits");

    const PromptRegistry registry = PromptRegistry::defaults();
    BuildOptions base_options;
    base_options.objects_after_question = config.objects_after_question;
    const TextNorm norm{config.strip_articles};

    auto tasks_for = [&config](Dataset ds) {
        const auto it = config.tasks.find(ds);
        return it != config.tasks.end() ? it->second : BuildOptions{}.tasks;
    };

    std::map<Dataset, std::vector<VqaInstance>> train;
    std::map<Dataset, std::vector<VqaInstance>> val;
    stage("split", [&] {
        for (const auto& [ds, path] : config.datasets) {
            const std::vector<VqaInstance> instances = load_dataset(path, ds);
            SplitSpec spec;
            spec.train_fraction = config.train_fraction;
            spec.seed = derive_seed(config.seed, "split:" + std::string(dataset_name(ds)));
            auto [tr, va] = split(instances, spec);
            save_dataset(out / "splits" / (lower_name(ds) + "_train.jsonl"), tr);
            save_dataset(out / "splits" / (lower_name(ds) + "_val.jsonl"), va);
            train[ds] = std::move(tr);
            val[ds] = std::move(va);
        }
    });

    std::map<Dataset, std::vector<TrainingExample>> prepared;
    stage("prepare", [&] {
        for (const auto& [ds, instances] : train) {
            BuildOptions options = base_options;
            options.tasks = tasks_for(ds);
            std::vector<TrainingExample> examples;
            for (const VqaInstance& inst : instances) {
                std::vector<TrainingExample> more = build_examples(inst, registry, options);
                examples.insert(examples.end(), std::make_move_iterator(more.begin()),
                                std::make_move_iterator(more.end()));
            }
            save_examples(out / ("examples_" + lower_name(ds) + ".jsonl"), examples);
            prepared[ds] = std::move(examples);
        }
    });

    std::vector<TrainingExample> mixed;
    stage("mix", [&] {
        std::vector<std::pair<std::string, std::vector<TrainingExample>>> groups;
        for (auto& [ds, examples] : prepared) {
            groups.emplace_back(std::string(dataset_name(ds)), std::move(examples));
        }
        mixed = upsample_mix(groups, derive_seed(config.seed, "mix"));
        save_examples(out / "mixed.jsonl", mixed);
    });

    std::unique_ptr<TokenScorer> scorer;
    stage("train", [&] {
        if (!config.scorer_spec.empty()) {
            scorer = open_scorer(config.scorer_spec);
            return;
        }
        // Everything the later stages may feed the model — validation
        // questions, answer options, explanations — must be scoreable, so it
        // all enters the vocabulary (unseen tokens carry smoothing-only mass).
        std::set<std::string> extra;
        auto add_text = [&extra](const std::string& text) {
            for (std::string& tok : ref_tokenize(text)) {
                extra.insert(std::move(tok));
            }
        };
        for (const auto* side : {&train, &val}) {
            for (const auto& [ds, instances] : *side) {
                for (const VqaInstance& inst : instances) {
                    add_text(inst.question);
                    for (const std::string& text : inst.direct_answers) {
                        add_text(text);
                    }
                    for (const std::string& text : inst.mc_options) {
                        add_text(text);
                    }
                    for (const std::string& text : inst.explanations) {
                        add_text(text);
                    }
                    add_text(objects_string(inst));
                }
            }
        }
        for (const auto& [pair, token] : registry.entries()) {
            extra.insert(token);
        }
        extra.insert(base_options.separator);
        NgramScorer model = train_ngram(mixed, config.ngram_order, config.ngram_k,
                                        std::vector<std::string>(extra.begin(), extra.end()));
        save_ngram(out / "model.json", model);
        scorer = std::make_unique<NgramScorer>(std::move(model));
    });

    struct GenRecord {
        std::string id;
        TaskShape task = TaskShape::kQToA;
        std::string input;
        GenerationResult result;
    };
    std::map<Dataset, std::vector<GenRecord>> generations;
    stage("generate", [&] {
        for (const auto& [ds, instances] : val) {
            BuildOptions options = base_options;
            options.tasks = tasks_for(ds);
            // Joint decoding when configured; otherwise the richest remaining
            // shape this dataset trains on.
            TaskShape task = TaskShape::kQToA;
            if (options.tasks.count(TaskShape::kQToAe) != 0) {
                task = TaskShape::kQToAe;
            } else if (options.tasks.count(TaskShape::kQToA) != 0) {
                task = TaskShape::kQToA;
            } else {
                task = TaskShape::kQaToE;
            }
            const std::vector<VqaInstance>& list = instances;
            std::vector<GenRecord> records =
                parallel_map<GenRecord>(list.size(), config.jobs, [&](size_t i) {
                    const VqaInstance& inst = list[i];
                    GenRecord rec;
                    rec.id = inst.id;
                    rec.task = task;
                    rec.input = generation_input(inst, task, registry, options);
                    std::vector<std::string> context{kBosToken};
                    for (std::string& tok : ref_tokenize(rec.input)) {
                        context.push_back(std::move(tok));
                    }
                    DecodeConfig dcfg = config.decode;
                    dcfg.seed = derive_seed(config.seed, "gen:" + inst.id);
                    rec.result = generate(*scorer, context, dcfg);
                    return rec;
                });
            std::vector<Json> rows;
            rows.reserve(records.size());
            for (const GenRecord& rec : records) {
                rows.push_back(Json{{"source_id", rec.id},
                                    {"task", task_name(rec.task)},
                                    {"input", rec.input},
                                    {"text", rec.result.text},
                                    {"tokens", rec.result.tokens},
                                    {"per_token_logprob", rec.result.per_token_logprob},
                                    {"total_logprob", rec.result.total_logprob}});
            }
            write_jsonl(out / ("generations_" + lower_name(ds) + ".jsonl"), rows);
            generations[ds] = std::move(records);
        }
    });

    auto generation_of = [&generations](Dataset ds, const std::string& id) -> const GenRecord* {
        const auto it = generations.find(ds);
        if (it == generations.end()) {
            return nullptr;
        }
        for (const GenRecord& rec : it->second) {
            if (rec.id == id) {
                return &rec;
            }
        }
        return nullptr;
    };

    struct ChoiceRecord {
        std::optional<PplResult> ppl;
        std::optional<EmbeddingChoice> embedding;
        bool embedding_oov = false;
    };
    std::map<Dataset, std::map<std::string, ChoiceRecord>> choices;
    const bool want_ppl = config.selection == "ppl" || config.selection == "both";
    const bool want_embedding =
        (config.selection == "embedding" || config.selection == "both") && !config.embeddings.empty();
    stage("select", [&] {
        std::optional<EmbeddingTable> table;
        if (want_embedding) {
            table.emplace(load_embeddings(config.embeddings));
        }
        for (const auto& [ds, instances] : val) {
            std::map<std::string, ChoiceRecord> per_dataset;
            std::vector<Json> rows;
            for (const VqaInstance& inst : instances) {
                if (inst.mc_options.empty()) {
                    continue;
                }
                ChoiceRecord rec;
                if (want_ppl) {
                    rec.ppl = select_mc_ppl(*scorer,
                                            scoring_context(inst, TaskShape::kQToA, registry, base_options),
                                            option_token_lists(inst.mc_options));
                }
                if (want_embedding) {
                    const GenRecord* gen = generation_of(ds, inst.id);
                    const std::string answer =
                        gen != nullptr ? joint_parts(gen->result.text, base_options.separator).first
                                       : std::string{};
                    try {
                        rec.embedding = select_mc_embedding(answer, inst.mc_options, *table);
                    } catch (const EmptyGeneration&) {
                        rec.embedding_oov = true;
                    }
                }
                Json row{{"source_id", inst.id}};
                if (rec.ppl) {
                    Json options_json = Json::array();
                    for (const OptionPpl& option : rec.ppl->per_option) {
                        options_json.push_back(Json{{"option_index", option.option_index},
                                                    {"perplexity", option.perplexity},
                                                    {"token_count", option.token_count}});
                    }
                    row["ppl"] = Json{{"chosen_index", rec.ppl->chosen_index}, {"per_option", options_json}};
                } else {
                    row["ppl"] = nullptr;
                }
                if (rec.embedding) {
                    row["embedding"] = Json{{"chosen_index", rec.embedding->chosen_index},
                                            {"similarities", rec.embedding->similarities}};
                } else {
                    row["embedding"] = nullptr;
                }
                rows.push_back(std::move(row));
                per_dataset[inst.id] = std::move(rec);
            }
            if (!rows.empty()) {
                write_jsonl(out / ("choices_" + lower_name(ds) + ".jsonl"), rows);
            }
            choices[ds] = std::move(per_dataset);
        }
    });

    EvalReport report;
    stage("evaluate", [&] {
        const std::vector<VqaInstance>& eval_val = val.at(config.eval_dataset);
        const std::map<std::string, ChoiceRecord>& eval_choices = choices[config.eval_dataset];

        std::map<std::string, std::string> texts;
        for (const VqaInstance& inst : eval_val) {
            const GenRecord* gen = generation_of(config.eval_dataset, inst.id);
            if (gen != nullptr) {
                texts[inst.id] = gen->result.text;
            }
        }
        std::map<std::string, size_t> chosen;
        for (const auto& [id, rec] : eval_choices) {
            if (rec.ppl) {
                chosen[id] = rec.ppl->chosen_index;
            } else if (rec.embedding) {
                chosen[id] = rec.embedding->chosen_index;
            }
        }

        EvaluateSpec spec;
        spec.gate_mode = config.gate_mode;
        spec.da_threshold = config.da_threshold;
        spec.norm = norm;
        spec.separator = base_options.separator;
        spec.model_name = config.model_name;
        spec.external_scores = config.external_scores;
        spec.config_echo = config.to_json();
        report = evaluate_generations(eval_val, texts, chosen, spec);
    });

    PipelineOutcome outcome;
    outcome.report_json = out / "report.json";
    outcome.report_txt = out / "report.txt";
    stage("report", [&] {
        write_file(outcome.report_json, report_to_json(report).dump(2) + "\n");
        write_file(outcome.report_txt, render_table({report}));
    });
    outcome.report = std::move(report);
    return outcome;
}

} // namespace umae
