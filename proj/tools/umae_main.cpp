#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "umae/augment.hpp"
#include "umae/corpus.hpp"
#include "umae/decode.hpp"
#include "umae/errors.hpp"
#include "umae/evalhub.hpp"
#include "umae/extern_scorer.hpp"
#include "umae/fixture.hpp"
#include "umae/image.hpp"
#include "umae/jsonl.hpp"
#include "umae/metrics.hpp"
#include "umae/pipeline.hpp"
#include "umae/rng.hpp"
#include "umae/scorer.hpp"
#include "umae/select.hpp"
#include "umae/text.hpp"
#include "umae/version.hpp"

namespace {

using namespace umae;
namespace fs = std::filesystem;

std::vector<VqaInstance> load_instances(const std::string& path, const std::string& dataset) {
    return load_dataset(path, parse_dataset(dataset));
}

// "NAME=FILE" pairs from repeated CLI options.
std::map<std::string, fs::path> parse_named_files(const std::vector<std::string>& specs,
                                                  const std::string& flag) {
    std::map<std::string, fs::path> out;
    for (const std::string& spec : specs) {
        const size_t eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size()) {
            throw ConfigError(flag + " expects NAME=FILE, got '" + spec + "'");
        }
        out[spec.substr(0, eq)] = fs::path(spec.substr(eq + 1));
    }
    return out;
}

// Generation records as written by `generate` / the pipeline.
std::map<std::string, std::string> load_generation_texts(const std::string& path) {
    std::map<std::string, std::string> texts;
    for (const Json& row : read_jsonl(path)) {
        texts[row.at("source_id").get<std::string>()] = row.at("text").get<std::string>();
    }
    return texts;
}

// Choice records as written by `select` / the pipeline; perplexity choices
// win over embedding ones when both are present.
std::map<std::string, size_t> load_chosen_indices(const std::string& path) {
    std::map<std::string, size_t> chosen;
    for (const Json& row : read_jsonl(path)) {
        const std::string id = row.at("source_id").get<std::string>();
        if (row.contains("ppl") && !row["ppl"].is_null()) {
            chosen[id] = row["ppl"].at("chosen_index").get<size_t>();
        } else if (row.contains("embedding") && !row["embedding"].is_null()) {
            chosen[id] = row["embedding"].at("chosen_index").get<size_t>();
        }
    }
    return chosen;
}

std::set<TaskShape> parse_task_set(const std::vector<std::string>& names) {
    std::set<TaskShape> tasks;
    for (const std::string& name : names) {
        tasks.insert(parse_task(name));
    }
    return tasks;
}

std::string format2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void emit(const Json& j, const std::string& output_path) {
    const std::string text = j.dump(2) + "\n";
    if (output_path.empty()) {
        std::cout << text;
    } else {
        write_file(output_path, text);
    }
}

int run(int argc, char** argv) {
    CLI::App app{"multitask answer + explanation pipeline over a pluggable token scorer"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    uint64_t global_seed = 0;
    auto* global_seed_opt = app.add_option("--seed", global_seed, "Default seed for subcommands");
    int global_jobs = 0;
    auto* global_jobs_opt = app.add_option("--jobs", global_jobs, "Default worker count for subcommands");

    auto pick_seed = [&](const CLI::Option* local, uint64_t local_value, uint64_t fallback) {
        if (local != nullptr && local->count() > 0) {
            return local_value;
        }
        return global_seed_opt->count() > 0 ? global_seed : fallback;
    };
    auto pick_jobs = [&](const CLI::Option* local, int local_value, int fallback) {
        if (local != nullptr && local->count() > 0) {
            return local_value;
        }
        return global_jobs_opt->count() > 0 ? global_jobs : fallback;
    };

    // ---- fixture ----
    auto* cmd_fixture = app.add_subcommand("fixture", "Write the bundled synthetic corpus");
    std::string fixture_out;
    cmd_fixture->add_option("--out", fixture_out, "Output directory")->required();
    cmd_fixture->callback([&] {
        write_fixture(fixture_out);
        std::cout << "fixture written to " << fixture_out << "\n";
    });

    // ---- ingest ----
    auto* cmd_ingest = app.add_subcommand("ingest", "Canonicalize a dataset file to instance JSONL");
    std::string in_input, in_dataset, in_output;
    cmd_ingest->add_option("--input", in_input, "Dataset file (canonical or upstream layout)")->required();
    cmd_ingest->add_option("--dataset", in_dataset, "Dataset name")->required();
    cmd_ingest->add_option("--output", in_output, "Canonical JSONL output")->required();
    cmd_ingest->callback([&] {
        const std::vector<VqaInstance> instances = load_instances(in_input, in_dataset);
        save_dataset(in_output, instances);
        std::cout << instances.size() << " instances -> " << in_output << "\n";
    });

    // ---- split ----
    auto* cmd_split = app.add_subcommand("split", "Deterministic train/validation split");
    std::string sp_input, sp_dataset, sp_train_out, sp_val_out;
    double sp_fraction = 0.95;
    uint64_t sp_seed = 0;
    cmd_split->add_option("--input", sp_input, "Dataset file")->required();
    cmd_split->add_option("--dataset", sp_dataset, "Dataset name")->required();
    cmd_split->add_option("--fraction", sp_fraction, "Train fraction");
    auto* sp_seed_opt = cmd_split->add_option("--split-seed", sp_seed, "Shuffle seed");
    cmd_split->add_option("--train-out", sp_train_out, "Train JSONL output")->required();
    cmd_split->add_option("--val-out", sp_val_out, "Validation JSONL output")->required();
    cmd_split->callback([&] {
        const std::vector<VqaInstance> instances = load_instances(sp_input, sp_dataset);
        SplitSpec spec;
        spec.train_fraction = sp_fraction;
        spec.seed = pick_seed(sp_seed_opt, sp_seed, 0);
        auto [train, val] = split(instances, spec);
        save_dataset(sp_train_out, train);
        save_dataset(sp_val_out, val);
        std::cout << train.size() << " train / " << val.size() << " val\n";
    });

    // ---- prepare ----
    auto* cmd_prepare = app.add_subcommand("prepare", "Expand instances into prompt-token training examples");
    std::string pr_input, pr_dataset, pr_output, pr_separator = kDefaultSeparator;
    std::vector<std::string> pr_tasks;
    bool pr_no_objects = false, pr_objects_after = false;
    cmd_prepare->add_option("--input", pr_input, "Dataset file")->required();
    cmd_prepare->add_option("--dataset", pr_dataset, "Dataset name")->required();
    cmd_prepare->add_option("--output", pr_output, "Example JSONL output")->required();
    cmd_prepare->add_option("--tasks", pr_tasks, "Task shapes (q2a, qa2e, q2ae)")->delimiter(',');
    cmd_prepare->add_option("--separator", pr_separator, "Answer/explanation separator token");
    cmd_prepare->add_flag("--no-objects", pr_no_objects, "Leave object tags out of the input text");
    cmd_prepare->add_flag("--objects-after-question", pr_objects_after, "Place object tags after the question");
    cmd_prepare->callback([&] {
        BuildOptions options;
        options.separator = pr_separator;
        if (!pr_tasks.empty()) {
            options.tasks = parse_task_set(pr_tasks);
        }
        options.include_objects = !pr_no_objects;
        options.objects_after_question = pr_objects_after;
        const PromptRegistry registry = PromptRegistry::defaults();
        std::vector<TrainingExample> examples;
        for (const VqaInstance& inst : load_instances(pr_input, pr_dataset)) {
            std::vector<TrainingExample> more = build_examples(inst, registry, options);
            examples.insert(examples.end(), std::make_move_iterator(more.begin()),
                            std::make_move_iterator(more.end()));
        }
        save_examples(pr_output, examples);
        std::cout << examples.size() << " examples -> " << pr_output << "\n";
    });

    // ---- mix ----
    auto* cmd_mix = app.add_subcommand("mix", "Upsample example sets to parity and shuffle");
    std::vector<std::string> mx_inputs;
    std::string mx_output;
    uint64_t mx_seed = 0;
    cmd_mix->add_option("--input", mx_inputs, "NAME=FILE example set (repeatable)")->required();
    cmd_mix->add_option("--output", mx_output, "Mixed example JSONL output")->required();
    auto* mx_seed_opt = cmd_mix->add_option("--mix-seed", mx_seed, "Shuffle seed");
    cmd_mix->callback([&] {
        std::vector<std::pair<std::string, std::vector<TrainingExample>>> groups;
        for (const auto& [name, path] : parse_named_files(mx_inputs, "--input")) {
            groups.emplace_back(name, load_examples(path));
        }
        const std::vector<TrainingExample> mixed = upsample_mix(groups, pick_seed(mx_seed_opt, mx_seed, 0));
        save_examples(mx_output, mixed);
        std::cout << mixed.size() << " examples -> " << mx_output << "\n";
    });

    // ---- highlight ----
    auto* cmd_highlight = app.add_subcommand("highlight", "Outline an instance's entity regions on its image");
    std::string hl_image, hl_output, hl_instances, hl_dataset = "VCR", hl_id;
    int hl_thickness = 2;
    cmd_highlight->add_option("--image", hl_image, "Input PPM image")->required();
    cmd_highlight->add_option("--output", hl_output, "Output PPM image")->required();
    cmd_highlight->add_option("--instances", hl_instances, "Dataset file with the regions")->required();
    cmd_highlight->add_option("--dataset", hl_dataset, "Dataset name");
    cmd_highlight->add_option("--id", hl_id, "Instance id")->required();
    cmd_highlight->add_option("--thickness", hl_thickness, "Outline thickness in pixels");
    cmd_highlight->callback([&] {
        const std::vector<VqaInstance> instances = load_instances(hl_instances, hl_dataset);
        const VqaInstance* found = nullptr;
        for (const VqaInstance& inst : instances) {
            if (inst.id == hl_id) {
                found = &inst;
                break;
            }
        }
        if (found == nullptr) {
            throw ValidationError("no instance with id " + hl_id);
        }
        const Image out = render_highlights(read_ppm(hl_image), found->regions, hl_thickness);
        write_ppm(hl_output, out);
        std::cout << found->regions.size() << " regions -> " << hl_output << "\n";
    });

    // ---- train-ref ----
    auto* cmd_train = app.add_subcommand("train-ref", "Count n-grams over training examples");
    std::string tr_examples, tr_output, tr_extra;
    int tr_order = 3;
    double tr_k = 0.1;
    cmd_train->add_option("--examples", tr_examples, "Training example JSONL")->required();
    cmd_train->add_option("--output", tr_output, "Model JSON output")->required();
    cmd_train->add_option("--order", tr_order, "N-gram order");
    cmd_train->add_option("--k", tr_k, "Add-k smoothing constant");
    cmd_train->add_option("--extra-tokens", tr_extra, "File of extra vocabulary tokens, one per line");
    cmd_train->callback([&] {
        std::vector<std::string> extra;
        if (!tr_extra.empty()) {
            std::istringstream lines(read_file(tr_extra));
            std::string line;
            while (std::getline(lines, line)) {
                const std::string token = trim(line);
                if (!token.empty()) {
                    extra.push_back(token);
                }
            }
        }
        const NgramScorer model = train_ngram(load_examples(tr_examples), tr_order, tr_k, extra);
        save_ngram(tr_output, model);
        std::cout << "vocab " << model.vocab().size() << ", contexts " << model.counts().size() << " -> "
                  << tr_output << "\n";
    });

    // ---- serve-ref ----
    auto* cmd_serve = app.add_subcommand("serve-ref", "Serve an n-gram model over the scorer wire protocol");
    std::string sv_model;
    int sv_tcp = 0;
    bool sv_once = false;
    cmd_serve->add_option("--model", sv_model, "Model JSON file")->required();
    auto* sv_tcp_opt = cmd_serve->add_option("--tcp", sv_tcp, "Listen on this TCP port (0 = ephemeral) instead of stdio");
    cmd_serve->add_flag("--once", sv_once, "Exit after the first client disconnects");
    cmd_serve->callback([&] {
        const NgramScorer model = load_ngram(sv_model);
        if (sv_tcp_opt->count() > 0) {
            TcpServer server(static_cast<uint16_t>(sv_tcp));
            std::cout << server.port() << std::endl;
            server.serve(model, sv_once);
        } else {
            FdChannel channel(0, 1); // protocol owns stdio; diagnostics go to stderr
            serve_scorer(model, channel);
        }
    });

    // ---- generate ----
    auto* cmd_generate = app.add_subcommand("generate", "Decode one output per instance");
    std::string gn_model, gn_instances, gn_dataset, gn_output, gn_task = "q2a", gn_strategy = "beam";
    int gn_beam = 5, gn_topk = 50, gn_max_len = 32, gn_jobs = 1;
    double gn_p = 1.0, gn_tau = 1.0;
    uint64_t gn_seed = 0;
    bool gn_length_norm = false, gn_no_objects = false, gn_objects_after = false;
    cmd_generate->add_option("--model", gn_model, "Model: file path, extern:<cmd>, or tcp:<port>")->required();
    cmd_generate->add_option("--instances", gn_instances, "Dataset file")->required();
    cmd_generate->add_option("--dataset", gn_dataset, "Dataset name")->required();
    cmd_generate->add_option("--output", gn_output, "Generation JSONL output")->required();
    cmd_generate->add_option("--task", gn_task, "Task shape to decode (q2a, qa2e, q2ae)");
    cmd_generate->add_option("--strategy", gn_strategy, "beam, topk, nucleus, or typical");
    cmd_generate->add_option("--beam-size", gn_beam, "Beam width");
    cmd_generate->add_option("--topk", gn_topk, "Top-k truncation");
    cmd_generate->add_option("--p", gn_p, "Nucleus mass");
    cmd_generate->add_option("--tau", gn_tau, "Typical-set mass");
    cmd_generate->add_option("--max-len", gn_max_len, "Generated-token bound (terminal EOS included)");
    auto* gn_seed_opt = cmd_generate->add_option("--gen-seed", gn_seed, "Sampling seed");
    auto* gn_jobs_opt = cmd_generate->add_option("--gen-jobs", gn_jobs, "Worker threads");
    cmd_generate->add_flag("--length-normalize", gn_length_norm, "Rank beam hypotheses by mean logprob");
    cmd_generate->add_flag("--no-objects", gn_no_objects, "Leave object tags out of the input text");
    cmd_generate->add_flag("--objects-after-question", gn_objects_after, "Place object tags after the question");
    cmd_generate->callback([&] {
        const std::unique_ptr<TokenScorer> scorer = open_scorer(gn_model);
        const std::vector<VqaInstance> instances = load_instances(gn_instances, gn_dataset);
        const TaskShape task = parse_task(gn_task);
        const PromptRegistry registry = PromptRegistry::defaults();
        BuildOptions options;
        options.include_objects = !gn_no_objects;
        options.objects_after_question = gn_objects_after;
        DecodeConfig base;
        base.strategy = parse_strategy(gn_strategy);
        base.beam_size = gn_beam;
        base.k = gn_topk;
        base.p = gn_p;
        base.tau = gn_tau;
        base.max_len = gn_max_len;
        base.length_normalize = gn_length_norm;
        validate_config(base);
        const uint64_t seed = pick_seed(gn_seed_opt, gn_seed, 0);
        const int jobs = pick_jobs(gn_jobs_opt, gn_jobs, 1);
        const std::vector<Json> rows = parallel_map<Json>(instances.size(), jobs, [&](size_t i) {
            const VqaInstance& inst = instances[i];
            const std::string input = generation_input(inst, task, registry, options);
            DecodeConfig dcfg = base;
            dcfg.seed = derive_seed(seed, "gen:" + inst.id);
            const GenerationResult result = generate(*scorer, scoring_context(inst, task, registry, options), dcfg);
            return Json{{"source_id", inst.id},
                        {"task", task_name(task)},
                        {"input", input},
                        {"text", result.text},
                        {"tokens", result.tokens},
                        {"per_token_logprob", result.per_token_logprob},
                        {"total_logprob", result.total_logprob}};
        });
        write_jsonl(gn_output, rows);
        std::cout << rows.size() << " generations -> " << gn_output << "\n";
    });

    // ---- select ----
    auto* cmd_select = app.add_subcommand("select", "Pick a multiple-choice option per instance");
    std::string sl_model, sl_instances, sl_dataset, sl_output, sl_method = "both", sl_embeddings, sl_generations;
    std::string sl_separator = kDefaultSeparator;
    bool sl_no_objects = false, sl_objects_after = false;
    cmd_select->add_option("--model", sl_model, "Scorer for perplexity selection");
    cmd_select->add_option("--instances", sl_instances, "Dataset file")->required();
    cmd_select->add_option("--dataset", sl_dataset, "Dataset name")->required();
    cmd_select->add_option("--output", sl_output, "Choice JSONL output")->required();
    cmd_select->add_option("--method", sl_method, "ppl, embedding, or both");
    cmd_select->add_option("--embeddings", sl_embeddings, "Word-vector table for embedding selection");
    cmd_select->add_option("--generations", sl_generations, "Generation JSONL (embedding selection input)");
    cmd_select->add_option("--separator", sl_separator, "Answer/explanation separator token");
    cmd_select->add_flag("--no-objects", sl_no_objects, "Leave object tags out of the scoring context");
    cmd_select->add_flag("--objects-after-question", sl_objects_after, "Place object tags after the question");
    cmd_select->callback([&] {
        if (sl_method != "ppl" && sl_method != "embedding" && sl_method != "both") {
            throw ConfigError("--method must be ppl, embedding, or both");
        }
        const bool want_ppl = sl_method != "embedding";
        const bool want_embedding = sl_method != "ppl";
        std::unique_ptr<TokenScorer> scorer;
        if (want_ppl) {
            if (sl_model.empty()) {
                throw ConfigError("perplexity selection requires --model");
            }
            scorer = open_scorer(sl_model);
        }
        std::optional<EmbeddingTable> table;
        std::map<std::string, std::string> texts;
        if (want_embedding) {
            if (sl_embeddings.empty() || sl_generations.empty()) {
                throw ConfigError("embedding selection requires --embeddings and --generations");
            }
            table.emplace(load_embeddings(sl_embeddings));
            texts = load_generation_texts(sl_generations);
        }
        const PromptRegistry registry = PromptRegistry::defaults();
        BuildOptions options;
        options.include_objects = !sl_no_objects;
        options.objects_after_question = sl_objects_after;
        std::vector<Json> rows;
        for (const VqaInstance& inst : load_instances(sl_instances, sl_dataset)) {
            if (inst.mc_options.empty()) {
                continue;
            }
            Json row{{"source_id", inst.id}};
            row["ppl"] = nullptr;
            row["embedding"] = nullptr;
            if (want_ppl) {
                const PplResult result = select_mc_ppl(
                    *scorer, scoring_context(inst, TaskShape::kQToA, registry, options),
                    option_token_lists(inst.mc_options));
                Json options_json = Json::array();
                for (const OptionPpl& option : result.per_option) {
                    options_json.push_back(Json{{"option_index", option.option_index},
                                                {"perplexity", option.perplexity},
                                                {"token_count", option.token_count}});
                }
                row["ppl"] = Json{{"chosen_index", result.chosen_index}, {"per_option", options_json}};
            }
            if (want_embedding) {
                const auto it = texts.find(inst.id);
                const std::string answer =
                    it != texts.end() ? joint_parts(it->second, sl_separator).first : std::string{};
                try {
                    const EmbeddingChoice choice = select_mc_embedding(answer, inst.mc_options, *table);
                    row["embedding"] =
                        Json{{"chosen_index", choice.chosen_index}, {"similarities", choice.similarities}};
                } catch (const EmptyGeneration&) {
                    // No in-vocabulary word to pool: leave the record null.
                }
            }
            rows.push_back(std::move(row));
        }
        write_jsonl(sl_output, rows);
        std::cout << rows.size() << " choices -> " << sl_output << "\n";
    });

    // ---- metrics ----
    auto* cmd_metrics = app.add_subcommand("metrics", "Text metrics of generations against gold references");
    std::string mt_instances, mt_dataset, mt_generations, mt_refs = "explanations", mt_output;
    std::string mt_separator = kDefaultSeparator;
    bool mt_strip_articles = false;
    cmd_metrics->add_option("--instances", mt_instances, "Dataset file")->required();
    cmd_metrics->add_option("--dataset", mt_dataset, "Dataset name")->required();
    cmd_metrics->add_option("--generations", mt_generations, "Generation JSONL")->required();
    cmd_metrics->add_option("--refs", mt_refs, "Reference side: explanations or answers");
    cmd_metrics->add_option("--separator", mt_separator, "Answer/explanation separator token");
    cmd_metrics->add_option("--output", mt_output, "Write the JSON here instead of stdout");
    cmd_metrics->add_flag("--strip-articles", mt_strip_articles, "Drop articles before matching");
    cmd_metrics->callback([&] {
        if (mt_refs != "explanations" && mt_refs != "answers") {
            throw ConfigError("--refs must be explanations or answers");
        }
        const bool against_explanations = mt_refs == "explanations";
        const TextNorm norm{mt_strip_articles};
        const std::map<std::string, std::string> texts = load_generation_texts(mt_generations);
        std::vector<ScoredText> corpus;
        std::vector<std::pair<std::string, double>> vqa_per;
        double vqa_sum = 0.0;
        for (const VqaInstance& inst : load_instances(mt_instances, mt_dataset)) {
            const auto it = texts.find(inst.id);
            if (it == texts.end()) {
                continue;
            }
            const auto [answer, explanation] = joint_parts(it->second, mt_separator);
            if (against_explanations) {
                if (!inst.explanations.empty()) {
                    corpus.push_back(ScoredText{inst.id, explanation, inst.explanations});
                }
            } else if (!inst.direct_answers.empty()) {
                corpus.push_back(ScoredText{inst.id, answer, inst.direct_answers});
                const double acc = vqa_accuracy(answer, inst.direct_answers, norm);
                vqa_per.emplace_back(inst.id, acc);
                vqa_sum += acc;
            }
        }
        if (corpus.empty()) {
            throw ValidationError("no instance has both a generation and references");
        }
        std::vector<MetricValue> values = bleu(corpus, 4, norm);
        values.push_back(rouge_l(corpus, norm));
        values.push_back(meteor(corpus, norm));
        values.push_back(cider(corpus, norm));
        Json corpus_json = Json::object();
        Json per_json = Json::object();
        for (const MetricValue& value : values) {
            corpus_json[value.name] = value.corpus_value * 100.0;
            Json ids = Json::object();
            for (const auto& [id, v] : value.per_instance) {
                ids[id] = v;
            }
            per_json[value.name] = std::move(ids);
        }
        if (!vqa_per.empty()) {
            corpus_json["VQA-acc"] = 100.0 * vqa_sum / static_cast<double>(vqa_per.size());
            Json ids = Json::object();
            for (const auto& [id, v] : vqa_per) {
                ids[id] = v;
            }
            per_json["VQA-acc"] = std::move(ids);
        }
        emit(Json{{"instances", corpus.size()}, {"corpus", corpus_json}, {"per_instance", per_json}}, mt_output);
    });

    // ---- evaluate ----
    auto* cmd_evaluate = app.add_subcommand("evaluate", "Gate answers and score explanations into a report");
    std::string ev_instances, ev_dataset, ev_generations, ev_choices, ev_gate = "mc";
    std::string ev_model_name = "umae_ref", ev_separator = kDefaultSeparator, ev_output, ev_table;
    std::vector<std::string> ev_external;
    double ev_da_threshold = 0.0;
    bool ev_strip_articles = false;
    cmd_evaluate->add_option("--instances", ev_instances, "Validation dataset file")->required();
    cmd_evaluate->add_option("--dataset", ev_dataset, "Dataset name")->required();
    cmd_evaluate->add_option("--generations", ev_generations, "Generation JSONL")->required();
    cmd_evaluate->add_option("--choices", ev_choices, "Choice JSONL (required for mc gating)");
    cmd_evaluate->add_option("--gate", ev_gate, "Gate mode: mc or da");
    cmd_evaluate->add_option("--da-threshold", ev_da_threshold, "Answers scoring strictly above pass");
    cmd_evaluate->add_option("--external", ev_external, "NAME=FILE per-instance scores (repeatable)");
    cmd_evaluate->add_option("--model-name", ev_model_name, "Row label in the report");
    cmd_evaluate->add_option("--separator", ev_separator, "Answer/explanation separator token");
    cmd_evaluate->add_option("--output", ev_output, "Report JSON output")->required();
    cmd_evaluate->add_option("--table", ev_table, "Also render a text table here");
    cmd_evaluate->add_flag("--strip-articles", ev_strip_articles, "Drop articles before matching");
    cmd_evaluate->callback([&] {
        EvaluateSpec spec;
        if (ev_gate == "mc") {
            spec.gate_mode = GateMode::kMc;
        } else if (ev_gate == "da") {
            spec.gate_mode = GateMode::kDa;
        } else {
            throw ConfigError("--gate must be mc or da");
        }
        spec.da_threshold = ev_da_threshold;
        spec.norm = TextNorm{ev_strip_articles};
        spec.separator = ev_separator;
        spec.model_name = ev_model_name;
        spec.external_scores = parse_named_files(ev_external, "--external");
        spec.config_echo = Json{{"gate", ev_gate},
                                {"da_threshold", ev_da_threshold},
                                {"strip_articles", ev_strip_articles},
                                {"model_name", ev_model_name}};
        const std::vector<VqaInstance> instances = load_instances(ev_instances, ev_dataset);
        const std::map<std::string, std::string> texts = load_generation_texts(ev_generations);
        std::map<std::string, size_t> chosen;
        if (!ev_choices.empty()) {
            chosen = load_chosen_indices(ev_choices);
        }
        const EvalReport report = evaluate_generations(instances, texts, chosen, spec);
        write_file(ev_output, report_to_json(report).dump(2) + "\n");
        if (!ev_table.empty()) {
            write_file(ev_table, render_table({report}));
        }
        std::cout << "S_T " << format2(report.score.s_t) << "  S_E "
                  << (report.score.s_e ? format2(*report.score.s_e) : "-") << "  S_O "
                  << format2(report.score.s_o) << " -> " << ev_output << "\n";
    });

    // ---- compare ----
    auto* cmd_compare = app.add_subcommand("compare", "Recompose scores on the models' common correct subset");
    std::vector<std::string> cp_reports;
    std::string cp_output;
    cmd_compare->add_option("--reports", cp_reports, "Report JSON files")->required()->expected(-2);
    cmd_compare->add_option("--output", cp_output, "Write the JSON here instead of stdout");
    cmd_compare->callback([&] {
        std::vector<EvalReport> reports;
        for (const std::string& path : cp_reports) {
            reports.push_back(report_from_json(Json::parse(read_file(path))));
        }
        const CompareResult result = compare_reports(reports);
        Json rows = Json::array();
        for (const CompareRow& row : result.rows) {
            Json members = Json::object();
            for (const auto& [name, value] : row.member_values) {
                members[name] = value;
            }
            rows.push_back(Json{{"model_name", row.model_name},
                                {"s_t", row.score.s_t},
                                {"s_e", row.score.s_e ? Json(*row.score.s_e) : Json()},
                                {"s_o", row.score.s_o},
                                {"ngram_score", row.score.ngram_score ? Json(*row.score.ngram_score) : Json()},
                                {"members", members}});
        }
        emit(Json{{"subset_size", result.subset.size()},
                  {"subset", std::vector<std::string>(result.subset.begin(), result.subset.end())},
                  {"rows", rows}},
             cp_output);
    });

    // ---- human-bounds ----
    auto* cmd_bounds = app.add_subcommand("human-bounds", "Gold-answer accuracy bounds (best/average/worst)");
    std::string hb_instances, hb_dataset, hb_mode = "best", hb_output;
    uint64_t hb_seed = 0;
    int hb_runs = 1;
    bool hb_strip_articles = false;
    cmd_bounds->add_option("--instances", hb_instances, "Dataset file")->required();
    cmd_bounds->add_option("--dataset", hb_dataset, "Dataset name")->required();
    cmd_bounds->add_option("--mode", hb_mode, "best, average, or worst");
    auto* hb_seed_opt = cmd_bounds->add_option("--bounds-seed", hb_seed, "Seed for average mode");
    cmd_bounds->add_option("--runs", hb_runs, "Average over this many consecutive seeds");
    cmd_bounds->add_option("--output", hb_output, "Write the JSON here instead of stdout");
    cmd_bounds->add_flag("--strip-articles", hb_strip_articles, "Drop articles before matching");
    cmd_bounds->callback([&] {
        if (hb_runs < 1) {
            throw ConfigError("--runs must be >= 1");
        }
        const std::vector<VqaInstance> instances = load_instances(hb_instances, hb_dataset);
        const BoundsMode mode = parse_bounds_mode(hb_mode);
        const TextNorm norm{hb_strip_articles};
        const uint64_t seed = pick_seed(hb_seed_opt, hb_seed, 0);
        Json values = Json::array();
        double sum = 0.0;
        size_t degenerate = 0;
        for (int run_index = 0; run_index < hb_runs; ++run_index) {
            const HumanBoundsResult result = human_bounds(instances, mode, seed + static_cast<uint64_t>(run_index), norm);
            values.push_back(result.corpus_value);
            sum += result.corpus_value;
            degenerate = std::max(degenerate, result.degenerate_count);
        }
        const double mean = sum / hb_runs;
        emit(Json{{"mode", bounds_mode_name(mode)},
                  {"seed", seed},
                  {"runs", hb_runs},
                  {"values", values},
                  {"mean", mean},
                  {"degenerate_count", degenerate}},
             hb_output);
    });

    // ---- errors ----
    auto* cmd_errors = app.add_subcommand("errors", "Histogram of annotated failure categories");
    std::string er_annotations, er_output;
    cmd_errors->add_option("--annotations", er_annotations, "CSV id,category,note")->required();
    cmd_errors->add_option("--output", er_output, "Write the JSON here instead of stdout");
    cmd_errors->callback([&] {
        const ErrorHistogram histogram = error_report(load_annotations(er_annotations));
        Json rows = Json::array();
        for (const CategoryCount& row : histogram.rows) {
            rows.push_back(Json{{"category", category_name(row.category)},
                                {"count", row.count},
                                {"percent", row.percent}});
        }
        emit(Json{{"total", histogram.total}, {"rows", rows}}, er_output);
    });

    // ---- pipeline ----
    auto* cmd_pipeline = app.add_subcommand("pipeline", "Run every stage from a config file");
    std::string pl_config, pl_out;
    cmd_pipeline->add_option("--config", pl_config, "Pipeline config JSON")->required();
    cmd_pipeline->add_option("--out", pl_out, "Override the configured output directory");
    cmd_pipeline->callback([&] {
        PipelineConfig config = load_pipeline_config(pl_config);
        if (global_seed_opt->count() > 0) {
            config.seed = global_seed;
        }
        if (global_jobs_opt->count() > 0) {
            config.jobs = global_jobs;
        }
        if (!pl_out.empty()) {
            config.out_dir = pl_out;
        }
        const PipelineOutcome outcome = run_pipeline(config);
        std::cout << render_table({outcome.report});
        std::cout << "report: " << outcome.report_json.string() << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
