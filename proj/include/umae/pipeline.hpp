#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "umae/augment.hpp"
#include "umae/corpus.hpp"
#include "umae/decode.hpp"
#include "umae/evalhub.hpp"

namespace umae {

// Declarative end-to-end run: ingest -> split -> prepare -> mix -> train
// reference scorer (or attach an external one) -> generate -> select ->
// score -> report. All seeds are explicit; a run is a pure function of the
// config and its input files.
struct PipelineConfig {
    uint64_t seed = 0;
    int jobs = 1;
    double train_fraction = 0.8;
    std::map<Dataset, std::filesystem::path> datasets;
    Dataset eval_dataset = Dataset::kAokvqa;
    std::map<Dataset, std::set<TaskShape>> tasks;
    int ngram_order = 3;
    double ngram_k = 0.1;
    // Non-empty: skip train-ref and score with this external model spec
    // ("extern:<cmd>" or "tcp:<port>").
    std::string scorer_spec;
    DecodeConfig decode;
    std::string selection = "both"; // ppl | embedding | both
    std::filesystem::path embeddings;
    GateMode gate_mode = GateMode::kMc;
    double da_threshold = 0.0;
    std::map<std::string, std::filesystem::path> external_scores; // metric name -> file
    bool strip_articles = false;
    bool objects_after_question = false;
    std::string model_name = "umae_ref";
    std::filesystem::path out_dir;

    Json to_json() const;
};

// Relative paths in the file resolve against the config file's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct PipelineOutcome {
    std::filesystem::path report_json;
    std::filesystem::path report_txt;
    EvalReport report;
};

// Gate + metric parameters for scoring one generation set against a
// validation split, shared by run_pipeline and the standalone CLI command.
struct EvaluateSpec {
    GateMode gate_mode = GateMode::kMc;
    double da_threshold = 0.0;
    TextNorm norm;
    std::string separator = kDefaultSeparator;
    std::string model_name = "umae_ref";
    std::map<std::string, std::filesystem::path> external_scores; // metric name -> per-id file
    Json config_echo = Json::object();
};

// Scores generations (id -> generated text, joint or bare answer) against the
// instances: gates answers (MC mode consults `chosen`, id -> option index),
// computes the explanation metrics over the gated subset, folds in external
// per-instance scores, and composes the final report.
EvalReport evaluate_generations(const std::vector<VqaInstance>& instances,
                                const std::map<std::string, std::string>& generations,
                                const std::map<std::string, size_t>& chosen, const EvaluateSpec& spec);

// BOS followed by the reference-tokenized inference input for `task`.
std::vector<std::string> scoring_context(const VqaInstance& instance, TaskShape task,
                                         const PromptRegistry& registry, const BuildOptions& options);

// Reference-tokenized answer options, each terminated by EOS, ready for
// perplexity scoring.
std::vector<std::vector<std::string>> option_token_lists(const std::vector<std::string>& options);

// (answer, explanation) halves of a generated text; text without the
// separator is a bare answer with an empty explanation.
std::pair<std::string, std::string> joint_parts(const std::string& text, const std::string& separator);

// Runs every stage, writing each intermediate artifact under out_dir. Stage
// failures rethrow as Error prefixed with the stage name. Deterministic for
// any jobs value (per-instance seeds derive from the global seed and id).
PipelineOutcome run_pipeline(const PipelineConfig& config);

// Applies fn(0..n-1) on `jobs` threads; results land at their index, so the
// output order is scheduling-independent. The first exception is rethrown.
template <typename R>
std::vector<R> parallel_map(size_t n, int jobs, const std::function<R(size_t)>& fn) {
    std::vector<R> results(n);
    if (n == 0) {
        return results;
    }
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (workers == 1) {
        for (size_t i = 0; i < n; ++i) {
            results[i] = fn(i);
        }
        return results;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= n) {
                    return;
                }
                try {
                    results[i] = fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (std::thread& t : threads) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return results;
}

} // namespace umae
