#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "umae/corpus.hpp"
#include "umae/metrics.hpp"

namespace umae {

// Composite evaluation score on the x100 reporting scale. NGRAMScore is the
// harmonic mean of the available members among ROUGE-L, METEOR, CIDEr and
// SPICE (each on the x100 scale; CIDEr therefore ranges over [0,1000]);
// s_e is the harmonic mean of NGRAMScore and BERTScore; s_o = s_t * s_e / 100.
struct EvilScore {
    double s_t = 0.0;
    std::optional<double> s_e;
    double s_o = 0.0;
    std::optional<double> ngram_score;
    std::vector<std::string> members; // metric names inside ngram_score
    size_t gated_count = 0;
    // True when no explanation survived gating: s_e is absent and s_o is 0
    // by convention rather than by computation.
    bool empty_gate = false;
};

// Corpus-level explanation aggregates on their raw scales ([0,1]; CIDEr
// [0,10]); absent members are skipped.
struct ExplanationAggregates {
    std::optional<double> rouge_l;
    std::optional<double> meteor;
    std::optional<double> cider;
    std::optional<double> spice;
    std::optional<double> bertscore;
};

// Composes NGRAMScore / s_e / s_o from s_t (x100 scale) and raw aggregates.
EvilScore evil_score(double s_t, const ExplanationAggregates& aggregates, size_t gated_count,
                     bool empty_gate = false);

enum class GateMode {
    kMc, // predicted option index equals mc_correct_index
    kDa, // vqa_accuracy of the predicted answer exceeds the threshold
};

struct GateConfig {
    GateMode mode = GateMode::kMc;
    double da_threshold = 0.0; // answers scoring strictly above pass
    TextNorm norm;
};

struct Prediction {
    std::string id;
    std::optional<size_t> chosen_index; // MC mode
    std::string answer_text;            // DA mode
};

// Ids (in instance order) whose predicted answer counts as correct; only
// their explanations are evaluated. Throws MissingPrediction when an
// instance has no prediction.
std::vector<std::string> gate(const std::vector<VqaInstance>& instances,
                              const std::map<std::string, Prediction>& predictions, const GateConfig& config);

// Exact intersection of per-model correct-id sets (Table-3-style protocol).
std::set<std::string> common_subset(const std::vector<std::set<std::string>>& per_model_correct);

enum class BoundsMode {
    kBest,    // most frequent gold answer
    kAverage, // seeded uniform draw from the gold answers
    kWorst,   // least frequent gold answer
};

std::string bounds_mode_name(BoundsMode mode);
BoundsMode parse_bounds_mode(const std::string& name);

struct HumanBoundsResult {
    double corpus_value = 0.0; // mean per-instance accuracy, x100
    std::vector<std::pair<std::string, double>> per_instance;
    size_t degenerate_count = 0; // instances whose gold set emptied
};

// Picks one gold answer per instance by mode (frequency ties break to first
// occurrence; Average draws from a per-instance stream derived from the seed
// and the id), removes ALL raw occurrences of the chosen string from the
// gold set, and scores the pick against the remainder with vqa_accuracy.
// An emptied remainder scores 0 and is counted as degenerate.
HumanBoundsResult human_bounds(const std::vector<VqaInstance>& instances, BoundsMode mode, uint64_t seed,
                               const TextNorm& norm = {});

enum class ErrorCategory {
    kKnowledge,
    kVisual,
    kSemanticDisassociation,
    kMetric,
    kDataset,
};

std::string category_name(ErrorCategory category);
ErrorCategory parse_category(const std::string& name);

struct ErrorAnnotation {
    std::string id;
    ErrorCategory category = ErrorCategory::kKnowledge;
    std::string note;
};

struct CategoryCount {
    ErrorCategory category;
    size_t count = 0;
    double percent = 0.0;
};

struct ErrorHistogram {
    std::vector<CategoryCount> rows; // all five categories, fixed order
    size_t total = 0;
};

// Counts annotations per category. Duplicate ids with the same category are
// deduplicated; a duplicate id with a conflicting category is a
// ValidationError.
ErrorHistogram error_report(const std::vector<ErrorAnnotation>& annotations);

// CSV "id,category,note" (optional header; the note may contain commas).
std::vector<ErrorAnnotation> load_annotations(const std::filesystem::path& path);

// Full evaluation artifact: composite score, corpus metric values on the
// reporting scale, per-instance raw values, and per-instance gate outcomes
// (enough to recompute explanation scores on any id subset).
struct EvalReport {
    std::string model_name;
    EvilScore score;
    std::map<std::string, double> corpus_metrics;                       // x100 scale
    std::map<std::string, std::map<std::string, double>> per_instance;  // metric -> id -> raw value
    std::map<std::string, bool> correctness;                            // id -> passed gate
    Json config_echo = Json::object();
};

Json report_to_json(const EvalReport& report);
EvalReport report_from_json(const Json& j);

// Fixed-width text table of the composite and member scores.
std::string render_table(const std::vector<EvalReport>& reports);

// Restricts every report to the models' common correct subset and
// recomposes the explanation scores there (answers are all correct on the
// subset by construction, so s_t is 100). Returns one row per model plus the
// subset size.
struct CompareRow {
    std::string model_name;
    EvilScore score;
    std::map<std::string, double> member_values; // x100 scale, on the subset
};

struct CompareResult {
    std::set<std::string> subset;
    std::vector<CompareRow> rows;
};

CompareResult compare_reports(const std::vector<EvalReport>& reports);

} // namespace umae
