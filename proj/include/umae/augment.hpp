#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "umae/corpus.hpp"

namespace umae {

// The three generation settings: answer only, explanation given the answer,
// and joint answer-plus-explanation.
enum class TaskShape {
    kQToA,
    kQaToE,
    kQToAe,
};

// Short names used in CLI flags and example JSONL ("q2a", "qa2e", "q2ae").
std::string task_name(TaskShape task);
TaskShape parse_task(const std::string& name);

inline constexpr const char* kDefaultSeparator = "<#SEP#>";

// Maps (dataset, task) to the artificial prompt token prepended to the input.
// Injective: no two pairs may share a token. Datasets without an entry of
// their own can borrow another dataset's tokens via a fallback (out-of-domain
// inference); by default VQAX borrows the AOKVQA tokens.
class PromptRegistry {
public:
    // Registry preloaded with the default token set.
    static PromptRegistry defaults();

    // Throws ValidationError if the token is already registered for another
    // pair, and SeparatorCollision if the token equals the separator.
    void insert(Dataset dataset, TaskShape task, const std::string& token,
                const std::string& separator = kDefaultSeparator);

    // Redirects lookups for `from` to `to` when `from` has no entry of its own.
    void set_fallback(Dataset from, Dataset to);

    // Throws MissingPrompt when neither the pair nor its fallback is present.
    const std::string& lookup(Dataset dataset, TaskShape task) const;

    bool contains(Dataset dataset, TaskShape task) const;

    const std::map<std::pair<Dataset, TaskShape>, std::string>& entries() const { return tokens_; }

private:
    std::map<std::pair<Dataset, TaskShape>, std::string> tokens_;
    std::map<Dataset, Dataset> fallbacks_;
};

struct TrainingExample {
    std::string prompt_token;
    std::string input_text; // starts with prompt_token
    std::string target_text;
    std::string image_ref;
    std::string source_id;
    TaskShape task = TaskShape::kQToA;

    bool operator==(const TrainingExample&) const = default;
};

struct BuildOptions {
    std::string separator = kDefaultSeparator;
    // Tasks to emit; tasks an instance cannot support (no explanations) are
    // skipped regardless.
    std::set<TaskShape> tasks{TaskShape::kQToA, TaskShape::kQaToE, TaskShape::kQToAe};
    // Serialize object/attribute tags into the input text.
    bool include_objects = true;
    // Objects go between prompt token and question by default; this flag
    // moves them after the question instead.
    bool objects_after_question = false;
};

// "label1 attr1 attr2 ; label2 ..." — flat serialization of the object tags.
std::string objects_string(const VqaInstance& instance);

// The single gold answer used for explanation-conditioned tasks: the most
// frequent direct answer, ties broken by first occurrence.
std::string primary_answer(const VqaInstance& instance);

// Expands one instance into training examples:
//   Q_TO_A   — one per distinct direct answer (first-occurrence order);
//   QA_TO_E  — primary answer in the input, one per explanation;
//   Q_TO_AE  — one per explanation, target "answer <sep> explanation".
// Emitted in that task order. Throws MissingPrompt on registry gaps and
// SeparatorCollision when an answer or explanation contains the separator.
std::vector<TrainingExample> build_examples(const VqaInstance& instance, const PromptRegistry& registry,
                                            const BuildOptions& options = {});

// The input side an inference-time prompt would use for `task` (no gold
// target required): prompt token, optional object string, question, and — for
// QA_TO_E only — the primary answer. Matches build_examples' input exactly.
std::string generation_input(const VqaInstance& instance, TaskShape task, const PromptRegistry& registry,
                             const BuildOptions& options = {});

// Splits generated text on the first separator occurrence; both sides are
// whitespace-trimmed. Throws NoSeparator when the separator is absent so the
// caller can decide to treat the whole text as a bare answer.
std::pair<std::string, std::string> parse_joint(const std::string& output_text, const std::string& separator);

// Balances datasets by repeating each one ceil(N_max / N_d) times, then
// shuffles the concatenation with the seed. Throws EmptyCorpus when every
// dataset is empty.
std::vector<TrainingExample> upsample_mix(
    const std::vector<std::pair<std::string, std::vector<TrainingExample>>>& datasets, uint64_t seed);

Json example_to_json(const TrainingExample& example);
TrainingExample example_from_json(const Json& j);

std::vector<TrainingExample> load_examples(const std::filesystem::path& path);
void save_examples(const std::filesystem::path& path, const std::vector<TrainingExample>& examples);

} // namespace umae
