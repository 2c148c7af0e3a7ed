#include "umae/augment.hpp"

#include <algorithm>
#include <cmath>

#include "umae/errors.hpp"
#include "umae/rng.hpp"
#include "umae/text.hpp"

namespace umae {

std::string task_name(TaskShape task) {
    switch (task) {
    case TaskShape::kQToA:
        return "q2a";
    case TaskShape::kQaToE:
        return "qa2e";
    case TaskShape::kQToAe:
        return "q2ae";
    }
    throw ValidationError("bad task shape");
}

TaskShape parse_task(const std::string& name) {
    if (name == "q2a") {
        return TaskShape::kQToA;
    }
    if (name == "qa2e") {
        return TaskShape::kQaToE;
    }
    if (name == "q2ae") {
        return TaskShape::kQToAe;
    }
    throw ParseError("unknown task shape: " + name);
}

PromptRegistry PromptRegistry::defaults() {
    PromptRegistry reg;
    reg.insert(Dataset::kOkvqa, TaskShape::kQToA, "<#OKA#>");
    reg.insert(Dataset::kVcr, TaskShape::kQToA, "<#A#>");
    reg.insert(Dataset::kVcr, TaskShape::kQaToE, "<#E#>");
    reg.insert(Dataset::kVcr, TaskShape::kQToAe, "<#AE#>");
    reg.insert(Dataset::kAokvqa, TaskShape::kQToA, "<#AOKA#>");
    reg.insert(Dataset::kAokvqa, TaskShape::kQaToE, "<#AOKE#>");
    reg.insert(Dataset::kAokvqa, TaskShape::kQToAe, "<#AOKAE#>");
    reg.set_fallback(Dataset::kVqax, Dataset::kAokvqa);
    return reg;
}

void PromptRegistry::insert(Dataset dataset, TaskShape task, const std::string& token,
                            const std::string& separator) {
    if (token.empty()) {
        throw ValidationError("prompt token must be non-empty");
    }
    if (token == separator) {
        throw SeparatorCollision("prompt token equals separator: " + token);
    }
    const std::pair<Dataset, TaskShape> key{dataset, task};
    for (const auto& [other_key, other_token] : tokens_) {
        if (other_token == token && other_key != key) {
            throw ValidationError("prompt token " + token + " already registered for " +
                                  std::string(dataset_name(other_key.first)) + "/" + task_name(other_key.second));
        }
    }
    tokens_[key] = token;
}

void PromptRegistry::set_fallback(Dataset from, Dataset to) {
    fallbacks_[from] = to;
}

const std::string& PromptRegistry::lookup(Dataset dataset, TaskShape task) const {
    auto it = tokens_.find({dataset, task});
    if (it == tokens_.end()) {
        auto fb = fallbacks_.find(dataset);
        if (fb != fallbacks_.end()) {
            it = tokens_.find({fb->second, task});
        }
    }
    if (it == tokens_.end()) {
        throw MissingPrompt("no prompt token for " + std::string(dataset_name(dataset)) + "/" + task_name(task));
    }
    return it->second;
}

bool PromptRegistry::contains(Dataset dataset, TaskShape task) const {
    if (tokens_.count({dataset, task}) != 0) {
        return true;
    }
    auto fb = fallbacks_.find(dataset);
    return fb != fallbacks_.end() && tokens_.count({fb->second, task}) != 0;
}

std::string objects_string(const VqaInstance& instance) {
    std::string out;
    for (const ObjectTag& obj : instance.objects) {
        if (!out.empty()) {
            out += " ; ";
        }
        out += obj.label;
        for (const std::string& attr : obj.attributes) {
            out += ' ';
            out += attr;
        }
    }
    return out;
}

std::string primary_answer(const VqaInstance& instance) {
    if (instance.direct_answers.empty()) {
        throw ValidationError("instance " + instance.id + " has no direct answers");
    }
    std::map<std::string, int> counts;
    for (const std::string& ans : instance.direct_answers) {
        ++counts[ans];
    }
    const std::string* best = nullptr;
    int best_count = 0;
    for (const std::string& ans : instance.direct_answers) { // first-occurrence tie-break
        const int c = counts[ans];
        if (best == nullptr || c > best_count) {
            best = &ans;
            best_count = c;
        }
    }
    return *best;
}

namespace {

void check_separator_free(const std::string& text, const std::string& separator, const std::string& what,
                          const std::string& id) {
    if (text.find(separator) != std::string::npos) {
        throw SeparatorCollision(what + " of instance " + id + " contains the separator " + separator);
    }
}

std::string compose_input(const std::string& token, const std::string& objects, const std::string& question,
                          const std::string& answer_suffix, bool objects_after_question) {
    std::string input = token;
    auto append = [&input](const std::string& part) {
        if (!part.empty()) {
            input += ' ';
            input += part;
        }
    };
    if (objects_after_question) {
        append(question);
        append(objects);
    } else {
        append(objects);
        append(question);
    }
    append(answer_suffix);
    return input;
}

} // namespace

std::vector<TrainingExample> build_examples(const VqaInstance& instance, const PromptRegistry& registry,
                                            const BuildOptions& options) {
    std::vector<TrainingExample> out;
    const std::string objects = options.include_objects ? objects_string(instance) : std::string{};

    auto make = [&](TaskShape task, const std::string& answer_suffix, const std::string& target) {
        TrainingExample ex;
        ex.prompt_token = registry.lookup(instance.dataset, task);
        ex.input_text =
            compose_input(ex.prompt_token, objects, instance.question, answer_suffix, options.objects_after_question);
        ex.target_text = target;
        ex.image_ref = instance.image_ref;
        ex.source_id = instance.id;
        ex.task = task;
        out.push_back(std::move(ex));
    };

    if (options.tasks.count(TaskShape::kQToA) != 0) {
        std::vector<std::string> distinct;
        for (const std::string& ans : instance.direct_answers) {
            if (std::find(distinct.begin(), distinct.end(), ans) == distinct.end()) {
                distinct.push_back(ans);
            }
        }
        for (const std::string& ans : distinct) {
            check_separator_free(ans, options.separator, "answer", instance.id);
            make(TaskShape::kQToA, "", ans);
        }
    }
    if (!instance.explanations.empty()) {
        const std::string answer = primary_answer(instance);
        check_separator_free(answer, options.separator, "answer", instance.id);
        if (options.tasks.count(TaskShape::kQaToE) != 0) {
            for (const std::string& expl : instance.explanations) {
                check_separator_free(expl, options.separator, "explanation", instance.id);
                make(TaskShape::kQaToE, answer, expl);
            }
        }
        if (options.tasks.count(TaskShape::kQToAe) != 0) {
            for (const std::string& expl : instance.explanations) {
                check_separator_free(expl, options.separator, "explanation", instance.id);
                make(TaskShape::kQToAe, "", answer + " " + options.separator + " " + expl);
            }
        }
    }
    return out;
}

std::string generation_input(const VqaInstance& instance, TaskShape task, const PromptRegistry& registry,
                             const BuildOptions& options) {
    const std::string objects = options.include_objects ? objects_string(instance) : std::string{};
    const std::string answer_suffix = task == TaskShape::kQaToE ? primary_answer(instance) : std::string{};
    return compose_input(registry.lookup(instance.dataset, task), objects, instance.question, answer_suffix,
                         options.objects_after_question);
}

std::pair<std::string, std::string> parse_joint(const std::string& output_text, const std::string& separator) {
    if (separator.empty()) {
        throw ValidationError("separator must be non-empty");
    }
    const size_t pos = output_text.find(separator);
    if (pos == std::string::npos) {
        throw NoSeparator("no " + separator + " in generated text");
    }
    return {trim(output_text.substr(0, pos)), trim(output_text.substr(pos + separator.size()))};
}

std::vector<TrainingExample> upsample_mix(
    const std::vector<std::pair<std::string, std::vector<TrainingExample>>>& datasets, uint64_t seed) {
    size_t n_max = 0;
    for (const auto& [name, examples] : datasets) {
        n_max = std::max(n_max, examples.size());
    }
    if (n_max == 0) {
        throw EmptyCorpus("no examples to mix");
    }
    std::vector<TrainingExample> mixed;
    for (const auto& [name, examples] : datasets) {
        if (examples.empty()) {
            continue;
        }
        const size_t factor = (n_max + examples.size() - 1) / examples.size();
        for (size_t rep = 0; rep < factor; ++rep) {
            mixed.insert(mixed.end(), examples.begin(), examples.end());
        }
    }
    Pcg32 rng(seed);
    shuffle(mixed, rng);
    return mixed;
}

Json example_to_json(const TrainingExample& example) {
    return Json{
        {"prompt_token", example.prompt_token}, {"input_text", example.input_text},
        {"target_text", example.target_text},   {"image_ref", example.image_ref},
        {"source_id", example.source_id},       {"task", task_name(example.task)},
    };
}

TrainingExample example_from_json(const Json& j) {
    TrainingExample ex;
    try {
        ex.prompt_token = j.at("prompt_token").get<std::string>();
        ex.input_text = j.at("input_text").get<std::string>();
        ex.target_text = j.at("target_text").get<std::string>();
        ex.image_ref = j.at("image_ref").get<std::string>();
        ex.source_id = j.at("source_id").get<std::string>();
        ex.task = parse_task(j.at("task").get<std::string>());
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad training example: ") + e.what());
    }
    if (ex.input_text.rfind(ex.prompt_token, 0) != 0) {
        throw ValidationError("input_text does not start with prompt_token for " + ex.source_id);
    }
    return ex;
}

std::vector<TrainingExample> load_examples(const std::filesystem::path& path) {
    std::vector<TrainingExample> out;
    for_each_jsonl(path, [&out](size_t, const Json& j) { out.push_back(example_from_json(j)); });
    return out;
}

void save_examples(const std::filesystem::path& path, const std::vector<TrainingExample>& examples) {
    std::vector<Json> rows;
    rows.reserve(examples.size());
    for (const TrainingExample& ex : examples) {
        rows.push_back(example_to_json(ex));
    }
    write_jsonl(path, rows);
}

} // namespace umae
