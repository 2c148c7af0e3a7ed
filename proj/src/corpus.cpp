#include "umae/corpus.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "umae/errors.hpp"
#include "umae/rng.hpp"

namespace umae {

std::string_view dataset_name(Dataset d) {
    switch (d) {
        case Dataset::kOkvqa: return "OKVQA";
        case Dataset::kAokvqa: return "AOKVQA";
        case Dataset::kVcr: return "VCR";
        case Dataset::kVqax: return "VQAX";
        case Dataset::kSynth: return "SYNTH";
    }
    return "SYNTH";
}

Dataset parse_dataset(std::string_view name) {
    if (name == "OKVQA") return Dataset::kOkvqa;
    if (name == "AOKVQA") return Dataset::kAokvqa;
    if (name == "VCR") return Dataset::kVcr;
    if (name == "VQAX") return Dataset::kVqax;
    if (name == "SYNTH") return Dataset::kSynth;
    throw ParseError("unknown dataset name: " + std::string(name));
}

void validate(const VqaInstance& inst) {
    auto fail = [&](const std::string& what) {
        throw ValidationError("instance '" + inst.id + "': " + what);
    };
    if (inst.id.empty()) {
        throw ValidationError("instance with empty id");
    }
    if (inst.question.empty()) {
        fail("empty question");
    }
    if (inst.mc_correct_index) {
        int idx = *inst.mc_correct_index;
        if (idx < 0 || idx >= static_cast<int>(inst.mc_options.size())) {
            fail("mc_correct_index " + std::to_string(idx) + " out of range for " +
                 std::to_string(inst.mc_options.size()) + " options");
        }
    }
    for (const auto& a : inst.direct_answers) {
        if (a.empty()) {
            fail("empty direct answer");
        }
    }
    if (inst.dataset == Dataset::kOkvqa && !inst.explanations.empty()) {
        fail("OKVQA instances carry no explanations");
    }
    if (inst.explanations.size() > 4) {
        fail("more than 4 explanations");
    }
    std::map<std::string, int> entity_colors;
    for (const auto& r : inst.regions) {
        if (r.x0 < 0 || r.y0 < 0 || r.x0 >= r.x1 || r.y0 >= r.y1) {
            fail("degenerate bbox for entity '" + r.entity_id + "'");
        }
        if (r.color_index < 0) {
            fail("negative color_index");
        }
        auto [it, inserted] = entity_colors.emplace(r.entity_id, r.color_index);
        if (!inserted && it->second != r.color_index) {
            fail("entity '" + r.entity_id + "' mapped to two colors");
        }
    }
}

Json instance_to_json(const VqaInstance& inst) {
    Json objects = Json::array();
    for (const auto& o : inst.objects) {
        objects.push_back({{"label", o.label}, {"attributes", o.attributes}});
    }
    Json regions = Json::array();
    for (const auto& r : inst.regions) {
        regions.push_back({{"entity_id", r.entity_id},
                           {"bbox", {r.x0, r.y0, r.x1, r.y1}},
                           {"color_index", r.color_index}});
    }
    Json j{{"id", inst.id},
           {"dataset", std::string(dataset_name(inst.dataset))},
           {"image_ref", inst.image_ref},
           {"question", inst.question},
           {"direct_answers", inst.direct_answers},
           {"mc_options", inst.mc_options},
           {"explanations", inst.explanations},
           {"objects", objects},
           {"regions", regions}};
    j["mc_correct_index"] = inst.mc_correct_index ? Json(*inst.mc_correct_index) : Json(nullptr);
    return j;
}

VqaInstance instance_from_json(const Json& j) {
    VqaInstance inst;
    try {
        inst.id = j.at("id").get<std::string>();
        inst.dataset = parse_dataset(j.at("dataset").get<std::string>());
        inst.image_ref = j.value("image_ref", std::string{});
        inst.question = j.at("question").get<std::string>();
        inst.direct_answers = j.value("direct_answers", std::vector<std::string>{});
        inst.mc_options = j.value("mc_options", std::vector<std::string>{});
        if (j.contains("mc_correct_index") && !j.at("mc_correct_index").is_null()) {
            inst.mc_correct_index = j.at("mc_correct_index").get<int>();
        }
        inst.explanations = j.value("explanations", std::vector<std::string>{});
        if (j.contains("objects")) {
            for (const auto& o : j.at("objects")) {
                ObjectTag tag;
                tag.label = o.at("label").get<std::string>();
                tag.attributes = o.value("attributes", std::vector<std::string>{});
                inst.objects.push_back(std::move(tag));
            }
        }
        if (j.contains("regions")) {
            for (const auto& r : j.at("regions")) {
                EntityRegion reg;
                reg.entity_id = r.at("entity_id").get<std::string>();
                const auto& bbox = r.at("bbox");
                if (!bbox.is_array() || bbox.size() != 4) {
                    throw ParseError("bbox must be [x0,y0,x1,y1]");
                }
                reg.x0 = bbox[0].get<int>();
                reg.y0 = bbox[1].get<int>();
                reg.x1 = bbox[2].get<int>();
                reg.y1 = bbox[3].get<int>();
                reg.color_index = r.at("color_index").get<int>();
                inst.regions.push_back(std::move(reg));
            }
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad instance record: ") + e.what());
    }
    return inst;
}

namespace {

std::vector<VqaInstance> finish_load(std::vector<VqaInstance> instances) {
    std::set<std::string> seen;
    for (const auto& inst : instances) {
        validate(inst);
        if (!seen.insert(inst.id).second) {
            throw ValidationError("duplicate id '" + inst.id + "'");
        }
    }
    return instances;
}

std::vector<VqaInstance> load_canonical(const std::filesystem::path& path) {
    std::vector<VqaInstance> out;
    for_each_jsonl(path, [&](size_t line_no, const Json& row) {
        try {
            out.push_back(instance_from_json(row));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    });
    return out;
}

// A-OKVQA upstream release: one JSON array of question records.
std::vector<VqaInstance> load_aokvqa_upstream(const Json& arr) {
    std::vector<VqaInstance> out;
    for (const auto& q : arr) {
        VqaInstance inst;
        inst.dataset = Dataset::kAokvqa;
        inst.id = q.at("question_id").is_string() ? q.at("question_id").get<std::string>()
                                                  : std::to_string(q.at("question_id").get<long long>());
        if (q.contains("image_id")) {
            inst.image_ref = q.at("image_id").is_string()
                                 ? q.at("image_id").get<std::string>()
                                 : std::to_string(q.at("image_id").get<long long>());
        }
        inst.question = q.at("question").get<std::string>();
        inst.mc_options = q.value("choices", std::vector<std::string>{});
        if (q.contains("correct_choice_idx") && !q.at("correct_choice_idx").is_null()) {
            inst.mc_correct_index = q.at("correct_choice_idx").get<int>();
        }
        inst.direct_answers = q.value("direct_answers", std::vector<std::string>{});
        inst.explanations = q.value("rationales", std::vector<std::string>{});
        if (inst.explanations.size() > 4) {
            inst.explanations.resize(4);
        }
        out.push_back(std::move(inst));
    }
    return out;
}

// OK-VQA upstream: a combined export {"questions": [...], "annotations": [...]}.
std::vector<VqaInstance> load_okvqa_upstream(const Json& obj) {
    std::map<long long, std::pair<std::string, std::string>> questions; // qid -> (text, image)
    for (const auto& q : obj.at("questions")) {
        long long qid = q.at("question_id").get<long long>();
        std::string image;
        if (q.contains("image_id")) {
            image = q.at("image_id").is_string() ? q.at("image_id").get<std::string>()
                                                 : std::to_string(q.at("image_id").get<long long>());
        }
        questions[qid] = {q.at("question").get<std::string>(), image};
    }
    std::vector<VqaInstance> out;
    for (const auto& a : obj.at("annotations")) {
        long long qid = a.at("question_id").get<long long>();
        auto it = questions.find(qid);
        if (it == questions.end()) {
            throw ParseError("annotation for unknown question_id " + std::to_string(qid));
        }
        VqaInstance inst;
        inst.dataset = Dataset::kOkvqa;
        inst.id = std::to_string(qid);
        inst.question = it->second.first;
        inst.image_ref = it->second.second;
        for (const auto& ans : a.at("answers")) {
            inst.direct_answers.push_back(ans.at("answer").get<std::string>());
        }
        out.push_back(std::move(inst));
    }
    return out;
}

// Replaces token-list entity mentions (arrays of object indices) with
// "Label<N>" names, numbering repeated labels by first appearance.
struct VcrNamer {
    std::vector<std::string> object_names;
    std::map<int, std::string> assigned;
    std::map<std::string, int> label_counts;

    std::string name_for(int obj_idx) {
        auto it = assigned.find(obj_idx);
        if (it != assigned.end()) {
            return it->second;
        }
        std::string label = obj_idx >= 0 && obj_idx < static_cast<int>(object_names.size())
                                ? object_names[static_cast<size_t>(obj_idx)]
                                : "entity";
        if (!label.empty()) {
            label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
        }
        int n = ++label_counts[label];
        std::string name = label + std::to_string(n);
        assigned[obj_idx] = name;
        return name;
    }

    std::string render(const Json& tokens) {
        std::string text;
        for (const auto& tok : tokens) {
            std::string piece;
            if (tok.is_array()) {
                for (size_t i = 0; i < tok.size(); ++i) {
                    if (i != 0) {
                        piece += " and ";
                    }
                    piece += name_for(tok[i].get<int>());
                }
            } else {
                piece = tok.get<std::string>();
            }
            if (!text.empty() && !piece.empty()) {
                text += ' ';
            }
            text += piece;
        }
        return text;
    }
};

// VCR upstream: JSONL with tokenized question/choices; optional "boxes"
// aligned with "objects" yields entity regions for mentioned entities.
std::vector<VqaInstance> load_vcr_upstream(const std::filesystem::path& path) {
    std::vector<VqaInstance> out;
    for_each_jsonl(path, [&](size_t line_no, const Json& row) {
        try {
            VqaInstance inst;
            inst.dataset = Dataset::kVcr;
            inst.id = row.at("annot_id").get<std::string>();
            inst.image_ref = row.value("img_fn", std::string{});

            VcrNamer namer;
            namer.object_names = row.value("objects", std::vector<std::string>{});

            inst.question = row.at("question").is_array() ? namer.render(row.at("question"))
                                                          : row.at("question").get<std::string>();
            for (const auto& choice : row.at("answer_choices")) {
                inst.mc_options.push_back(choice.is_array() ? namer.render(choice)
                                                            : choice.get<std::string>());
            }
            inst.mc_correct_index = row.at("answer_label").get<int>();
            if (row.contains("rationale_choices") && row.contains("rationale_label")) {
                const auto& rats = row.at("rationale_choices");
                int label = row.at("rationale_label").get<int>();
                if (label >= 0 && label < static_cast<int>(rats.size())) {
                    const auto& r = rats[static_cast<size_t>(label)];
                    inst.explanations.push_back(r.is_array() ? namer.render(r)
                                                             : r.get<std::string>());
                }
            }
            for (const auto& name : namer.object_names) {
                inst.objects.push_back(ObjectTag{name, {}});
            }
            if (row.contains("boxes")) {
                const auto& boxes = row.at("boxes");
                int color = 0;
                for (const auto& [idx, name] : namer.assigned) {
                    if (idx < 0 || idx >= static_cast<int>(boxes.size())) {
                        continue;
                    }
                    const auto& b = boxes[static_cast<size_t>(idx)];
                    EntityRegion reg;
                    reg.entity_id = name;
                    reg.x0 = static_cast<int>(b[0].get<double>());
                    reg.y0 = static_cast<int>(b[1].get<double>());
                    reg.x1 = static_cast<int>(b[2].get<double>());
                    reg.y1 = static_cast<int>(b[3].get<double>());
                    reg.color_index = color++;
                    inst.regions.push_back(std::move(reg));
                }
            }
            out.push_back(std::move(inst));
        } catch (const Json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    });
    return out;
}

} // namespace

std::vector<VqaInstance> load_dataset(const std::filesystem::path& path, Dataset dataset) {
    if (!std::filesystem::exists(path)) {
        throw IoError("no such file: " + path.string());
    }
    std::string content = read_file(path);
    size_t first = content.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {}; // empty file -> empty list
    }

    // Whole-file JSON value => upstream array/object layouts.
    if (content[first] == '[') {
        Json arr = Json::parse(content, nullptr, false);
        if (arr.is_discarded()) {
            throw ParseError(path.string() + ": malformed JSON array");
        }
        if (dataset != Dataset::kAokvqa) {
            throw ParseError(path.string() + ": JSON-array layout is only recognized for AOKVQA");
        }
        return finish_load(load_aokvqa_upstream(arr));
    }
    if (content[first] == '{') {
        // Either canonical JSONL (first line is one object) or an OK-VQA
        // combined export (single object spanning the file).
        size_t eol = content.find('\n', first);
        std::string first_line = content.substr(first, eol == std::string::npos ? std::string::npos
                                                                                : eol - first);
        Json probe = Json::parse(first_line, nullptr, false);
        if (!probe.is_discarded() && probe.is_object()) {
            if (probe.contains("id") && probe.contains("dataset")) {
                return finish_load(load_canonical(path));
            }
            if (dataset == Dataset::kVcr && probe.contains("annot_id")) {
                return finish_load(load_vcr_upstream(path));
            }
        }
        Json whole = Json::parse(content, nullptr, false);
        if (!whole.is_discarded() && whole.is_object() && whole.contains("questions") &&
            whole.contains("annotations")) {
            if (dataset != Dataset::kOkvqa) {
                throw ParseError(path.string() +
                                 ": questions/annotations layout is only recognized for OKVQA");
            }
            return finish_load(load_okvqa_upstream(whole));
        }
        if (!probe.is_discarded() && probe.is_object()) {
            // Canonical JSONL with a bad first record: surface the field error.
            return finish_load(load_canonical(path));
        }
    }
    throw ParseError(path.string() + ": unrecognized layout for dataset " +
                     std::string(dataset_name(dataset)));
}

void save_dataset(const std::filesystem::path& path, std::span<const VqaInstance> instances) {
    std::vector<Json> rows;
    rows.reserve(instances.size());
    for (const auto& inst : instances) {
        rows.push_back(instance_to_json(inst));
    }
    write_jsonl(path, rows);
}

std::pair<std::vector<VqaInstance>, std::vector<VqaInstance>>
split(std::span<const VqaInstance> instances, const SplitSpec& spec) {
    if (instances.empty()) {
        throw ValidationError("split requires a non-empty instance list");
    }
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw ValidationError("train_fraction must lie in (0, 1)");
    }
    size_t n = instances.size();
    auto n_train = static_cast<size_t>(
        std::llround(spec.train_fraction * static_cast<double>(n)));
    n_train = std::min(n_train, n);

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    Pcg32 rng(spec.seed);
    shuffle(order, rng);

    std::vector<bool> in_train(n, false);
    for (size_t i = 0; i < n_train; ++i) {
        in_train[order[i]] = true;
    }
    // Both sides keep the original input order.
    std::vector<VqaInstance> train;
    std::vector<VqaInstance> validation;
    train.reserve(n_train);
    validation.reserve(n - n_train);
    for (size_t i = 0; i < n; ++i) {
        (in_train[i] ? train : validation).push_back(instances[i]);
    }
    return {std::move(train), std::move(validation)};
}

} // namespace umae
