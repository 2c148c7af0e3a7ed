#include "umae/evalhub.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "umae/errors.hpp"
#include "umae/rng.hpp"
#include "umae/version.hpp"

namespace umae {

EvilScore evil_score(double s_t, const ExplanationAggregates& aggregates, size_t gated_count, bool empty_gate) {
    EvilScore score;
    score.s_t = s_t;
    score.gated_count = gated_count;
    score.empty_gate = empty_gate;
    if (empty_gate) {
        score.s_o = 0.0;
        return score;
    }
    std::vector<double> members;
    auto add_member = [&](const char* name, const std::optional<double>& raw) {
        if (raw.has_value()) {
            members.push_back(*raw * 100.0);
            score.members.push_back(name);
        }
    };
    add_member("ROUGE-L", aggregates.rouge_l);
    add_member("METEOR", aggregates.meteor);
    add_member("CIDEr", aggregates.cider); // raw [0,10] -> x100 scale [0,1000]
    add_member("SPICE", aggregates.spice);
    if (!members.empty()) {
        score.ngram_score = harmonic_mean(members);
    }
    if (score.ngram_score.has_value() && aggregates.bertscore.has_value()) {
        score.s_e = harmonic_mean({*score.ngram_score, *aggregates.bertscore * 100.0});
    } else if (score.ngram_score.has_value()) {
        score.s_e = *score.ngram_score;
    } else if (aggregates.bertscore.has_value()) {
        score.s_e = *aggregates.bertscore * 100.0;
    }
    score.s_o = score.s_e.has_value() ? s_t * *score.s_e / 100.0 : 0.0;
    return score;
}

std::vector<std::string> gate(const std::vector<VqaInstance>& instances,
                              const std::map<std::string, Prediction>& predictions, const GateConfig& config) {
    std::vector<std::string> correct;
    for (const VqaInstance& instance : instances) {
        auto it = predictions.find(instance.id);
        if (it == predictions.end()) {
            throw MissingPrediction("no prediction for instance " + instance.id);
        }
        const Prediction& pred = it->second;
        bool pass = false;
        if (config.mode == GateMode::kMc) {
            if (!instance.mc_correct_index.has_value()) {
                throw ValidationError("instance " + instance.id + " has no mc_correct_index for MC gating");
            }
            if (!pred.chosen_index.has_value()) {
                throw MissingPrediction("prediction for " + instance.id + " has no chosen option index");
            }
            pass = static_cast<int>(*pred.chosen_index) == *instance.mc_correct_index;
        } else {
            pass = vqa_accuracy(pred.answer_text, instance.direct_answers, config.norm) > config.da_threshold;
        }
        if (pass) {
            correct.push_back(instance.id);
        }
    }
    return correct;
}

std::set<std::string> common_subset(const std::vector<std::set<std::string>>& per_model_correct) {
    if (per_model_correct.empty()) {
        throw ValidationError("no models to intersect");
    }
    std::set<std::string> subset = per_model_correct.front();
    for (size_t i = 1; i < per_model_correct.size(); ++i) {
        std::set<std::string> next;
        std::set_intersection(subset.begin(), subset.end(), per_model_correct[i].begin(),
                              per_model_correct[i].end(), std::inserter(next, next.begin()));
        subset = std::move(next);
    }
    return subset;
}

std::string bounds_mode_name(BoundsMode mode) {
    switch (mode) {
    case BoundsMode::kBest:
        return "best";
    case BoundsMode::kAverage:
        return "average";
    case BoundsMode::kWorst:
        return "worst";
    }
    throw ValidationError("bad bounds mode");
}

BoundsMode parse_bounds_mode(const std::string& name) {
    if (name == "best") {
        return BoundsMode::kBest;
    }
    if (name == "average") {
        return BoundsMode::kAverage;
    }
    if (name == "worst") {
        return BoundsMode::kWorst;
    }
    throw ParseError("unknown bounds mode: " + name);
}

HumanBoundsResult human_bounds(const std::vector<VqaInstance>& instances, BoundsMode mode, uint64_t seed,
                               const TextNorm& norm) {
    if (instances.empty()) {
        throw EmptyCorpus("no instances for human bounds");
    }
    HumanBoundsResult result;
    double sum = 0.0;
    for (const VqaInstance& instance : instances) {
        const std::vector<std::string>& gold = instance.direct_answers;
        if (gold.empty()) {
            throw EmptyGold("instance " + instance.id + " has no gold answers");
        }
        std::map<std::string, size_t> freq;
        for (const std::string& ans : gold) {
            ++freq[ans];
        }
        std::string chosen;
        if (mode == BoundsMode::kAverage) {
            Pcg32 rng(derive_seed(seed, instance.id));
            chosen = gold[rng.next_below(static_cast<uint64_t>(gold.size()))];
        } else {
            // First occurrence wins frequency ties.
            bool have = false;
            size_t best_count = 0;
            for (const std::string& ans : gold) {
                const size_t c = freq[ans];
                const bool better = !have || (mode == BoundsMode::kBest ? c > best_count : c < best_count);
                if (better) {
                    chosen = ans;
                    best_count = c;
                    have = true;
                }
            }
        }
        std::vector<std::string> remaining;
        for (const std::string& ans : gold) {
            if (ans != chosen) {
                remaining.push_back(ans);
            }
        }
        double acc = 0.0;
        if (remaining.empty()) {
            ++result.degenerate_count;
        } else {
            acc = vqa_accuracy(chosen, remaining, norm);
        }
        result.per_instance.emplace_back(instance.id, acc);
        sum += acc;
    }
    result.corpus_value = 100.0 * sum / static_cast<double>(instances.size());
    return result;
}

std::string category_name(ErrorCategory category) {
    switch (category) {
    case ErrorCategory::kKnowledge:
        return "Knowledge";
    case ErrorCategory::kVisual:
        return "Visual";
    case ErrorCategory::kSemanticDisassociation:
        return "SemanticDisassociation";
    case ErrorCategory::kMetric:
        return "Metric";
    case ErrorCategory::kDataset:
        return "Dataset";
    }
    throw ValidationError("bad error category");
}

ErrorCategory parse_category(const std::string& name) {
    // Annotation files are hand-written; accept any casing.
    const std::string folded = to_lower(name);
    for (ErrorCategory cat : {ErrorCategory::kKnowledge, ErrorCategory::kVisual,
                              ErrorCategory::kSemanticDisassociation, ErrorCategory::kMetric,
                              ErrorCategory::kDataset}) {
        if (to_lower(category_name(cat)) == folded) {
            return cat;
        }
    }
    throw ParseError("unknown error category: " + name);
}

ErrorHistogram error_report(const std::vector<ErrorAnnotation>& annotations) {
    std::map<std::string, ErrorCategory> by_id;
    for (const ErrorAnnotation& ann : annotations) {
        auto [it, inserted] = by_id.emplace(ann.id, ann.category);
        if (!inserted && it->second != ann.category) {
            throw ValidationError("conflicting categories for id " + ann.id + ": " + category_name(it->second) +
                                  " vs " + category_name(ann.category));
        }
    }
    ErrorHistogram histogram;
    histogram.total = by_id.size();
    for (ErrorCategory cat : {ErrorCategory::kKnowledge, ErrorCategory::kVisual,
                              ErrorCategory::kSemanticDisassociation, ErrorCategory::kMetric,
                              ErrorCategory::kDataset}) {
        CategoryCount row;
        row.category = cat;
        for (const auto& [id, c] : by_id) {
            if (c == cat) {
                ++row.count;
            }
        }
        row.percent = histogram.total == 0
                          ? 0.0
                          : 100.0 * static_cast<double>(row.count) / static_cast<double>(histogram.total);
        histogram.rows.push_back(row);
    }
    return histogram;
}

std::vector<ErrorAnnotation> load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<ErrorAnnotation> annotations;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = trim(line);
        if (trimmed.empty()) {
            continue;
        }
        const size_t c1 = trimmed.find(',');
        if (c1 == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected id,category,note");
        }
        const size_t c2 = trimmed.find(',', c1 + 1);
        ErrorAnnotation ann;
        ann.id = trim(trimmed.substr(0, c1));
        const std::string cat = trim(c2 == std::string::npos ? trimmed.substr(c1 + 1)
                                                             : trimmed.substr(c1 + 1, c2 - c1 - 1));
        if (line_no == 1 && ann.id == "id" && cat == "category") {
            continue;
        }
        ann.category = parse_category(cat);
        ann.note = c2 == std::string::npos ? "" : trim(trimmed.substr(c2 + 1));
        annotations.push_back(std::move(ann));
    }
    return annotations;
}

namespace {

Json optional_to_json(const std::optional<double>& v) {
    return v.has_value() ? Json(*v) : Json(nullptr);
}

std::optional<double> optional_from_json(const Json& j) {
    return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

} // namespace

Json report_to_json(const EvalReport& report) {
    Json per_instance = Json::object();
    for (const auto& [metric, values] : report.per_instance) {
        Json row = Json::object();
        for (const auto& [id, v] : values) {
            row[id] = v;
        }
        per_instance[metric] = std::move(row);
    }
    Json correctness = Json::object();
    for (const auto& [id, ok] : report.correctness) {
        correctness[id] = ok;
    }
    return Json{
        {"tool_version", kVersion},
        {"model_name", report.model_name},
        {"s_t", report.score.s_t},
        {"s_e", optional_to_json(report.score.s_e)},
        {"s_o", report.score.s_o},
        {"ngram_score", optional_to_json(report.score.ngram_score)},
        {"members", report.score.members},
        {"gated_count", report.score.gated_count},
        {"empty_gate", report.score.empty_gate},
        {"metrics", report.corpus_metrics},
        {"per_instance", per_instance},
        {"correctness", correctness},
        {"config", report.config_echo},
    };
}

EvalReport report_from_json(const Json& j) {
    EvalReport report;
    try {
        report.model_name = j.at("model_name").get<std::string>();
        report.score.s_t = j.at("s_t").get<double>();
        report.score.s_e = optional_from_json(j.at("s_e"));
        report.score.s_o = j.at("s_o").get<double>();
        report.score.ngram_score = optional_from_json(j.at("ngram_score"));
        report.score.members = j.at("members").get<std::vector<std::string>>();
        report.score.gated_count = j.at("gated_count").get<size_t>();
        report.score.empty_gate = j.at("empty_gate").get<bool>();
        for (const auto& [name, v] : j.at("metrics").items()) {
            report.corpus_metrics[name] = v.get<double>();
        }
        for (const auto& [metric, row] : j.at("per_instance").items()) {
            for (const auto& [id, v] : row.items()) {
                report.per_instance[metric][id] = v.get<double>();
            }
        }
        for (const auto& [id, ok] : j.at("correctness").items()) {
            report.correctness[id] = ok.get<bool>();
        }
        report.config_echo = j.value("config", Json::object());
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad report: ") + e.what());
    }
    return report;
}

namespace {

std::string fixed2(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << v;
    return out.str();
}

std::string fixed2_opt(const std::optional<double>& v) {
    return v.has_value() ? fixed2(*v) : std::string("-");
}

void pad_to(std::string& line, size_t width) {
    if (line.size() < width) {
        line.append(width - line.size(), ' ');
    }
}

} // namespace

std::string render_table(const std::vector<EvalReport>& reports) {
    std::vector<std::string> metric_names;
    for (const EvalReport& report : reports) {
        for (const auto& [name, v] : report.corpus_metrics) {
            if (std::find(metric_names.begin(), metric_names.end(), name) == metric_names.end()) {
                metric_names.push_back(name);
            }
        }
    }
    std::sort(metric_names.begin(), metric_names.end());

    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"model", "S_O", "S_T", "S_E", "NGRAMScore"};
    header.insert(header.end(), metric_names.begin(), metric_names.end());
    cells.push_back(header);
    for (const EvalReport& report : reports) {
        std::vector<std::string> row{report.model_name, fixed2(report.score.s_o), fixed2(report.score.s_t),
                                     fixed2_opt(report.score.s_e), fixed2_opt(report.score.ngram_score)};
        for (const std::string& name : metric_names) {
            auto it = report.corpus_metrics.find(name);
            row.push_back(it == report.corpus_metrics.end() ? "-" : fixed2(it->second));
        }
        cells.push_back(std::move(row));
    }
    std::vector<size_t> widths(cells[0].size(), 0);
    for (const auto& row : cells) {
        for (size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::string out;
    for (const auto& row : cells) {
        std::string line;
        for (size_t c = 0; c < row.size(); ++c) {
            std::string cell = row[c];
            pad_to(cell, widths[c] + (c + 1 == row.size() ? 0 : 2));
            line += cell;
        }
        while (!line.empty() && line.back() == ' ') {
            line.pop_back();
        }
        out += line;
        out += '\n';
    }
    return out;
}

CompareResult compare_reports(const std::vector<EvalReport>& reports) {
    if (reports.empty()) {
        throw ValidationError("no reports to compare");
    }
    std::vector<std::set<std::string>> correct_sets;
    for (const EvalReport& report : reports) {
        std::set<std::string> ids;
        for (const auto& [id, ok] : report.correctness) {
            if (ok) {
                ids.insert(id);
            }
        }
        correct_sets.push_back(std::move(ids));
    }
    CompareResult result;
    result.subset = common_subset(correct_sets);
    for (const EvalReport& report : reports) {
        // Mean of stored raw per-instance values over the shared subset.
        auto subset_mean = [&](const char* metric) -> std::optional<double> {
            auto it = report.per_instance.find(metric);
            if (it == report.per_instance.end() || result.subset.empty()) {
                return std::nullopt;
            }
            double sum = 0.0;
            for (const std::string& id : result.subset) {
                auto vit = it->second.find(id);
                if (vit == it->second.end()) {
                    throw MissingId("report " + report.model_name + " lacks " + std::string(metric) +
                                    " for id " + id);
                }
                sum += vit->second;
            }
            return sum / static_cast<double>(result.subset.size());
        };
        ExplanationAggregates agg;
        agg.rouge_l = subset_mean("ROUGE-L");
        agg.meteor = subset_mean("METEOR");
        agg.cider = subset_mean("CIDEr");
        agg.spice = subset_mean("SPICE");
        agg.bertscore = subset_mean("BERTScore");
        CompareRow row;
        row.model_name = report.model_name;
        // Every answer in the common subset is correct by construction.
        row.score = evil_score(100.0, agg, result.subset.size(), result.subset.empty());
        auto record = [&row](const char* name, const std::optional<double>& raw) {
            if (raw.has_value()) {
                row.member_values[name] = *raw * 100.0;
            }
        };
        record("ROUGE-L", agg.rouge_l);
        record("METEOR", agg.meteor);
        record("CIDEr", agg.cider);
        record("SPICE", agg.spice);
        record("BERTScore", agg.bertscore);
        result.rows.push_back(std::move(row));
    }
    return result;
}

} // namespace umae
