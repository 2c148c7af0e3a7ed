#include "umae/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "umae/errors.hpp"
#include "umae/jsonl.hpp"

namespace umae {

double vqa_accuracy(const std::string& candidate, const std::vector<std::string>& gold, const TextNorm& norm) {
    if (gold.empty()) {
        throw EmptyGold("no gold answers");
    }
    const std::string cand = normalize_answer(candidate, norm);
    std::vector<bool> match(gold.size());
    size_t total = 0;
    for (size_t i = 0; i < gold.size(); ++i) {
        match[i] = normalize_answer(gold[i], norm) == cand;
        total += match[i] ? 1 : 0;
    }
    double acc = 0.0;
    for (size_t j = 0; j < gold.size(); ++j) {
        const size_t others = total - (match[j] ? 1 : 0);
        acc += std::min(static_cast<double>(others) / 3.0, 1.0);
    }
    return acc / static_cast<double>(gold.size());
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, size_t n) {
    NgramCounts counts;
    if (tokens.size() >= n) {
        for (size_t i = 0; i + n <= tokens.size(); ++i) {
            ++counts[std::vector<std::string>(tokens.begin() + static_cast<ptrdiff_t>(i),
                                              tokens.begin() + static_cast<ptrdiff_t>(i + n))];
        }
    }
    return counts;
}

void require_references(const ScoredText& inst) {
    if (inst.references.empty()) {
        throw ValidationError("instance " + inst.id + " has no references");
    }
}

struct BleuStats {
    std::vector<size_t> matched; // clipped n-gram matches per order
    std::vector<size_t> total;   // candidate n-grams per order
    size_t cand_len = 0;
    size_t ref_len = 0; // closest reference length

    explicit BleuStats(size_t max_n) : matched(max_n, 0), total(max_n, 0) {}
};

BleuStats instance_bleu_stats(const ScoredText& inst, size_t max_n, const TextNorm& norm) {
    BleuStats stats(max_n);
    const std::vector<std::string> cand = metric_tokenize(inst.candidate, norm);
    std::vector<std::vector<std::string>> refs;
    refs.reserve(inst.references.size());
    for (const std::string& ref : inst.references) {
        refs.push_back(metric_tokenize(ref, norm));
    }
    stats.cand_len = cand.size();
    stats.ref_len = refs[0].size();
    for (const auto& ref : refs) { // closest length, ties to the shorter
        const auto dist = [&](size_t len) {
            return len > cand.size() ? len - cand.size() : cand.size() - len;
        };
        if (dist(ref.size()) < dist(stats.ref_len) ||
            (dist(ref.size()) == dist(stats.ref_len) && ref.size() < stats.ref_len)) {
            stats.ref_len = ref.size();
        }
    }
    for (size_t n = 1; n <= max_n; ++n) {
        const NgramCounts cand_counts = count_ngrams(cand, n);
        NgramCounts max_ref;
        for (const auto& ref : refs) {
            for (const auto& [gram, c] : count_ngrams(ref, n)) {
                max_ref[gram] = std::max(max_ref[gram], c);
            }
        }
        for (const auto& [gram, c] : cand_counts) {
            auto it = max_ref.find(gram);
            stats.matched[n - 1] += std::min(c, it == max_ref.end() ? 0 : it->second);
            stats.total[n - 1] += c;
        }
    }
    return stats;
}

double bleu_from_precisions(const std::vector<double>& precisions, size_t n, size_t cand_len, size_t ref_len) {
    if (cand_len == 0) {
        return 0.0;
    }
    double log_sum = 0.0;
    for (size_t k = 0; k < n; ++k) {
        if (precisions[k] <= 0.0) {
            return 0.0;
        }
        log_sum += std::log(precisions[k]);
    }
    const double bp = cand_len > ref_len
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
    return bp * std::exp(log_sum / static_cast<double>(n));
}

} // namespace

std::vector<MetricValue> bleu(const std::vector<ScoredText>& corpus, int max_n, const TextNorm& norm) {
    if (corpus.empty()) {
        throw EmptyCorpus("no instances to score");
    }
    if (max_n < 1) {
        throw ValidationError("bleu max_n must be >= 1");
    }
    const size_t orders = static_cast<size_t>(max_n);
    BleuStats corpus_stats(orders);
    std::vector<BleuStats> per_instance;
    per_instance.reserve(corpus.size());
    for (const ScoredText& inst : corpus) {
        require_references(inst);
        BleuStats stats = instance_bleu_stats(inst, orders, norm);
        for (size_t k = 0; k < orders; ++k) {
            corpus_stats.matched[k] += stats.matched[k];
            corpus_stats.total[k] += stats.total[k];
        }
        corpus_stats.cand_len += stats.cand_len;
        corpus_stats.ref_len += stats.ref_len;
        per_instance.push_back(std::move(stats));
    }
    std::vector<double> corpus_prec(orders, 0.0);
    for (size_t k = 0; k < orders; ++k) {
        corpus_prec[k] = corpus_stats.total[k] == 0
                             ? 0.0
                             : static_cast<double>(corpus_stats.matched[k]) /
                                   static_cast<double>(corpus_stats.total[k]);
    }
    std::vector<MetricValue> out;
    for (size_t n = 1; n <= orders; ++n) {
        MetricValue value;
        value.name = "BLEU-" + std::to_string(n);
        value.corpus_value = bleu_from_precisions(corpus_prec, n, corpus_stats.cand_len, corpus_stats.ref_len);
        for (size_t i = 0; i < corpus.size(); ++i) {
            const BleuStats& stats = per_instance[i];
            // Inspection-only sentence value: add-one smoothing on orders >= 2.
            std::vector<double> prec(orders, 0.0);
            for (size_t k = 0; k < orders; ++k) {
                const double num = static_cast<double>(stats.matched[k]) + (k == 0 ? 0.0 : 1.0);
                const double den = static_cast<double>(stats.total[k]) + (k == 0 ? 0.0 : 1.0);
                prec[k] = den == 0.0 ? 0.0 : num / den;
            }
            value.per_instance.emplace_back(corpus[i].id,
                                            bleu_from_precisions(prec, n, stats.cand_len, stats.ref_len));
        }
        out.push_back(std::move(value));
    }
    return out;
}

namespace {

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<size_t> prev(b.size() + 1, 0);
    std::vector<size_t> cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

constexpr double kRougeBeta = 1.2;

MetricValue mean_metric(const std::string& name, const std::vector<ScoredText>& corpus,
                        double (*instance_fn)(const std::string&, const std::vector<std::string>&,
                                              const TextNorm&),
                        const TextNorm& norm) {
    if (corpus.empty()) {
        throw EmptyCorpus("no instances to score");
    }
    MetricValue value;
    value.name = name;
    double sum = 0.0;
    for (const ScoredText& inst : corpus) {
        require_references(inst);
        const double v = instance_fn(inst.candidate, inst.references, norm);
        value.per_instance.emplace_back(inst.id, v);
        sum += v;
    }
    value.corpus_value = sum / static_cast<double>(corpus.size());
    return value;
}

} // namespace

double rouge_l_instance(const std::string& candidate, const std::vector<std::string>& references,
                        const TextNorm& norm) {
    const std::vector<std::string> cand = metric_tokenize(candidate, norm);
    double best = 0.0;
    for (const std::string& reference : references) {
        const std::vector<std::string> ref = metric_tokenize(reference, norm);
        if (cand.empty() || ref.empty()) {
            continue;
        }
        const double lcs = static_cast<double>(lcs_length(cand, ref));
        if (lcs == 0.0) {
            continue;
        }
        const double p = lcs / static_cast<double>(cand.size());
        const double r = lcs / static_cast<double>(ref.size());
        const double b2 = kRougeBeta * kRougeBeta;
        best = std::max(best, (1.0 + b2) * r * p / (r + b2 * p));
    }
    return best;
}

MetricValue rouge_l(const std::vector<ScoredText>& corpus, const TextNorm& norm) {
    return mean_metric("ROUGE-L", corpus, &rouge_l_instance, norm);
}

namespace {

// Greedy leftmost METEOR alignment: exact matches first, then Porter stems
// over the leftovers. Returns matched (candidate, reference) index pairs
// sorted by candidate position.
std::vector<std::pair<size_t, size_t>> meteor_align(const std::vector<std::string>& cand,
                                                    const std::vector<std::string>& ref) {
    std::vector<int> cand_to_ref(cand.size(), -1);
    std::vector<bool> ref_used(ref.size(), false);
    auto run_stage = [&](auto&& key) {
        for (size_t ci = 0; ci < cand.size(); ++ci) {
            if (cand_to_ref[ci] != -1) {
                continue;
            }
            for (size_t rj = 0; rj < ref.size(); ++rj) {
                if (!ref_used[rj] && key(cand[ci]) == key(ref[rj])) {
                    cand_to_ref[ci] = static_cast<int>(rj);
                    ref_used[rj] = true;
                    break;
                }
            }
        }
    };
    run_stage([](const std::string& w) { return w; });
    run_stage([](const std::string& w) { return porter_stem(w); });
    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t ci = 0; ci < cand.size(); ++ci) {
        if (cand_to_ref[ci] != -1) {
            pairs.emplace_back(ci, static_cast<size_t>(cand_to_ref[ci]));
        }
    }
    return pairs;
}

} // namespace

double meteor_instance(const std::string& candidate, const std::vector<std::string>& references,
                       const TextNorm& norm) {
    const std::vector<std::string> cand = metric_tokenize(candidate, norm);
    double best = 0.0;
    for (const std::string& reference : references) {
        const std::vector<std::string> ref = metric_tokenize(reference, norm);
        if (cand.empty() || ref.empty()) {
            continue;
        }
        const std::vector<std::pair<size_t, size_t>> pairs = meteor_align(cand, ref);
        if (pairs.empty()) {
            continue;
        }
        const double m = static_cast<double>(pairs.size());
        const double p = m / static_cast<double>(cand.size());
        const double r = m / static_cast<double>(ref.size());
        const double f_mean = 10.0 * p * r / (r + 9.0 * p);
        size_t chunks = 1;
        for (size_t i = 1; i < pairs.size(); ++i) {
            if (pairs[i].first != pairs[i - 1].first + 1 || pairs[i].second != pairs[i - 1].second + 1) {
                ++chunks;
            }
        }
        const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
        best = std::max(best, f_mean * (1.0 - penalty));
    }
    return best;
}

MetricValue meteor(const std::vector<ScoredText>& corpus, const TextNorm& norm) {
    return mean_metric("METEOR", corpus, &meteor_instance, norm);
}

namespace {

constexpr size_t kCiderMaxN = 4;

using TfIdfVec = std::map<std::vector<std::string>, double>;

double cosine(const TfIdfVec& a, const TfIdfVec& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [gram, w] : a) {
        na += w * w;
        auto it = b.find(gram);
        if (it != b.end()) {
            dot += w * it->second;
        }
    }
    for (const auto& [gram, w] : b) {
        nb += w * w;
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace

MetricValue cider(const std::vector<ScoredText>& corpus, const TextNorm& norm) {
    if (corpus.empty()) {
        throw EmptyCorpus("no instances to score");
    }
    const double n_inst = static_cast<double>(corpus.size());
    // Document frequency over reference sets, per n-gram order.
    std::array<std::map<std::vector<std::string>, size_t>, kCiderMaxN> df;
    for (const ScoredText& inst : corpus) {
        require_references(inst);
        std::array<std::set<std::vector<std::string>>, kCiderMaxN> seen;
        for (const std::string& reference : inst.references) {
            const std::vector<std::string> ref = metric_tokenize(reference, norm);
            for (size_t n = 1; n <= kCiderMaxN; ++n) {
                for (const auto& [gram, c] : count_ngrams(ref, n)) {
                    seen[n - 1].insert(gram);
                }
            }
        }
        for (size_t n = 0; n < kCiderMaxN; ++n) {
            for (const auto& gram : seen[n]) {
                ++df[n][gram];
            }
        }
    }
    auto idf = [&](size_t n, const std::vector<std::string>& gram) {
        auto it = df[n].find(gram);
        const double d = it == df[n].end() ? 0.0 : static_cast<double>(it->second);
        return std::log((1.0 + n_inst) / (1.0 + d)) + 1.0;
    };
    auto tfidf = [&](const std::vector<std::string>& tokens, size_t n) {
        TfIdfVec vec;
        for (const auto& [gram, c] : count_ngrams(tokens, n)) {
            vec[gram] = static_cast<double>(c) * idf(n - 1, gram);
        }
        return vec;
    };

    MetricValue value;
    value.name = "CIDEr";
    double sum = 0.0;
    for (const ScoredText& inst : corpus) {
        const std::vector<std::string> cand = metric_tokenize(inst.candidate, norm);
        double order_sum = 0.0;
        for (size_t n = 1; n <= kCiderMaxN; ++n) {
            const TfIdfVec cand_vec = tfidf(cand, n);
            double ref_sum = 0.0;
            for (const std::string& reference : inst.references) {
                ref_sum += cosine(cand_vec, tfidf(metric_tokenize(reference, norm), n));
            }
            order_sum += ref_sum / static_cast<double>(inst.references.size());
        }
        const double score = 10.0 * order_sum / static_cast<double>(kCiderMaxN);
        value.per_instance.emplace_back(inst.id, score);
        sum += score;
    }
    value.corpus_value = sum / n_inst;
    return value;
}

double harmonic_mean(const std::vector<double>& values) {
    if (values.empty()) {
        throw ValidationError("harmonic mean of nothing");
    }
    double inv_sum = 0.0;
    for (double v : values) {
        if (v <= 0.0) {
            return 0.0;
        }
        inv_sum += 1.0 / v;
    }
    return static_cast<double>(values.size()) / inv_sum;
}

namespace {

void insert_external(ExternalScores& scores, const std::set<std::string>& expected_ids, const std::string& id,
                     double v, const std::string& where) {
    if (v < 0.0 || v > 1.0) {
        throw RangeError(where + ": value " + std::to_string(v) + " for id " + id + " outside [0, 1]");
    }
    if (expected_ids.count(id) != 0) {
        scores.values[id] = v;
    }
}

} // namespace

ExternalScores load_external_scores(const std::filesystem::path& path, const std::set<std::string>& expected_ids,
                                    const std::string& name) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    ExternalScores scores;
    scores.name = name;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = trim(line);
        if (trimmed.empty()) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (trimmed.front() == '{') {
            const Json row = Json::parse(trimmed, nullptr, false);
            if (row.is_discarded() || !row.contains("id") || !row.contains("value")) {
                throw ParseError(where + ": expected {\"id\":..., \"value\":...}");
            }
            insert_external(scores, expected_ids, row.at("id").get<std::string>(),
                            row.at("value").get<double>(), where);
        } else {
            const size_t comma = trimmed.find(',');
            if (comma == std::string::npos) {
                throw ParseError(where + ": expected id,value");
            }
            const std::string id = trim(trimmed.substr(0, comma));
            const std::string value_str = trim(trimmed.substr(comma + 1));
            if (line_no == 1 && id == "id" && value_str == "value") {
                continue; // optional header
            }
            try {
                size_t pos = 0;
                const double v = std::stod(value_str, &pos);
                if (pos != value_str.size()) {
                    throw std::invalid_argument(value_str);
                }
                insert_external(scores, expected_ids, id, v, where);
            } catch (const std::invalid_argument&) {
                throw ParseError(where + ": non-numeric value " + value_str);
            } catch (const std::out_of_range&) {
                throw ParseError(where + ": non-numeric value " + value_str);
            }
        }
    }
    for (const std::string& id : expected_ids) {
        if (scores.values.count(id) == 0) {
            throw MissingId(path.string() + ": no " + name + " score for id " + id);
        }
    }
    return scores;
}

} // namespace umae
