#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "umae/text.hpp"

namespace umae {

// One instance to score: a candidate text against one or more references.
struct ScoredText {
    std::string id;
    std::string candidate;
    std::vector<std::string> references;
};

struct MetricValue {
    std::string name;
    // Raw scale: [0,1] for all metrics except CIDEr's [0,10]. The reporting
    // layer multiplies by 100.
    double corpus_value = 0.0;
    std::vector<std::pair<std::string, double>> per_instance;
};

// Externally computed per-instance scores (SPICE, BERTScore, ...), raw [0,1].
struct ExternalScores {
    std::string name;
    std::map<std::string, double> values;
};

// Leave-one-annotator-out VQA accuracy: mean over j of
// min(#{i != j : normalize(gold_i) = normalize(candidate)} / 3, 1).
// Throws EmptyGold on an empty gold list.
double vqa_accuracy(const std::string& candidate, const std::vector<std::string>& gold,
                    const TextNorm& norm = {});

// Corpus BLEU-1..max_n: modified n-gram precision with per-instance
// closest-reference brevity penalty (length ties to the shorter reference),
// no smoothing at corpus level. Per-instance values (inspection only) use
// add-one smoothing on the order>=2 precisions; empty candidates score 0.
std::vector<MetricValue> bleu(const std::vector<ScoredText>& corpus, int max_n = 4, const TextNorm& norm = {});

// LCS F-score with beta = 1.2, max over references; corpus value = mean.
double rouge_l_instance(const std::string& candidate, const std::vector<std::string>& references,
                        const TextNorm& norm = {});
MetricValue rouge_l(const std::vector<ScoredText>& corpus, const TextNorm& norm = {});

// Two matching stages (exact, then stems), greedy leftmost alignment;
// F = 10PR/(R+9P), chunk penalty 0.5*(chunks/matches)^3, max over
// references; corpus value = mean. The synonym stage is omitted.
double meteor_instance(const std::string& candidate, const std::vector<std::string>& references,
                       const TextNorm& norm = {});
MetricValue meteor(const std::vector<ScoredText>& corpus, const TextNorm& norm = {});

// TF-IDF n-gram cosine (n = 1..4, uniform weights) averaged over references,
// x10, so per-instance values lie in [0,10]. The IDF table is built from
// this corpus's references with the smoothed formula
// idf(g) = ln((1+N)/(1+df(g))) + 1, which keeps single-instance corpora
// scoreable (plain ln(N/df) zeroes every vector at N = 1).
MetricValue cider(const std::vector<ScoredText>& corpus, const TextNorm& norm = {});

// n / sum(1/x); returns 0 when any value is <= 0. Throws ValidationError on
// an empty list.
double harmonic_mean(const std::vector<double>& values);

// Reads per-instance scores from "id,value" CSV (optional header) or JSONL
// {"id":...,"value":...}. Every expected id must be present (MissingId) and
// every value in [0,1] (RangeError); ids outside the expected set are
// dropped.
ExternalScores load_external_scores(const std::filesystem::path& path, const std::set<std::string>& expected_ids,
                                    const std::string& name);

} // namespace umae
