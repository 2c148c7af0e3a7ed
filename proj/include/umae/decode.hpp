#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "umae/rng.hpp"
#include "umae/scorer.hpp"

namespace umae {

enum class DecodeStrategy {
    kBeam,
    kTopk,
    kNucleus,
    kTypical,
};

std::string strategy_name(DecodeStrategy strategy);
DecodeStrategy parse_strategy(const std::string& name);

struct DecodeConfig {
    DecodeStrategy strategy = DecodeStrategy::kBeam;
    int beam_size = 5;
    int k = 50;
    double p = 1.0;
    double tau = 1.0;
    // Bounds the emitted token count; a terminating EOS counts toward it.
    int max_len = 32;
    uint64_t seed = 0;
    // Rank beam hypotheses by logprob / length instead of raw logprob.
    bool length_normalize = false;
};

// Throws ConfigError when the parameter matching the strategy is out of range.
void validate_config(const DecodeConfig& config);

struct GenerationResult {
    // Generated tokens only (context excluded); ends with EOS unless the
    // length bound cut generation off.
    std::vector<std::string> tokens;
    std::string text; // tokens joined by spaces, EOS dropped
    // Original (pre-truncation) logprob of each emitted token, so the result
    // re-scores exactly under sequence_logprob.
    std::vector<double> per_token_logprob;
    double total_logprob = 0.0;
};

// One support entry: vocab index plus its renormalized probability.
struct SupportEntry {
    size_t index;
    double prob;
};

// Truncation rules, exposed separately so statistical tests can target a
// single step. Input is the full probability vector (one entry per vocab
// index); output lists the surviving tokens with renormalized probabilities,
// in draw order.
// - top-k: k highest-probability tokens, ties by ascending vocab index.
// - nucleus: smallest descending-probability prefix with cumulative mass >= p.
// - typical: rank ascending by |−log p(y) − H| (H = entropy of the full
//   distribution); take the smallest prefix with cumulative mass >= tau,
//   extended through any group of bit-identical distances at the boundary so
//   symmetric distributions (e.g. uniform) keep their full support.
std::vector<SupportEntry> topk_support(const std::vector<double>& probs, int k);
std::vector<SupportEntry> nucleus_support(const std::vector<double>& probs, double p);
std::vector<SupportEntry> typical_support(const std::vector<double>& probs, double tau);

// Support for the configured sampling strategy (not valid for beam).
std::vector<SupportEntry> truncated_support(const std::vector<double>& probs, const DecodeConfig& config);

// Draws one entry by cumulative inversion of a single next_double().
size_t draw_from(const std::vector<SupportEntry>& support, Pcg32& rng);

// Width-`beam_size` beam search over total logprob. Candidate ties break by
// (earlier hypothesis, lower vocab index). Hypotheses that pick EOS retire
// into a completed pool; the best completed hypothesis wins, else the best
// live one at the length bound.
GenerationResult beam_search(const TokenScorer& scorer, const std::vector<std::string>& context,
                             const DecodeConfig& config);

// Ancestral sampling with the configured truncation; stops on EOS or max_len.
GenerationResult sample_sequence(const TokenScorer& scorer, const std::vector<std::string>& context,
                                 const DecodeConfig& config);

// Dispatches on config.strategy.
GenerationResult generate(const TokenScorer& scorer, const std::vector<std::string>& context,
                          const DecodeConfig& config);

// Tokens joined by single spaces with BOS/EOS dropped.
std::string detokenize(const std::vector<std::string>& tokens);

} // namespace umae
