#include "umae/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "umae/errors.hpp"

namespace umae {

std::string strategy_name(DecodeStrategy strategy) {
    switch (strategy) {
    case DecodeStrategy::kBeam:
        return "beam";
    case DecodeStrategy::kTopk:
        return "topk";
    case DecodeStrategy::kNucleus:
        return "nucleus";
    case DecodeStrategy::kTypical:
        return "typical";
    }
    throw ValidationError("bad decode strategy");
}

DecodeStrategy parse_strategy(const std::string& name) {
    if (name == "beam") {
        return DecodeStrategy::kBeam;
    }
    if (name == "topk" || name == "top-k") {
        return DecodeStrategy::kTopk;
    }
    if (name == "nucleus") {
        return DecodeStrategy::kNucleus;
    }
    if (name == "typical") {
        return DecodeStrategy::kTypical;
    }
    throw ParseError("unknown decode strategy: " + name);
}

void validate_config(const DecodeConfig& config) {
    if (config.max_len < 1) {
        throw ConfigError("max_len must be >= 1");
    }
    switch (config.strategy) {
    case DecodeStrategy::kBeam:
        if (config.beam_size < 1) {
            throw ConfigError("beam_size must be >= 1");
        }
        break;
    case DecodeStrategy::kTopk:
        if (config.k < 1) {
            throw ConfigError("k must be >= 1");
        }
        break;
    case DecodeStrategy::kNucleus:
        if (!(config.p > 0.0 && config.p <= 1.0)) {
            throw ConfigError("p must be in (0, 1]");
        }
        break;
    case DecodeStrategy::kTypical:
        if (!(config.tau > 0.0 && config.tau <= 1.0)) {
            throw ConfigError("tau must be in (0, 1]");
        }
        break;
    }
}

namespace {

std::vector<size_t> indices_by_prob_desc(const std::vector<double>& probs) {
    std::vector<size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&probs](size_t a, size_t b) { return probs[a] > probs[b]; });
    return order;
}

std::vector<SupportEntry> renormalize(const std::vector<double>& probs, const std::vector<size_t>& kept) {
    double mass = 0.0;
    for (size_t idx : kept) {
        mass += probs[idx];
    }
    std::vector<SupportEntry> support;
    support.reserve(kept.size());
    for (size_t idx : kept) {
        support.push_back({idx, probs[idx] / mass});
    }
    return support;
}

} // namespace

std::vector<SupportEntry> topk_support(const std::vector<double>& probs, int k) {
    if (k < 1) {
        throw ConfigError("k must be >= 1");
    }
    std::vector<size_t> order = indices_by_prob_desc(probs);
    order.resize(std::min(order.size(), static_cast<size_t>(k)));
    return renormalize(probs, order);
}

std::vector<SupportEntry> nucleus_support(const std::vector<double>& probs, double p) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw ConfigError("p must be in (0, 1]");
    }
    const std::vector<size_t> order = indices_by_prob_desc(probs);
    std::vector<size_t> kept;
    double cum = 0.0;
    for (size_t idx : order) {
        kept.push_back(idx);
        cum += probs[idx];
        if (cum >= p) {
            break;
        }
    }
    return renormalize(probs, kept);
}

std::vector<SupportEntry> typical_support(const std::vector<double>& probs, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) {
        throw ConfigError("tau must be in (0, 1]");
    }
    double entropy = 0.0;
    for (double p : probs) {
        if (p > 0.0) {
            entropy -= p * std::log(p);
        }
    }
    std::vector<double> distance(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) {
        distance[i] = probs[i] > 0.0 ? std::abs(-std::log(probs[i]) - entropy)
                                     : std::numeric_limits<double>::infinity();
    }
    std::vector<size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&distance](size_t a, size_t b) { return distance[a] < distance[b]; });
    std::vector<size_t> kept;
    double cum = 0.0;
    for (size_t i = 0; i < order.size(); ++i) {
        kept.push_back(order[i]);
        cum += probs[order[i]];
        // Stop only at a distance-group boundary so exact ties (uniform
        // distributions) are kept or dropped together.
        if (cum >= tau && (i + 1 == order.size() || distance[order[i + 1]] != distance[order[i]])) {
            break;
        }
    }
    return renormalize(probs, kept);
}

std::vector<SupportEntry> truncated_support(const std::vector<double>& probs, const DecodeConfig& config) {
    switch (config.strategy) {
    case DecodeStrategy::kTopk:
        return topk_support(probs, config.k);
    case DecodeStrategy::kNucleus:
        return nucleus_support(probs, config.p);
    case DecodeStrategy::kTypical:
        return typical_support(probs, config.tau);
    case DecodeStrategy::kBeam:
        break;
    }
    throw ConfigError("beam strategy has no sampling support");
}

size_t draw_from(const std::vector<SupportEntry>& support, Pcg32& rng) {
    if (support.empty()) {
        throw ValidationError("empty sampling support");
    }
    const double u = rng.next_double();
    double cum = 0.0;
    for (const SupportEntry& entry : support) {
        cum += entry.prob;
        if (u < cum) {
            return entry.index;
        }
    }
    return support.back().index; // u landed in the rounding tail
}

std::string detokenize(const std::vector<std::string>& tokens) {
    std::string text;
    for (const std::string& tok : tokens) {
        if (tok == kBosToken || tok == kEosToken) {
            continue;
        }
        if (!text.empty()) {
            text += ' ';
        }
        text += tok;
    }
    return text;
}

namespace {

struct Hypothesis {
    std::vector<std::string> tokens;
    std::vector<double> per_token;
    double total = 0.0;
    bool done = false;

    double rank_score(bool length_normalize) const {
        if (!length_normalize || tokens.empty()) {
            return total;
        }
        return total / static_cast<double>(tokens.size());
    }
};

GenerationResult finish(Hypothesis hyp) {
    GenerationResult result;
    result.text = detokenize(hyp.tokens);
    result.tokens = std::move(hyp.tokens);
    result.per_token_logprob = std::move(hyp.per_token);
    result.total_logprob = hyp.total;
    return result;
}

} // namespace

GenerationResult beam_search(const TokenScorer& scorer, const std::vector<std::string>& context,
                             const DecodeConfig& config) {
    validate_config(config);
    const Vocab& vocab = scorer.vocab();
    const size_t eos = vocab.eos_index();
    const size_t width = static_cast<size_t>(config.beam_size);

    std::vector<Hypothesis> live{Hypothesis{}};
    std::vector<Hypothesis> completed;

    for (int step = 0; step < config.max_len && !live.empty(); ++step) {
        struct Candidate {
            double score;
            size_t hyp;
            size_t token;
            double logprob;
            double total;
        };
        std::vector<Candidate> candidates;
        candidates.reserve(live.size() * vocab.size());
        for (size_t h = 0; h < live.size(); ++h) {
            std::vector<std::string> ctx = context;
            ctx.insert(ctx.end(), live[h].tokens.begin(), live[h].tokens.end());
            const std::vector<double> lps = scorer.logprobs(ctx);
            for (size_t t = 0; t < lps.size(); ++t) {
                const double total = live[h].total + lps[t];
                const double score =
                    config.length_normalize ? total / static_cast<double>(live[h].tokens.size() + 1) : total;
                candidates.push_back({score, h, t, lps[t], total});
            }
        }
        // Stable sort keeps (hypothesis order, vocab index) on exact ties.
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        if (candidates.size() > width) {
            candidates.resize(width);
        }
        std::vector<Hypothesis> next;
        for (const Candidate& cand : candidates) {
            Hypothesis hyp = live[cand.hyp];
            hyp.tokens.push_back(vocab.token(cand.token));
            hyp.per_token.push_back(cand.logprob);
            hyp.total = cand.total;
            if (cand.token == eos) {
                hyp.done = true;
                completed.push_back(std::move(hyp));
            } else {
                next.push_back(std::move(hyp));
            }
        }
        live = std::move(next);
    }

    const Hypothesis* best = nullptr;
    const std::vector<Hypothesis>& pool = completed.empty() ? live : completed;
    for (const Hypothesis& hyp : pool) {
        if (best == nullptr ||
            hyp.rank_score(config.length_normalize) > best->rank_score(config.length_normalize)) {
            best = &hyp;
        }
    }
    if (best == nullptr) {
        throw ValidationError("beam search produced no hypotheses");
    }
    return finish(*best);
}

GenerationResult sample_sequence(const TokenScorer& scorer, const std::vector<std::string>& context,
                                 const DecodeConfig& config) {
    validate_config(config);
    const Vocab& vocab = scorer.vocab();
    const size_t eos = vocab.eos_index();
    Pcg32 rng(config.seed);

    Hypothesis hyp;
    std::vector<std::string> ctx = context;
    for (int step = 0; step < config.max_len; ++step) {
        const std::vector<double> lps = scorer.logprobs(ctx);
        std::vector<double> probs(lps.size());
        std::transform(lps.begin(), lps.end(), probs.begin(), [](double lp) { return std::exp(lp); });
        const size_t chosen = draw_from(truncated_support(probs, config), rng);
        hyp.tokens.push_back(vocab.token(chosen));
        hyp.per_token.push_back(lps[chosen]);
        hyp.total += lps[chosen];
        if (chosen == eos) {
            break;
        }
        ctx.push_back(vocab.token(chosen));
    }
    return finish(std::move(hyp));
}

GenerationResult generate(const TokenScorer& scorer, const std::vector<std::string>& context,
                          const DecodeConfig& config) {
    if (config.strategy == DecodeStrategy::kBeam) {
        return beam_search(scorer, context, config);
    }
    return sample_sequence(scorer, context, config);
}

} // namespace umae
