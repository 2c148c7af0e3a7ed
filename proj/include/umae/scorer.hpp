#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "umae/augment.hpp"

namespace umae {

inline constexpr const char* kBosToken = "<s>";
inline constexpr const char* kEosToken = "</s>";

// Ordered token list with an index <-> token bijection. BOS and EOS are
// always present.
class Vocab {
public:
    Vocab();
    // Tokens must be distinct; BOS/EOS are prepended when absent.
    explicit Vocab(std::vector<std::string> tokens);

    size_t size() const { return tokens_.size(); }
    const std::string& token(size_t index) const;
    size_t index(const std::string& token) const; // throws UnknownToken
    bool contains(const std::string& token) const { return index_.count(token) != 0; }
    size_t bos_index() const { return index(kBosToken); }
    size_t eos_index() const { return index(kEosToken); }
    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::map<std::string, size_t> index_;
};

// Next-token distribution provider: logprobs(context) returns one natural-log
// probability per vocab entry, summing (after exp) to 1 within 1e-9, and is
// deterministic in the context.
class TokenScorer {
public:
    virtual ~TokenScorer() = default;
    virtual const Vocab& vocab() const = 0;
    virtual std::vector<double> logprobs(const std::vector<std::string>& context) const = 0;
};

// Add-k n-gram model: p(y | ctx) = (count(suffix, y) + k) / (total(suffix) + k*|V|)
// where suffix is the last min(n-1, |ctx|) context tokens. Contexts never
// seen in training fall back to the uniform distribution (total = 0).
class NgramScorer : public TokenScorer {
public:
    using CountRow = std::map<std::string, uint64_t>;
    using CountTable = std::map<std::vector<std::string>, CountRow>;

    NgramScorer(int order, double k, Vocab vocab, CountTable counts);

    const Vocab& vocab() const override { return vocab_; }
    std::vector<double> logprobs(const std::vector<std::string>& context) const override;

    int order() const { return order_; }
    double smoothing_k() const { return k_; }
    const CountTable& counts() const { return counts_; }

private:
    int order_;
    double k_;
    Vocab vocab_;
    CountTable counts_;
    std::map<std::vector<std::string>, uint64_t> totals_;
};

// Accumulates counts over the streams BOS ++ tokens(input) ++ tokens(target)
// ++ EOS using the reference tokenizer. The vocabulary is every seen token
// plus BOS/EOS plus `extra_tokens` (tokens that must be scoreable later, e.g.
// multiple-choice options, receive smoothing-only mass). Order-insensitive
// over the example list.
NgramScorer train_ngram(const std::vector<TrainingExample>& examples, int n = 3, double k = 0.1,
                        const std::vector<std::string>& extra_tokens = {});

struct SequenceScore {
    double total = 0.0;
    std::vector<double> per_token;
};

// per_token[i] = logprobs(context ++ target[..i])[target[i]]; total is their
// sum. Throws UnknownToken for any token outside the scorer's vocab.
SequenceScore sequence_logprob(const TokenScorer& scorer, const std::vector<std::string>& context,
                               const std::vector<std::string>& target);

// Versioned JSON dump of the count table (deterministic row order).
void save_ngram(const std::filesystem::path& path, const NgramScorer& scorer);
NgramScorer load_ngram(const std::filesystem::path& path);

} // namespace umae
