#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "umae/scorer.hpp"

namespace umae {

struct OptionPpl {
    size_t option_index = 0;
    double perplexity = 0.0;
    size_t token_count = 0;
};

struct PplResult {
    std::vector<OptionPpl> per_option;
    size_t chosen_index = 0; // argmin perplexity, ties to the lowest index
};

// Perplexity-based multiple-choice selection: each option Y of t tokens gets
// PPL(Y) = exp(-(1/t) * sum_i log p(y_i | context, y_<i)) and the lowest
// perplexity wins. Throws ValidationError on empty options or an empty
// option; UnknownToken propagates from the scorer.
PplResult select_mc_ppl(const TokenScorer& scorer, const std::vector<std::string>& context,
                        const std::vector<std::vector<std::string>>& options);

// Word-embedding table (one "word v1 .. vd" line per word); lookups are
// case-folded.
class EmbeddingTable {
public:
    EmbeddingTable(size_t dimension, std::map<std::string, std::vector<double>> vectors);

    size_t dimension() const { return dimension_; }
    size_t size() const { return vectors_.size(); }
    // nullptr when the (lowercased) word is absent.
    const std::vector<double>* find(const std::string& word) const;

private:
    size_t dimension_;
    std::map<std::string, std::vector<double>> vectors_;
};

EmbeddingTable load_embeddings(const std::filesystem::path& path);

struct EmbeddingChoice {
    size_t chosen_index = 0;
    std::vector<double> similarities; // cosine; -1 for options with no in-vocab word
};

// Baseline selection: mean-pool the in-vocabulary word vectors of the
// generation and of each option, pick the option with the highest cosine
// similarity (ties to the lowest index). Options with no in-vocabulary words
// get the sentinel similarity -1; a generation with no in-vocabulary words
// throws EmptyGeneration.
EmbeddingChoice select_mc_embedding(const std::string& generation, const std::vector<std::string>& options,
                                    const EmbeddingTable& table);

} // namespace umae
