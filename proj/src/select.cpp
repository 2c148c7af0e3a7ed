#include "umae/select.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "umae/errors.hpp"
#include "umae/text.hpp"

namespace umae {

PplResult select_mc_ppl(const TokenScorer& scorer, const std::vector<std::string>& context,
                        const std::vector<std::vector<std::string>>& options) {
    if (options.empty()) {
        throw ValidationError("no options to select from");
    }
    PplResult result;
    for (size_t i = 0; i < options.size(); ++i) {
        const std::vector<std::string>& option = options[i];
        if (option.empty()) {
            throw ValidationError("option " + std::to_string(i) + " has no tokens");
        }
        const SequenceScore score = sequence_logprob(scorer, context, option);
        OptionPpl entry;
        entry.option_index = i;
        entry.token_count = option.size();
        entry.perplexity = std::exp(-score.total / static_cast<double>(option.size()));
        result.per_option.push_back(entry);
        if (entry.perplexity < result.per_option[result.chosen_index].perplexity) {
            result.chosen_index = i;
        }
    }
    return result;
}

EmbeddingTable::EmbeddingTable(size_t dimension, std::map<std::string, std::vector<double>> vectors)
    : dimension_(dimension), vectors_(std::move(vectors)) {
    if (dimension_ == 0) {
        throw ValidationError("embedding dimension must be positive");
    }
    if (vectors_.empty()) {
        throw ValidationError("embedding table is empty");
    }
    for (const auto& [word, vec] : vectors_) {
        if (vec.size() != dimension_) {
            throw ValidationError("embedding for " + word + " has dimension " + std::to_string(vec.size()) +
                                  ", expected " + std::to_string(dimension_));
        }
    }
}

const std::vector<double>* EmbeddingTable::find(const std::string& word) const {
    auto it = vectors_.find(to_lower(word));
    return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::map<std::string, std::vector<double>> vectors;
    size_t dimension = 0;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string word;
        row >> word;
        std::vector<double> vec;
        double v = 0.0;
        while (row >> v) {
            vec.push_back(v);
        }
        if (!row.eof()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": non-numeric embedding value");
        }
        if (vec.empty()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": no vector values");
        }
        if (dimension == 0) {
            dimension = vec.size();
        } else if (vec.size() != dimension) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": dimension " +
                             std::to_string(vec.size()) + " != " + std::to_string(dimension));
        }
        vectors[to_lower(word)] = std::move(vec);
    }
    return EmbeddingTable(dimension, std::move(vectors));
}

namespace {

// Mean of the in-vocabulary word vectors; false when none matched.
bool mean_pool(const std::string& text, const EmbeddingTable& table, std::vector<double>& out) {
    out.assign(table.dimension(), 0.0);
    size_t hits = 0;
    for (const std::string& word : metric_tokenize(text, {})) {
        if (const std::vector<double>* vec = table.find(word)) {
            for (size_t i = 0; i < out.size(); ++i) {
                out[i] += (*vec)[i];
            }
            ++hits;
        }
    }
    if (hits == 0) {
        return false;
    }
    for (double& v : out) {
        v /= static_cast<double>(hits);
    }
    return true;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace

EmbeddingChoice select_mc_embedding(const std::string& generation, const std::vector<std::string>& options,
                                    const EmbeddingTable& table) {
    if (options.empty()) {
        throw ValidationError("no options to select from");
    }
    std::vector<double> gen_vec;
    if (!mean_pool(generation, table, gen_vec)) {
        throw EmptyGeneration("no in-vocabulary word in generation: " + generation);
    }
    EmbeddingChoice choice;
    std::vector<double> opt_vec;
    for (size_t i = 0; i < options.size(); ++i) {
        const double sim = mean_pool(options[i], table, opt_vec) ? cosine(gen_vec, opt_vec) : -1.0;
        choice.similarities.push_back(sim);
        if (sim > choice.similarities[choice.chosen_index]) {
            choice.chosen_index = i;
        }
    }
    return choice;
}

} // namespace umae
