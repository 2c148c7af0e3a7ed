#include "umae/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "umae/errors.hpp"
#include "umae/jsonl.hpp"
#include "umae/text.hpp"

namespace umae {

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(std::vector<std::string> tokens) {
    std::vector<std::string> ordered;
    ordered.reserve(tokens.size() + 2);
    auto has = [&tokens](const char* t) { return std::find(tokens.begin(), tokens.end(), t) != tokens.end(); };
    if (!has(kBosToken)) {
        ordered.push_back(kBosToken);
    }
    if (!has(kEosToken)) {
        ordered.push_back(kEosToken);
    }
    ordered.insert(ordered.end(), tokens.begin(), tokens.end());
    for (const std::string& tok : ordered) {
        if (tok.empty()) {
            throw ValidationError("empty vocab token");
        }
        if (!index_.emplace(tok, tokens_.size()).second) {
            throw ValidationError("duplicate vocab token: " + tok);
        }
        tokens_.push_back(tok);
    }
}

const std::string& Vocab::token(size_t index) const {
    if (index >= tokens_.size()) {
        throw OutOfBounds("vocab index " + std::to_string(index) + " out of range");
    }
    return tokens_[index];
}

size_t Vocab::index(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) {
        throw UnknownToken("token not in vocab: " + token);
    }
    return it->second;
}

NgramScorer::NgramScorer(int order, double k, Vocab vocab, CountTable counts)
    : order_(order), k_(k), vocab_(std::move(vocab)), counts_(std::move(counts)) {
    if (order_ < 1) {
        throw ValidationError("n-gram order must be >= 1");
    }
    if (k_ <= 0.0) {
        throw ValidationError("smoothing k must be positive");
    }
    for (const auto& [ctx, row] : counts_) {
        if (ctx.size() > static_cast<size_t>(order_ - 1)) {
            throw ValidationError("count context longer than order allows");
        }
        uint64_t total = 0;
        for (const auto& [tok, c] : row) {
            vocab_.index(tok); // all counted tokens must be in vocab
            total += c;
        }
        totals_[ctx] = total;
    }
}

std::vector<double> NgramScorer::logprobs(const std::vector<std::string>& context) const {
    for (const std::string& tok : context) {
        vocab_.index(tok);
    }
    const size_t ctx_len = std::min(context.size(), static_cast<size_t>(order_ - 1));
    const std::vector<std::string> suffix(context.end() - static_cast<ptrdiff_t>(ctx_len), context.end());
    const double denom_unseen = k_ * static_cast<double>(vocab_.size());
    auto row_it = counts_.find(suffix);
    std::vector<double> out(vocab_.size());
    if (row_it == counts_.end()) {
        const double uniform = std::log(k_ / denom_unseen);
        std::fill(out.begin(), out.end(), uniform);
        return out;
    }
    const double denom = static_cast<double>(totals_.at(suffix)) + denom_unseen;
    for (size_t i = 0; i < vocab_.size(); ++i) {
        auto cnt = row_it->second.find(vocab_.tokens()[i]);
        const double c = cnt == row_it->second.end() ? 0.0 : static_cast<double>(cnt->second);
        out[i] = std::log((c + k_) / denom);
    }
    return out;
}

NgramScorer train_ngram(const std::vector<TrainingExample>& examples, int n, double k,
                        const std::vector<std::string>& extra_tokens) {
    if (examples.empty()) {
        throw EmptyCorpus("no training examples");
    }
    if (n < 1) {
        throw ValidationError("n-gram order must be >= 1");
    }
    std::set<std::string> seen;
    NgramScorer::CountTable counts;
    for (const TrainingExample& ex : examples) {
        std::vector<std::string> stream{kBosToken};
        for (std::string& tok : ref_tokenize(ex.input_text)) {
            stream.push_back(std::move(tok));
        }
        for (std::string& tok : ref_tokenize(ex.target_text)) {
            stream.push_back(std::move(tok));
        }
        stream.emplace_back(kEosToken);
        seen.insert(stream.begin(), stream.end());
        for (size_t i = 1; i < stream.size(); ++i) {
            const size_t ctx_len = std::min(i, static_cast<size_t>(n - 1));
            std::vector<std::string> ctx(stream.begin() + static_cast<ptrdiff_t>(i - ctx_len),
                                         stream.begin() + static_cast<ptrdiff_t>(i));
            ++counts[std::move(ctx)][stream[i]];
        }
    }
    for (const std::string& tok : extra_tokens) {
        if (!tok.empty()) {
            seen.insert(tok);
        }
    }
    seen.erase(kBosToken);
    seen.erase(kEosToken);
    return NgramScorer(n, k, Vocab(std::vector<std::string>(seen.begin(), seen.end())), std::move(counts));
}

SequenceScore sequence_logprob(const TokenScorer& scorer, const std::vector<std::string>& context,
                               const std::vector<std::string>& target) {
    const Vocab& vocab = scorer.vocab();
    for (const std::string& tok : context) {
        vocab.index(tok);
    }
    std::vector<std::string> running = context;
    SequenceScore score;
    score.per_token.reserve(target.size());
    for (const std::string& tok : target) {
        const size_t idx = vocab.index(tok);
        const double lp = scorer.logprobs(running)[idx];
        score.per_token.push_back(lp);
        score.total += lp;
        running.push_back(tok);
    }
    return score;
}

void save_ngram(const std::filesystem::path& path, const NgramScorer& scorer) {
    Json rows = Json::array();
    for (const auto& [ctx, row] : scorer.counts()) {
        Json counts = Json::object();
        for (const auto& [tok, c] : row) {
            counts[tok] = c;
        }
        rows.push_back(Json{{"context", ctx}, {"counts", counts}});
    }
    const Json doc{
        {"format", "umae-ngram"},
        {"version", 1},
        {"order", scorer.order()},
        {"k", scorer.smoothing_k()},
        {"vocab", scorer.vocab().tokens()},
        {"rows", rows},
    };
    write_file(path, doc.dump(2) + "\n");
}

NgramScorer load_ngram(const std::filesystem::path& path) {
    Json doc = Json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) {
        throw ParseError("not a JSON model file: " + path.string());
    }
    try {
        if (doc.at("format").get<std::string>() != "umae-ngram" || doc.at("version").get<int>() != 1) {
            throw ParseError("unsupported model format in " + path.string());
        }
        const int order = doc.at("order").get<int>();
        const double k = doc.at("k").get<double>();
        std::vector<std::string> tokens = doc.at("vocab").get<std::vector<std::string>>();
        // Vocab() re-prepends BOS/EOS; the dump already leads with them.
        NgramScorer::CountTable counts;
        for (const Json& row : doc.at("rows")) {
            auto ctx = row.at("context").get<std::vector<std::string>>();
            NgramScorer::CountRow row_counts;
            for (const auto& [tok, c] : row.at("counts").items()) {
                row_counts[tok] = c.get<uint64_t>();
            }
            counts[std::move(ctx)] = std::move(row_counts);
        }
        return NgramScorer(order, k, Vocab(std::move(tokens)), std::move(counts));
    } catch (const Json::exception& e) {
        throw ParseError("bad model file " + path.string() + ": " + e.what());
    }
}

} // namespace umae
