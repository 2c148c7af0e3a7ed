#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "oracle.hpp"
#include "umae/errors.hpp"
#include "umae/select.hpp"

using namespace umae;
using umae::testing::TempDir;

namespace {

TrainingExample ex(std::string input, std::string target) {
    TrainingExample e;
    e.input_text = std::move(input);
    e.target_text = std::move(target);
    return e;
}

} // namespace

TEST_CASE("under a uniform scorer every option's perplexity is the vocab size") {
    // No count rows at all: every context falls back to uniform over 5 tokens.
    const NgramScorer scorer(2, 0.1, Vocab({"a", "b", "c"}), {});
    const auto result = select_mc_ppl(scorer, {"<s>"}, {{"a"}, {"b", "c"}, {"a", "b", "c"}});
    REQUIRE(result.per_option.size() == 3);
    for (const auto& entry : result.per_option) {
        CHECK(entry.perplexity == doctest::Approx(5.0).epsilon(1e-12));
    }
    CHECK(result.chosen_index == 0); // exact ties keep the lowest index
    CHECK(result.per_option[1].token_count == 2);
    CHECK(result.per_option[2].option_index == 2);
}

TEST_CASE("perplexity selection reproduces a hand-computed bigram case") {
    const double k = 0.1;
    const NgramScorer scorer = train_ngram({ex("a", "b")}, 2, k);
    const auto result = select_mc_ppl(scorer, {"<s>"}, {{"a", "b"}, {"b"}});
    REQUIRE(result.per_option.size() == 2);
    // Option 0 walks two seen bigrams: ppl = exp(-2*ln(1.1/1.4)/2) = 14/11.
    CHECK(result.per_option[0].perplexity == doctest::Approx(1.4 / 1.1).epsilon(1e-12));
    // Option 1 is one unseen continuation: ppl = 1.4/0.1 = 14.
    CHECK(result.per_option[1].perplexity == doctest::Approx(14.0).epsilon(1e-12));
    CHECK(result.chosen_index == 0);
}

TEST_CASE("perplexity selection agrees with a plain re-walk on a trained model") {
    const NgramScorer scorer = train_ngram({ex("the cat sat", "on the mat"), ex("a dog", "ran")}, 2, 0.3);
    const std::vector<std::vector<std::string>> options{
        {"the", "mat"}, {"ran"}, {"dog", "ran", "</s>"}, {"cat"}, {"the", "cat", "sat"},
    };
    const auto got = select_mc_ppl(scorer, {"<s>", "the"}, options);
    const auto want = umae::testoracle::ppl_rank(scorer, {"<s>", "the"}, options);
    CHECK(got.chosen_index == want.chosen);
    REQUIRE(got.per_option.size() == want.perplexity.size());
    for (size_t i = 0; i < options.size(); ++i) {
        CHECK(got.per_option[i].perplexity == doctest::Approx(want.perplexity[i]).epsilon(1e-12));
    }
}

TEST_CASE("perplexity selection validates its inputs") {
    const NgramScorer scorer = train_ngram({ex("a", "b")}, 2, 0.1);
    CHECK_THROWS_AS(select_mc_ppl(scorer, {"<s>"}, {}), ValidationError);
    CHECK_THROWS_AS(select_mc_ppl(scorer, {"<s>"}, {{"a"}, {}}), ValidationError);
    CHECK_THROWS_AS(select_mc_ppl(scorer, {"<s>"}, {{"zzz"}}), UnknownToken);
    CHECK_THROWS_AS(select_mc_ppl(scorer, {"zzz"}, {{"a"}}), UnknownToken);
}

TEST_CASE("embedding tables validate dimension and content") {
    CHECK_THROWS_AS(EmbeddingTable(0, {{"a", {}}}), ValidationError);
    CHECK_THROWS_AS(EmbeddingTable(2, {}), ValidationError);
    CHECK_THROWS_AS(EmbeddingTable(2, {{"a", {1.0}}}), ValidationError);

    const EmbeddingTable table(2, {{"cat", {1.0, 0.0}}, {"dog", {0.0, 1.0}}});
    CHECK(table.dimension() == 2);
    CHECK(table.size() == 2);
    REQUIRE(table.find("CAT") != nullptr); // case-folded lookup
    CHECK(*table.find("cat") == std::vector<double>{1.0, 0.0});
    CHECK(table.find("mouse") == nullptr);
}

TEST_CASE("embedding files parse one word-vector row per line") {
    TempDir tmp;
    umae::testing::write_text(tmp.file("vec.txt"), "cat 1.0 0.0\ndog 0.0 1.0\n\nMixed 0.5 0.5\n");
    const EmbeddingTable table = load_embeddings(tmp.file("vec.txt"));
    CHECK(table.dimension() == 2);
    CHECK(table.size() == 3);
    CHECK(table.find("mixed") != nullptr);
    CHECK(table.find("MIXED") != nullptr);

    umae::testing::write_text(tmp.file("bare.txt"), "cat\n");
    CHECK_THROWS_AS(load_embeddings(tmp.file("bare.txt")), ParseError);
    umae::testing::write_text(tmp.file("nonnum.txt"), "cat 1.0 oops\n");
    CHECK_THROWS_AS(load_embeddings(tmp.file("nonnum.txt")), ParseError);
    umae::testing::write_text(tmp.file("ragged.txt"), "cat 1.0\ndog 1.0 2.0\n");
    CHECK_THROWS_AS(load_embeddings(tmp.file("ragged.txt")), ParseError);
    umae::testing::write_text(tmp.file("empty.txt"), "\n\n");
    CHECK_THROWS_AS(load_embeddings(tmp.file("empty.txt")), ValidationError);
    CHECK_THROWS_AS(load_embeddings(tmp.file("absent.txt")), IoError);
}

TEST_CASE("embedding selection picks the most similar mean-pooled option") {
    const EmbeddingTable table(2, {{"red", {1.0, 0.0}}, {"blue", {0.0, 1.0}}});
    const auto choice = select_mc_embedding("The answer is RED!", {"blue", "red", "purple"}, table);
    REQUIRE(choice.similarities.size() == 3);
    CHECK(choice.similarities[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(choice.similarities[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(choice.similarities[2] == -1.0); // no in-vocabulary word
    CHECK(choice.chosen_index == 1);

    // Mean pooling: "red blue" sits at 45 degrees from "red".
    const auto mixed = select_mc_embedding("red", {"red blue"}, table);
    CHECK(mixed.similarities[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    // Out-of-vocabulary words inside an option are skipped, not fatal.
    const auto partial = select_mc_embedding("red", {"red zzz"}, table);
    CHECK(partial.similarities[0] == doctest::Approx(1.0).epsilon(1e-12));

    // Exact similarity ties keep the lowest index.
    const auto tied = select_mc_embedding("red", {"red", "red"}, table);
    CHECK(tied.chosen_index == 0);

    CHECK_THROWS_AS(select_mc_embedding("xyz unknown", {"red"}, table), EmptyGeneration);
    CHECK_THROWS_AS(select_mc_embedding("red", {}, table), ValidationError);
}
