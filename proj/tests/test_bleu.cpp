#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "docaug/bleu.hpp"

using namespace docaug;
using njson = nlohmann::json;
using Catch::Matchers::WithinAbs;

namespace {

njson load_fixture(const std::string& name) {
    std::ifstream in(std::string(DOCAUG_FIXTURES) + "/" + name);
    REQUIRE(in.good());
    njson j;
    in >> j;
    return j;
}

TokenSequence toks(std::vector<std::string> v) { return TokenSequence{std::move(v)}; }

void check_score(const BleuScore& got, const njson& want, const std::string& note) {
    INFO(note);
    CHECK_THAT(got.score, WithinAbs(want["score"].get<double>(), 1e-6));
    CHECK_THAT(got.brevity_penalty, WithinAbs(want["bp"].get<double>(), 1e-9));
    CHECK(got.hyp_len == want["hyp_len"].get<std::size_t>());
    CHECK(got.ref_len == want["ref_len"].get<std::size_t>());
    auto precs = want["precisions"].get<std::vector<double>>();
    REQUIRE(got.precisions.size() == precs.size());
    for (std::size_t i = 0; i < precs.size(); ++i)
        CHECK_THAT(got.precisions[i], WithinAbs(precs[i], 1e-9));
}

} // namespace

TEST_CASE("ngram_counts basics", "[bleu]") {
    auto uni = ngram_counts(toks({"a", "b", "a"}), 1);
    CHECK(uni.size() == 2);
    CHECK(uni.at("a") == 2);
    CHECK(uni.at("b") == 1);
    auto bi = ngram_counts(toks({"a", "b", "a"}), 2);
    CHECK(bi.size() == 2);
    CHECK(bi.at(std::string("a") + '\x1f' + "b") == 1);
    CHECK(bi.at(std::string("b") + '\x1f' + "a") == 1);
    CHECK(ngram_counts(toks({"a"}), 2).empty());
    std::int64_t total = 0;
    for (auto& [g, c] : ngram_counts(toks({"a", "b", "c", "d", "e"}), 3)) total += c;
    CHECK(total == 3);   // len - n + 1
}

TEST_CASE("brevity penalty", "[bleu]") {
    CHECK(brevity_penalty(10, 10) == 1.0);
    CHECK(brevity_penalty(20, 10) == 1.0);
    CHECK_THAT(brevity_penalty(5, 10), WithinAbs(std::exp(-1.0), 1e-12));
    CHECK(brevity_penalty(0, 10) == 0.0);
    CHECK_THROWS_AS(brevity_penalty(5, 0), ValidationError);
}

TEST_CASE("identity scores exactly 100", "[bleu]") {
    for (auto tokens : {std::vector<std::string>{"the", "cat", "sat", "on", "the", "mat"},
                        std::vector<std::string>{"a", "b"}, std::vector<std::string>{"x"}}) {
        BleuScore s = document_bleu(toks(tokens), toks(tokens));
        CHECK(s.score == 100.0);
        CHECK(s.brevity_penalty == 1.0);
    }
}

TEST_CASE("empty hypothesis scores 0 with zero precisions", "[bleu]") {
    BleuScore s = document_bleu(toks({}), toks({"a", "b", "c"}));
    CHECK(s.score == 0.0);
    CHECK(s.brevity_penalty == 0.0);
    for (double p : s.precisions) CHECK(p == 0.0);
}

TEST_CASE("empty reference is an error", "[bleu]") {
    CHECK_THROWS_AS(document_bleu(toks({"a"}), toks({})), ValidationError);
    CHECK_THROWS_AS(corpus_bleu({}), ValidationError);
}

TEST_CASE("token-disjoint pair scores below 1", "[bleu]") {
    BleuScore s = document_bleu(toks({"x1", "x2", "x3", "x4", "x5"}),
                                toks({"y1", "y2", "y3", "y4", "y5"}));
    CHECK(s.score < 1.0);
    CHECK(s.score == 0.0);   // no matching n-gram at any order
}

TEST_CASE("short identical-prefix pair matches hand arithmetic", "[bleu]") {
    // p1=p2=p3=1, no 4-grams in the hypothesis; BP = exp(1 - 4/3)
    BleuScore s = document_bleu(toks({"the", "cat", "sat"}), toks({"the", "cat", "sat", "down"}));
    CHECK_THAT(s.brevity_penalty, WithinAbs(std::exp(1.0 - 4.0 / 3.0), 1e-12));
    CHECK_THAT(s.score, WithinAbs(100.0 * std::exp(1.0 - 4.0 / 3.0), 1e-9));
}

TEST_CASE("document scores match the reference oracle", "[bleu][oracle]") {
    njson fx = load_fixture("bleu_cases.json");
    REQUIRE(fx["token_cases"].size() >= 25);
    for (const auto& c : fx["token_cases"]) {
        BleuScore s = document_bleu(toks(c["hyp"].get<std::vector<std::string>>()),
                                    toks(c["ref"].get<std::vector<std::string>>()));
        check_score(s, c["doc"], c["note"].get<std::string>());
    }
}

TEST_CASE("string-level scores match the reference oracle", "[bleu][oracle]") {
    njson fx = load_fixture("bleu_cases.json");
    for (const auto& c : fx["string_cases"]) {
        BleuScore s = document_bleu(tokenize_13a(c["hyp"].get<std::string>()),
                                    tokenize_13a(c["ref"].get<std::string>()),
                                    BleuConfig{});
        check_score(s, c["doc"], c["note"].get<std::string>());
    }
}

TEST_CASE("corpus score matches the reference oracle", "[bleu][oracle]") {
    njson fx = load_fixture("bleu_cases.json");
    std::vector<std::pair<TokenSequence, TokenSequence>> pairs;
    for (const auto& c : fx["token_cases"]) {
        auto hyp = c["hyp"].get<std::vector<std::string>>();
        if (hyp.empty()) continue;
        pairs.emplace_back(toks(hyp), toks(c["ref"].get<std::vector<std::string>>()));
    }
    check_score(corpus_bleu(pairs), fx["corpus"], "corpus micro-average");
}

TEST_CASE("singleton corpus equals document score", "[bleu]") {
    TokenSequence hyp = toks({"der", "hund", "lief", "nach", "hause"});
    TokenSequence ref = toks({"der", "hund", "rannte", "nach", "hause"});
    CHECK(corpus_bleu({{hyp, ref}}).score == document_bleu(hyp, ref).score);
}

TEST_CASE("all-identical corpus scores 100", "[bleu]") {
    TokenSequence t = toks({"a", "b", "c", "d", "e"});
    CHECK(corpus_bleu({{t, t}, {t, t}, {t, t}}).score == 100.0);
}

TEST_CASE("corpus score is invariant under pair permutation", "[bleu]") {
    njson fx = load_fixture("bleu_cases.json");
    std::vector<std::pair<TokenSequence, TokenSequence>> pairs;
    for (const auto& c : fx["token_cases"]) {
        auto hyp = c["hyp"].get<std::vector<std::string>>();
        if (hyp.empty()) continue;
        pairs.emplace_back(toks(hyp), toks(c["ref"].get<std::vector<std::string>>()));
    }
    double base = corpus_bleu(pairs).score;
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        for (std::size_t i = pairs.size(); i > 1; --i)
            std::swap(pairs[i - 1], pairs[rng() % i]);
        CHECK(corpus_bleu(pairs).score == base);
    }
}

TEST_CASE("bleu is asymmetric when lengths differ", "[bleu]") {
    TokenSequence a = toks({"the", "cat", "sat", "on", "the", "mat"});
    TokenSequence b = toks({"the", "cat", "sat"});
    CHECK(document_bleu(b, a).score != document_bleu(a, b).score);
}

TEST_CASE("appending a perfect match never lowers the corpus score", "[bleu]") {
    njson fx = load_fixture("bleu_cases.json");
    std::vector<std::pair<TokenSequence, TokenSequence>> pairs;
    for (const auto& c : fx["token_cases"]) {
        auto hyp = c["hyp"].get<std::vector<std::string>>();
        if (hyp.empty()) continue;
        pairs.emplace_back(toks(hyp), toks(c["ref"].get<std::vector<std::string>>()));
    }
    TokenSequence perfect = toks({"p1", "p2", "p3", "p4", "p5", "p6"});
    for (int i = 0; i < 4; ++i) {
        double before = corpus_bleu(pairs).score;
        pairs.emplace_back(perfect, perfect);
        double after = corpus_bleu(pairs).score;
        CHECK(after >= before);
    }
}

TEST_CASE("lowercase config folds case", "[bleu]") {
    BleuConfig lc;
    lc.lowercase = true;
    BleuScore s = document_bleu(toks({"The", "CAT"}), toks({"the", "cat"}), lc);
    CHECK(s.score == 100.0);
    BleuScore cs = document_bleu(toks({"The", "CAT"}), toks({"the", "cat"}));
    CHECK(cs.score < 100.0);
}

TEST_CASE("smoothing variants", "[bleu]") {
    TokenSequence hyp = toks({"a", "b", "c"});
    TokenSequence ref = toks({"a", "x", "c"});
    BleuConfig none;
    none.smoothing = BleuConfig::Smoothing::none;
    CHECK(document_bleu(hyp, ref, none).score == 0.0);   // zero bigram precision, unsmoothed

    BleuConfig floor;
    floor.smoothing = BleuConfig::Smoothing::floor;
    floor.floor_value = 0.1;
    BleuScore f = document_bleu(hyp, ref, floor);
    // p1=2/3, p2=0.1/2, p3=0.1/1, p4 skipped
    double expected = 100.0 * std::exp((std::log(2.0 / 3.0) + std::log(0.05) + std::log(0.1)) / 4.0);
    CHECK_THAT(f.score, WithinAbs(expected, 1e-9));
}

TEST_CASE("returned score is consistent with its own components", "[bleu]") {
    // score == 100 * bp * exp(mean of log precisions over max_order), with
    // zero precisions excluded from the sum
    njson fx = load_fixture("bleu_cases.json");
    for (const auto& c : fx["token_cases"]) {
        BleuScore s = document_bleu(toks(c["hyp"].get<std::vector<std::string>>()),
                                    toks(c["ref"].get<std::vector<std::string>>()));
        bool any_positive = false;
        double log_sum = 0.0;
        for (double p : s.precisions) {
            if (p > 0) {
                log_sum += std::log(p);
                any_positive = true;
            }
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
        double reconstructed =
            any_positive ? 100.0 * s.brevity_penalty * std::exp(log_sum / 4.0) : 0.0;
        if (s.score > 0.0) CHECK_THAT(s.score, WithinAbs(reconstructed, 1e-9));
        CHECK(s.score >= 0.0);
        CHECK(s.score <= 100.0);
        if (s.hyp_len >= s.ref_len && s.hyp_len > 0) CHECK(s.brevity_penalty == 1.0);
    }
}

TEST_CASE("config validation", "[bleu]") {
    BleuConfig bad;
    bad.max_order = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.max_order = 10;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    BleuConfig ok;
    ok.max_order = 9;
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.signature().find("order:9") != std::string::npos);
}
