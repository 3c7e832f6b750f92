#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "docaug/eval.hpp"

using namespace docaug;
using Catch::Matchers::WithinAbs;

namespace {

ScoredCorpus perfect_corpus(std::size_t n) {
    ScoredCorpus sc;
    for (std::size_t i = 0; i < n; ++i) {
        DocumentPair p;
        p.id = "p" + std::to_string(i);
        p.source = Document{p.id, "source text number " + std::to_string(i), "en"};
        p.tgt_lang = "de";
        std::string t = "ziel text nummer " + std::to_string(i) + " hier lang genug";
        p.hypothesis = Document{p.id, t, "de"};
        p.reference = Document{p.id, t, "de"};
        sc.corpus.add(std::move(p));
        MetricScores m;
        m.bleu = 100.0;
        m.learned = 1.0;
        m.cossim = 1.0;
        sc.scores["p" + std::to_string(i)] = m;
    }
    return sc;
}

} // namespace

TEST_CASE("geometric mean basics", "[eval]") {
    CHECK(geometric_mean({1.0, 1.0, 1.0}) == 1.0);
    CHECK_THAT(geometric_mean({2.0, 8.0}), WithinAbs(4.0, 1e-12));
    CHECK_THROWS_AS(geometric_mean({}), ValidationError);
    CHECK_THROWS_AS(geometric_mean({1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(geometric_mean({1.0, -0.5}), ValidationError);
}

TEST_CASE("geometric mean reproduces frozen reference triples", "[eval]") {
    CHECK_THAT(geometric_mean({15.07, 0.697, 0.852}), WithinAbs(2.076, 0.001));
    CHECK_THAT(geometric_mean({11.24, 0.618, 0.764}), WithinAbs(1.744, 0.001));
    CHECK_THAT(geometric_mean({15.96, 0.701, 0.860}), WithinAbs(2.127, 0.001));
}

TEST_CASE("log-space equivalence", "[eval]") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> vals;
        std::size_t n = 1 + rng() % 6;
        for (std::size_t k = 0; k < n; ++k)
            vals.push_back(static_cast<double>(rng() % 100000 + 1) / 1000.0);
        double direct = 1.0;
        for (double v : vals) direct *= v;
        direct = std::pow(direct, 1.0 / static_cast<double>(vals.size()));
        CHECK_THAT(geometric_mean(vals), WithinAbs(direct, 1e-9 * direct + 1e-12));
        double log_form = std::exp(
            std::accumulate(vals.begin(), vals.end(), 0.0,
                            [](double acc, double v) { return acc + std::log(v); }) /
            static_cast<double>(vals.size()));
        CHECK_THAT(geometric_mean(vals), WithinAbs(log_form, 1e-12));
    }
}

TEST_CASE("evaluate on a perfect corpus", "[eval]") {
    EvalReport r = evaluate(perfect_corpus(4));
    CHECK(r.bleu == 100.0);
    CHECK(r.learned_mean == 1.0);
    CHECK(r.cossim_mean == 1.0);
    CHECK_THAT(r.geo_mean, WithinAbs(std::cbrt(100.0), 1e-9));
    CHECK(r.n_instances == 4);
    CHECK(r.footprint.find("tok:13a") != std::string::npos);
    CHECK(r.footprint.find("corpus:micro") != std::string::npos);
    // invariant: GM equals the cube root of the product of the components
    CHECK_THAT(r.geo_mean,
               WithinAbs(std::cbrt(r.bleu * r.learned_mean * r.cossim_mean), 1e-9));
}

TEST_CASE("singleton corpus bleu equals document bleu", "[eval]") {
    ScoredCorpus sc;
    DocumentPair p;
    p.id = "only";
    p.source = Document{"only", "the source text", "en"};
    p.tgt_lang = "de";
    p.hypothesis = Document{"only", "der hund lief schnell nach hause", "de"};
    p.reference = Document{"only", "der hund rannte schnell nach hause", "de"};
    sc.corpus.add(p);
    MetricScores m;
    m.learned = 0.8;
    m.cossim = 0.9;
    sc.scores["only"] = m;
    EvalReport r = evaluate(sc);
    BleuScore doc = document_bleu(tokenize_13a(p.hypothesis->text),
                                  tokenize_13a(p.reference->text));
    CHECK(r.bleu == doc.score);
}

TEST_CASE("evaluate aggregates match independent recomputation", "[eval]") {
    std::mt19937_64 rng(31);
    ScoredCorpus sc;
    std::vector<std::string> vocab = {"der", "die", "das", "hund", "katze", "haus",
                                      "lief", "sprang", "heute", "gestern"};
    auto sentence = [&](std::size_t len) {
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            if (i) s += " ";
            s += vocab[rng() % vocab.size()];
        }
        return s + ".";
    };
    double learned_sum = 0, cossim_sum = 0;
    std::vector<std::pair<TokenSequence, TokenSequence>> pairs;
    for (int i = 0; i < 10; ++i) {
        DocumentPair p;
        p.id = "r" + std::to_string(i);
        p.source = Document{p.id, sentence(6), "en"};
        p.tgt_lang = "de";
        p.hypothesis = Document{p.id, sentence(5 + rng() % 6), "de"};
        p.reference = Document{p.id, sentence(5 + rng() % 6), "de"};
        MetricScores m;
        m.learned = static_cast<double>(rng() % 1000) / 1000.0;
        m.cossim = static_cast<double>(rng() % 1000) / 1000.0;
        learned_sum += *m.learned;
        cossim_sum += *m.cossim;
        pairs.emplace_back(tokenize_13a(p.hypothesis->text), tokenize_13a(p.reference->text));
        sc.scores[p.id] = m;
        sc.corpus.add(std::move(p));
    }
    EvalReport r = evaluate(sc);
    CHECK_THAT(r.learned_mean, WithinAbs(learned_sum / 10.0, 1e-12));
    CHECK_THAT(r.cossim_mean, WithinAbs(cossim_sum / 10.0, 1e-12));
    CHECK(r.bleu == corpus_bleu(pairs).score);
}

TEST_CASE("evaluate rejects incomplete ingredients", "[eval]") {
    ScoredCorpus sc = perfect_corpus(2);
    sc.scores["p1"].cossim.reset();
    try {
        evaluate(sc);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("p1") != std::string::npos);
    }
    CHECK_THROWS_AS(evaluate(ScoredCorpus{}), ValidationError);
}

TEST_CASE("non-positive components abort the geometric mean", "[eval]") {
    ScoredCorpus sc = perfect_corpus(2);
    sc.scores["p0"].cossim = -1.0;
    sc.scores["p1"].cossim = -1.0;   // mean is negative: GM undefined
    CHECK_THROWS_AS(evaluate(sc), ValidationError);
}

TEST_CASE("evaluate is order-invariant", "[eval]") {
    ScoredCorpus sc = perfect_corpus(5);
    sc.scores["p2"].learned = 0.25;
    sc.scores["p2"].cossim = 0.5;
    EvalReport a = evaluate(sc);

    ScoredCorpus rev;
    for (auto it = sc.corpus.pairs.rbegin(); it != sc.corpus.pairs.rend(); ++it) rev.corpus.add(*it);
    rev.scores = sc.scores;
    EvalReport b = evaluate(rev);
    CHECK(a.bleu == b.bleu);
    CHECK(a.learned_mean == b.learned_mean);
    CHECK_THAT(a.cossim_mean, WithinAbs(b.cossim_mean, 1e-15));
    CHECK_THAT(a.geo_mean, WithinAbs(b.geo_mean, 1e-12));
}

TEST_CASE("report rendering rounds as declared", "[eval]") {
    EvalReport r;
    r.bleu = 15.073;
    r.learned_mean = 0.6971;
    r.cossim_mean = 0.8524;
    r.geo_mean = 2.0761;
    r.n_instances = 3;
    r.footprint = "f";
    std::string txt = eval_to_text(r);
    CHECK(txt.find("15.07") != std::string::npos);
    CHECK(txt.find("0.697") != std::string::npos);
    CHECK(txt.find("0.852") != std::string::npos);
    CHECK(txt.find("2.076") != std::string::npos);
    json j = eval_to_json(r);
    CHECK(j["bleu"] == "15.07");
    CHECK(j["geometric_mean"] == "2.076");
}
