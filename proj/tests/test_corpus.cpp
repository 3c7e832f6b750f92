#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <random>

#include "docaug/corpus.hpp"

using namespace docaug;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("docaug_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write(const fs::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    f << content;
}

Corpus tiny_corpus(std::size_t n) {
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) {
        DocumentPair p;
        p.id = "d" + std::to_string(i);
        p.source = Document{p.id, "text " + std::to_string(i), "en"};
        c.add(std::move(p));
    }
    return c;
}

} // namespace

TEST_CASE("pairs-jsonl loads in file order", "[corpus]") {
    TempDir tmp;
    write(tmp.path / "c.jsonl",
          R"({"id":"a","src":"one","src_lang":"en","hyp":"eins","hyp_lang":"de","ref":null,"meta":{}})"
          "\n"
          R"({"id":"b","src":"two","src_lang":"en","hyp":null,"hyp_lang":null,"ref":null,"meta":{"k":"v"}})"
          "\n"
          R"({"id":"c","src":"three","src_lang":"en","hyp":"drei","hyp_lang":"de","ref":"DREI","meta":{}})"
          "\n");
    Corpus c = load_corpus(tmp.path / "c.jsonl", CorpusFormat::pairs_jsonl);
    REQUIRE(c.size() == 3);
    CHECK(c.pairs[0].id == "a");
    CHECK(c.pairs[1].id == "b");
    CHECK(c.pairs[2].id == "c");
    CHECK(c.pairs[0].hypothesis->text == "eins");
    CHECK(c.pairs[0].hypothesis->lang == "de");
    CHECK(!c.pairs[1].hypothesis);
    CHECK(c.pairs[1].meta.at("k") == "v");
    CHECK(c.pairs[2].reference->text == "DREI");
    CHECK(c.pairs[2].reference->lang == "de");
}

TEST_CASE("duplicate ids are rejected with id and line", "[corpus]") {
    TempDir tmp;
    std::string line = R"({"id":"d1","src":"x","src_lang":"en"})";
    write(tmp.path / "dup.jsonl", line + "\n" +
                                      R"({"id":"d2","src":"y","src_lang":"en"})" + "\n" +
                                      R"({"id":"d3","src":"y","src_lang":"en"})" + "\n" +
                                      R"({"id":"d4","src":"y","src_lang":"en"})" + "\n" + line + "\n");
    try {
        load_corpus(tmp.path / "dup.jsonl", CorpusFormat::pairs_jsonl);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("d1") != std::string::npos);
        CHECK(msg.find(":5") != std::string::npos);
    }
}

TEST_CASE("malformed lines carry the line number", "[corpus]") {
    TempDir tmp;
    write(tmp.path / "bad.jsonl", R"({"id":"a","src":"x","src_lang":"en"})" "\nnot json\n");
    try {
        load_corpus(tmp.path / "bad.jsonl", CorpusFormat::pairs_jsonl);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("summarization records convert to source-only pairs", "[corpus]") {
    TempDir tmp;
    write(tmp.path / "s.jsonl",
          R"({"id":"a","article":"X. Y.","highlights":"Z"})" "\n"
          R"({"id":"b","article":"Body b","highlights":"h"})" "\n"
          R"({"id":"c","article":"Body c","highlights":"h"})" "\n");
    std::size_t skipped = 0;
    Corpus c = load_corpus(tmp.path / "s.jsonl", CorpusFormat::summarization_jsonl, "en", &skipped);
    REQUIRE(c.size() == 3);
    CHECK(skipped == 0);
    CHECK(c.pairs[0].source.text == "X. Y.");
    CHECK(c.pairs[0].source.lang == "en");
    CHECK(!c.pairs[0].hypothesis);
    CHECK(!c.pairs[0].reference);
}

TEST_CASE("empty articles are skipped and tallied", "[corpus]") {
    std::vector<SummarizationRecord> records;
    for (int i = 0; i < 5; ++i)
        records.push_back({"r" + std::to_string(i), i == 2 ? "   " : "body", "h"});
    std::size_t skipped = 0;
    Corpus c = convert_summarization(records, "en", &skipped);
    CHECK(c.size() == 4);
    CHECK(skipped == 1);
}

TEST_CASE("conversion preserves counts at fixture scale", "[corpus]") {
    std::vector<SummarizationRecord> records;
    for (int i = 0; i < 287; ++i)
        records.push_back({"r" + std::to_string(i), "article body " + std::to_string(i), "h"});
    std::size_t skipped = 0;
    Corpus c = convert_summarization(records, "en", &skipped);
    CHECK(c.size() == 287);
    CHECK(skipped == 0);
}

TEST_CASE("ingestion round-trips field-for-field", "[corpus]") {
    TempDir tmp;
    write(tmp.path / "c.jsonl",
          R"({"id":"a","src":"ä text","src_lang":"en","hyp":"hüpo","hyp_lang":"de","ref":"réf","meta":{"m":"1"},"extra":7,"tag":"t"})"
          "\n"
          R"({"id":"b","src":"two","src_lang":"en","hyp":null,"hyp_lang":"de","ref":null,"meta":{}})"
          "\n");
    Corpus c1 = load_corpus(tmp.path / "c.jsonl", CorpusFormat::pairs_jsonl);
    CHECK(c1.pairs[0].meta.at("extra") == "7");       // unknown fields preserved in meta
    CHECK(c1.pairs[0].meta.at("tag") == "t");
    write_corpus(c1, tmp.path / "rt.jsonl");
    Corpus c2 = load_corpus(tmp.path / "rt.jsonl", CorpusFormat::pairs_jsonl);
    REQUIRE(c2.size() == c1.size());
    for (std::size_t i = 0; i < c1.size(); ++i) {
        const DocumentPair &a = c1.pairs[i], &b = c2.pairs[i];
        CHECK(a.id == b.id);
        CHECK(a.source.text == b.source.text);
        CHECK(a.source.lang == b.source.lang);
        CHECK(a.hypothesis.has_value() == b.hypothesis.has_value());
        if (a.hypothesis) CHECK(a.hypothesis->text == b.hypothesis->text);
        CHECK(a.reference.has_value() == b.reference.has_value());
        if (a.reference) CHECK(a.reference->text == b.reference->text);
        CHECK(a.meta == b.meta);
    }
    // byte-stable from then on
    write_corpus(c2, tmp.path / "rt2.jsonl");
    CHECK(read_file(tmp.path / "rt.jsonl") == read_file(tmp.path / "rt2.jsonl"));
}

TEST_CASE("pair invariants are enforced", "[corpus]") {
    DocumentPair p;
    p.id = "x";
    p.source = Document{"x", "text", "en"};
    p.tgt_lang = "en";
    p.hypothesis = Document{"x", "same lang", "en"};
    CHECK_THROWS_AS(p.validate(), ValidationError);

    DocumentPair q;
    q.id = "y";
    q.source = Document{"y", "text", "en"};
    q.tgt_lang = "de";
    q.hypothesis = Document{"y", "hyp", "de"};
    q.reference = Document{"y", "ref", "fr"};
    CHECK_THROWS_AS(q.validate(), ValidationError);
}

TEST_CASE("whitespace-only source is rejected", "[corpus]") {
    TempDir tmp;
    write(tmp.path / "ws.jsonl", R"({"id":"a","src":"  \t ","src_lang":"en"})" "\n");
    CHECK_THROWS_AS(load_corpus(tmp.path / "ws.jsonl", CorpusFormat::pairs_jsonl), ValidationError);
}

// --- prefix stripping ------------------------------------------------------

TEST_CASE("generated translation preamble is stripped", "[prefix]") {
    PrefixRuleSet rules = PrefixRuleSet::defaults();
    CHECK(strip_prefixes("Hier ist die Übersetzung ins Deutsche:\nGuten Tag.", rules) ==
          "Guten Tag.");
    CHECK(strip_prefixes("Guten Tag.", rules) == "Guten Tag.");
    CHECK(strip_prefixes("  hier ist die übersetzung ins deutsche:  Hallo", rules) == "Hallo");
    CHECK(strip_prefixes("Here is the translation: Hello there.", rules) == "Hello there.");
}

TEST_CASE("longest matching rule wins", "[prefix]") {
    PrefixRuleSet rules{{"Here is", "Here is the translation"}};
    CHECK(strip_prefixes("Here is the translation: X", rules) == "X");
}

TEST_CASE("prefix stripping is idempotent on random fixtures", "[prefix]") {
    PrefixRuleSet rules = PrefixRuleSet::defaults();
    rules.rules.push_back("Output:");
    std::mt19937_64 rng(11);
    std::vector<std::string> pieces = {
        "Hier ist die Übersetzung ins Deutsche:", "Here is the translation:", "Output:",
        "Guten Tag.", "  ", "\n", "Der Text geht weiter", "output: klein", "kein Präfix hier",
    };
    for (int i = 0; i < 100; ++i) {
        std::string t;
        std::size_t n = rng() % 5;
        for (std::size_t k = 0; k < n; ++k) t += pieces[rng() % pieces.size()] + " ";
        std::string once = strip_prefixes(t, rules);
        CHECK(strip_prefixes(once, rules) == once);
    }
}

// --- sampling ---------------------------------------------------------------

TEST_CASE("full sample returns the corpus in order", "[sample]") {
    Corpus c = tiny_corpus(7);
    Corpus s = sample(c, 7, 123);
    REQUIRE(s.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) CHECK(s.pairs[i].id == c.pairs[i].id);
}

TEST_CASE("sampling is deterministic", "[sample]") {
    Corpus c = tiny_corpus(50);
    Corpus a = sample(c, 5, 42);
    Corpus b = sample(c, 5, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.pairs[i].id == b.pairs[i].id);
    CHECK(corpus_to_jsonl(a) == corpus_to_jsonl(b));   // byte-for-byte
    Corpus d = sample(c, 5, 43);
    bool same = corpus_to_jsonl(a) == corpus_to_jsonl(d);
    CHECK(!same);
}

TEST_CASE("sample preserves relative input order", "[sample]") {
    Corpus c = tiny_corpus(30);
    Corpus s = sample(c, 10, 7);
    std::size_t last = 0;
    for (const DocumentPair& p : s.pairs) {
        std::size_t idx = std::stoul(p.id.substr(1));
        if (&p != &s.pairs.front()) CHECK(idx > last);
        last = idx;
    }
}

TEST_CASE("oversized sample errors with both sizes", "[sample]") {
    Corpus c = tiny_corpus(3);
    try {
        sample(c, 5, 1);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("5") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);
    }
}

TEST_CASE("sampling is uniform (chi-square style bound)", "[sample]") {
    // 10'000 draws of 2-of-10; each element should be picked with frequency
    // 0.2 +- 0.02.
    std::array<std::size_t, 10> hits{};
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        for (std::size_t idx : sample_indices(10, 2, 1000 + static_cast<std::uint64_t>(t)))
            ++hits[idx];
    }
    for (std::size_t i = 0; i < hits.size(); ++i) {
        double freq = static_cast<double>(hits[i]) / trials;
        INFO("element " << i << " freq " << freq);
        CHECK(freq > 0.18);
        CHECK(freq < 0.22);
    }
}
