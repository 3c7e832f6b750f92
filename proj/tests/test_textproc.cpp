#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include <json.hpp>

#include "docaug/textproc.hpp"
#include "docaug/unicode.hpp"

using namespace docaug;
using njson = nlohmann::json;

namespace {

njson load_fixture(const std::string& name) {
    std::ifstream in(std::string(DOCAUG_FIXTURES) + "/" + name);
    REQUIRE(in.good());
    njson j;
    in >> j;
    return j;
}

std::string normalize_ws(const std::string& s) {
    std::string out;
    bool in_space = true;
    for (char32_t cp : uni::decode_utf8(s)) {
        if (uni::is_py_space(cp)) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out.push_back(' ');
            in_space = false;
            uni::append_utf8(out, cp);
        }
    }
    return out;
}

} // namespace

TEST_CASE("nfc matches the reference normalizer", "[unicode]") {
    njson cases = load_fixture("nfc_cases.json");
    REQUIRE(cases.size() > 50);
    for (const auto& c : cases) {
        INFO("input: " << c["input"].get<std::string>());
        CHECK(uni::nfc(c["input"].get<std::string>()) == c["expected"].get<std::string>());
    }
}

TEST_CASE("nfc is idempotent", "[unicode]") {
    njson cases = load_fixture("nfc_cases.json");
    for (const auto& c : cases) {
        std::string once = uni::nfc(c["input"].get<std::string>());
        CHECK(uni::nfc(once) == once);
    }
}

TEST_CASE("13a tokenization matches the reference tokenizer", "[textproc]") {
    njson cases = load_fixture("tok13a_cases.json");
    REQUIRE(cases.size() > 40);
    for (const auto& c : cases) {
        INFO("input: " << c["input"].get<std::string>());
        CHECK(tokenize_13a(c["input"].get<std::string>()).tokens ==
              c["expected"].get<std::vector<std::string>>());
    }
}

TEST_CASE("13a basics", "[textproc]") {
    CHECK(tokenize_13a("abc").tokens == std::vector<std::string>{"abc"});
    CHECK(tokenize_13a("Hello, world!").tokens ==
          std::vector<std::string>{"Hello", ",", "world", "!"});
    auto t = tokenize_13a("1,000 dogs.").tokens;
    CHECK(t == std::vector<std::string>{"1,000", "dogs", "."});
    CHECK(tokenize_13a("").tokens.empty());
    CHECK(tokenize_13a("   \t  ").tokens.empty());
}

TEST_CASE("13a is idempotent on the space-join of its output", "[textproc]") {
    njson cases = load_fixture("tok13a_cases.json");
    for (const auto& c : cases) {
        TokenSequence once = tokenize_13a(c["input"].get<std::string>());
        TokenSequence twice = tokenize_13a(once.joined());
        CHECK(twice.tokens == once.tokens);
    }
}

TEST_CASE("13a tokens have no internal whitespace", "[textproc]") {
    njson cases = load_fixture("tok13a_cases.json");
    for (const auto& c : cases) {
        for (const std::string& tok : tokenize_13a(c["input"].get<std::string>()).tokens) {
            CHECK(!tok.empty());
            for (char32_t cp : uni::decode_utf8(tok)) CHECK(!uni::is_py_space(cp));
        }
    }
}

TEST_CASE("sentence splitting basics", "[textproc]") {
    CHECK(split_sentences("A. B? C!").sentences == std::vector<std::string>{"A.", "B?", "C!"});
    CHECK(split_sentences("Dr. Smith left. He ran.").sentences ==
          std::vector<std::string>{"Dr. Smith left.", "He ran."});
    CHECK(split_sentences("").sentences.empty());
    CHECK(split_sentences("   \n  ").sentences.empty());
    CHECK(split_sentences("one line\nsecond line").sentences ==
          std::vector<std::string>{"one line", "second line"});
    // lowercase after the period: no boundary
    CHECK(split_sentences("e.g. this stays. and this too").sentences ==
          std::vector<std::string>{"e.g. this stays. and this too"});
    // closing quote between terminator and whitespace
    CHECK(split_sentences("\"Stop!\" He ran.").sentences ==
          std::vector<std::string>{"\"Stop!\"", "He ran."});
    // digit starts the next sentence
    CHECK(split_sentences("Count them. 3 dogs ran.").sentences ==
          std::vector<std::string>{"Count them.", "3 dogs ran."});
}

TEST_CASE("abbreviations do not split", "[textproc]") {
    CHECK(split_sentences("Mrs. Smith met Mr. Brown. Dr. Jones left.").sentences ==
          std::vector<std::string>{"Mrs. Smith met Mr. Brown.", "Dr. Jones left."});
    CHECK(split_sentences("Das gilt z.B. Heute nicht. Morgen bzw. Danach schon.").sentences ==
          std::vector<std::string>{"Das gilt z.B. Heute nicht.", "Morgen bzw. Danach schon."});
    CHECK(split_sentences("The U.S. Senate met. It voted.").sentences ==
          std::vector<std::string>{"The U.S. Senate met.", "It voted."});
}

TEST_CASE("sentence splitting preserves content modulo whitespace", "[textproc]") {
    std::vector<std::string> inputs = {
        "A. B? C!",
        "Dr. Smith left. He ran.",
        "Mehrere\nZeilen\n\nmit Leerzeilen. Und Saetze! Ja?",
        "No terminator at all",
        "\"Quoted!\" Sentences. (Parens.) Done.",
        "Zahlen 1.5 und 2,5 bleiben. 3 kommt.",
    };
    njson cases = load_fixture("tok13a_cases.json");
    for (const auto& c : cases) inputs.push_back(c["input"].get<std::string>());
    for (const std::string& text : inputs) {
        SentenceList s = split_sentences(text);
        std::string joined;
        for (const std::string& sent : s.sentences) {
            CHECK(!sent.empty());
            if (!joined.empty()) joined += " ";
            joined += sent;
        }
        INFO("input: " << text);
        CHECK(normalize_ws(joined) == normalize_ws(text));
    }
}

TEST_CASE("abbreviation list file parsing", "[textproc]") {
    const std::string path = "abbrev_test.txt";
    {
        std::ofstream f(path);
        f << "# comment line\nAbb.\n  Nr.  \n\n";
    }
    AbbrevSet a = AbbrevSet::from_file(path);
    CHECK(a.contains("Abb."));
    CHECK(a.contains("abb."));   // case-insensitive
    CHECK(a.contains("Nr."));
    CHECK(!a.contains("Dr."));
    std::remove(path.c_str());
}

TEST_CASE("count_tokens sums the chosen side", "[textproc]") {
    Corpus c;
    DocumentPair p1;
    p1.id = "p1";
    p1.source = Document{"p1", "a b", "en"};
    c.add(p1);
    DocumentPair p2;
    p2.id = "p2";
    p2.source = Document{"p2", "c", "en"};
    p2.tgt_lang = "de";
    p2.hypothesis = Document{"p2", "x y z", "de"};
    c.add(p2);

    CHECK(count_tokens(c, Side::source) == 3);
    std::size_t missing = 0;
    CHECK(count_tokens(c, Side::hypothesis, &missing) == 3);
    CHECK(missing == 1);
    CHECK(count_tokens(c, Side::reference, &missing) == 0);
    CHECK(missing == 2);
    CHECK(count_tokens(Corpus{}, Side::source) == 0);
}

TEST_CASE("count_tokens equals a per-document recount", "[textproc]") {
    Corpus c;
    std::mt19937_64 rng(5);
    std::vector<std::string> vocab = {"der", "hund", "lief", "schnell,", "heute.", "1,000", "x-y"};
    for (int i = 0; i < 100; ++i) {
        DocumentPair p;
        p.id = "p" + std::to_string(i);
        std::string text;
        std::size_t len = 1 + rng() % 12;
        for (std::size_t k = 0; k < len; ++k) {
            if (k) text += " ";
            text += vocab[rng() % vocab.size()];
        }
        p.source = Document{p.id, text, "en"};
        c.add(p);
    }
    std::size_t expected = 0;
    for (const DocumentPair& p : c.pairs) expected += tokenize_13a(p.source.text).size();
    CHECK(count_tokens(c, Side::source) == expected);

    // additivity over disjoint corpora
    Corpus a, b;
    for (std::size_t i = 0; i < c.pairs.size(); ++i) (i % 2 ? a : b).add(c.pairs[i]);
    CHECK(count_tokens(a, Side::source) + count_tokens(b, Side::source) ==
          count_tokens(c, Side::source));
}
