#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "docaug/config.hpp"
#include "docaug/pipeline.hpp"

using namespace docaug;

namespace {

const char* kSample = R"(
# pipeline configuration
[corpus]
input = data/in.jsonl
format = summarization-jsonl
src_lang = en
tgt_lang = de

[sample]
size = 20000
seed = 17

[translator]
endpoint = subprocess: ./mock --mode translator
prompt = Translate into {target_language}. {source}
batch_size = 4

[thresholds]
bleu = 35
comet = 0.75
cossim = 0.85

[grid.1]
bleu = 30
comet = 0.7
cossim = 0.8

[grid.2]
bleu = 35
comet = 0.75
cossim = 0.85

[paths]
out = /tmp/run-a
cache = /tmp/cache-a
)";

} // namespace

TEST_CASE("sections and keys parse", "[config]") {
    Config c = Config::parse_string(kSample);
    CHECK(c.require("corpus", "input") == "data/in.jsonl");
    CHECK(c.get_or("corpus", "missing", "fallback") == "fallback");
    CHECK(*c.get_u64("sample", "size") == 20000);
    CHECK(*c.get_double("thresholds", "comet") == 0.75);
    CHECK(c.get("translator", "prompt")->find("{source}") != std::string::npos);
    CHECK(c.section_names("grid.").size() == 2);
    CHECK(!c.get("nosuch", "key"));
}

TEST_CASE("parse errors carry origin and line", "[config]") {
    CHECK_THROWS_AS(Config::parse_string("[never closed\n"), ValidationError);
    CHECK_THROWS_AS(Config::parse_string("keyvalue without equals\n"), ValidationError);
    CHECK_THROWS_AS(Config::parse_string("= value\n"), ValidationError);
    try {
        Config::parse_string("[s]\nbad line\n", "test.conf");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("test.conf") != std::string::npos);
        CHECK(msg.find(":2") != std::string::npos);
    }
}

TEST_CASE("typed accessors validate", "[config]") {
    Config c = Config::parse_string("[s]\nnum = 12x\nflag = maybe\n");
    CHECK_THROWS_AS(c.get_u64("s", "num"), ValidationError);
    CHECK_THROWS_AS(c.get_double("s", "num"), ValidationError);
    CHECK_THROWS_AS(c.get_bool("s", "flag"), ValidationError);
    Config ok = Config::parse_string("[s]\na = true\nb = 0\nc = 3.5\n");
    CHECK(*ok.get_bool("s", "a"));
    CHECK(!*ok.get_bool("s", "b"));
    CHECK(*ok.get_double("s", "c") == 3.5);
}

TEST_CASE("config hash ignores the paths section", "[config]") {
    Config a = Config::parse_string(kSample);
    std::string moved(kSample);
    auto replace = [&](const std::string& from, const std::string& to) {
        moved.replace(moved.find(from), from.size(), to);
    };
    replace("/tmp/run-a", "/elsewhere/run-b");
    replace("/tmp/cache-a", "/elsewhere/cache-b");
    Config b = Config::parse_string(moved);
    CHECK(a.hash() == b.hash());

    std::string changed(kSample);
    changed.replace(changed.find("bleu = 35"), 9, "bleu = 36");
    CHECK(Config::parse_string(changed).hash() != a.hash());
}

TEST_CASE("pipeline config wiring", "[config]") {
    Config c = Config::parse_string(kSample);
    PipelineConfig pc = pipeline_config_from(c);
    CHECK(pc.format == CorpusFormat::summarization_jsonl);
    CHECK(pc.sample_size == 20000);
    CHECK(pc.sample_seed == 17);
    REQUIRE(pc.translator);
    CHECK(pc.translator->batch_size == 4);
    CHECK(pc.translator->tgt_lang == "de");
    CHECK(!pc.reference_mt);
    CHECK(*pc.thresholds.bleu_min == 35.0);
    REQUIRE(pc.grid.size() == 2);
    CHECK(*pc.grid[1].cossim_min == 0.85);
    CHECK(pc.out_dir == "/tmp/run-a");
    CHECK(!pc.config_hash.empty());
}

TEST_CASE("default grid rows when no grid sections exist", "[config]") {
    Config c = Config::parse_string("[corpus]\ninput = x.jsonl\n");
    PipelineConfig pc = pipeline_config_from(c);
    REQUIRE(pc.grid.size() == 3);
    CHECK(*pc.grid[0].bleu_min == 30.0);
    CHECK(*pc.grid[1].learned_min == 0.75);
    CHECK(*pc.grid[2].cossim_min == 0.9);
}

TEST_CASE("prefix rules and abbreviation file wire into the pipeline config", "[config]") {
    const std::string abbrev_path = "cfg_abbrev_test.txt";
    {
        std::ofstream f(abbrev_path);
        f << "Nr.\nAbs.\n";
    }
    Config c = Config::parse_string(
        "[corpus]\ninput = x.jsonl\n"
        "[prefix_rules]\nuse_defaults = false\nrule.1 = Output:\nrule.2 = Translation:\n"
        "[textproc]\nabbrev_file = " + abbrev_path + "\nnormalize_sentences = false\n");
    PipelineConfig pc = pipeline_config_from(c);
    REQUIRE(pc.prefix_rules.rules.size() == 2);
    CHECK(pc.prefix_rules.rules[0] == "Output:");
    CHECK(strip_prefixes("Output: Hello", pc.prefix_rules) == "Hello");
    CHECK(strip_prefixes("Hier ist die Übersetzung: bleibt", pc.prefix_rules) ==
          "Hier ist die Übersetzung: bleibt");   // defaults disabled
    CHECK(pc.abbrevs.contains("nr."));
    CHECK(!pc.normalize_sentences);
    std::remove(abbrev_path.c_str());
}

TEST_CASE("translator template must carry the source placeholder", "[config]") {
    Config c = Config::parse_string(
        "[corpus]\ninput = x.jsonl\n[translator]\nendpoint = subprocess: m\nprompt = no placeholder\n");
    CHECK_THROWS_AS(pipeline_config_from(c), ValidationError);
}

TEST_CASE("prompt rendering substitutes placeholders", "[config]") {
    ProviderSpec spec;
    spec.role = ProviderSpec::Role::translator;
    spec.endpoint = "subprocess: x";
    spec.prompt_template = "From {source_language} to {target_language}:\n{source}";
    spec.src_lang = "en";
    spec.tgt_lang = "de";
    CHECK(render_prompt(spec, "Hello.") == "From en to de:\nHello.");
}

TEST_CASE("endpoint descriptors parse", "[config]") {
    Endpoint e1 = parse_endpoint("subprocess: ./tool --flag x");
    CHECK(e1.kind == Endpoint::Kind::subprocess);
    CHECK(e1.value == "./tool --flag x");
    Endpoint e2 = parse_endpoint("http://localhost:8080/score");
    CHECK(e2.kind == Endpoint::Kind::http);
    CHECK_THROWS_AS(parse_endpoint("ftp://nope"), ValidationError);
    CHECK_THROWS_AS(parse_endpoint("subprocess:   "), ValidationError);
}
