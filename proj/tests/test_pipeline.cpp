#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "docaug/pipeline.hpp"

using namespace docaug;
namespace fs = std::filesystem;

namespace {

std::string mock_bin() { return std::string(DOCAUG_BIN_DIR) + "/mock_provider"; }

struct TempDir {
    fs::path path;
    TempDir() {
        static int c = 0;
        path = fs::temp_directory_path() /
               ("docaug_pipe_" + std::to_string(::getpid()) + "_" + std::to_string(c++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// 20 summarization records with article bodies that split into sentences.
void write_fixture_corpus(const fs::path& p) {
    static const char* bodies[] = {
        "The mayor spoke at the meeting. Voters asked about the new bridge. Work begins in May.",
        "A storm crossed the coast overnight. Ferries stayed in port. Schools opened late.",
        "The museum opened a new wing. Critics praised the light-filled rooms. Visitors queued for hours.",
        "Researchers published the survey results. The sample covered 2,000 households. Costs rose by 4.5 percent.",
        "The rail line closed for repairs. Buses replaced trains for a week. Commuters grumbled but adapted.",
        "A bakery on Main Street won the regional prize. The owner thanked her team. Lines formed before dawn.",
        "The council approved the housing plan. Construction starts next spring. Rents may ease by 2027.",
        "Firefighters contained the hillside blaze. No homes were damaged. Crews remained on watch overnight.",
        "The university opened its new library. Students filled the reading rooms. The old building becomes offices.",
        "Farmers reported a strong harvest. Grain prices fell slightly. Exports are expected to rise.",
        "The theater staged a sold-out premiere. Reviews were mixed but warm. A national tour follows.",
        "Engineers tested the flood barriers. The system held against the surge. Upgrades continue this year.",
        "The clinic expanded its evening hours. Waiting times dropped sharply. Patients welcomed the change.",
        "A startup unveiled a delivery robot. The pilot run covers two districts. Regulators are watching closely.",
        "The port handled record cargo volumes. New cranes arrive in June. Jobs grew for a third year.",
        "Archaeologists found a Roman mosaic. The site opens to visitors soon. Experts called it remarkable.",
        "The city planted 10,000 trees. Parks will gain shaded paths. Volunteers joined on weekends.",
        "A chess prodigy won the open title. She is twelve years old. Sponsors lined up quickly.",
        "The observatory captured a rare eclipse. Clouds parted minutes before totality. Photos spread worldwide.",
        "Lawmakers debated the energy bill. Amendments continue next session. Industry groups remain split.",
    };
    std::ofstream f(p);
    int i = 0;
    for (const char* body : bodies) {
        json rec;
        rec["id"] = "doc" + std::to_string(i++);
        rec["article"] = body;
        rec["highlights"] = "summary";
        f << rec.dump() << "\n";
    }
}

std::string fixture_config(const fs::path& input, const fs::path& out, const fs::path& cache,
                           const std::string& extra = "") {
    std::ostringstream s;
    s << "[corpus]\n"
      << "input = " << input.string() << "\n"
      << "format = summarization-jsonl\n"
      << "src_lang = en\ntgt_lang = de\n\n"
      << "[sample]\nsize = 16\nseed = 7\n\n"
      << "[translator]\nendpoint = subprocess: " << mock_bin() << " --mode translator\n"
      << "prompt = {source}\n\n"
      << "[reference_mt]\nendpoint = subprocess: " << mock_bin() << " --mode reference\n\n"
      << "[embedder]\nendpoint = subprocess: " << mock_bin() << " --mode embedder --dim 8\n"
      << "batch_size = 4\n\n"
      << "[scorer]\nendpoint = subprocess: " << mock_bin() << " --mode scorer\n\n"
      << "[thresholds]\nbleu = 35\ncomet = 0.75\ncossim = 0.85\n\n"
      << "[manifest]\nstage2_size = 6\nstage2_seed = 3\n\n"
      << "[paths]\nout = " << out.string() << "\ncache = " << cache.string() << "\n"
      << extra;
    return s.str();
}

PipelineConfig make_config(const fs::path& input, const fs::path& out, const fs::path& cache,
                           const std::string& extra = "") {
    return pipeline_config_from(Config::parse_string(fixture_config(input, out, cache, extra)));
}

std::map<std::string, std::string> artifact_bytes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) out[e.path().filename().string()] = read_file(e.path());
    }
    return out;
}

} // namespace

TEST_CASE("augment fills hypotheses and strips prefixes", "[pipeline]") {
    TempDir tmp;
    Corpus c;
    for (int i = 0; i < 3; ++i) {
        DocumentPair p;
        p.id = "p" + std::to_string(i);
        p.source = Document{p.id, "The dog ran fast today.", "en"};
        c.add(std::move(p));
    }
    ProviderSpec spec;
    spec.role = ProviderSpec::Role::translator;
    spec.name = "tr";
    spec.endpoint = "subprocess: " + mock_bin() +
                    " --mode translator --prefix \"Hier ist die Übersetzung ins Deutsche:\"";
    spec.prompt_template = "{source}";
    spec.tgt_lang = "de";
    TranslationClient client(spec, nullptr);
    std::size_t dropped = 0;
    Corpus a = augment(c, client, PrefixRuleSet::defaults(), &dropped);
    REQUIRE(a.size() == 3);
    CHECK(dropped == 0);
    for (const DocumentPair& p : a.pairs) {
        REQUIRE(p.hypothesis);
        CHECK(p.hypothesis->text == "ZzThe zzdog zzran zzfast zztoday.");   // prefix stripped
        CHECK(p.hypothesis->lang == "de");
        CHECK(p.meta.at("provider:translator") == "tr");
    }
}

TEST_CASE("augment drops failed pairs with a tally", "[pipeline]") {
    Corpus c;
    for (int i = 0; i < 4; ++i) {
        DocumentPair p;
        p.id = "p" + std::to_string(i);
        p.source = Document{p.id, "Words here.", "en"};
        c.add(std::move(p));
    }
    ProviderSpec spec;
    spec.role = ProviderSpec::Role::translator;
    spec.name = "tr";
    spec.endpoint = "subprocess: " + mock_bin() + " --mode translator --error-id p2";
    spec.prompt_template = "{source}";
    spec.tgt_lang = "de";
    TranslationClient client(spec, nullptr);
    std::size_t dropped = 0;
    Corpus a = augment(c, client, PrefixRuleSet::defaults(), &dropped);
    CHECK(a.size() == 3);
    CHECK(dropped == 1);
    CHECK(!a.contains("p2"));
}

TEST_CASE("add_references fills the reference side", "[pipeline]") {
    Corpus c;
    DocumentPair p;
    p.id = "x";
    p.source = Document{"x", "The cat sat.", "en"};
    p.tgt_lang = "de";
    p.hypothesis = Document{"x", "zzThe zzcat zzsat.", "de"};
    c.add(std::move(p));
    ProviderSpec spec;
    spec.role = ProviderSpec::Role::reference_mt;
    spec.name = "ref";
    spec.endpoint = "subprocess: " + mock_bin() + " --mode reference";
    spec.tgt_lang = "de";
    TranslationClient client(spec, nullptr);
    Corpus r = add_references(c, client);
    REQUIRE(r.pairs[0].reference);
    CHECK(r.pairs[0].reference->lang == "de");
    CHECK(!r.pairs[0].reference->text.empty());
}

TEST_CASE("full pipeline runs and is byte-deterministic", "[pipeline]") {
    TempDir tmp;
    fs::path input = tmp.path / "input.jsonl";
    write_fixture_corpus(input);

    PipelineConfig pc1 = make_config(input, tmp.path / "out1", tmp.path / "cache1");
    PipelineConfig pc2 = make_config(input, tmp.path / "out2", tmp.path / "cache2");
    std::ostringstream log1, log2;
    RunSummary s1 = run_pipeline(pc1, log1);
    RunSummary s2 = run_pipeline(pc2, log2);

    CHECK(s1.converted == 20);
    CHECK(s1.sampled == 16);
    CHECK(s1.augmented == 16);
    CHECK(s1.with_refs == 16);
    CHECK(s1.scored == 16);
    CHECK(s1.filtered + s1.discarded == s1.scored);

    auto a1 = artifact_bytes(tmp.path / "out1");
    auto a2 = artifact_bytes(tmp.path / "out2");
    REQUIRE(!a1.empty());
    CHECK(a1 == a2);

    for (const char* f : {"converted.jsonl", "sampled.jsonl", "augmented.jsonl", "with_refs.jsonl",
                          "scores.jsonl", "filtered.jsonl", "retention.tsv", "retention.txt",
                          "stats.txt", "stage2.jsonl", "manifest.json", "run_state.json",
                          "run_summary.txt"})
        CHECK(a1.count(f) == 1);
}

TEST_CASE("rerun with identical config is a no-op with zero provider calls", "[pipeline]") {
    TempDir tmp;
    fs::path input = tmp.path / "input.jsonl";
    write_fixture_corpus(input);
    fs::path spawn_log = tmp.path / "spawns.log";
    ::setenv("MOCK_SPAWN_LOG", spawn_log.c_str(), 1);

    PipelineConfig pc = make_config(input, tmp.path / "out", tmp.path / "cache");
    std::ostringstream log;
    run_pipeline(pc, log);
    auto before = artifact_bytes(tmp.path / "out");
    std::size_t spawns = count_lines(spawn_log);

    std::ostringstream log2;
    run_pipeline(pc, log2);
    CHECK(count_lines(spawn_log) == spawns);   // nothing spawned on the rerun
    CHECK(artifact_bytes(tmp.path / "out") == before);
    CHECK(log2.str().find("up to date") != std::string::npos);

    // stage isolation: delete only the filter outputs; rerun regenerates them
    // identically, still without touching providers
    fs::remove(tmp.path / "out" / "filtered.jsonl");
    fs::remove(tmp.path / "out" / "filtered_scores.jsonl");
    fs::remove(tmp.path / "out" / "retention.tsv");
    fs::remove(tmp.path / "out" / "retention.txt");
    std::ostringstream log3;
    run_pipeline(pc, log3);
    CHECK(count_lines(spawn_log) == spawns);
    CHECK(artifact_bytes(tmp.path / "out") == before);
    ::unsetenv("MOCK_SPAWN_LOG");
}

TEST_CASE("aborted run resumes to identical artifacts", "[pipeline]") {
    TempDir tmp;
    fs::path input = tmp.path / "input.jsonl";
    write_fixture_corpus(input);

    // uninterrupted baseline
    PipelineConfig base = make_config(input, tmp.path / "base_out", tmp.path / "base_cache");
    std::ostringstream basel;
    run_pipeline(base, basel);

    // the reference provider answers nothing: the refs stage aborts after
    // retries, leaving convert/sample/augment complete and cached (the env
    // keeps the config hash identical)
    PipelineConfig pc = make_config(input, tmp.path / "out", tmp.path / "cache");
    ::setenv("MOCK_FAIL_MODE", "reference", 1);
    ::setenv("MOCK_FAIL_AFTER", "0", 1);
    std::ostringstream log1;
    CHECK_THROWS_AS(run_pipeline(pc, log1), ProviderError);
    ::unsetenv("MOCK_FAIL_AFTER");
    ::unsetenv("MOCK_FAIL_MODE");
    CHECK(fs::exists(tmp.path / "out" / "augmented.jsonl"));
    CHECK(!fs::exists(tmp.path / "out" / "with_refs.jsonl"));

    // resume: earlier stages are up to date, the rest completes
    std::ostringstream log2;
    run_pipeline(pc, log2);
    CHECK(log2.str().find("[augment] up to date") != std::string::npos);

    auto got = artifact_bytes(tmp.path / "out");
    auto want = artifact_bytes(tmp.path / "base_out");
    CHECK(got == want);
}

TEST_CASE("changed config invalidates the run state", "[pipeline]") {
    TempDir tmp;
    fs::path input = tmp.path / "input.jsonl";
    write_fixture_corpus(input);
    PipelineConfig pc = make_config(input, tmp.path / "out", tmp.path / "cache");
    std::ostringstream log;
    RunSummary s1 = run_pipeline(pc, log);

    PipelineConfig pc2 = make_config(input, tmp.path / "out", tmp.path / "cache",
                                     "\n[bleu]\nlowercase = true\n");
    CHECK(pc2.config_hash != pc.config_hash);
    std::ostringstream log2;
    RunSummary s2 = run_pipeline(pc2, log2);
    CHECK(log2.str().find("up to date") == std::string::npos);   // everything recomputed
    CHECK(s2.converted == s1.converted);
}

TEST_CASE("manifest counts and determinism", "[pipeline]") {
    TempDir tmp;
    ScoredCorpus filtered;
    for (int i = 0; i < 10; ++i) {
        DocumentPair p;
        p.id = "f" + std::to_string(i);
        p.source = Document{p.id, "text " + std::to_string(i), "en"};
        p.tgt_lang = "de";
        p.hypothesis = Document{p.id, "hyp", "de"};
        p.reference = Document{p.id, "ref", "de"};
        filtered.corpus.add(std::move(p));
        filtered.scores["f" + std::to_string(i)] = MetricScores{50.0, 0.8, 0.9};
    }
    ManifestConfig mc;
    mc.stage2_size = 4;
    mc.stage2_seed = 11;
    ThresholdSet t{35.0, 0.75, 0.85};

    StageManifest m1 = emit_manifest(mc, filtered, t, "cfg123", tmp.path / "m1");
    StageManifest m2 = emit_manifest(mc, filtered, t, "cfg123", tmp.path / "m2");
    CHECK(m1.stage2_count == 4);
    CHECK(count_lines(tmp.path / "m1" / "stage2.jsonl") == 4);
    CHECK(read_file(tmp.path / "m1" / "stage2.jsonl") == read_file(tmp.path / "m2" / "stage2.jsonl"));
    CHECK(read_file(tmp.path / "m1" / "manifest.json") == read_file(tmp.path / "m2" / "manifest.json"));
    CHECK(read_file(tmp.path / "m1" / "manifest.json").find("cfg123") != std::string::npos);

    // full filtered corpus when n2 == |filtered|
    mc.stage2_size = 10;
    StageManifest all = emit_manifest(mc, filtered, t, "cfg123", tmp.path / "m3");
    CHECK(all.stage2_count == 10);

    mc.stage2_size = 11;
    CHECK_THROWS_AS(emit_manifest(mc, filtered, t, "cfg123", tmp.path / "m4"), ValidationError);

    // stage1 declared-count verification
    mc.stage2_size = 2;
    fs::path stage1 = tmp.path / "stage1.jsonl";
    {
        std::ofstream f(stage1);
        f << "{\"id\":\"s1\"}\n{\"id\":\"s2\"}\n{\"id\":\"s3\"}\n";
    }
    mc.stage1_path = stage1;
    mc.stage1_count = 3;
    StageManifest withs1 = emit_manifest(mc, filtered, t, "cfg123", tmp.path / "m5");
    CHECK(withs1.stage1_count == 3);
    mc.stage1_count = 4;
    CHECK_THROWS_AS(emit_manifest(mc, filtered, t, "cfg123", tmp.path / "m6"), ValidationError);
}

TEST_CASE("threshold provenance lands in the manifest", "[pipeline]") {
    TempDir tmp;
    fs::path input = tmp.path / "input.jsonl";
    write_fixture_corpus(input);
    PipelineConfig pc = make_config(input, tmp.path / "out", tmp.path / "cache");
    std::ostringstream log;
    run_pipeline(pc, log);
    json m = json::parse(read_file(tmp.path / "out" / "manifest.json"));
    CHECK(m["thresholds"]["bleu"] == 35.0);
    CHECK(m["thresholds"]["comet"] == 0.75);
    CHECK(m["thresholds"]["cossim"] == 0.85);
    CHECK(m["stage2"]["count"].get<std::size_t>() == 6);
    CHECK(m["config"] == pc.config_hash);
}
