#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docaug/bleu.hpp"
#include "docaug/config.hpp"
#include "docaug/corpus.hpp"
#include "docaug/embed.hpp"
#include "docaug/eval.hpp"
#include "docaug/filter.hpp"
#include "docaug/providers.hpp"
#include "docaug/scores.hpp"
#include "docaug/textproc.hpp"

namespace docaug {

// ---------------------------------------------------------------------------
// Pipeline configuration

struct ManifestConfig {
    std::optional<std::filesystem::path> stage1_path;
    std::optional<std::size_t> stage1_count;   // declared; checked against the file when both present
    std::size_t stage2_size = 2000;
    std::uint64_t stage2_seed = 17;
};

struct PipelineConfig {
    std::filesystem::path input;
    CorpusFormat format = CorpusFormat::pairs_jsonl;
    std::string src_lang = "en";
    std::string tgt_lang = "de";

    std::optional<std::size_t> sample_size;
    std::uint64_t sample_seed = 17;

    PrefixRuleSet prefix_rules = PrefixRuleSet::defaults();
    AbbrevSet abbrevs = AbbrevSet::defaults();
    bool normalize_sentences = true;

    BleuConfig bleu;
    ThresholdSet thresholds;              // the filter stage's bounds
    std::vector<ThresholdSet> grid;       // retention accounting rows

    std::optional<ProviderSpec> translator;
    std::optional<ProviderSpec> reference_mt;
    std::optional<ProviderSpec> embedder;
    std::optional<ProviderSpec> scorer;
    bool scorer_needs_reference = true;

    std::optional<ManifestConfig> manifest;

    std::filesystem::path out_dir = "out";
    std::filesystem::path cache_dir;      // empty: caching disabled

    std::string config_hash;

    EmbedOptions embed_options() const { return EmbedOptions{normalize_sentences, abbrevs}; }
};

inline ThresholdSet thresholds_from_section(const Config& cfg, const std::string& section) {
    ThresholdSet t;
    t.bleu_min = cfg.get_double(section, "bleu");
    t.learned_min = cfg.get_double(section, "comet");
    t.cossim_min = cfg.get_double(section, "cossim");
    return t;
}

/// Default retention grid when the config declares no [grid.*] rows.
inline std::vector<ThresholdSet> default_grid() {
    return {
        ThresholdSet{30.0, 0.7, 0.8},
        ThresholdSet{35.0, 0.75, 0.85},
        ThresholdSet{40.0, 0.8, 0.9},
    };
}

inline PipelineConfig pipeline_config_from(const Config& cfg) {
    PipelineConfig pc;
    pc.input = cfg.require("corpus", "input");
    pc.format = parse_corpus_format(cfg.get_or("corpus", "format", "pairs-jsonl"));
    pc.src_lang = cfg.get_or("corpus", "src_lang", "en");
    pc.tgt_lang = cfg.get_or("corpus", "tgt_lang", "de");

    if (auto v = cfg.get_u64("sample", "size")) pc.sample_size = static_cast<std::size_t>(*v);
    if (auto v = cfg.get_u64("sample", "seed")) pc.sample_seed = *v;

    if (cfg.has_section("prefix_rules")) {
        bool use_defaults = cfg.get_bool("prefix_rules", "use_defaults").value_or(true);
        PrefixRuleSet rules = use_defaults ? PrefixRuleSet::defaults() : PrefixRuleSet{};
        for (int i = 1;; ++i) {
            auto rule = cfg.get("prefix_rules", "rule." + std::to_string(i));
            if (!rule) break;
            rules.rules.push_back(*rule);
        }
        pc.prefix_rules = std::move(rules);
    }

    if (auto path = cfg.get("textproc", "abbrev_file")) pc.abbrevs = AbbrevSet::from_file(*path);
    if (auto v = cfg.get_bool("textproc", "normalize_sentences")) pc.normalize_sentences = *v;

    if (auto v = cfg.get_u64("bleu", "max_order")) pc.bleu.max_order = static_cast<int>(*v);
    if (auto s = cfg.get("bleu", "smoothing")) {
        if (*s == "none") pc.bleu.smoothing = BleuConfig::Smoothing::none;
        else if (*s == "exp") pc.bleu.smoothing = BleuConfig::Smoothing::exp;
        else if (*s == "floor") pc.bleu.smoothing = BleuConfig::Smoothing::floor;
        else throw ValidationError("unknown bleu smoothing '" + *s + "'");
    }
    if (auto v = cfg.get_double("bleu", "floor_value")) pc.bleu.floor_value = *v;
    if (auto v = cfg.get_bool("bleu", "lowercase")) pc.bleu.lowercase = *v;
    pc.bleu.validate();

    pc.thresholds = thresholds_from_section(cfg, "thresholds");

    std::vector<std::string> grid_sections = cfg.section_names("grid.");
    if (grid_sections.empty()) {
        pc.grid = default_grid();
    } else {
        for (const std::string& s : grid_sections) pc.grid.push_back(thresholds_from_section(cfg, s));
    }

    pc.out_dir = cfg.get_or("paths", "out", "out");
    pc.cache_dir = cfg.get_or("paths", "cache", "");

    using Role = ProviderSpec::Role;
    if (cfg.has_section("translator"))
        pc.translator = ProviderSpec::from_config(cfg, "translator", Role::translator, pc.src_lang,
                                                  pc.tgt_lang, pc.cache_dir);
    if (cfg.has_section("reference_mt"))
        pc.reference_mt = ProviderSpec::from_config(cfg, "reference_mt", Role::reference_mt,
                                                    pc.src_lang, pc.tgt_lang, pc.cache_dir);
    if (cfg.has_section("embedder"))
        pc.embedder = ProviderSpec::from_config(cfg, "embedder", Role::embedder, pc.src_lang,
                                                pc.tgt_lang, pc.cache_dir);
    if (cfg.has_section("scorer")) {
        pc.scorer = ProviderSpec::from_config(cfg, "scorer", Role::scorer, pc.src_lang, pc.tgt_lang,
                                              pc.cache_dir);
        pc.scorer_needs_reference = cfg.get_bool("scorer", "needs_reference").value_or(true);
    }

    if (cfg.has_section("manifest")) {
        ManifestConfig mc;
        if (auto p = cfg.get("manifest", "stage1")) mc.stage1_path = *p;
        if (auto v = cfg.get_u64("manifest", "stage1_count"))
            mc.stage1_count = static_cast<std::size_t>(*v);
        if (auto v = cfg.get_u64("manifest", "stage2_size"))
            mc.stage2_size = static_cast<std::size_t>(*v);
        if (auto v = cfg.get_u64("manifest", "stage2_seed")) mc.stage2_seed = *v;
        pc.manifest = mc;
    }

    pc.config_hash = cfg.hash();
    return pc;
}

// ---------------------------------------------------------------------------
// Provider-facing operations

/// Fills missing hypotheses from translator responses, stripping generated
/// prefixes. Pairs whose translation failed after retries are dropped and
/// tallied; translating nothing successfully is an error.
inline Corpus augment(const Corpus& corpus, TranslationClient& translator,
                      const PrefixRuleSet& rules, std::size_t* dropped = nullptr) {
    std::vector<std::pair<std::string, std::string>> todo;
    for (const DocumentPair& p : corpus.pairs)
        if (!p.hypothesis) todo.emplace_back(p.id, p.source.text);
    std::map<std::string, std::string> got = translator.translate(todo);
    if (!todo.empty() && got.empty())
        throw ProviderError("augment: all " + std::to_string(todo.size()) + " translations failed");
    Corpus out;
    out.provenance = corpus.provenance;
    std::size_t failed = 0;
    for (const DocumentPair& p : corpus.pairs) {
        if (p.hypothesis) {
            out.add(p);
            continue;
        }
        auto it = got.find(p.id);
        if (it == got.end()) {
            ++failed;
            continue;
        }
        DocumentPair np = p;
        np.tgt_lang = translator.spec().tgt_lang;
        np.hypothesis = Document{p.id, strip_prefixes(it->second, rules), translator.spec().tgt_lang};
        np.meta["provider:translator"] = translator.spec().name;
        np.validate();
        out.add(std::move(np));
    }
    if (dropped) *dropped = failed;
    return out;
}

/// Fills pseudo-references from a conventional MT provider, same failure
/// policy as augment.
inline Corpus add_references(const Corpus& corpus, TranslationClient& reference_mt,
                             std::size_t* dropped = nullptr) {
    std::vector<std::pair<std::string, std::string>> todo;
    for (const DocumentPair& p : corpus.pairs)
        if (!p.reference) todo.emplace_back(p.id, p.source.text);
    std::map<std::string, std::string> got = reference_mt.translate(todo);
    if (!todo.empty() && got.empty())
        throw ProviderError("add_references: all " + std::to_string(todo.size()) +
                            " translations failed");
    Corpus out;
    out.provenance = corpus.provenance;
    std::size_t failed = 0;
    for (const DocumentPair& p : corpus.pairs) {
        if (p.reference) {
            out.add(p);
            continue;
        }
        auto it = got.find(p.id);
        if (it == got.end()) {
            ++failed;
            continue;
        }
        DocumentPair np = p;
        if (np.tgt_lang.empty()) np.tgt_lang = reference_mt.spec().tgt_lang;
        np.reference = Document{p.id, it->second, np.tgt_lang};
        np.meta["provider:reference_mt"] = reference_mt.spec().name;
        np.validate();
        out.add(std::move(np));
    }
    if (dropped) *dropped = failed;
    return out;
}

// ---------------------------------------------------------------------------
// Two-stage fine-tuning manifest

struct StageManifest {
    std::optional<std::string> stage1_path;   // sentence-level dataset (external)
    std::optional<std::size_t> stage1_count;
    std::string stage2_path;                  // filtered document-level training file
    std::size_t stage2_count = 0;
    std::uint64_t stage2_seed = 0;
    ThresholdSet thresholds;                  // provenance of the filter that produced stage 2
    std::string config_hash;

    json to_json() const {
        json j;
        if (stage1_path) {
            j["stage1"]["path"] = *stage1_path;
            if (stage1_count) j["stage1"]["count"] = *stage1_count;
        } else {
            j["stage1"] = nullptr;
        }
        j["stage2"]["path"] = stage2_path;
        j["stage2"]["count"] = stage2_count;
        j["stage2"]["seed"] = stage2_seed;
        j["thresholds"]["bleu"] = thresholds.bleu_min ? json(*thresholds.bleu_min) : json(nullptr);
        j["thresholds"]["comet"] = thresholds.learned_min ? json(*thresholds.learned_min) : json(nullptr);
        j["thresholds"]["cossim"] = thresholds.cossim_min ? json(*thresholds.cossim_min) : json(nullptr);
        j["config"] = config_hash;
        return j;
    }
};

/// Samples the stage-2 training set from the filtered corpus, writes it as
/// pairs-jsonl, and emits the manifest. Line counts are re-verified against
/// declared counts at emission time.
inline StageManifest emit_manifest(const ManifestConfig& mc, const ScoredCorpus& filtered,
                                   const ThresholdSet& thresholds, const std::string& config_hash,
                                   const std::filesystem::path& out_dir) {
    if (mc.stage2_size > filtered.corpus.size())
        throw ValidationError("manifest stage2 size " + std::to_string(mc.stage2_size) +
                              " exceeds filtered corpus size " +
                              std::to_string(filtered.corpus.size()));
    Corpus stage2 = sample(filtered.corpus, mc.stage2_size, mc.stage2_seed);
    const std::filesystem::path stage2_path = out_dir / "stage2.jsonl";
    write_corpus(stage2, stage2_path);

    StageManifest m;
    m.stage2_path = "stage2.jsonl";   // relative to the manifest's directory
    m.stage2_count = stage2.size();
    m.stage2_seed = mc.stage2_seed;
    m.thresholds = thresholds;
    m.config_hash = config_hash;

    const std::size_t written = count_lines(stage2_path);
    if (written != m.stage2_count)
        throw ValidationError("manifest stage2 line count " + std::to_string(written) +
                              " != declared " + std::to_string(m.stage2_count));

    if (mc.stage1_path) {
        if (!std::filesystem::exists(*mc.stage1_path))
            throw ValidationError("manifest stage1 dataset missing: " + mc.stage1_path->string());
        const std::size_t lines = count_lines(*mc.stage1_path);
        if (mc.stage1_count && *mc.stage1_count != lines)
            throw ValidationError("manifest stage1 line count " + std::to_string(lines) +
                                  " != declared " + std::to_string(*mc.stage1_count));
        m.stage1_path = mc.stage1_path->string();
        m.stage1_count = lines;
    }

    atomic_write(out_dir / "manifest.json", m.to_json().dump(2) + "\n");
    return m;
}

// ---------------------------------------------------------------------------
// Run state (stage completion markers)

struct RunState {
    std::string config_hash;
    std::map<std::string, json> stages;

    static RunState load(const std::filesystem::path& path, const std::string& expected_hash) {
        RunState st;
        st.config_hash = expected_hash;
        if (!std::filesystem::exists(path)) return st;
        json j;
        try {
            j = json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error&) {
            return st;   // unreadable state: start over
        }
        if (j.value("config", std::string()) != expected_hash) return st;   // config changed
        if (j.contains("stages") && j["stages"].is_object())
            for (const auto& [k, v] : j["stages"].items()) st.stages[k] = v;
        return st;
    }

    void save(const std::filesystem::path& path) const {
        json j;
        j["config"] = config_hash;
        j["stages"] = json::object();
        for (const auto& [k, v] : stages) j["stages"][k] = v;
        atomic_write(path, j.dump(2) + "\n");
    }

    bool done(const std::string& stage, const std::filesystem::path& out_dir,
              const std::vector<std::string>& outputs) const {
        if (!stages.count(stage)) return false;
        for (const std::string& f : outputs)
            if (!std::filesystem::exists(out_dir / f)) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Full pipeline

struct RunSummary {
    std::size_t converted = 0, convert_skipped = 0;
    std::size_t sampled = 0;
    std::size_t augmented = 0, augment_dropped = 0;
    std::size_t with_refs = 0, refs_dropped = 0;
    std::size_t scored = 0, score_incomplete = 0;
    std::size_t filtered = 0, discarded = 0;
    std::string config_hash;

    std::string to_text() const {
        std::string s;
        s += "config            " + config_hash + "\n";
        s += "converted         " + std::to_string(converted) + " (skipped " +
             std::to_string(convert_skipped) + ")\n";
        s += "sampled           " + std::to_string(sampled) + "\n";
        s += "augmented         " + std::to_string(augmented) + " (dropped " +
             std::to_string(augment_dropped) + ")\n";
        s += "with_refs         " + std::to_string(with_refs) + " (dropped " +
             std::to_string(refs_dropped) + ")\n";
        s += "scored            " + std::to_string(scored) + " (incomplete " +
             std::to_string(score_incomplete) + ")\n";
        s += "filtered          " + std::to_string(filtered) + " (discarded " +
             std::to_string(discarded) + ")\n";
        return s;
    }
};

/// Scores all three metrics. Pairs that fail a provider after retries keep
/// absent fields and are tallied; they conservatively fail every threshold.
inline ScoredCorpus score_all(Corpus corpus, const PipelineConfig& pc, WireScorer& scorer,
                              EmbeddingProvider& embedder, std::size_t* incomplete = nullptr) {
    ScoredCorpus sc = score_bleu(std::move(corpus), pc.bleu);

    ExternalScorerSpec ext;
    ext.needs_reference = pc.scorer_needs_reference;
    std::size_t learned_failures = 0;
    ScoredCorpus learned = score_external(sc.corpus, ext, scorer, &learned_failures);
    for (auto& [id, m] : learned.scores)
        if (m.learned) sc.scores[id].learned = m.learned;

    std::size_t embed_failures = 0;
    for (const DocumentPair& p : sc.corpus.pairs) {
        try {
            double v = labse_cossim(p, embedder, pc.embed_options());
            MetricScores& m = sc.scores[p.id];
            m.cossim = v;
            m.validate(p.id);
        } catch (const ProviderError&) {
            ++embed_failures;   // absent cossim conservatively fails thresholds
        }
    }
    if (embed_failures == sc.corpus.size() && !sc.corpus.empty())
        throw ProviderError("score: all " + std::to_string(embed_failures) +
                            " embedding computations failed");

    if (incomplete) {
        *incomplete = 0;
        for (const DocumentPair& p : sc.corpus.pairs)
            if (!sc.at(p.id).complete()) ++*incomplete;
    }
    return sc;
}

/// convert -> sample -> augment -> refs -> score -> filter -> stats ->
/// manifest, each stage resumable: a completed stage with intact outputs and
/// an unchanged config hash is a no-op, and provider responses are served
/// from the cache. Artifacts are written atomically.
inline RunSummary run_pipeline(const PipelineConfig& pc, std::ostream& log = std::cerr) {
    namespace fs = std::filesystem;
    fs::create_directories(pc.out_dir);
    const fs::path state_path = pc.out_dir / "run_state.json";
    RunState state = RunState::load(state_path, pc.config_hash);
    RunSummary summary;
    summary.config_hash = pc.config_hash;

    auto stage = [&](const std::string& name, const std::vector<std::string>& outputs,
                     auto&& body) {
        if (state.done(name, pc.out_dir, outputs)) {
            log << "[" << name << "] up to date\n";
            return;
        }
        log << "[" << name << "] running\n";
        try {
            body();
        } catch (...) {
            state.save(state_path);   // keep completed markers for resume
            throw;
        }
        state.stages[name] = json{{"outputs", outputs}};
        state.save(state_path);
    };

    // convert
    stage("convert", {"converted.jsonl"}, [&] {
        std::size_t skipped = 0;
        Corpus c = load_corpus(pc.input, pc.format, pc.src_lang, &skipped);
        for (DocumentPair& p : c.pairs) p.meta["config"] = pc.config_hash;
        write_corpus(c, pc.out_dir / "converted.jsonl");
        state.stages["convert_meta"] = json{{"skipped", skipped}};
        if (skipped) log << "[convert] skipped " << skipped << " empty records\n";
    });
    Corpus corpus = load_corpus(pc.out_dir / "converted.jsonl", CorpusFormat::pairs_jsonl);
    summary.converted = corpus.size();
    if (auto it = state.stages.find("convert_meta"); it != state.stages.end())
        summary.convert_skipped = it->second.value("skipped", std::size_t{0});

    // sample
    if (pc.sample_size) {
        stage("sample", {"sampled.jsonl"}, [&] {
            Corpus s = sample(corpus, *pc.sample_size, pc.sample_seed);
            write_corpus(s, pc.out_dir / "sampled.jsonl");
        });
        corpus = load_corpus(pc.out_dir / "sampled.jsonl", CorpusFormat::pairs_jsonl);
    }
    summary.sampled = corpus.size();

    // augment
    if (!pc.translator) throw ValidationError("pipeline run requires a [translator] provider");
    JsonlCache translator_cache = pc.translator->cache_file.empty()
                                      ? JsonlCache()
                                      : JsonlCache(pc.translator->cache_file);
    stage("augment", {"augmented.jsonl"}, [&] {
        TranslationClient client(*pc.translator, &translator_cache);
        std::size_t dropped = 0;
        Corpus a = augment(corpus, client, pc.prefix_rules, &dropped);
        write_corpus(a, pc.out_dir / "augmented.jsonl");
        state.stages["augment_meta"] = json{{"dropped", dropped}};
    });
    corpus = load_corpus(pc.out_dir / "augmented.jsonl", CorpusFormat::pairs_jsonl);
    summary.augmented = corpus.size();
    if (auto it = state.stages.find("augment_meta"); it != state.stages.end())
        summary.augment_dropped = it->second.value("dropped", std::size_t{0});

    // refs
    if (!pc.reference_mt) throw ValidationError("pipeline run requires a [reference_mt] provider");
    JsonlCache refs_cache = pc.reference_mt->cache_file.empty()
                                ? JsonlCache()
                                : JsonlCache(pc.reference_mt->cache_file);
    stage("refs", {"with_refs.jsonl"}, [&] {
        TranslationClient client(*pc.reference_mt, &refs_cache);
        std::size_t dropped = 0;
        Corpus r = add_references(corpus, client, &dropped);
        write_corpus(r, pc.out_dir / "with_refs.jsonl");
        state.stages["refs_meta"] = json{{"dropped", dropped}};
    });
    corpus = load_corpus(pc.out_dir / "with_refs.jsonl", CorpusFormat::pairs_jsonl);
    summary.with_refs = corpus.size();
    if (auto it = state.stages.find("refs_meta"); it != state.stages.end())
        summary.refs_dropped = it->second.value("dropped", std::size_t{0});

    // score
    if (!pc.embedder || !pc.scorer)
        throw ValidationError("pipeline run requires [embedder] and [scorer] providers");
    JsonlCache embed_cache = pc.embedder->cache_file.empty() ? JsonlCache()
                                                             : JsonlCache(pc.embedder->cache_file);
    JsonlCache score_cache = pc.scorer->cache_file.empty() ? JsonlCache()
                                                           : JsonlCache(pc.scorer->cache_file);
    stage("score", {"scores.jsonl"}, [&] {
        WireScorer scorer(*pc.scorer, &score_cache);
        WireEmbeddingProvider embedder(*pc.embedder, &embed_cache);
        std::size_t incomplete = 0;
        ScoredCorpus sc = score_all(corpus, pc, scorer, embedder, &incomplete);
        atomic_write(pc.out_dir / "scores.jsonl", scores_to_jsonl(sc, pc.config_hash));
        state.stages["score_meta"] = json{{"incomplete", incomplete}};
    });
    ScoredCorpus scored = attach_scores(corpus, pc.out_dir / "scores.jsonl");
    summary.scored = scored.corpus.size();
    if (auto it = state.stages.find("score_meta"); it != state.stages.end())
        summary.score_incomplete = it->second.value("incomplete", std::size_t{0});

    // filter + retention
    if (!pc.thresholds.any())
        throw ValidationError("pipeline run requires at least one bound in [thresholds]");
    stage("filter", {"filtered.jsonl", "retention.tsv", "retention.txt"}, [&] {
        // Retention accounting needs complete scores; pairs with provider
        // failures are excluded here and already tallied as incomplete.
        ScoredCorpus complete;
        complete.corpus.provenance = scored.corpus.provenance;
        for (const DocumentPair& p : scored.corpus.pairs) {
            if (scored.at(p.id).complete()) {
                complete.corpus.add(p);
                complete.scores[p.id] = scored.at(p.id);
            }
        }
        RetentionReport report = retention_table(complete, pc.grid);
        atomic_write(pc.out_dir / "retention.tsv",
                     "# config " + pc.config_hash + "\n" + retention_to_tsv(report));
        atomic_write(pc.out_dir / "retention.txt",
                     "# config " + pc.config_hash + "\n" + retention_to_text(report));
        ScoredCorpus filtered = filter_corpus(complete, pc.thresholds);
        if (filtered.corpus.empty()) log << "[filter] warning: no pairs passed the thresholds\n";
        write_corpus(filtered.corpus, pc.out_dir / "filtered.jsonl");
        write_scores(filtered, pc.out_dir / "filtered_scores.jsonl", pc.config_hash);
    });
    ScoredCorpus filtered = attach_scores(
        load_corpus(pc.out_dir / "filtered.jsonl", CorpusFormat::pairs_jsonl),
        pc.out_dir / "filtered_scores.jsonl");
    summary.filtered = filtered.corpus.size();
    summary.discarded = summary.scored - summary.filtered;

    // stats
    stage("stats", {"stats.txt"}, [&] {
        std::string s = "# config " + pc.config_hash + "\n";
        s += "token counts (tok:13a)\n";
        auto row = [&](const std::string& label, const Corpus& c) {
            std::size_t miss = 0;
            std::size_t src = count_tokens(c, Side::source, &miss);
            std::size_t hyp = count_tokens(c, Side::hypothesis, &miss);
            std::size_t ref = count_tokens(c, Side::reference, &miss);
            s += label + "  pairs=" + std::to_string(c.size()) + " source=" + std::to_string(src) +
                 " hypothesis=" + std::to_string(hyp) + " reference=" + std::to_string(ref) + "\n";
        };
        row("scored  ", scored.corpus);
        row("filtered", filtered.corpus);
        atomic_write(pc.out_dir / "stats.txt", s);
    });

    // manifest
    if (pc.manifest) {
        stage("manifest", {"stage2.jsonl", "manifest.json"}, [&] {
            emit_manifest(*pc.manifest, filtered, pc.thresholds, pc.config_hash, pc.out_dir);
        });
    }

    atomic_write(pc.out_dir / "run_summary.txt", summary.to_text());
    return summary;
}

} // namespace docaug
