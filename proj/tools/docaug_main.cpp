// docaug: document-level MT data augmentation and filtering pipeline.
//
// Subcommands mirror the pipeline stages (convert, sample, augment, refs,
// score, filter, stats, eval, manifest) plus `run` for the whole chain with
// resumable per-stage state and cached provider traffic.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "docaug/config.hpp"
#include "docaug/eval.hpp"
#include "docaug/pipeline.hpp"

namespace fs = std::filesystem;
using namespace docaug;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> bleu_min, comet_min, cossim_min;
    std::optional<std::string> out, cache;
    std::string in;       // input file override for standalone stages
    std::string scores;   // score sidecar override
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "pipeline config file")->required();
    cmd->add_option("--seed", o.seed, "override sampling seeds");
    cmd->add_option("--bleu-min", o.bleu_min, "override BLEU threshold");
    cmd->add_option("--comet-min", o.comet_min, "override learned-metric threshold");
    cmd->add_option("--cossim-min", o.cossim_min, "override cosine-similarity threshold");
    cmd->add_option("--out", o.out, "output directory (overrides [paths] out)");
    cmd->add_option("--cache", o.cache, "cache directory (overrides [paths] cache)");
    cmd->add_option("--in", o.in, "input corpus file (overrides the stage default)");
    cmd->add_option("--scores", o.scores, "score sidecar file (overrides the stage default)");
}

PipelineConfig load_pipeline_config(const CommonOpts& o) {
    Config cfg = Config::load(o.config_path);
    PipelineConfig pc = pipeline_config_from(cfg);
    if (o.out) pc.out_dir = *o.out;
    if (o.cache) {
        pc.cache_dir = *o.cache;
        auto recache = [&](std::optional<ProviderSpec>& s, const char* name) {
            if (s) s->cache_file = pc.cache_dir / (std::string(name) + ".jsonl");
        };
        recache(pc.translator, "translator");
        recache(pc.reference_mt, "reference_mt");
        recache(pc.embedder, "embedder");
        recache(pc.scorer, "scorer");
    }
    if (o.seed) {
        pc.sample_seed = *o.seed;
        if (pc.manifest) pc.manifest->stage2_seed = *o.seed;
    }
    if (o.bleu_min) pc.thresholds.bleu_min = *o.bleu_min;
    if (o.comet_min) pc.thresholds.learned_min = *o.comet_min;
    if (o.cossim_min) pc.thresholds.cossim_min = *o.cossim_min;
    return pc;
}

fs::path default_in(const PipelineConfig& pc, std::initializer_list<const char*> candidates) {
    for (const char* c : candidates) {
        fs::path p = pc.out_dir / c;
        if (fs::exists(p)) return p;
    }
    throw ValidationError("no input corpus found under " + pc.out_dir.string() +
                          " (use --in to point at one)");
}

Corpus load_pairs(const PipelineConfig& pc, const CommonOpts& o,
                  std::initializer_list<const char*> candidates) {
    fs::path in = o.in.empty() ? default_in(pc, candidates) : fs::path(o.in);
    return load_corpus(in, CorpusFormat::pairs_jsonl);
}

int cmd_convert(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    std::size_t skipped = 0;
    fs::path in = o.in.empty() ? pc.input : fs::path(o.in);
    Corpus c = load_corpus(in, pc.format, pc.src_lang, &skipped);
    for (DocumentPair& p : c.pairs) p.meta["config"] = pc.config_hash;
    write_corpus(c, pc.out_dir / "converted.jsonl");
    std::cout << "converted " << c.size() << " pairs";
    if (skipped) std::cout << " (skipped " << skipped << " empty records)";
    std::cout << " -> " << (pc.out_dir / "converted.jsonl").string() << "\n";
    return 0;
}

int cmd_sample(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    if (!pc.sample_size) throw ValidationError("sampling requires [sample] size");
    Corpus c = load_pairs(pc, o, {"converted.jsonl"});
    Corpus s = sample(c, *pc.sample_size, pc.sample_seed);
    write_corpus(s, pc.out_dir / "sampled.jsonl");
    std::cout << "sampled " << s.size() << " of " << c.size() << " pairs (seed " << pc.sample_seed
              << ") -> " << (pc.out_dir / "sampled.jsonl").string() << "\n";
    return 0;
}

int cmd_augment(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    if (!pc.translator) throw ValidationError("augment requires a [translator] provider");
    Corpus c = load_pairs(pc, o, {"sampled.jsonl", "converted.jsonl"});
    JsonlCache cache = pc.translator->cache_file.empty() ? JsonlCache()
                                                         : JsonlCache(pc.translator->cache_file);
    TranslationClient client(*pc.translator, &cache);
    std::size_t dropped = 0;
    Corpus a = augment(c, client, pc.prefix_rules, &dropped);
    write_corpus(a, pc.out_dir / "augmented.jsonl");
    std::cout << "augmented " << a.size() << " pairs (dropped " << dropped << ") -> "
              << (pc.out_dir / "augmented.jsonl").string() << "\n";
    return 0;
}

int cmd_refs(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    if (!pc.reference_mt) throw ValidationError("refs requires a [reference_mt] provider");
    Corpus c = load_pairs(pc, o, {"augmented.jsonl"});
    JsonlCache cache = pc.reference_mt->cache_file.empty()
                           ? JsonlCache()
                           : JsonlCache(pc.reference_mt->cache_file);
    TranslationClient client(*pc.reference_mt, &cache);
    std::size_t dropped = 0;
    Corpus r = add_references(c, client, &dropped);
    write_corpus(r, pc.out_dir / "with_refs.jsonl");
    std::cout << "added references to " << r.size() << " pairs (dropped " << dropped << ") -> "
              << (pc.out_dir / "with_refs.jsonl").string() << "\n";
    return 0;
}

int cmd_score(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    if (!pc.embedder || !pc.scorer)
        throw ValidationError("score requires [embedder] and [scorer] providers");
    Corpus c = load_pairs(pc, o, {"with_refs.jsonl"});
    JsonlCache embed_cache = pc.embedder->cache_file.empty() ? JsonlCache()
                                                             : JsonlCache(pc.embedder->cache_file);
    JsonlCache score_cache = pc.scorer->cache_file.empty() ? JsonlCache()
                                                           : JsonlCache(pc.scorer->cache_file);
    WireScorer scorer(*pc.scorer, &score_cache);
    WireEmbeddingProvider embedder(*pc.embedder, &embed_cache);
    std::size_t incomplete = 0;
    ScoredCorpus sc = score_all(std::move(c), pc, scorer, embedder, &incomplete);
    atomic_write(pc.out_dir / "scores.jsonl", scores_to_jsonl(sc, pc.config_hash));
    std::cout << "scored " << sc.corpus.size() << " pairs (incomplete " << incomplete << ") -> "
              << (pc.out_dir / "scores.jsonl").string() << "\n";
    return 0;
}

int cmd_filter(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    Corpus c = load_pairs(pc, o, {"with_refs.jsonl"});
    fs::path sidecar = o.scores.empty() ? pc.out_dir / "scores.jsonl" : fs::path(o.scores);
    ScoredCorpus scored = attach_scores(std::move(c), sidecar);

    ScoredCorpus complete;
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
    std::cout << retention_to_text(report);

    if (!pc.thresholds.any())
        throw ValidationError("filter requires [thresholds] bounds or --*-min flags");
    ScoredCorpus filtered = filter_corpus(complete, pc.thresholds);
    write_corpus(filtered.corpus, pc.out_dir / "filtered.jsonl");
    write_scores(filtered, pc.out_dir / "filtered_scores.jsonl", pc.config_hash);
    std::cout << "filter " << pc.thresholds.describe() << ": kept " << filtered.corpus.size()
              << " of " << scored.corpus.size() << " -> "
              << (pc.out_dir / "filtered.jsonl").string() << "\n";
    return 0;
}

int cmd_stats(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    Corpus c = load_pairs(pc, o, {"with_refs.jsonl", "augmented.jsonl", "converted.jsonl"});
    std::size_t miss_src = 0, miss_hyp = 0, miss_ref = 0;
    std::cout << "token counts (tok:13a)\n";
    std::cout << "pairs      " << c.size() << "\n";
    std::cout << "source     " << count_tokens(c, Side::source, &miss_src) << "\n";
    std::cout << "hypothesis " << count_tokens(c, Side::hypothesis, &miss_hyp) << " (missing "
              << miss_hyp << ")\n";
    std::cout << "reference  " << count_tokens(c, Side::reference, &miss_ref) << " (missing "
              << miss_ref << ")\n";
    return 0;
}

int cmd_eval(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    Corpus c = load_pairs(pc, o, {"filtered.jsonl", "with_refs.jsonl"});
    fs::path sidecar = o.scores.empty()
                           ? (fs::exists(pc.out_dir / "filtered_scores.jsonl") && o.in.empty()
                                  ? pc.out_dir / "filtered_scores.jsonl"
                                  : pc.out_dir / "scores.jsonl")
                           : fs::path(o.scores);
    ScoredCorpus sc = attach_scores(std::move(c), sidecar);
    std::string providers;
    if (pc.scorer) providers += "scorer:" + pc.scorer->name;
    if (pc.embedder) providers += (providers.empty() ? "" : "|") + std::string("embedder:") +
                                  pc.embedder->name;
    EvalReport r = evaluate(sc, pc.bleu, providers);
    atomic_write(pc.out_dir / "eval.json", eval_to_json(r).dump(2) + "\n");
    atomic_write(pc.out_dir / "eval.txt", eval_to_text(r));
    std::cout << eval_to_text(r);
    return 0;
}

int cmd_manifest(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    if (!pc.manifest) throw ValidationError("manifest requires a [manifest] config section");
    Corpus c = load_pairs(pc, o, {"filtered.jsonl"});
    fs::path sidecar = o.scores.empty() ? pc.out_dir / "filtered_scores.jsonl" : fs::path(o.scores);
    ScoredCorpus filtered = fs::exists(sidecar) ? attach_scores(std::move(c), sidecar)
                                                : ScoredCorpus::wrap(std::move(c));
    StageManifest m = emit_manifest(*pc.manifest, filtered, pc.thresholds, pc.config_hash, pc.out_dir);
    std::cout << "manifest: stage2 " << m.stage2_count << " pairs (seed " << m.stage2_seed
              << ") -> " << (pc.out_dir / "manifest.json").string() << "\n";
    return 0;
}

int cmd_run(const CommonOpts& o) {
    PipelineConfig pc = load_pipeline_config(o);
    RunSummary s = run_pipeline(pc, std::cerr);
    std::cout << s.to_text();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"document-level MT data augmentation and filtering pipeline"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const CommonOpts&);
    };
    static const Sub subs[] = {
        {"convert", "ingest a corpus file into pairs-jsonl", cmd_convert},
        {"sample", "deterministic uniform sample of the converted corpus", cmd_sample},
        {"augment", "fill hypotheses from the translator provider", cmd_augment},
        {"refs", "fill pseudo-references from the MT provider", cmd_refs},
        {"score", "attach BLEU, learned-metric and cosine scores", cmd_score},
        {"filter", "apply thresholds and emit retention tables", cmd_filter},
        {"stats", "token counts per corpus side", cmd_stats},
        {"eval", "corpus-level metric aggregates and geometric mean", cmd_eval},
        {"manifest", "emit the two-stage fine-tuning manifest", cmd_manifest},
        {"run", "full pipeline with resumable stages", cmd_run},
    };

    CommonOpts opts;
    int (*selected)(const CommonOpts&) = nullptr;
    for (const Sub& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, opts);
        cmd->callback([&selected, &s] { selected = s.fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;   // bad usage is a validation error
    }
    try {
        return selected(opts);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
