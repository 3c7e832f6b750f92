#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docaug/bleu.hpp"
#include "docaug/corpus.hpp"
#include "docaug/errors.hpp"
#include "docaug/io.hpp"
#include "docaug/textproc.hpp"

namespace docaug {

/// The three per-pair quality scores the filter grid operates on. Absent
/// means "not scored" and conservatively fails any threshold on that metric.
struct MetricScores {
    std::optional<double> bleu;      // 0..100
    std::optional<double> learned;   // 0..1 (external learned metric)
    std::optional<double> cossim;    // -1..1

    void validate(const std::string& id) const {
        if (bleu && (*bleu < 0.0 || *bleu > 100.0))
            throw ValidationError("pair '" + id + "': bleu score " + std::to_string(*bleu) +
                                  " outside [0,100]");
        if (learned && (*learned < 0.0 || *learned > 1.0))
            throw ValidationError("pair '" + id + "': learned score " + std::to_string(*learned) +
                                  " outside [0,1]");
        if (cossim && (*cossim < -1.0 || *cossim > 1.0))
            throw ValidationError("pair '" + id + "': cosine similarity " + std::to_string(*cossim) +
                                  " outside [-1,1]");
    }

    bool complete() const { return bleu && learned && cossim; }
};

/// Corpus plus per-pair scores; every pair id has an entry (fields may be
/// absent). Immutable by convention once built.
struct ScoredCorpus {
    Corpus corpus;
    std::map<std::string, MetricScores> scores;

    static ScoredCorpus wrap(Corpus c) {
        ScoredCorpus sc;
        for (const DocumentPair& p : c.pairs) sc.scores[p.id] = MetricScores{};
        sc.corpus = std::move(c);
        return sc;
    }

    const MetricScores& at(const std::string& id) const {
        auto it = scores.find(id);
        if (it == scores.end()) throw ValidationError("no scores entry for pair '" + id + "'");
        return it->second;
    }
};

struct ExternalScorerSpec {
    std::string endpoint;          // "subprocess: cmd ..." or http URL
    bool needs_reference = true;   // reference-based learned metric
    int timeout_ms = 30000;
    int retries = 2;
    int in_flight = 8;
};

/// Attaches per-pair document BLEU (hypothesis vs pseudo-reference).
inline ScoredCorpus score_bleu(Corpus corpus, const BleuConfig& cfg = {}) {
    std::string missing;
    for (const DocumentPair& p : corpus.pairs) {
        if (!p.hypothesis || !p.reference) {
            if (!missing.empty()) missing += ", ";
            missing += p.id;
        }
    }
    if (!missing.empty())
        throw ValidationError("score_bleu: pairs missing hypothesis or reference: " + missing);
    ScoredCorpus sc = ScoredCorpus::wrap(std::move(corpus));
    for (const DocumentPair& p : sc.corpus.pairs) {
        BleuScore s = document_bleu(tokenize_13a(p.hypothesis->text),
                                    tokenize_13a(p.reference->text), cfg);
        sc.scores[p.id].bleu = s.score;
    }
    return sc;
}

struct ScoreRequest {
    std::string id;
    std::string src;
    std::string mt;
    std::optional<std::string> ref;
};

/// Delegates the learned metric to an external scorer. `client` maps a batch
/// of requests to id->score (missing ids = failures already retried by the
/// client). Out-of-range scores are errors naming the pair; missing ones are
/// recorded as absent and tallied.
template <typename ScorerClient>
ScoredCorpus score_external(Corpus corpus, const ExternalScorerSpec& spec, ScorerClient&& client,
                            std::size_t* failures = nullptr) {
    std::vector<ScoreRequest> requests;
    requests.reserve(corpus.size());
    for (const DocumentPair& p : corpus.pairs) {
        if (!p.hypothesis)
            throw ValidationError("score_external: pair '" + p.id + "' has no hypothesis");
        if (spec.needs_reference && !p.reference)
            throw ValidationError("score_external: pair '" + p.id +
                                  "' has no reference but the scorer is reference-based");
        ScoreRequest r;
        r.id = p.id;
        r.src = p.source.text;
        r.mt = p.hypothesis->text;
        if (p.reference) r.ref = p.reference->text;
        requests.push_back(std::move(r));
    }
    std::map<std::string, double> got = client(requests);
    ScoredCorpus sc = ScoredCorpus::wrap(std::move(corpus));
    std::size_t failed = 0;
    for (const DocumentPair& p : sc.corpus.pairs) {
        auto it = got.find(p.id);
        if (it == got.end()) {
            ++failed;
            continue;
        }
        if (it->second < 0.0 || it->second > 1.0)
            throw ValidationError("external scorer returned " + std::to_string(it->second) +
                                  " outside [0,1] for pair '" + p.id + "'");
        sc.scores[p.id].learned = it->second;
    }
    if (failures) *failures = failed;
    return sc;
}

// ---------------------------------------------------------------------------
// Score sidecar files: JSONL {"id", "bleu", "learned", "cossim"}

/// A non-empty config_hash is stamped onto every record; readers ignore it.
inline std::string scores_to_jsonl(const ScoredCorpus& sc, const std::string& config_hash = "") {
    std::string out;
    for (const DocumentPair& p : sc.corpus.pairs) {
        const MetricScores& m = sc.at(p.id);
        json obj;
        obj["id"] = p.id;
        obj["bleu"] = m.bleu ? json(*m.bleu) : json(nullptr);
        obj["learned"] = m.learned ? json(*m.learned) : json(nullptr);
        obj["cossim"] = m.cossim ? json(*m.cossim) : json(nullptr);
        if (!config_hash.empty()) obj["config"] = config_hash;
        out += obj.dump();
        out.push_back('\n');
    }
    return out;
}

inline void write_scores(const ScoredCorpus& sc, const std::filesystem::path& path,
                         const std::string& config_hash = "") {
    atomic_write(path, scores_to_jsonl(sc, config_hash));
}

/// Merges a score sidecar into the corpus, field-wise; later sidecars
/// override earlier values per field. Unknown ids are errors.
inline ScoredCorpus attach_scores(ScoredCorpus sc, const std::filesystem::path& sidecar) {
    for_each_jsonl(sidecar, [&](std::size_t lineno, const json& obj) {
        if (!obj.contains("id") || !obj["id"].is_string())
            throw ValidationError(sidecar.string() + ":" + std::to_string(lineno) +
                                  ": score record missing id");
        const std::string id = obj["id"].get<std::string>();
        auto it = sc.scores.find(id);
        if (it == sc.scores.end())
            throw ValidationError(sidecar.string() + ":" + std::to_string(lineno) +
                                  ": unknown pair id '" + id + "'");
        auto set = [&](const char* key, std::optional<double>& slot) {
            if (auto f = obj.find(key); f != obj.end() && !f->is_null()) {
                if (!f->is_number())
                    throw ValidationError(sidecar.string() + ":" + std::to_string(lineno) +
                                          ": field '" + key + "' must be a number or null");
                slot = f->get<double>();
            }
        };
        set("bleu", it->second.bleu);
        set("learned", it->second.learned);
        set("cossim", it->second.cossim);
        it->second.validate(id);
    });
    return sc;
}

inline ScoredCorpus attach_scores(Corpus corpus, const std::filesystem::path& sidecar) {
    return attach_scores(ScoredCorpus::wrap(std::move(corpus)), sidecar);
}

} // namespace docaug
