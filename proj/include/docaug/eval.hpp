#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "docaug/bleu.hpp"
#include "docaug/errors.hpp"
#include "docaug/io.hpp"
#include "docaug/scores.hpp"

namespace docaug {

/// Geometric mean in log space. Undefined (error) for non-positive values.
inline double geometric_mean(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("geometric_mean: empty value list");
    double log_sum = 0.0;
    for (double v : values) {
        if (v <= 0.0)
            throw ValidationError("geometric_mean undefined for non-positive value " +
                                  std::to_string(v));
        log_sum += std::log(v);
    }
    return std::exp(log_sum / static_cast<double>(values.size()));
}

/// Corpus-level aggregates: micro-averaged BLEU, arithmetic means of the
/// learned and cosine scores, and their geometric mean on native scales
/// (BLEU 0-100, others 0-1, no rescaling).
struct EvalReport {
    double bleu = 0.0;
    double learned_mean = 0.0;
    double cossim_mean = 0.0;
    double geo_mean = 0.0;
    std::size_t n_instances = 0;
    std::string footprint;   // metric configuration: BLEU signature, provider ids
};

inline EvalReport evaluate(const ScoredCorpus& sc, const BleuConfig& cfg = {},
                           const std::string& provider_footprint = "") {
    if (sc.corpus.empty()) throw ValidationError("evaluate: empty corpus");
    std::string missing;
    for (const DocumentPair& p : sc.corpus.pairs) {
        const MetricScores& m = sc.at(p.id);
        if (!p.hypothesis || !p.reference || !m.learned || !m.cossim) {
            if (!missing.empty()) missing += ", ";
            missing += p.id;
        }
    }
    if (!missing.empty())
        throw ValidationError("evaluate: pairs missing hypothesis/reference/scores: " + missing);

    std::vector<std::pair<TokenSequence, TokenSequence>> pairs;
    pairs.reserve(sc.corpus.size());
    double learned_sum = 0.0, cossim_sum = 0.0;
    for (const DocumentPair& p : sc.corpus.pairs) {
        pairs.emplace_back(tokenize_13a(p.hypothesis->text), tokenize_13a(p.reference->text));
        const MetricScores& m = sc.at(p.id);
        learned_sum += *m.learned;
        cossim_sum += *m.cossim;
    }
    EvalReport r;
    r.n_instances = sc.corpus.size();
    r.bleu = corpus_bleu(pairs, cfg).score;
    r.learned_mean = learned_sum / static_cast<double>(r.n_instances);
    r.cossim_mean = cossim_sum / static_cast<double>(r.n_instances);
    r.geo_mean = geometric_mean({r.bleu, r.learned_mean, r.cossim_mean});
    r.footprint = "bleu[" + cfg.signature() + "|corpus:micro]";
    if (!provider_footprint.empty()) r.footprint += "|" + provider_footprint;
    return r;
}

namespace detail_eval {

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

} // namespace detail_eval

inline json eval_to_json(const EvalReport& r) {
    json obj;
    obj["n_instances"] = r.n_instances;
    obj["bleu"] = detail_eval::fixed(r.bleu, 2);
    obj["learned"] = detail_eval::fixed(r.learned_mean, 3);
    obj["cossim"] = detail_eval::fixed(r.cossim_mean, 3);
    obj["geometric_mean"] = detail_eval::fixed(r.geo_mean, 3);
    obj["footprint"] = r.footprint;
    return obj;
}

/// Metric-per-row table; BLEU to 2 decimals, the rest to 3.
inline std::string eval_to_text(const EvalReport& r) {
    using detail_eval::fixed;
    std::string out;
    out += "Metric          Value\n";
    out += "BLEU            " + fixed(r.bleu, 2) + "\n";
    out += "COMET           " + fixed(r.learned_mean, 3) + "\n";
    out += "CosSim          " + fixed(r.cossim_mean, 3) + "\n";
    out += "Geometric Mean  " + fixed(r.geo_mean, 3) + "\n";
    out += "Instances       " + std::to_string(r.n_instances) + "\n";
    out += "Config          " + r.footprint + "\n";
    return out;
}

} // namespace docaug
