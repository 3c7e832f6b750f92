#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "docaug/corpus.hpp"
#include "docaug/errors.hpp"
#include "docaug/textproc.hpp"

namespace docaug {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }

    void validate() const {
        if (values.empty()) throw ValidationError("embedding vector with dim 0");
        for (double v : values)
            if (!std::isfinite(v)) throw ValidationError("embedding vector with non-finite entry");
    }

    double norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }
};

/// Contract for sentence-embedding backends (wire-protocol clients, caches,
/// test mocks). Must be deterministic within a session: same text, same
/// vector.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    /// One vector per input text, order-preserving.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string id() const = 0;
};

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw ValidationError("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                              std::to_string(b.dim()) + ")");
    if (a.dim() == 0) throw ValidationError("cosine: empty vectors");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw ValidationError("cosine: zero vector");
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

struct EmbedOptions {
    bool normalize_sentences = true;   // L2-normalize each sentence vector before averaging
    AbbrevSet abbrevs = AbbrevSet::defaults();
};

/// Sentence-split the document, embed each sentence, L2-normalize, and
/// average. The mean is deliberately not re-normalized; cosine is invariant
/// to the final scale. This sidesteps the encoder's input-length limit.
inline EmbeddingVector embed_document(const std::string& text, EmbeddingProvider& provider,
                                      const EmbedOptions& opts = {}) {
    SentenceList sentences = split_sentences(text, opts.abbrevs);
    if (sentences.sentences.empty())
        throw ValidationError("embed_document: no sentences in input text");
    std::vector<EmbeddingVector> vecs = provider.embed(sentences.sentences);
    if (vecs.size() != sentences.sentences.size())
        throw ProviderError("embedding provider '" + provider.id() + "' returned " +
                            std::to_string(vecs.size()) + " vectors for " +
                            std::to_string(sentences.sentences.size()) + " texts");
    const std::size_t dim = vecs.front().dim();
    EmbeddingVector mean;
    mean.values.assign(dim, 0.0);
    for (EmbeddingVector& v : vecs) {
        v.validate();
        if (v.dim() != dim)
            throw ProviderError("embedding provider '" + provider.id() +
                                "' returned inconsistent dimensions");
        double scale = 1.0;
        if (opts.normalize_sentences) {
            const double n = v.norm();
            if (n == 0.0) throw ProviderError("embedding provider returned a zero vector");
            scale = 1.0 / n;
        }
        for (std::size_t i = 0; i < dim; ++i) mean.values[i] += v.values[i] * scale;
    }
    const double inv = 1.0 / static_cast<double>(vecs.size());
    for (double& v : mean.values) v *= inv;
    return mean;
}

/// Reference-free document similarity: cosine of the sentence-mean embeddings
/// of source and hypothesis.
inline double labse_cossim(const DocumentPair& pair, EmbeddingProvider& provider,
                           const EmbedOptions& opts = {}) {
    if (!pair.hypothesis)
        throw ValidationError("pair '" + pair.id + "': cosine similarity needs a hypothesis");
    try {
        EmbeddingVector src = embed_document(pair.source.text, provider, opts);
        EmbeddingVector hyp = embed_document(pair.hypothesis->text, provider, opts);
        return cosine(src, hyp);
    } catch (const ProviderError& e) {
        throw ProviderError("pair '" + pair.id + "': " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError("pair '" + pair.id + "': " + e.what());
    }
}

} // namespace docaug
