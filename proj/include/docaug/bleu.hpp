#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "docaug/errors.hpp"
#include "docaug/textproc.hpp"

namespace docaug {

struct BleuConfig {
    enum class Smoothing { none, exp, floor };

    int max_order = 4;
    Smoothing smoothing = Smoothing::exp;
    double floor_value = 0.1;
    bool lowercase = false;

    void validate() const {
        if (max_order < 1 || max_order > 9)
            throw ValidationError("bleu max_order must be in [1,9], got " + std::to_string(max_order));
        if (floor_value <= 0) throw ValidationError("bleu floor smoothing value must be > 0");
    }

    std::string signature() const {
        std::string smooth = smoothing == Smoothing::none ? "none"
                             : smoothing == Smoothing::exp ? "exp"
                                                           : "floor";
        return std::string("case:") + (lowercase ? "lc" : "mixed") + "|tok:13a|smooth:" + smooth +
               "|order:" + std::to_string(max_order);
    }
};

struct BleuScore {
    double score = 0.0;                // 0..100
    std::vector<double> precisions;    // clipped n-gram precisions, fractions in [0,1]
    double brevity_penalty = 0.0;      // 1 when hyp_len >= ref_len; 0 for empty hypothesis
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
};

/// Multiset of contiguous n-grams; total multiplicity max(0, len - n + 1).
inline std::unordered_map<std::string, std::int64_t> ngram_counts(const TokenSequence& tokens, int n) {
    if (n < 1) throw ValidationError("ngram order must be >= 1");
    std::unordered_map<std::string, std::int64_t> counts;
    const auto& t = tokens.tokens;
    if (t.size() < static_cast<std::size_t>(n)) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= t.size(); ++i) {
        std::string key;
        for (int k = 0; k < n; ++k) {
            if (k) key.push_back('\x1f');   // unit separator; cannot occur inside a token
            key += t[i + static_cast<std::size_t>(k)];
        }
        ++counts[key];
    }
    return counts;
}

/// exp(1 - ref/hyp) when the hypothesis is shorter, else 1; empty hypothesis
/// gives 0 by convention.
inline double brevity_penalty(std::size_t hyp_len, std::size_t ref_len) {
    if (ref_len == 0) throw ValidationError("brevity penalty needs ref_len >= 1");
    if (hyp_len == 0) return 0.0;
    if (hyp_len >= ref_len) return 1.0;
    return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
}

/// Summable per-segment match statistics (micro-average convention: sum
/// stats over segments, then compute precisions once).
struct BleuStats {
    std::vector<std::int64_t> correct;   // clipped matches per order
    std::vector<std::int64_t> total;     // hypothesis n-gram counts per order
    std::int64_t hyp_len = 0;
    std::int64_t ref_len = 0;

    explicit BleuStats(int max_order = 4)
        : correct(static_cast<std::size_t>(max_order), 0), total(static_cast<std::size_t>(max_order), 0) {}

    BleuStats& operator+=(const BleuStats& o) {
        if (o.correct.size() != correct.size()) throw ValidationError("mismatched bleu stat orders");
        for (std::size_t i = 0; i < correct.size(); ++i) {
            correct[i] += o.correct[i];
            total[i] += o.total[i];
        }
        hyp_len += o.hyp_len;
        ref_len += o.ref_len;
        return *this;
    }
};

namespace detail_bleu {

inline TokenSequence lowered(const TokenSequence& t) {
    TokenSequence out = t;
    for (std::string& tok : out.tokens)
        for (char& c : tok)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

} // namespace detail_bleu

inline BleuStats bleu_stats(const TokenSequence& hyp_in, const TokenSequence& ref_in,
                            const BleuConfig& cfg) {
    cfg.validate();
    if (ref_in.empty()) throw ValidationError("bleu: empty reference");
    const TokenSequence hyp = cfg.lowercase ? detail_bleu::lowered(hyp_in) : hyp_in;
    const TokenSequence ref = cfg.lowercase ? detail_bleu::lowered(ref_in) : ref_in;
    BleuStats st(cfg.max_order);
    st.hyp_len = static_cast<std::int64_t>(hyp.size());
    st.ref_len = static_cast<std::int64_t>(ref.size());
    for (int n = 1; n <= cfg.max_order; ++n) {
        auto hyp_counts = ngram_counts(hyp, n);
        if (hyp_counts.empty()) continue;
        auto ref_counts = ngram_counts(ref, n);
        std::int64_t total = 0, correct = 0;
        for (const auto& [gram, cnt] : hyp_counts) {
            total += cnt;
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) correct += std::min(cnt, it->second);
        }
        st.total[static_cast<std::size_t>(n - 1)] = total;
        st.correct[static_cast<std::size_t>(n - 1)] = correct;
    }
    return st;
}

/// Precisions, smoothing and brevity penalty from summed statistics. When no
/// order has a single match the score is exactly 0 (reference behaviour);
/// otherwise exp smoothing substitutes 1/(2^k * total) for the k-th zero
/// precision, and orders the hypothesis is too short for are skipped while
/// the geometric mean keeps dividing by max_order.
inline BleuScore score_from_stats(const BleuStats& st, const BleuConfig& cfg) {
    cfg.validate();
    const int max_order = cfg.max_order;
    BleuScore out;
    out.precisions.assign(static_cast<std::size_t>(max_order), 0.0);
    out.hyp_len = static_cast<std::size_t>(st.hyp_len);
    out.ref_len = static_cast<std::size_t>(st.ref_len);
    out.brevity_penalty = brevity_penalty(out.hyp_len, out.ref_len);

    bool any_correct = false;
    for (std::int64_t c : st.correct) any_correct = any_correct || c > 0;
    if (!any_correct) {
        out.score = 0.0;
        return out;
    }

    double smooth_mult = 1.0;
    bool unsmoothed_zero = false;
    for (int n = 1; n <= max_order; ++n) {
        const std::size_t i = static_cast<std::size_t>(n - 1);
        if (st.total[i] == 0) break;
        if (st.correct[i] == 0) {
            if (cfg.smoothing == BleuConfig::Smoothing::exp) {
                smooth_mult *= 2.0;
                out.precisions[i] = 1.0 / (smooth_mult * static_cast<double>(st.total[i]));
            } else if (cfg.smoothing == BleuConfig::Smoothing::floor) {
                out.precisions[i] = cfg.floor_value / static_cast<double>(st.total[i]);
            } else {
                unsmoothed_zero = true;   // classic BLEU: any zero precision zeroes the score
            }
        } else {
            out.precisions[i] = static_cast<double>(st.correct[i]) / static_cast<double>(st.total[i]);
        }
    }
    if (unsmoothed_zero) {
        out.score = 0.0;
        return out;
    }

    double log_sum = 0.0;
    for (double p : out.precisions)
        if (p > 0) log_sum += std::log(p);
    out.score = 100.0 * out.brevity_penalty * std::exp(log_sum / max_order);
    return out;
}

/// BLEU of one document scored as a single segment (the pipeline has no
/// sentence alignment, so the whole document is one "sentence").
inline BleuScore document_bleu(const TokenSequence& hyp, const TokenSequence& ref,
                               const BleuConfig& cfg = {}) {
    return score_from_stats(bleu_stats(hyp, ref, cfg), cfg);
}

/// Micro-averaged corpus BLEU: statistics summed over pairs before computing
/// precisions — not the mean of per-pair scores.
inline BleuScore corpus_bleu(const std::vector<std::pair<TokenSequence, TokenSequence>>& pairs,
                             const BleuConfig& cfg = {}) {
    cfg.validate();
    if (pairs.empty()) throw ValidationError("corpus_bleu: empty pair list");
    BleuStats sum(cfg.max_order);
    for (const auto& [hyp, ref] : pairs) sum += bleu_stats(hyp, ref, cfg);
    return score_from_stats(sum, cfg);
}

} // namespace docaug
