#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "docaug/errors.hpp"
#include "docaug/io.hpp"
#include "docaug/unicode.hpp"

namespace docaug {

struct Document {
    std::string id;
    std::string text;   // UTF-8 body
    std::string lang;   // BCP-47-style tag, carried but not validated
};

/// One source document plus its hypothesis translation and optional
/// pseudo-reference; the atomic unit of the pipeline.
struct DocumentPair {
    std::string id;
    Document source;
    std::optional<Document> hypothesis;
    std::optional<Document> reference;
    std::string tgt_lang;                       // target tag when hypothesis/reference absent
    std::map<std::string, std::string> meta;    // provenance: provider names etc.

    void validate() const {
        if (id.empty()) throw ValidationError("pair with empty id");
        if (hypothesis && hypothesis->lang == source.lang)
            throw ValidationError("pair '" + id + "': source and hypothesis share language tag '" +
                                  source.lang + "'");
        if (reference && hypothesis && reference->lang != hypothesis->lang)
            throw ValidationError("pair '" + id + "': reference language '" + reference->lang +
                                  "' != hypothesis language '" + hypothesis->lang + "'");
    }
};

/// Ordered pair collection; ids unique, input order preserved.
struct Corpus {
    std::vector<DocumentPair> pairs;
    std::string provenance;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }

    void add(DocumentPair pair) {
        pair.validate();
        if (!ids_.insert(pair.id).second)
            throw ValidationError("duplicate pair id '" + pair.id + "'");
        pairs.push_back(std::move(pair));
    }

    bool contains(const std::string& id) const { return ids_.count(id) > 0; }

  private:
    std::unordered_set<std::string> ids_;
};

// ---------------------------------------------------------------------------
// Prefix stripping

/// Ordered case-insensitive patterns stripped from the start of hypotheses
/// (machine-generated preambles like "Hier ist die Übersetzung ins Deutsche:").
struct PrefixRuleSet {
    std::vector<std::string> rules;

    static PrefixRuleSet defaults() {
        return PrefixRuleSet{{
            "Hier ist die Übersetzung ins Deutsche:",
            "Hier ist die Übersetzung:",
            "Here is the translation into German:",
            "Here is the translation:",
        }};
    }
};

namespace detail_prefix {

// Codepoint-wise case-insensitive match of `pat` at text[pos]; returns the
// number of text bytes matched, 0 on mismatch.
inline std::size_t imatch_at(std::string_view text, std::size_t pos, std::string_view pat) {
    std::size_t ti = pos, pi = 0;
    while (pi < pat.size()) {
        if (ti >= text.size()) return 0;
        char32_t a = uni::to_lower(uni::decode_one(text, ti));
        char32_t b = uni::to_lower(uni::decode_one(pat, pi));
        if (a != b) return 0;
    }
    return ti - pos;
}

inline bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

} // namespace detail_prefix

/// Removes the longest matching rule at the start (after leading whitespace),
/// plus any following colon/whitespace, repeating until no rule matches, so a
/// second application is always a no-op. Returns the text unchanged when
/// nothing matches.
inline std::string strip_prefixes(std::string_view text, const PrefixRuleSet& rules) {
    using namespace detail_prefix;
    std::string_view cur = text;
    bool stripped_any = false;
    for (;;) {
        std::size_t start = 0;
        while (start < cur.size() && is_ws(cur[start])) ++start;
        std::size_t best = 0;
        for (const std::string& rule : rules.rules) {
            if (rule.empty()) continue;
            std::size_t matched = imatch_at(cur, start, rule);
            if (matched > best) best = matched;
        }
        if (best == 0) break;
        std::size_t pos = start + best;
        if (pos < cur.size() && cur[pos] == ':') ++pos;
        while (pos < cur.size() && is_ws(cur[pos])) ++pos;
        cur = cur.substr(pos);
        stripped_any = true;
    }
    return stripped_any ? std::string(cur) : std::string(text);
}

// ---------------------------------------------------------------------------
// JSONL ingestion / emission

enum class CorpusFormat { pairs_jsonl, summarization_jsonl };

inline CorpusFormat parse_corpus_format(std::string_view s) {
    if (s == "pairs-jsonl") return CorpusFormat::pairs_jsonl;
    if (s == "summarization-jsonl") return CorpusFormat::summarization_jsonl;
    throw ValidationError("unknown corpus format '" + std::string(s) +
                          "' (expected pairs-jsonl or summarization-jsonl)");
}

struct SummarizationRecord {
    std::string id;
    std::string article;
    std::string highlights;
};

namespace detail_corpus {

inline std::string require_string(const json& obj, const char* key, std::size_t lineno) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw ValidationError("line " + std::to_string(lineno) + ": missing or non-string field '" +
                              key + "'");
    return it->get<std::string>();
}

inline std::optional<std::string> optional_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be string or null");
    return it->get<std::string>();
}

inline bool whitespace_only(std::string_view s) {
    for (char c : s)
        if (!detail_prefix::is_ws(c)) return false;
    return true;
}

} // namespace detail_corpus

/// Parses one pairs-jsonl record. Unknown top-level fields are folded into
/// meta so a round-trip loses nothing.
inline DocumentPair pair_from_json(const json& obj, std::size_t lineno) {
    using namespace detail_corpus;
    DocumentPair p;
    p.id = require_string(obj, "id", lineno);
    p.source.id = p.id;
    p.source.text = require_string(obj, "src", lineno);
    if (whitespace_only(p.source.text))
        throw ValidationError("line " + std::to_string(lineno) + ": pair '" + p.id +
                              "': empty source text");
    p.source.lang = obj.value("src_lang", std::string());
    auto hyp = optional_string(obj, "hyp");
    auto hyp_lang = optional_string(obj, "hyp_lang");
    if (hyp_lang) p.tgt_lang = *hyp_lang;
    if (hyp) {
        p.hypothesis = Document{p.id, *hyp, p.tgt_lang};
    }
    if (auto ref = optional_string(obj, "ref")) {
        p.reference = Document{p.id, *ref, p.tgt_lang};
    }
    if (auto it = obj.find("meta"); it != obj.end() && it->is_object()) {
        for (const auto& [k, v] : it->items())
            p.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    static const std::unordered_set<std::string> known = {"id",  "src", "src_lang", "hyp",
                                                          "hyp_lang", "ref", "meta"};
    for (const auto& [k, v] : obj.items()) {
        if (known.count(k) || p.meta.count(k)) continue;
        p.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return p;
}

inline json pair_to_json(const DocumentPair& p) {
    json obj;
    obj["id"] = p.id;
    obj["src"] = p.source.text;
    obj["src_lang"] = p.source.lang;
    obj["hyp"] = p.hypothesis ? json(p.hypothesis->text) : json(nullptr);
    std::string tgt = p.hypothesis ? p.hypothesis->lang : p.tgt_lang;
    obj["hyp_lang"] = tgt.empty() ? json(nullptr) : json(tgt);
    obj["ref"] = p.reference ? json(p.reference->text) : json(nullptr);
    obj["meta"] = json::object();
    for (const auto& [k, v] : p.meta) obj["meta"][k] = v;
    return obj;
}

/// Converts summarization records into source-only pairs: the article body
/// becomes the source document, the summary field is dropped. Empty articles
/// are skipped and tallied, not fatal.
inline Corpus convert_summarization(const std::vector<SummarizationRecord>& records,
                                    const std::string& src_lang = "en",
                                    std::size_t* skipped = nullptr) {
    Corpus corpus;
    std::size_t skip = 0;
    for (const SummarizationRecord& r : records) {
        if (detail_corpus::whitespace_only(r.article)) {
            ++skip;
            continue;
        }
        DocumentPair p;
        p.id = r.id;
        p.source = Document{r.id, r.article, src_lang};
        corpus.add(std::move(p));
    }
    if (skipped) *skipped = skip;
    return corpus;
}

inline std::vector<SummarizationRecord> load_summarization_records(const std::filesystem::path& path) {
    std::vector<SummarizationRecord> records;
    for_each_jsonl(path, [&](std::size_t lineno, const json& obj) {
        using namespace detail_corpus;
        SummarizationRecord r;
        r.id = require_string(obj, "id", lineno);
        r.article = require_string(obj, "article", lineno);
        r.highlights = obj.value("highlights", std::string());
        records.push_back(std::move(r));
    });
    return records;
}

/// Loads a corpus file. Errors carry the offending line number; duplicate ids
/// name the id. For summarization input, empty articles are skipped and
/// counted into `skipped`.
inline Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                          const std::string& src_lang = "en", std::size_t* skipped = nullptr) {
    Corpus corpus;
    corpus.provenance = path.string();
    std::size_t skip = 0;
    if (format == CorpusFormat::pairs_jsonl) {
        for_each_jsonl(path, [&](std::size_t lineno, const json& obj) {
            DocumentPair p = pair_from_json(obj, lineno);
            if (corpus.contains(p.id))
                throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                      ": duplicate pair id '" + p.id + "'");
            corpus.add(std::move(p));
        });
    } else {
        for_each_jsonl(path, [&](std::size_t lineno, const json& obj) {
            using namespace detail_corpus;
            std::string id = require_string(obj, "id", lineno);
            std::string article = require_string(obj, "article", lineno);
            if (whitespace_only(article)) {
                ++skip;
                return;
            }
            if (corpus.contains(id))
                throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                      ": duplicate pair id '" + id + "'");
            DocumentPair p;
            p.id = id;
            p.source = Document{id, article, src_lang};
            corpus.add(std::move(p));
        });
    }
    if (skipped) *skipped = skip;
    return corpus;
}

inline std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const DocumentPair& p : corpus.pairs) {
        out += pair_to_json(p).dump();
        out.push_back('\n');
    }
    return out;
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    atomic_write(path, corpus_to_jsonl(corpus));
}

// ---------------------------------------------------------------------------
// Deterministic sampling

namespace detail_sample {

/// Unbiased bounded draw via rejection; mt19937_64's sequence is fixed by the
/// standard, so results are identical across platforms (std::shuffle and
/// std::uniform_int_distribution are not).
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

} // namespace detail_sample

/// Picks the selected indices of a uniform without-replacement sample of n
/// out of total, sorted ascending. Partial Fisher-Yates over an index array.
inline std::vector<std::size_t> sample_indices(std::size_t total, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(total);
    for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n && total > 0; ++i) {
        std::size_t j = i + static_cast<std::size_t>(detail_sample::bounded(rng, total - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Uniform sample without replacement, deterministic in (seed, input order);
/// selected pairs keep their relative input order.
inline Corpus sample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    if (n > corpus.size())
        throw ValidationError("sample size " + std::to_string(n) + " exceeds corpus size " +
                              std::to_string(corpus.size()));
    Corpus out;
    out.provenance = corpus.provenance;
    for (std::size_t i : sample_indices(corpus.size(), n, seed)) out.add(corpus.pairs[i]);
    return out;
}

} // namespace docaug
