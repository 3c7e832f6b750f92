#pragma once

#include <array>
#include <cctype>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "docaug/corpus.hpp"
#include "docaug/errors.hpp"
#include "docaug/unicode.hpp"

namespace docaug {

/// Ordered tokens; no token contains internal whitespace.
struct TokenSequence {
    std::vector<std::string> tokens;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
    std::string joined() const {
        std::string out;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) out.push_back(' ');
            out += tokens[i];
        }
        return out;
    }
};

struct SentenceList {
    std::vector<std::string> sentences;
};

namespace detail13a {

inline bool in_punct_class(unsigned char c) {
    // ASCII ranges {-~, [-`, space-&, (-+, :-@ plus /; periods, commas and
    // dashes are handled by the digit-context passes below.
    return (c >= 0x7B && c <= 0x7E) || (c >= 0x5B && c <= 0x60) || (c >= 0x20 && c <= 0x26) ||
           (c >= 0x28 && c <= 0x2B) || (c >= 0x3A && c <= 0x40) || c == 0x2F;
}

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

// The four passes below reproduce the mteval-v13a substitutions with
// left-to-right non-overlapping match semantics, byte-exact against the
// reference regexes (all pattern literals are ASCII; multi-byte UTF-8
// sequences pass through untouched).

inline std::string pad_punct(const std::string& s) {
    std::string out;
    out.reserve(s.size() * 2);
    for (unsigned char c : s) {
        if (in_punct_class(c)) {
            out.push_back(' ');
            out.push_back(static_cast<char>(c));
            out.push_back(' ');
        } else {
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

// ([^0-9])([.,]) -> "\1 \2 "
inline std::string split_period_comma_after(const std::string& s) {
    std::string out;
    out.reserve(s.size() * 2);
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (i + 1 < s.size() && !is_digit(c) &&
            (s[i + 1] == '.' || s[i + 1] == ',')) {
            out.push_back(static_cast<char>(c));
            out.push_back(' ');
            out.push_back(s[i + 1]);
            out.push_back(' ');
            i += 2;
        } else {
            out.push_back(static_cast<char>(c));
            ++i;
        }
    }
    return out;
}

// ([.,])([^0-9]) -> " \1 \2"
inline std::string split_period_comma_before(const std::string& s) {
    std::string out;
    out.reserve(s.size() * 2);
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (i + 1 < s.size() && (c == '.' || c == ',') &&
            !is_digit(static_cast<unsigned char>(s[i + 1]))) {
            out.push_back(' ');
            out.push_back(static_cast<char>(c));
            out.push_back(' ');
            out.push_back(s[i + 1]);
            i += 2;
        } else {
            out.push_back(static_cast<char>(c));
            ++i;
        }
    }
    return out;
}

// ([0-9])(-) -> "\1 - "
inline std::string split_digit_dash(const std::string& s) {
    std::string out;
    out.reserve(s.size() * 2);
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (i + 1 < s.size() && is_digit(c) && s[i + 1] == '-') {
            out.push_back(static_cast<char>(c));
            out.push_back(' ');
            out.push_back('-');
            out.push_back(' ');
            i += 2;
        } else {
            out.push_back(static_cast<char>(c));
            ++i;
        }
    }
    return out;
}

// str.split() equivalent: split on Unicode whitespace, drop empty fields.
inline std::vector<std::string> py_split(const std::string& s) {
    std::vector<std::string> out;
    std::vector<char32_t> cps = uni::decode_utf8(s);
    std::string cur;
    for (char32_t cp : cps) {
        if (uni::is_py_space(cp)) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            uni::append_utf8(cur, cp);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

} // namespace detail13a

/// mteval-v13a tokenization (the sacreBLEU default). Input is NFC-normalized
/// first so n-gram identity is stable across providers.
inline TokenSequence tokenize_13a(std::string_view text) {
    std::string line = uni::nfc(text);
    detail13a::replace_all(line, "<skipped>", "");
    detail13a::replace_all(line, "-\n", "");
    detail13a::replace_all(line, "\n", " ");
    if (line.find('&') != std::string::npos) {
        detail13a::replace_all(line, "&quot;", "\"");
        detail13a::replace_all(line, "&amp;", "&");
        detail13a::replace_all(line, "&lt;", "<");
        detail13a::replace_all(line, "&gt;", ">");
    }
    line = " " + line + " ";
    line = detail13a::pad_punct(line);
    line = detail13a::split_period_comma_after(line);
    line = detail13a::split_period_comma_before(line);
    line = detail13a::split_digit_dash(line);
    return TokenSequence{detail13a::py_split(line)};
}

/// Abbreviations that suppress sentence breaks after a period.
class AbbrevSet {
  public:
    AbbrevSet() = default;

    static AbbrevSet defaults() {
        AbbrevSet a;
        for (const char* s : {"Mr.", "Mrs.", "Dr.", "U.S.", "z.B.", "bzw."}) a.add(s);
        return a;
    }

    /// Plain-text file, one abbreviation per line, '#' comments.
    static AbbrevSet from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open abbreviation list: " + path);
        AbbrevSet a;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::size_t b = line.find_first_not_of(" \t");
            if (b == std::string::npos || line[b] == '#') continue;
            std::size_t e = line.find_last_not_of(" \t");
            a.add(line.substr(b, e - b + 1));
        }
        return a;
    }

    void add(std::string_view abbrev) { folded_.insert(fold(abbrev)); }
    bool contains(std::string_view token) const { return folded_.count(fold(token)) > 0; }
    bool empty() const { return folded_.empty(); }

  private:
    static std::string fold(std::string_view s) {
        std::string out(s);
        for (char& c : out)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        return out;
    }
    std::set<std::string> folded_;
};

namespace detail_split {

inline bool is_closer(char32_t cp) {
    switch (cp) {
        case U')': case U']': case U'}': case U'"': case U'\'':
        case 0x201D: case 0x2019: case 0x201C: case 0x00BB: case 0x00AB:
        case 0x203A: case 0x2039:
            return true;
        default:
            return false;
    }
}

inline bool is_terminal(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?'; }

inline std::string trim_segment(const std::vector<char32_t>& cps, std::size_t b, std::size_t e) {
    while (b < e && uni::is_py_space(cps[b])) ++b;
    while (e > b && uni::is_py_space(cps[e - 1])) --e;
    std::string out;
    for (std::size_t i = b; i < e; ++i) uni::append_utf8(out, cps[i]);
    return out;
}

// The whitespace-delimited token ending at the period at index i.
inline std::string token_ending_at(const std::vector<char32_t>& cps, std::size_t i) {
    std::size_t s = i;
    while (s > 0 && !uni::is_py_space(cps[s - 1])) --s;
    std::string out;
    for (std::size_t k = s; k <= i; ++k) uni::append_utf8(out, cps[k]);
    return out;
}

} // namespace detail_split

/// Splits on hard newlines and on terminal punctuation (with optional closing
/// quotes/brackets) followed by whitespace and an uppercase letter or digit.
/// Abbreviations never split. Drops empty segments; trims whitespace at
/// segment edges, so concatenation equals the input modulo whitespace.
inline SentenceList split_sentences(std::string_view text, const AbbrevSet& abbrevs = AbbrevSet::defaults()) {
    using namespace detail_split;
    SentenceList out;
    std::vector<char32_t> cps = uni::decode_utf8(text);
    const std::size_t n = cps.size();
    std::size_t start = 0;

    auto flush = [&](std::size_t end_excl, std::size_t next_start) {
        std::string seg = trim_segment(cps, start, end_excl);
        if (!seg.empty()) out.sentences.push_back(std::move(seg));
        start = next_start;
    };

    for (std::size_t i = 0; i < n; ++i) {
        if (cps[i] == U'\n') {
            flush(i, i + 1);
            continue;
        }
        if (!is_terminal(cps[i])) continue;
        std::size_t j = i + 1;
        while (j < n && is_closer(cps[j])) ++j;
        std::size_t k = j;
        while (k < n && cps[k] != U'\n' && uni::is_py_space(cps[k])) ++k;
        if (k == j || k >= n) continue;                       // no whitespace after terminator
        if (!uni::is_uppercase(cps[k]) && !(cps[k] >= U'0' && cps[k] <= U'9')) continue;
        if (cps[i] == U'.' && abbrevs.contains(token_ending_at(cps, i))) continue;
        flush(j, k);
        i = k - 1;
    }
    flush(n, n);
    return out;
}

enum class Side { source, hypothesis, reference };

inline const char* side_name(Side s) {
    switch (s) {
        case Side::source: return "source";
        case Side::hypothesis: return "hypothesis";
        case Side::reference: return "reference";
    }
    return "?";
}

/// Sum of 13a token counts over one side of the corpus. Pairs lacking the
/// side count as 0 and are tallied into `missing` when provided.
inline std::size_t count_tokens(const Corpus& corpus, Side side, std::size_t* missing = nullptr) {
    std::size_t total = 0, absent = 0;
    for (const DocumentPair& p : corpus.pairs) {
        const std::string* text = nullptr;
        switch (side) {
            case Side::source: text = &p.source.text; break;
            case Side::hypothesis: text = p.hypothesis ? &p.hypothesis->text : nullptr; break;
            case Side::reference: text = p.reference ? &p.reference->text : nullptr; break;
        }
        if (!text) {
            ++absent;
            continue;
        }
        total += tokenize_13a(*text).size();
    }
    if (missing) *missing = absent;
    return total;
}

} // namespace docaug
