#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "docaug/unicode_data.hpp"

namespace docaug::uni {

inline constexpr char32_t kReplacement = 0xFFFD;

// Hangul syllable composition constants (UAX #15).
inline constexpr char32_t kSBase = 0xAC00, kLBase = 0x1100, kVBase = 0x1161, kTBase = 0x11A7;
inline constexpr int kLCount = 19, kVCount = 21, kTCount = 28;
inline constexpr int kNCount = kVCount * kTCount;
inline constexpr int kSCount = kLCount * kNCount;

/// Decodes the codepoint starting at s[i], advancing i. Invalid sequences
/// yield U+FFFD and advance one byte.
inline char32_t decode_one(std::string_view s, std::size_t& i) {
    const std::size_t n = s.size();
    unsigned char b = static_cast<unsigned char>(s[i]);
    if (b < 0x80) {
        ++i;
        return b;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b & 0xE0) == 0xC0) { len = 2; cp = b & 0x1F; }
    else if ((b & 0xF0) == 0xE0) { len = 3; cp = b & 0x0F; }
    else if ((b & 0xF8) == 0xF0) { len = 4; cp = b & 0x07; }
    else { ++i; return kReplacement; }
    if (i + static_cast<std::size_t>(len) > n) { ++i; return kReplacement; }
    for (int k = 1; k < len; ++k) {
        unsigned char c = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((c & 0xC0) != 0x80) { ++i; return kReplacement; }
        cp = (cp << 6) | (c & 0x3F);
    }
    // reject overlong forms and surrogates
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
        ++i;
        return kReplacement;
    }
    i += static_cast<std::size_t>(len);
    return cp;
}

/// Decodes UTF-8; invalid sequences become U+FFFD (one per bad byte).
inline std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) out.push_back(decode_one(s, i));
    return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

inline int combining_class(char32_t cp) {
    const auto* begin = unidata::kCcc;
    const auto* end = unidata::kCcc + unidata::kCcc_len;
    auto it = std::lower_bound(begin, end, cp,
                               [](const unidata::CccEntry& e, char32_t c) { return e.cp < c; });
    return (it != end && it->cp == cp) ? it->ccc : 0;
}

inline const unidata::DecompEntry* find_decomp(char32_t cp) {
    const auto* begin = unidata::kDecomp;
    const auto* end = unidata::kDecomp + unidata::kDecomp_len;
    auto it = std::lower_bound(begin, end, cp,
                               [](const unidata::DecompEntry& e, char32_t c) { return e.cp < c; });
    return (it != end && it->cp == cp) ? &*it : nullptr;
}

inline char32_t compose_pair(char32_t a, char32_t b) {
    // Hangul L+V and LV+T compose algorithmically.
    if (a >= kLBase && a < kLBase + kLCount && b >= kVBase && b < kVBase + kVCount) {
        return kSBase + ((a - kLBase) * kVCount + (b - kVBase)) * kTCount;
    }
    if (a >= kSBase && a < kSBase + kSCount && (a - kSBase) % kTCount == 0 && b > kTBase &&
        b < kTBase + kTCount) {
        return a + (b - kTBase);
    }
    const auto* begin = unidata::kComp;
    const auto* end = unidata::kComp + unidata::kComp_len;
    auto it = std::lower_bound(begin, end, std::pair<char32_t, char32_t>{a, b},
                               [](const unidata::CompEntry& e, const std::pair<char32_t, char32_t>& k) {
                                   return e.first != k.first ? e.first < k.first : e.second < k.second;
                               });
    if (it != end && it->first == a && it->second == b) return it->composed;
    return 0;
}

inline void decompose_into(char32_t cp, std::vector<char32_t>& out) {
    if (cp >= kSBase && cp < kSBase + kSCount) {
        char32_t s = cp - kSBase;
        out.push_back(kLBase + s / kNCount);
        out.push_back(kVBase + (s % kNCount) / kTCount);
        char32_t t = s % kTCount;
        if (t) out.push_back(kTBase + t);
        return;
    }
    if (const auto* d = find_decomp(cp)) {
        decompose_into(d->first, out);
        if (d->second) decompose_into(d->second, out);
        return;
    }
    out.push_back(cp);
}

/// Canonical ordering: stable sort of nonzero-ccc runs by combining class.
inline void canonical_order(std::vector<char32_t>& cps) {
    for (std::size_t i = 1; i < cps.size(); ++i) {
        int cc = combining_class(cps[i]);
        if (cc == 0) continue;
        std::size_t j = i;
        while (j > 0 && combining_class(cps[j - 1]) > cc) {
            std::swap(cps[j - 1], cps[j]);
            --j;
        }
    }
}

/// Canonical composition (UAX #15): recombine with the last starter unless
/// blocked by an intervening mark of equal or higher combining class.
inline void compose_inplace(std::vector<char32_t>& cps) {
    if (cps.empty()) return;
    std::vector<char32_t> out;
    out.reserve(cps.size());
    out.push_back(cps[0]);
    std::ptrdiff_t starter = combining_class(cps[0]) == 0 ? 0 : -1;
    for (std::size_t i = 1; i < cps.size(); ++i) {
        char32_t c = cps[i];
        int cc = combining_class(c);
        if (starter >= 0) {
            bool adjacent = static_cast<std::ptrdiff_t>(out.size()) - 1 == starter;
            int prev_cc = adjacent ? -1 : combining_class(out.back());
            if (adjacent || prev_cc < cc) {
                if (char32_t composed = compose_pair(out[static_cast<std::size_t>(starter)], c)) {
                    out[static_cast<std::size_t>(starter)] = composed;
                    continue;
                }
            }
        }
        out.push_back(c);
        if (cc == 0) starter = static_cast<std::ptrdiff_t>(out.size()) - 1;
    }
    cps = std::move(out);
}

/// NFC-normalizes a UTF-8 string. Pure-ASCII input is returned unchanged.
inline std::string nfc(std::string_view s) {
    bool ascii = true;
    for (unsigned char c : s) {
        if (c >= 0x80) { ascii = false; break; }
    }
    if (ascii) return std::string(s);
    std::vector<char32_t> cps = decode_utf8(s);
    std::vector<char32_t> decomposed;
    decomposed.reserve(cps.size() + 8);
    for (char32_t cp : cps) decompose_into(cp, decomposed);
    canonical_order(decomposed);
    compose_inplace(decomposed);
    return encode_utf8(decomposed);
}

/// Simple 1:1 lowercase mapping (multi-character full mappings excluded).
inline char32_t to_lower(char32_t cp) {
    const auto* begin = unidata::kLower;
    const auto* end = unidata::kLower + unidata::kLower_len;
    auto it = std::lower_bound(begin, end, cp,
                               [](const unidata::LowerEntry& e, char32_t c) { return e.cp < c; });
    return (it != end && it->cp == cp) ? it->lower : cp;
}

/// Unicode uppercase letter (category Lu).
inline bool is_uppercase(char32_t cp) {
    const auto* begin = unidata::kUppercase;
    const auto* end = unidata::kUppercase + unidata::kUppercase_len;
    auto it = std::upper_bound(begin, end, cp,
                               [](char32_t c, const unidata::Range& r) { return c < r.lo; });
    return it != begin && cp <= (it - 1)->hi;
}

/// Whitespace as Python's str.split() sees it, so tokenization agrees with
/// the reference implementation on e.g. NBSP and ideographic space.
inline bool is_py_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x1C: case 0x1D: case 0x1E: case 0x1F:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

} // namespace docaug::uni
