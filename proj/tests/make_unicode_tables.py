#!/usr/bin/env python3
"""Regenerates include/docaug/unicode_data.hpp from Python's unicodedata.

Canonical decompositions, combining classes, primary composites and
uppercase-letter ranges. Hangul syllables are excluded (handled
algorithmically at runtime). Composition pairs are derived by checking
normalize('NFC', a+b) == c per candidate, which bakes in the composition
exclusions without maintaining the exclusion list by hand.
"""
import os
import sys
import unicodedata

SBASE, LCOUNT, VCOUNT, TCOUNT = 0xAC00, 19, 21, 28
SCOUNT = LCOUNT * VCOUNT * TCOUNT

OUT = os.path.join(os.path.dirname(__file__), "..", "include", "docaug", "unicode_data.hpp")


def main():
    decomp = {}
    ccc = {}
    lu_ranges = []

    for cp in range(0x110000):
        ch = chr(cp)
        c = unicodedata.combining(ch)
        if c:
            ccc[cp] = c
        if SBASE <= cp < SBASE + SCOUNT:
            continue
        d = unicodedata.decomposition(ch)
        if d and not d.startswith('<'):
            parts = [int(x, 16) for x in d.split()]
            assert 1 <= len(parts) <= 2, (cp, parts)
            decomp[cp] = (parts[0], parts[1] if len(parts) == 2 else 0)

    comp = {}
    for cp, (a, b) in decomp.items():
        if b and unicodedata.normalize('NFC', chr(a) + chr(b)) == chr(cp):
            comp[(a, b)] = cp

    start = prev = None
    for cp in range(0x110000):
        if unicodedata.category(chr(cp)) == 'Lu':
            if start is None:
                start = cp
            prev = cp
        elif start is not None:
            lu_ranges.append((start, prev))
            start = None
    if start is not None:
        lu_ranges.append((start, prev))

    # 1:1 lowercase mappings (multi-char full mappings are skipped)
    lower_map = []
    for cp in range(0x110000):
        if 0xD800 <= cp <= 0xDFFF:
            continue
        low = chr(cp).lower()
        if len(low) == 1 and ord(low) != cp:
            lower_map.append((cp, ord(low)))

    out = []
    out.append("// Generated Unicode data tables (UnicodeData %s): canonical decompositions,"
               % unicodedata.unidata_version)
    out.append("// combining classes, primary composites, and uppercase-letter ranges.")
    out.append("// Regenerate with tests/make_unicode_tables.py; do not edit by hand.")
    out.append("#pragma once")
    out.append("")
    out.append("#include <cstdint>")
    out.append("#include <cstddef>")
    out.append("")
    out.append("namespace docaug::unidata {")
    out.append("")
    out.append("struct DecompEntry { char32_t cp; char32_t first; char32_t second; };")
    out.append("struct CccEntry { char32_t cp; std::uint8_t ccc; };")
    out.append("struct CompEntry { char32_t first; char32_t second; char32_t composed; };")
    out.append("struct Range { char32_t lo; char32_t hi; };")
    out.append("struct LowerEntry { char32_t cp; char32_t lower; };")
    out.append("")

    def emit(name, typ, rows, fmt):
        out.append(f"inline constexpr {typ} {name}[] = {{")
        line = []
        for r in rows:
            line.append(fmt(r))
            if len(line) == 4:
                out.append("    " + " ".join(line))
                line = []
        if line:
            out.append("    " + " ".join(line))
        out.append("};")
        out.append(f"inline constexpr std::size_t {name}_len = sizeof({name}) / sizeof({name}[0]);")
        out.append("")

    emit("kDecomp", "DecompEntry", sorted(decomp.items()),
         lambda kv: "{0x%X,0x%X,0x%X}," % (kv[0], kv[1][0], kv[1][1]))
    emit("kCcc", "CccEntry", sorted(ccc.items()),
         lambda kv: "{0x%X,%d}," % (kv[0], kv[1]))
    emit("kComp", "CompEntry", sorted(comp.items()),
         lambda kv: "{0x%X,0x%X,0x%X}," % (kv[0][0], kv[0][1], kv[1]))
    emit("kUppercase", "Range", lu_ranges,
         lambda r: "{0x%X,0x%X}," % r)
    emit("kLower", "LowerEntry", lower_map,
         lambda kv: "{0x%X,0x%X}," % kv)

    out.append("} // namespace docaug::unidata")
    out.append("")
    with open(OUT, "w") as f:
        f.write("\n".join(out))
    print(f"decomp={len(decomp)} ccc={len(ccc)} comp={len(comp)} lu_ranges={len(lu_ranges)}",
          file=sys.stderr)


if __name__ == "__main__":
    main()
