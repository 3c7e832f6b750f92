#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "docaug/errors.hpp"
#include "docaug/scores.hpp"

namespace docaug {

/// Per-metric lower bounds; a pair passes iff every present bound is met
/// (inclusive >=). An absent score fails any present bound.
struct ThresholdSet {
    std::optional<double> bleu_min;
    std::optional<double> learned_min;
    std::optional<double> cossim_min;

    bool any() const { return bleu_min || learned_min || cossim_min; }

    std::string describe() const {
        std::string out;
        auto add = [&](const char* name, const std::optional<double>& v) {
            if (!v) return;
            if (!out.empty()) out += " ";
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%s>=%g", name, *v);
            out += buf;
        };
        add("bleu", bleu_min);
        add("comet", learned_min);
        add("cossim", cossim_min);
        return out.empty() ? "(none)" : out;
    }
};

inline bool passes(const MetricScores& scores, const ThresholdSet& t) {
    if (t.bleu_min && !(scores.bleu && *scores.bleu >= *t.bleu_min)) return false;
    if (t.learned_min && !(scores.learned && *scores.learned >= *t.learned_min)) return false;
    if (t.cossim_min && !(scores.cossim && *scores.cossim >= *t.cossim_min)) return false;
    return true;
}

/// Subset of pairs passing the thresholds, input order preserved, scores
/// carried along. An empty result is permitted.
inline ScoredCorpus filter_corpus(const ScoredCorpus& sc, const ThresholdSet& t) {
    if (!t.any()) throw ValidationError("filtering requires at least one threshold bound");
    ScoredCorpus out;
    out.corpus.provenance = sc.corpus.provenance;
    for (const DocumentPair& p : sc.corpus.pairs) {
        const MetricScores& m = sc.at(p.id);
        if (passes(m, t)) {
            out.corpus.add(p);
            out.scores[p.id] = m;
        }
    }
    return out;
}

/// count/total as a percentage, one decimal, half away from zero, computed in
/// exact integer arithmetic; exactly 100 renders "100%".
inline std::string format_percent(std::size_t count, std::size_t total) {
    if (total == 0) throw ValidationError("format_percent: total must be > 0");
    if (count > total) throw ValidationError("format_percent: count exceeds total");
    if (count == total) return "100%";
    const std::uint64_t tenths =
        (2000ULL * count + total) / (2ULL * total);   // round-half-away on count*1000/total
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10) + "%";
}

/// The seven metric combinations of a retention row, in report column order.
enum class MetricCombo { B = 0, C, L, BC, BL, CL, All };

inline constexpr std::array<MetricCombo, 7> kAllCombos = {
    MetricCombo::B,  MetricCombo::C,  MetricCombo::L, MetricCombo::BC,
    MetricCombo::BL, MetricCombo::CL, MetricCombo::All};

inline const char* combo_label(MetricCombo c) {
    switch (c) {
        case MetricCombo::B: return "BLEU";
        case MetricCombo::C: return "COMET";
        case MetricCombo::L: return "CosSim";
        case MetricCombo::BC: return "BLEU&COMET";
        case MetricCombo::BL: return "BLEU&CosSim";
        case MetricCombo::CL: return "COMET&CosSim";
        case MetricCombo::All: return "All";
    }
    return "?";
}

/// Restricts a full threshold row to one combination's bounds.
inline ThresholdSet combo_thresholds(const ThresholdSet& row, MetricCombo c) {
    ThresholdSet t;
    const bool b = c == MetricCombo::B || c == MetricCombo::BC || c == MetricCombo::BL ||
                   c == MetricCombo::All;
    const bool cm = c == MetricCombo::C || c == MetricCombo::BC || c == MetricCombo::CL ||
                    c == MetricCombo::All;
    const bool l = c == MetricCombo::L || c == MetricCombo::BL || c == MetricCombo::CL ||
                   c == MetricCombo::All;
    if (b) t.bleu_min = row.bleu_min;
    if (cm) t.learned_min = row.learned_min;
    if (l) t.cossim_min = row.cossim_min;
    return t;
}

struct RetentionCell {
    std::size_t count = 0;
    std::string percent;
};

struct RetentionRow {
    ThresholdSet thresholds;
    std::array<RetentionCell, 7> cells;   // indexed by MetricCombo
};

/// Counts/percentages retained per metric combination per threshold row.
struct RetentionReport {
    std::size_t total = 0;
    std::vector<RetentionRow> rows;
};

/// Grid accounting over a fully scored corpus; rows need all three bounds and
/// every pair needs all three scores.
inline RetentionReport retention_table(const ScoredCorpus& sc, const std::vector<ThresholdSet>& grid) {
    std::string incomplete;
    for (const DocumentPair& p : sc.corpus.pairs) {
        if (!sc.at(p.id).complete()) {
            if (!incomplete.empty()) incomplete += ", ";
            incomplete += p.id;
        }
    }
    if (!incomplete.empty())
        throw ValidationError("retention_table: pairs missing scores: " + incomplete);
    RetentionReport report;
    report.total = sc.corpus.size();
    if (report.total == 0) throw ValidationError("retention_table: empty corpus");
    for (const ThresholdSet& row : grid) {
        if (!row.bleu_min || !row.learned_min || !row.cossim_min)
            throw ValidationError("retention grid rows need all three bounds (got " +
                                  row.describe() + ")");
        RetentionRow r;
        r.thresholds = row;
        for (MetricCombo combo : kAllCombos) {
            const ThresholdSet t = combo_thresholds(row, combo);
            std::size_t count = 0;
            for (const DocumentPair& p : sc.corpus.pairs)
                if (passes(sc.at(p.id), t)) ++count;
            r.cells[static_cast<std::size_t>(combo)] =
                RetentionCell{count, format_percent(count, report.total)};
        }
        report.rows.push_back(std::move(r));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string retention_to_tsv(const RetentionReport& r) {
    std::string out = "thresholds\tNoFiltering";
    for (MetricCombo c : kAllCombos) {
        out += '\t';
        out += combo_label(c);
    }
    out += '\n';
    for (const RetentionRow& row : r.rows) {
        out += row.thresholds.describe();
        out += '\t' + std::to_string(r.total) + " (" + format_percent(r.total, r.total) + ")";
        for (MetricCombo c : kAllCombos) {
            const RetentionCell& cell = row.cells[static_cast<std::size_t>(c)];
            out += '\t' + std::to_string(cell.count) + " (" + cell.percent + ")";
        }
        out += '\n';
    }
    return out;
}

/// Aligned plain-text table: rows = threshold sets, columns = No Filtering
/// plus the seven combinations.
inline std::string retention_to_text(const RetentionReport& r) {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header = {"thresholds", "NoFiltering"};
    for (MetricCombo c : kAllCombos) header.push_back(combo_label(c));
    cells.push_back(header);
    for (const RetentionRow& row : r.rows) {
        std::vector<std::string> line;
        line.push_back(row.thresholds.describe());
        line.push_back(std::to_string(r.total) + " (" + format_percent(r.total, r.total) + ")");
        for (MetricCombo c : kAllCombos) {
            const RetentionCell& cell = row.cells[static_cast<std::size_t>(c)];
            line.push_back(std::to_string(cell.count) + " (" + cell.percent + ")");
        }
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> widths(cells[0].size(), 0);
    for (const auto& line : cells)
        for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());
    std::string out;
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            out += line[i];
            if (i + 1 < line.size()) out.append(widths[i] - line[i].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

} // namespace docaug
