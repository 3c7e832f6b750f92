// Deterministic provider stub speaking the line-delimited JSON wire
// protocols (translator / reference MT / embedder / scorer). Used by the
// test suite and the README quickstart; every response is a pure function
// of the request, so pipeline runs against it are reproducible.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

using json = nlohmann::ordered_json;

namespace {

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

// Pseudo-translation: deterministic per-token mapping that preserves leading
// capitalization (so sentence structure survives). The reference variant
// diverges on a hashed subset of tokens so hypothesis/reference overlap is
// high but not total, giving mid-range BLEU on fixtures.
std::string translate_tokens(const std::string& text, bool reference_variant) {
    std::vector<std::string> tokens = split_ws(text);
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        const std::string& t = tokens[i];
        if (reference_variant && fnv1a64(t) % 5 == 0) {
            out += "Qq" + t;
        } else {
            bool upper = !t.empty() && t[0] >= 'A' && t[0] <= 'Z';
            out += (upper ? "Zz" : "zz") + t;
        }
    }
    return out;
}

std::vector<double> embed_text(const std::string& text, int dim) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    if (text.size() < 3) {
        v[fnv1a64(text) % static_cast<std::uint64_t>(dim)] += 1.0;
        return v;
    }
    for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
        std::uint64_t h = fnv1a64(text.substr(i, 3));
        v[h % static_cast<std::uint64_t>(dim)] += 1.0;
    }
    return v;
}

double jaccard(const std::string& a, const std::string& b) {
    std::vector<std::string> ta = split_ws(a), tb = split_ws(b);
    std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const std::string& t : sa) inter += sb.count(t);
    std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic mock provider for the docaug wire protocols"};
    std::string mode;
    int dim = 8;
    std::string prefix;
    long fail_after = -1;
    int delay_ms = 0;
    std::vector<std::string> omit_ids;
    std::vector<std::string> error_ids;
    app.add_option("--mode", mode, "translator|reference|embedder|scorer")->required();
    app.add_option("--dim", dim, "embedding dimension");
    app.add_option("--prefix", prefix, "preamble prepended to every translation");
    app.add_option("--fail-after", fail_after, "exit(1) after N responses");
    app.add_option("--delay-ms", delay_ms, "sleep before each response");
    app.add_option("--omit-id", omit_ids, "never respond to these request ids");
    app.add_option("--error-id", error_ids, "respond with an error for these ids");
    CLI11_PARSE(app, argc, argv);

    if (const char* log = std::getenv("MOCK_SPAWN_LOG")) {
        std::ofstream f(log, std::ios::app);
        f << "spawn " << mode << "\n";
    }
    // env variant keeps the pipeline config (and thus its hash) unchanged
    // while simulating a provider crash mid-run; MOCK_FAIL_MODE restricts the
    // crash to one provider role
    if (fail_after < 0) {
        const char* fm = std::getenv("MOCK_FAIL_MODE");
        if (const char* fa = std::getenv("MOCK_FAIL_AFTER")) {
            if (!fm || mode == fm) fail_after = std::atol(fa);
        }
    }

    if (fail_after == 0) return 1;   // refuses to serve at all

    std::set<std::string> omit(omit_ids.begin(), omit_ids.end());
    std::set<std::string> errs(error_ids.begin(), error_ids.end());
    long responses = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        json req;
        try {
            req = json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            std::cout << json{{"error", "bad request"}}.dump() << "\n" << std::flush;
            continue;
        }
        const std::string id = req.value("id", std::string());
        if (omit.count(id)) continue;
        if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        json resp;
        resp["id"] = id;
        if (errs.count(id)) {
            resp["error"] = "injected failure";
        } else if (mode == "translator" || mode == "reference") {
            std::string text = req.value("text", std::string());
            std::string tr = translate_tokens(text, mode == "reference");
            if (!prefix.empty()) tr = prefix + "\n" + tr;
            resp["translation"] = tr;
        } else if (mode == "embedder") {
            json vecs = json::array();
            for (const auto& t : req.value("texts", json::array()))
                vecs.push_back(embed_text(t.get<std::string>(), dim));
            resp["vectors"] = std::move(vecs);
        } else if (mode == "scorer") {
            std::string mt = req.value("mt", std::string());
            std::string other = req.contains("ref") && !req["ref"].is_null()
                                    ? req["ref"].get<std::string>()
                                    : req.value("src", std::string());
            resp["score"] = jaccard(mt, other);
        } else {
            resp["error"] = "unknown mode";
        }
        std::cout << resp.dump() << "\n" << std::flush;
        ++responses;
        if (fail_after >= 0 && responses >= fail_after) return 1;
    }
    return 0;
}
