#include <catch2/catch_amalgamated.hpp>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "docaug/io.hpp"

using namespace docaug;
namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int c = 0;
        path = fs::temp_directory_path() /
               ("docaug_cli_" + std::to_string(::getpid()) + "_" + std::to_string(c++));
        fs::create_directories(path);
        fs::copy_file(std::string(DOCAUG_BIN_DIR) + "/mock_provider", path / "mock_provider",
                      fs::copy_options::overwrite_existing);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_docaug(const fs::path& cwd, const std::vector<std::string>& args) {
    pid_t pid = ::fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        if (::chdir(cwd.c_str()) != 0) _exit(97);
        int devnull = ::open("/dev/null", O_WRONLY);
        ::dup2(devnull, STDOUT_FILENO);
        ::dup2(devnull, STDERR_FILENO);
        std::string bin = std::string(DOCAUG_BIN_DIR) + "/docaug";
        std::vector<char*> argv;
        argv.push_back(const_cast<char*>("docaug"));
        for (const std::string& a : args) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        ::execv(bin.c_str(), argv.data());
        _exit(98);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_inputs(const fs::path& dir, const std::string& translator_extra = "") {
    {
        std::ofstream f(dir / "input.jsonl");
        for (int i = 0; i < 10; ++i) {
            njson rec;
            rec["id"] = "doc" + std::to_string(i);
            rec["article"] = "The quick fox number " + std::to_string(i) +
                             " jumped. A lazy dog slept nearby. Birds watched from the fence.";
            rec["highlights"] = "summary";
            f << rec.dump() << "\n";
        }
    }
    std::ofstream f(dir / "run.conf");
    f << "[corpus]\ninput = input.jsonl\nformat = summarization-jsonl\n"
      << "src_lang = en\ntgt_lang = de\n\n"
      << "[sample]\nsize = 8\nseed = 5\n\n"
      << "[translator]\nendpoint = subprocess: ./mock_provider --mode translator"
      << translator_extra << "\nprompt = {source}\n\n"
      << "[reference_mt]\nendpoint = subprocess: ./mock_provider --mode reference\n\n"
      << "[embedder]\nendpoint = subprocess: ./mock_provider --mode embedder --dim 8\n"
      << "batch_size = 4\n\n"
      << "[scorer]\nendpoint = subprocess: ./mock_provider --mode scorer\n\n"
      << "[thresholds]\nbleu = 30\ncomet = 0.6\ncossim = 0.8\n\n"
      << "[manifest]\nstage2_size = 3\nstage2_seed = 2\n\n"
      << "[paths]\nout = out\ncache = cache\n";
}

} // namespace

TEST_CASE("exit code 1 on validation errors", "[cli]") {
    TempDir tmp;
    CHECK(run_docaug(tmp.path, {"run", "--config", "missing.conf"}) == 1);
    CHECK(run_docaug(tmp.path, {"nosuch-subcommand"}) == 1);
    CHECK(run_docaug(tmp.path, {"run"}) == 1);   // --config is required

    write_inputs(tmp.path);
    {
        std::ofstream f(tmp.path / "bad.conf");
        f << "[corpus]\ninput = nosuch.jsonl\n";
    }
    CHECK(run_docaug(tmp.path, {"convert", "--config", "bad.conf"}) == 1);
}

TEST_CASE("exit code 2 on provider failure", "[cli]") {
    TempDir tmp;
    write_inputs(tmp.path, " --fail-after 0");   // translator refuses to serve
    CHECK(run_docaug(tmp.path, {"run", "--config", "run.conf"}) == 2);
}

TEST_CASE("stage-by-stage subcommands equal the full run", "[cli]") {
    TempDir tmp;
    write_inputs(tmp.path);

    for (const char* sub : {"convert", "sample", "augment", "refs", "score", "filter", "stats",
                            "eval", "manifest"}) {
        INFO(sub);
        REQUIRE(run_docaug(tmp.path, {sub, "--config", "run.conf"}) == 0);
    }

    // the orchestrated run, in a separate directory with its own cache
    REQUIRE(run_docaug(tmp.path, {"run", "--config", "run.conf", "--out", "out_run", "--cache",
                                  "cache_run"}) == 0);

    for (const char* f : {"converted.jsonl", "sampled.jsonl", "augmented.jsonl", "with_refs.jsonl",
                          "scores.jsonl", "filtered.jsonl", "filtered_scores.jsonl",
                          "retention.tsv", "retention.txt", "stage2.jsonl", "manifest.json"}) {
        INFO(f);
        CHECK(read_file(tmp.path / "out" / f) == read_file(tmp.path / "out_run" / f));
    }

    njson eval = njson::parse(read_file(tmp.path / "out" / "eval.json"));
    CHECK(eval.contains("bleu"));
    CHECK(eval.contains("geometric_mean"));
    CHECK(eval["n_instances"].get<std::size_t>() > 0);
}

TEST_CASE("threshold flags override the config", "[cli]") {
    TempDir tmp;
    write_inputs(tmp.path);
    REQUIRE(run_docaug(tmp.path, {"run", "--config", "run.conf"}) == 0);
    std::size_t kept = count_lines(tmp.path / "out" / "filtered.jsonl");
    REQUIRE(kept > 0);

    REQUIRE(run_docaug(tmp.path, {"filter", "--config", "run.conf", "--bleu-min", "99.9",
                                  "--comet-min", "0.999", "--cossim-min", "0.999"}) == 0);
    std::size_t strict = count_lines(tmp.path / "out" / "filtered.jsonl");
    CHECK(strict < kept);
}

TEST_CASE("seed flag changes the sample", "[cli]") {
    TempDir tmp;
    write_inputs(tmp.path);
    REQUIRE(run_docaug(tmp.path, {"convert", "--config", "run.conf"}) == 0);
    REQUIRE(run_docaug(tmp.path, {"sample", "--config", "run.conf"}) == 0);
    std::string base = read_file(tmp.path / "out" / "sampled.jsonl");
    REQUIRE(run_docaug(tmp.path, {"sample", "--config", "run.conf", "--seed", "99"}) == 0);
    std::string reseeded = read_file(tmp.path / "out" / "sampled.jsonl");
    CHECK(base != reseeded);
    REQUIRE(run_docaug(tmp.path, {"sample", "--config", "run.conf", "--seed", "99"}) == 0);
    CHECK(read_file(tmp.path / "out" / "sampled.jsonl") == reseeded);
}

TEST_CASE("stats subcommand reports per-side counts", "[cli]") {
    TempDir tmp;
    write_inputs(tmp.path);
    REQUIRE(run_docaug(tmp.path, {"convert", "--config", "run.conf"}) == 0);
    // hypothesis side missing on all pairs is fine: counted as 0 with a tally
    CHECK(run_docaug(tmp.path, {"stats", "--config", "run.conf"}) == 0);
}
