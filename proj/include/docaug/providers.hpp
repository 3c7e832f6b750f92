#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>

#include "docaug/config.hpp"
#include "docaug/embed.hpp"
#include "docaug/errors.hpp"
#include "docaug/hash.hpp"
#include "docaug/io.hpp"
#include "docaug/scores.hpp"

namespace docaug {

// ---------------------------------------------------------------------------
// Endpoints

struct Endpoint {
    enum class Kind { subprocess, http };
    Kind kind;
    std::string value;   // shell command, or http URL
};

inline Endpoint parse_endpoint(const std::string& descriptor) {
    const std::string sub_prefix = "subprocess:";
    if (descriptor.rfind(sub_prefix, 0) == 0) {
        std::string cmd = descriptor.substr(sub_prefix.size());
        std::size_t b = cmd.find_first_not_of(" \t");
        if (b == std::string::npos) throw ValidationError("empty subprocess endpoint command");
        return Endpoint{Endpoint::Kind::subprocess, cmd.substr(b)};
    }
    if (descriptor.rfind("http://", 0) == 0) return Endpoint{Endpoint::Kind::http, descriptor};
    throw ValidationError("unsupported endpoint descriptor '" + descriptor +
                          "' (expected 'subprocess: <cmd>' or 'http://...')");
}

// ---------------------------------------------------------------------------
// Subprocess line transport

/// Child process speaking line-delimited JSON over stdin/stdout. Spawned
/// lazily on first use, so fully cached runs never start the provider.
/// Writes are buffered and drained while waiting for reads; with a window of
/// large requests both pipes could otherwise fill and deadlock.
class LineProcess {
  public:
    explicit LineProcess(std::string command) : command_(std::move(command)) {}

    LineProcess(const LineProcess&) = delete;
    LineProcess& operator=(const LineProcess&) = delete;

    ~LineProcess() { shutdown(); }

    bool alive() const { return pid_ > 0 && !dead_; }
    bool ever_spawned() const { return spawned_; }

    bool write_line(const std::string& line) {
        if (!ensure_spawned()) return false;
        wrbuf_ += line;
        wrbuf_.push_back('\n');
        drain_writes();
        return !dead_;
    }

    /// Next line from the child, or nullopt on timeout/EOF (EOF marks dead).
    /// Pending writes keep draining while waiting.
    std::optional<std::string> read_line(int timeout_ms) {
        if (!ensure_spawned()) return std::nullopt;
        auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            std::size_t nl = rdbuf_.find('\n');
            if (nl != std::string::npos) {
                std::string line = rdbuf_.substr(0, nl);
                rdbuf_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            if (dead_) return std::nullopt;
            auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 deadline - std::chrono::steady_clock::now())
                                 .count();
            if (remaining <= 0) return std::nullopt;
            struct pollfd pfds[2];
            pfds[0] = {out_fd_, POLLIN, 0};
            pfds[1] = {in_fd_, POLLOUT, 0};
            nfds_t nfds = wrbuf_.empty() ? 1 : 2;
            int pr = ::poll(pfds, nfds, static_cast<int>(remaining));
            if (pr < 0) {
                if (errno == EINTR) continue;
                dead_ = true;
                return std::nullopt;
            }
            if (pr == 0) return std::nullopt;   // timeout
            if (nfds == 2 && (pfds[1].revents & (POLLOUT | POLLERR))) drain_writes();
            if (pfds[0].revents & (POLLIN | POLLHUP)) {
                char chunk[4096];
                ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
                if (n < 0) {
                    if (errno == EINTR || errno == EAGAIN) continue;
                    dead_ = true;
                    return std::nullopt;
                }
                if (n == 0) {   // EOF: child exited
                    dead_ = true;
                    return std::nullopt;
                }
                rdbuf_.append(chunk, static_cast<std::size_t>(n));
            }
        }
    }

    void restart() {
        shutdown();
        dead_ = false;
        rdbuf_.clear();
        wrbuf_.clear();
    }

  private:
    bool ensure_spawned() {
        if (dead_) return false;
        if (pid_ > 0) return true;
        ::signal(SIGPIPE, SIG_IGN);   // broken pipes surface as EPIPE instead
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0) throw ProviderError("pipe() failed: " + std::string(strerror(errno)));
        if (::pipe(from_child) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw ProviderError("pipe() failed: " + std::string(strerror(errno)));
        }
        pid_t pid = ::fork();
        if (pid < 0) throw ProviderError("fork() failed: " + std::string(strerror(errno)));
        if (pid == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
        ::fcntl(in_fd_, F_SETFL, ::fcntl(in_fd_, F_GETFL) | O_NONBLOCK);
        pid_ = pid;
        spawned_ = true;
        return true;
    }

    // Writes as much buffered output as the pipe accepts without blocking.
    void drain_writes() {
        while (!wrbuf_.empty()) {
            ssize_t n = ::write(in_fd_, wrbuf_.data(), wrbuf_.size());
            if (n > 0) {
                wrbuf_.erase(0, static_cast<std::size_t>(n));
                continue;
            }
            if (n < 0 && errno == EINTR) continue;
            if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
            dead_ = true;   // EPIPE or a real error
            return;
        }
    }

    void shutdown() {
        if (in_fd_ >= 0) ::close(in_fd_);
        if (out_fd_ >= 0) ::close(out_fd_);
        in_fd_ = out_fd_ = -1;
        if (pid_ > 0) {
            int status = 0;
            for (int i = 0; i < 50; ++i) {   // ~500ms grace after stdin EOF
                if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                    pid_ = -1;
                    return;
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }

    std::string command_;
    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    bool dead_ = false;
    bool spawned_ = false;
    std::string rdbuf_;
    std::string wrbuf_;
};

// ---------------------------------------------------------------------------
// Transports

class Transport {
  public:
    virtual ~Transport() = default;
    virtual bool send(const json& request) = 0;
    virtual std::optional<json> receive(int timeout_ms) = 0;
    virtual bool alive() const = 0;
    virtual void reset() = 0;
};

class SubprocessTransport : public Transport {
  public:
    explicit SubprocessTransport(std::string command) : proc_(std::move(command)) {}

    bool send(const json& request) override { return proc_.write_line(request.dump()); }

    std::optional<json> receive(int timeout_ms) override {
        auto line = proc_.read_line(timeout_ms);
        if (!line) return std::nullopt;
        try {
            return json::parse(*line);
        } catch (const nlohmann::json::parse_error&) {
            return json{{"error", "unparseable provider response"}};
        }
    }

    bool alive() const override { return proc_.alive(); }
    void reset() override { proc_.restart(); }

  private:
    LineProcess proc_;
};

class HttpTransport : public Transport {
  public:
    explicit HttpTransport(const std::string& url, int timeout_ms) {
        std::size_t scheme = url.find("://");
        std::size_t path_pos = url.find('/', scheme + 3);
        base_ = path_pos == std::string::npos ? url : url.substr(0, path_pos);
        path_ = path_pos == std::string::npos ? "/" : url.substr(path_pos);
        client_ = std::make_unique<httplib::Client>(base_);
        client_->set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
        client_->set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    }

    bool send(const json& request) override {
        auto res = client_->Post(path_, request.dump(), "application/json");
        if (!res || res->status != 200) {
            ok_ = res != nullptr;   // connection-level failure marks the transport down
            responses_.push_back(json{{"error", "http status " +
                                                    std::to_string(res ? res->status : 0)}});
            return ok_;
        }
        try {
            responses_.push_back(json::parse(res->body));
        } catch (const nlohmann::json::parse_error&) {
            responses_.push_back(json{{"error", "unparseable provider response"}});
        }
        return true;
    }

    std::optional<json> receive(int) override {
        if (responses_.empty()) return std::nullopt;
        json r = std::move(responses_.front());
        responses_.pop_front();
        return r;
    }

    bool alive() const override { return ok_; }
    void reset() override {
        ok_ = true;
        responses_.clear();
    }

  private:
    std::string base_, path_;
    std::unique_ptr<httplib::Client> client_;
    std::deque<json> responses_;
    bool ok_ = true;
};

inline std::unique_ptr<Transport> make_transport(const std::string& endpoint, int timeout_ms) {
    Endpoint ep = parse_endpoint(endpoint);
    if (ep.kind == Endpoint::Kind::subprocess) return std::make_unique<SubprocessTransport>(ep.value);
    return std::make_unique<HttpTransport>(ep.value, timeout_ms);
}

// ---------------------------------------------------------------------------
// Windowed request runner

struct WirePolicy {
    int timeout_ms = 30000;
    int retries = 2;     // re-attempts after the first round
    int in_flight = 8;   // outstanding requests cap
};

struct WireRequest {
    std::string id;
    json body;
};

/// Sends requests with a sliding window, matching responses to requests by
/// id (completion order never affects results). Unanswered or error-marked
/// ids are retried up to `retries` times; a dead transport is restarted
/// between rounds. Returns whatever was answered.
inline std::map<std::string, json> run_wire(Transport& transport,
                                            const std::vector<WireRequest>& requests,
                                            const WirePolicy& policy) {
    std::map<std::string, json> results;
    for (int attempt = 0; attempt <= policy.retries; ++attempt) {
        std::vector<const WireRequest*> round;
        for (const WireRequest& r : requests)
            if (!results.count(r.id)) round.push_back(&r);
        if (round.empty()) break;
        if (!transport.alive()) transport.reset();

        std::set<std::string> wanted;
        for (const WireRequest* r : round) wanted.insert(r->id);
        std::size_t next = 0;
        std::size_t outstanding = 0;
        bool round_ok = true;
        while (round_ok) {
            while (outstanding < static_cast<std::size_t>(policy.in_flight) && next < round.size()) {
                if (!transport.send(round[next]->body)) {
                    round_ok = false;
                    break;
                }
                ++next;
                ++outstanding;
            }
            if (outstanding == 0) break;   // everything sent and accounted for
            std::optional<json> resp = transport.receive(policy.timeout_ms);
            if (!resp) break;              // timeout or EOF; leftovers go to the next attempt
            if (!resp->is_object()) continue;
            auto idf = resp->find("id");
            if (idf == resp->end() || !idf->is_string()) {
                // anonymous transport error accounts for one outstanding request
                if (resp->contains("error") && outstanding > 0) --outstanding;
                continue;
            }
            const std::string id = idf->get<std::string>();
            if (!wanted.count(id) || results.count(id)) continue;   // stale or duplicate
            --outstanding;
            if (resp->contains("error")) continue;                  // provider-reported failure
            results[id] = std::move(*resp);
        }
    }
    return results;
}

// ---------------------------------------------------------------------------
// Response cache

/// Append-only JSONL cache: {"key": <hash>, "value": <json>} per line. A
/// truncated trailing line (interrupted run) is skipped, not fatal.
class JsonlCache {
  public:
    JsonlCache() = default;   // disabled cache

    explicit JsonlCache(std::filesystem::path path) : path_(std::move(path)), enabled_(true) {
        namespace fs = std::filesystem;
        if (fs::exists(path_)) {
            std::ifstream in(path_, std::ios::binary);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                try {
                    json obj = json::parse(line);
                    if (obj.contains("key") && obj.contains("value"))
                        map_[obj["key"].get<std::string>()] = obj["value"];
                } catch (const nlohmann::json::parse_error&) {
                    // tolerated: crash mid-append leaves a partial last line
                }
            }
        }
    }

    bool enabled() const { return enabled_; }

    const json* get(const std::string& key) const {
        auto it = map_.find(key);
        return it == map_.end() ? nullptr : &it->second;
    }

    void put(const std::string& key, json value) {
        if (!enabled_) return;
        if (!out_.is_open()) {
            if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
            out_.open(path_, std::ios::binary | std::ios::app);
            if (!out_) throw ValidationError("cannot open cache file: " + path_.string());
        }
        json line;
        line["key"] = key;
        line["value"] = value;
        out_ << line.dump() << '\n';
        out_.flush();
        map_[key] = std::move(value);
    }

    std::size_t size() const { return map_.size(); }

  private:
    std::filesystem::path path_;
    bool enabled_ = false;
    std::unordered_map<std::string, json> map_;
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Provider specs and typed clients

struct ProviderSpec {
    enum class Role { translator, reference_mt, embedder, scorer };

    Role role = Role::translator;
    std::string name;              // stable id for cache keys and provenance
    std::string endpoint;
    std::string prompt_template;   // translator only; must contain {source}
    std::string src_lang = "en";
    std::string tgt_lang = "de";
    int timeout_ms = 30000;
    int retries = 2;
    int in_flight = 8;
    int batch_size = 16;           // embedder texts per request
    std::filesystem::path cache_file;

    WirePolicy policy() const { return WirePolicy{timeout_ms, retries, in_flight}; }

    void validate() const {
        parse_endpoint(endpoint);
        if (role == Role::translator && prompt_template.find("{source}") == std::string::npos)
            throw ValidationError("translator prompt template must contain the {source} placeholder");
        if (in_flight < 1 || batch_size < 1 || timeout_ms < 1 || retries < 0)
            throw ValidationError("provider '" + name + "': bad policy values");
    }

    static ProviderSpec from_config(const Config& cfg, const std::string& section, Role role,
                                    const std::string& src_lang, const std::string& tgt_lang,
                                    const std::filesystem::path& cache_dir) {
        ProviderSpec s;
        s.role = role;
        s.name = cfg.get_or(section, "id", section);
        s.endpoint = cfg.require(section, "endpoint");
        if (role == Role::translator)
            s.prompt_template = cfg.get_or(
                section, "prompt",
                "Translate the following document into {target_language}. "
                "Output only the translation.\n\n{source}");
        s.src_lang = src_lang;
        s.tgt_lang = tgt_lang;
        if (auto v = cfg.get_u64(section, "timeout_ms")) s.timeout_ms = static_cast<int>(*v);
        if (auto v = cfg.get_u64(section, "retries")) s.retries = static_cast<int>(*v);
        if (auto v = cfg.get_u64(section, "in_flight")) s.in_flight = static_cast<int>(*v);
        if (auto v = cfg.get_u64(section, "batch_size")) s.batch_size = static_cast<int>(*v);
        if (!cache_dir.empty()) s.cache_file = cache_dir / (section + ".jsonl");
        s.validate();
        return s;
    }
};

inline std::string render_prompt(const ProviderSpec& spec, const std::string& source_text) {
    std::string out = spec.prompt_template;
    auto subst = [&](const std::string& key, const std::string& value) {
        std::size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), value);
            pos += value.size();
        }
    };
    subst("{target_language}", spec.tgt_lang);
    subst("{source_language}", spec.src_lang);
    subst("{source}", source_text);
    return out;
}

/// Translation-shaped providers (LLM translator and conventional MT for
/// pseudo-references). Responses cached by content hash of (provider,
/// template, language pair, source text).
class TranslationClient {
  public:
    TranslationClient(ProviderSpec spec, JsonlCache* cache)
        : spec_(std::move(spec)), cache_(cache) {
        spec_.validate();
    }

    std::string cache_key(const std::string& text) const {
        return content_hash("translate\x1f" + spec_.name + "\x1f" + spec_.prompt_template + "\x1f" +
                            spec_.src_lang + "\x1f" + spec_.tgt_lang + "\x1f" + text);
    }

    /// id -> translation; ids absent from the result failed after retries.
    std::map<std::string, std::string> translate(
        const std::vector<std::pair<std::string, std::string>>& id_texts) {
        std::map<std::string, std::string> out;
        std::vector<WireRequest> needed;
        for (const auto& [id, text] : id_texts) {
            const std::string key = cache_key(text);
            if (cache_) {
                if (const json* hit = cache_->get(key)) {
                    out[id] = hit->get<std::string>();
                    continue;
                }
            }
            json body;
            body["id"] = id;
            body["text"] = spec_.role == ProviderSpec::Role::translator ? render_prompt(spec_, text)
                                                                        : text;
            body["src_lang"] = spec_.src_lang;
            body["tgt_lang"] = spec_.tgt_lang;
            needed.push_back(WireRequest{id, std::move(body)});
        }
        if (!needed.empty()) {
            ensure_transport();
            std::map<std::string, json> responses = run_wire(*transport_, needed, spec_.policy());
            if (responses.empty())
                throw ProviderError("provider '" + spec_.name + "' produced no responses for " +
                                    std::to_string(needed.size()) + " requests");
            std::unordered_map<std::string, const std::string*> text_by_id;
            for (const auto& [id, text] : id_texts) text_by_id[id] = &text;
            for (auto& [id, resp] : responses) {
                auto tr = resp.find("translation");
                if (tr == resp.end() || !tr->is_string()) continue;
                out[id] = tr->get<std::string>();
                if (cache_) cache_->put(cache_key(*text_by_id[id]), json(out[id]));
            }
        }
        return out;
    }

    const ProviderSpec& spec() const { return spec_; }

  private:
    void ensure_transport() {
        if (!transport_) transport_ = make_transport(spec_.endpoint, spec_.timeout_ms);
    }

    ProviderSpec spec_;
    JsonlCache* cache_;
    std::unique_ptr<Transport> transport_;
};

/// Wire-backed embedding provider with a per-text vector cache keyed by
/// content hash. Any text left unanswered after retries is an error.
class WireEmbeddingProvider : public EmbeddingProvider {
  public:
    WireEmbeddingProvider(ProviderSpec spec, JsonlCache* cache)
        : spec_(std::move(spec)), cache_(cache) {}

    std::string id() const override { return spec_.name; }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        std::vector<EmbeddingVector> out(texts.size());
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const std::string key = cache_key(texts[i]);
            const json* hit = cache_ ? cache_->get(key) : nullptr;
            if (hit) {
                out[i].values = hit->get<std::vector<double>>();
            } else {
                missing.push_back(i);
            }
        }
        if (!missing.empty()) fetch(texts, missing, out);
        return out;
    }

  private:
    std::string cache_key(const std::string& text) const {
        return content_hash("embed\x1f" + spec_.name + "\x1f" + text);
    }

    void fetch(const std::vector<std::string>& texts, const std::vector<std::size_t>& missing,
               std::vector<EmbeddingVector>& out) {
        if (!transport_) transport_ = make_transport(spec_.endpoint, spec_.timeout_ms);
        std::vector<WireRequest> requests;
        std::map<std::string, std::vector<std::size_t>> batch_members;
        for (std::size_t b = 0; b * static_cast<std::size_t>(spec_.batch_size) < missing.size(); ++b) {
            const std::size_t begin = b * static_cast<std::size_t>(spec_.batch_size);
            const std::size_t end = std::min(missing.size(), begin + static_cast<std::size_t>(spec_.batch_size));
            std::string rid = "b" + std::to_string(b);
            json body;
            body["id"] = rid;
            json arr = json::array();
            for (std::size_t k = begin; k < end; ++k) arr.push_back(texts[missing[k]]);
            body["texts"] = std::move(arr);
            batch_members[rid] = std::vector<std::size_t>(missing.begin() + static_cast<std::ptrdiff_t>(begin),
                                                          missing.begin() + static_cast<std::ptrdiff_t>(end));
            requests.push_back(WireRequest{rid, std::move(body)});
        }
        std::map<std::string, json> responses = run_wire(*transport_, requests, spec_.policy());
        for (const auto& [rid, members] : batch_members) {
            auto it = responses.find(rid);
            if (it == responses.end())
                throw ProviderError("embedding provider '" + spec_.name +
                                    "' failed after retries (batch " + rid + ")");
            auto vecs = it->second.find("vectors");
            if (vecs == it->second.end() || !vecs->is_array() || vecs->size() != members.size())
                throw ProviderError("embedding provider '" + spec_.name +
                                    "' returned a malformed vectors array");
            for (std::size_t k = 0; k < members.size(); ++k) {
                EmbeddingVector v;
                v.values = (*vecs)[k].get<std::vector<double>>();
                v.validate();
                out[members[k]] = v;
                if (cache_) cache_->put(cache_key(texts[members[k]]), json(v.values));
            }
        }
    }

    ProviderSpec spec_;
    JsonlCache* cache_;
    std::unique_ptr<Transport> transport_;
};

/// Wire-backed learned-metric scorer, usable as the client of
/// score_external. Caches by content hash of (src, mt, ref).
class WireScorer {
  public:
    WireScorer(ProviderSpec spec, JsonlCache* cache) : spec_(std::move(spec)), cache_(cache) {}

    std::map<std::string, double> operator()(const std::vector<ScoreRequest>& requests) {
        std::map<std::string, double> out;
        std::vector<WireRequest> needed;
        std::unordered_map<std::string, std::string> key_by_id;
        for (const ScoreRequest& r : requests) {
            const std::string key = cache_key(r);
            key_by_id[r.id] = key;
            if (cache_) {
                if (const json* hit = cache_->get(key)) {
                    out[r.id] = hit->get<double>();
                    continue;
                }
            }
            json body;
            body["id"] = r.id;
            body["src"] = r.src;
            body["mt"] = r.mt;
            body["ref"] = r.ref ? json(*r.ref) : json(nullptr);
            needed.push_back(WireRequest{r.id, std::move(body)});
        }
        if (!needed.empty()) {
            if (!transport_) transport_ = make_transport(spec_.endpoint, spec_.timeout_ms);
            std::map<std::string, json> responses = run_wire(*transport_, needed, spec_.policy());
            if (responses.empty())
                throw ProviderError("scorer '" + spec_.name + "' produced no responses for " +
                                    std::to_string(needed.size()) + " requests");
            for (auto& [id, resp] : responses) {
                auto sc = resp.find("score");
                if (sc == resp.end() || !sc->is_number()) continue;
                out[id] = sc->get<double>();
                if (cache_) cache_->put(key_by_id[id], json(out[id]));
            }
        }
        return out;
    }

    const ProviderSpec& spec() const { return spec_; }

  private:
    std::string cache_key(const ScoreRequest& r) const {
        return content_hash("score\x1f" + spec_.name + "\x1f" + r.src + "\x1f" + r.mt + "\x1f" +
                            (r.ref ? *r.ref : std::string("\x01null")));
    }

    ProviderSpec spec_;
    JsonlCache* cache_;
    std::unique_ptr<Transport> transport_;
};

} // namespace docaug
