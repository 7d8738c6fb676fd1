#pragma once

#include <arpa/inet.h>
#include <fnmatch.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "warcrace/error.hpp"
#include "warcrace/events.hpp"
#include "warcrace/extract.hpp"
#include "warcrace/http.hpp"
#include "warcrace/metrics.hpp"
#include "warcrace/time.hpp"
#include "warcrace/uri.hpp"
#include "warcrace/warc.hpp"

namespace warcrace {

/// One fault-injection rule for the fixture server. Rules are matched against
/// the request path in declaration order; the first match wins.
struct FaultRule {
    enum class Behavior { status, drop, delay };
    std::string path_pattern;  // glob, e.g. "/style.css" or "*.png"
    Behavior behavior = Behavior::status;
    int status_code = 404;  // for Behavior::status
    int delay_ms = 0;       // for Behavior::delay
};

inline FaultRule fault_rule_from_json(const nlohmann::json& in) {
    FaultRule rule;
    try {
        rule.path_pattern = in.at("path_pattern").get<std::string>();
        std::string behavior = in.at("behavior").get<std::string>();
        if (behavior == "status") {
            rule.behavior = FaultRule::Behavior::status;
            rule.status_code = in.at("status").get<int>();
            if (rule.status_code < 100 || rule.status_code > 599) {
                throw Error("fault rule status out of range: " + std::to_string(rule.status_code));
            }
        } else if (behavior == "drop") {
            rule.behavior = FaultRule::Behavior::drop;
        } else if (behavior == "delay") {
            rule.behavior = FaultRule::Behavior::delay;
            rule.delay_ms = in.at("delay_ms").get<int>();
            if (rule.delay_ms < 0) throw Error("fault rule delay must be non-negative");
        } else {
            throw Error("unknown fault behavior: " + behavior);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad fault rule: ") + e.what());
    }
    return rule;
}

inline std::vector<FaultRule> load_fault_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open fault config: " + path.string());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad fault config " + path.string() + ": " + e.what());
    }
    if (!parsed.is_array()) throw Error("fault config must be a JSON array");
    std::vector<FaultRule> rules;
    for (const auto& entry : parsed) rules.push_back(fault_rule_from_json(entry));
    return rules;
}

inline std::string media_type_for_path(const std::filesystem::path& path) {
    static const std::map<std::string, std::string> kTypes = {
        {".html", "text/html"},      {".htm", "text/html"},
        {".css", "text/css"},        {".js", "application/javascript"},
        {".mjs", "application/javascript"},
        {".json", "application/json"},
        {".png", "image/png"},       {".jpg", "image/jpeg"},
        {".jpeg", "image/jpeg"},     {".gif", "image/gif"},
        {".svg", "image/svg+xml"},   {".ico", "image/x-icon"},
        {".webp", "image/webp"},     {".mp4", "video/mp4"},
        {".webm", "video/webm"},     {".mp3", "audio/mpeg"},
        {".ogg", "audio/ogg"},       {".wav", "audio/wav"},
        {".txt", "text/plain"},      {".xml", "application/xml"},
    };
    auto ext = detail::lowercase(path.extension().string());
    auto it = kTypes.find(ext);
    return it == kTypes.end() ? "application/octet-stream" : it->second;
}

/// Static-site HTTP server with deterministic fault injection. Hand-rolled on
/// raw sockets because the "drop" behavior must close the TCP connection
/// without writing any response bytes, which an HTTP-framework handler cannot
/// express. GET only, one response per connection.
class FixtureServer {
public:
    FixtureServer(std::filesystem::path site_dir, std::vector<FaultRule> faults = {},
                  std::uint16_t port = 0)
        : site_dir_(std::move(site_dir)), faults_(std::move(faults)), requested_port_(port) {}

    ~FixtureServer() { stop(); }
    FixtureServer(const FixtureServer&) = delete;
    FixtureServer& operator=(const FixtureServer&) = delete;

    /// Bind, listen and serve on a background thread. Port 0 picks a free
    /// ephemeral port, readable via port() afterwards.
    void start() {
        if (running_.exchange(true)) return;
        if (!std::filesystem::is_directory(site_dir_)) {
            running_ = false;
            throw Error("fixture site directory does not exist: " + site_dir_.string());
        }
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) {
            running_ = false;
            throw Error("fixture server: socket() failed");
        }
        int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(requested_port_);
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            ::close(listen_fd_);
            listen_fd_ = -1;
            running_ = false;
            throw Error("fixture server: cannot bind port " + std::to_string(requested_port_));
        }
        socklen_t len = sizeof(addr);
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        ::listen(listen_fd_, 64);
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    void stop() {
        if (!running_.exchange(false)) return;
        if (listen_fd_ >= 0) {
            ::shutdown(listen_fd_, SHUT_RDWR);
            ::close(listen_fd_);
            listen_fd_ = -1;
        }
        if (accept_thread_.joinable()) accept_thread_.join();
        std::unique_lock lock(mutex_);
        idle_.wait(lock, [this] { return active_connections_ == 0; });
    }

    std::uint16_t port() const { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::uint64_t requests_served() const { return requests_served_.load(); }

private:
    void accept_loop() {
        while (running_) {
            int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                if (!running_) break;
                continue;
            }
            {
                std::lock_guard lock(mutex_);
                ++active_connections_;
            }
            std::thread([this, fd] {
                handle_connection(fd);
                std::lock_guard lock(mutex_);
                if (--active_connections_ == 0) idle_.notify_all();
            }).detach();
        }
    }

    static void send_all(int fd, std::string_view bytes) {
        std::size_t sent = 0;
        while (sent < bytes.size()) {
            ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) return;
            sent += static_cast<std::size_t>(n);
        }
    }

    static std::string reason_phrase(int status) {
        switch (status) {
            case 200: return "OK";
            case 204: return "No Content";
            case 301: return "Moved Permanently";
            case 302: return "Found";
            case 304: return "Not Modified";
            case 400: return "Bad Request";
            case 403: return "Forbidden";
            case 404: return "Not Found";
            case 405: return "Method Not Allowed";
            case 500: return "Internal Server Error";
            case 503: return "Service Unavailable";
            default: return "Status";
        }
    }

    static void respond(int fd, int status, const std::optional<std::string>& content_type,
                        std::string_view body) {
        std::string head = "HTTP/1.1 " + std::to_string(status) + " " + reason_phrase(status) +
                           "\r\n";
        if (content_type) head += "Content-Type: " + *content_type + "\r\n";
        head += "Content-Length: " + std::to_string(body.size()) + "\r\n";
        head += "Connection: close\r\n\r\n";
        send_all(fd, head);
        send_all(fd, body);
    }

    void handle_connection(int fd) {
        timeval timeout{5, 0};
        ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &timeout, sizeof(timeout));

        std::string request;
        char buf[4096];
        while (request.find("\r\n\r\n") == std::string::npos && request.size() < 16384) {
            ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
            if (n <= 0) break;
            request.append(buf, static_cast<std::size_t>(n));
        }
        auto head_end = request.find("\r\n\r\n");
        if (head_end == std::string::npos) {
            ::close(fd);
            return;
        }
        requests_served_.fetch_add(1);

        std::string_view line(request.data(), request.find("\r\n"));
        auto sp1 = line.find(' ');
        auto sp2 = line.rfind(' ');
        if (sp1 == std::string_view::npos || sp2 == std::string_view::npos || sp2 <= sp1) {
            respond(fd, 400, "text/plain", "bad request\n");
            ::close(fd);
            return;
        }
        std::string method(line.substr(0, sp1));
        std::string target(line.substr(sp1 + 1, sp2 - sp1 - 1));
        std::string path = target.substr(0, target.find_first_of("?#"));
        if (path.empty()) path = "/";

        if (method != "GET") {
            respond(fd, 405, "text/plain", "only GET is supported\n");
            ::close(fd);
            return;
        }

        for (const auto& rule : faults_) {
            if (fnmatch(rule.path_pattern.c_str(), path.c_str(), 0) != 0) continue;
            if (rule.behavior == FaultRule::Behavior::drop) {
                ::close(fd);  // no response bytes at all
                return;
            }
            if (rule.behavior == FaultRule::Behavior::delay) {
                std::this_thread::sleep_for(std::chrono::milliseconds(rule.delay_ms));
                break;  // then serve normally
            }
            respond(fd, rule.status_code, "text/plain",
                    "injected fault: " + std::to_string(rule.status_code) + "\n");
            ::close(fd);
            return;
        }

        if (path == "/") path = "/index.html";
        if (path.find("..") != std::string::npos) {
            respond(fd, 403, "text/plain", "forbidden\n");
            ::close(fd);
            return;
        }
        std::filesystem::path file = site_dir_ / path.substr(1);
        std::ifstream in(file, std::ios::binary);
        if (!std::filesystem::is_regular_file(file) || !in) {
            respond(fd, 404, "text/plain", "not found: " + path + "\n");
            ::close(fd);
            return;
        }
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        respond(fd, 200, media_type_for_path(file), body);
        ::close(fd);
    }

    std::filesystem::path site_dir_;
    std::vector<FaultRule> faults_;
    std::uint16_t requested_port_ = 0;
    std::uint16_t port_ = 0;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> requests_served_{0};
    std::thread accept_thread_;
    std::mutex mutex_;
    std::condition_variable idle_;
    int active_connections_ = 0;
};

/// Start a fixture server and hand back its running handle.
inline std::unique_ptr<FixtureServer> serve_fixture(const std::filesystem::path& site_dir,
                                                    std::vector<FaultRule> faults = {},
                                                    std::uint16_t port = 0) {
    auto server = std::make_unique<FixtureServer>(site_dir, std::move(faults), port);
    server->start();
    return server;
}

/// Pacing of the simulated crawler. Jitter comes from a seeded generator, so
/// the same seed reproduces the same timeline.
struct SpeedProfile {
    int per_page_delay_ms = 0;
    int jitter_ms = 0;
    std::uint64_t seed = 0;
};

struct SimCrawlResult {
    std::vector<std::string> warc_paths;
    std::size_t event_count = 0;
    std::uint64_t pages_archived = 0;
};

namespace detail {

struct FetchOutcome {
    int status = 0;
    std::string reason;
    std::optional<std::string> content_type;
    std::string body;
};

class SimHttpClient {
public:
    std::optional<FetchOutcome> fetch(const Uri& uri) {
        int port = uri.port.value_or(uri.scheme == "https" ? 443 : 80);
        std::string authority = uri.host + ":" + std::to_string(port);
        auto it = clients_.find(authority);
        if (it == clients_.end()) {
            auto client = std::make_unique<httplib::Client>(uri.host, port);
            client->set_connection_timeout(5, 0);
            client->set_read_timeout(5, 0);
            client->set_keep_alive(false);
            it = clients_.emplace(authority, std::move(client)).first;
        }
        std::string target = uri.path.empty() ? "/" : uri.path;
        if (uri.query) target += "?" + *uri.query;
        auto res = it->second->Get(target);
        if (!res) return std::nullopt;
        FetchOutcome outcome;
        outcome.status = res->status;
        outcome.reason = res->reason.empty() ? "Status" : res->reason;
        if (res->has_header("Content-Type")) {
            outcome.content_type = res->get_header_value("Content-Type");
        }
        outcome.body = res->body;
        return outcome;
    }

private:
    std::map<std::string, std::unique_ptr<httplib::Client>> clients_;
};

inline Timestamp to_seconds_precision(Timestamp t) {
    auto ms = millis_since_epoch(t);
    return timestamp_from_millis(ms - (ms % 1000));
}

}  // namespace detail

/// The deterministic stand-in for a real crawler: fetch every seed page in
/// order, then the closure of its extracted references (each distinct URI
/// fetched once per crawl), writing response records as it goes. Pages
/// re-fetched with an identical body become revisit records. Fetching is
/// sequential by design, so the speedrun time decomposes as the sum of the
/// configured per-page delays.
///
/// Events: round_start, one page_complete per seed, round_finish. A seed
/// whose server is unreachable aborts the crawl: an error line is written,
/// round_finish is withheld, and the call throws — which is exactly what a
/// crashing crawler looks like to the race supervisor.
inline SimCrawlResult run_sim_crawl(const std::vector<std::string>& seeds,
                                    const SpeedProfile& profile,
                                    const std::filesystem::path& output_dir,
                                    const std::filesystem::path& events_file) {
    namespace fs = std::filesystem;
    fs::create_directories(output_dir);
    if (events_file.has_parent_path()) fs::create_directories(events_file.parent_path());

    EventLogWriter events(events_file);
    WarcWriter warc(output_dir / "crawl.warc.gz", /*gzipped=*/true);
    detail::SimHttpClient client;
    std::mt19937_64 jitter_rng(profile.seed);
    std::uniform_int_distribution<int> jitter(0, std::max(0, profile.jitter_ms));

    SimCrawlResult result;
    result.warc_paths.push_back(warc.path().string());

    std::map<std::string, std::string> captured_digest;  // uri -> body digest
    std::set<std::string> attempted;

    auto write_response_record = [&](const Uri& uri, const detail::FetchOutcome& outcome) {
        std::string canonical = uri.str_without_fragment();
        std::string digest = sha1_base32(outcome.body);
        WarcRecord record;
        record.record_date = detail::to_seconds_precision(now_utc());
        record.record_id = new_record_id();
        record.target_uri = canonical;
        auto it = captured_digest.find(canonical);
        if (it != captured_digest.end() && it->second == digest) {
            record.record_type = RecordType::revisit;
            record.type_name = "revisit";
            record.payload = "HTTP/1.1 " + std::to_string(outcome.status) + " " + outcome.reason +
                             "\r\n" +
                             (outcome.content_type ? "Content-Type: " + *outcome.content_type +
                                                         "\r\n"
                                                   : "") +
                             "\r\n";
            record.extra_headers.emplace_back(
                "WARC-Profile", "http://netpreserve.org/warc/1.1/revisit/identical-payload-digest");
            record.extra_headers.emplace_back("WARC-Refers-To-Target-URI", canonical);
        } else {
            record.record_type = RecordType::response;
            record.type_name = "response";
            record.payload = build_http_response(outcome.status, outcome.reason,
                                                 outcome.content_type ? std::optional<
                                                     std::string_view>(*outcome.content_type)
                                                                      : std::nullopt,
                                                 outcome.body);
            captured_digest[canonical] = digest;
        }
        record.content_type = "application/http;msgtype=response";
        record.content_length = record.payload.size();
        warc.write(record);
    };

    // breadth-first closure over embedded references
    auto crawl_references = [&](const Uri& page, const detail::FetchOutcome& page_outcome) {
        std::deque<std::string> queue;
        ResourceCategory page_category =
            classify_resource(page_outcome.content_type, page.str_without_fragment());
        if (page_category == ResourceCategory::html || page_category == ResourceCategory::css) {
            for (const auto& ref : extract_references(page_outcome.body, page_category, page)) {
                queue.push_back(ref);
            }
        }
        while (!queue.empty()) {
            std::string uri_text = queue.front();
            queue.pop_front();
            if (!attempted.insert(uri_text).second) continue;
            auto uri = Uri::parse(uri_text);
            if (!uri || !uri->is_absolute()) continue;
            auto outcome = client.fetch(*uri);
            if (!outcome) continue;  // dropped connection: nothing to archive
            write_response_record(*uri, *outcome);
            if (outcome->status >= 200 && outcome->status < 300) {
                ResourceCategory category =
                    classify_resource(outcome->content_type, uri_text);
                if (category == ResourceCategory::html || category == ResourceCategory::css) {
                    for (const auto& ref : extract_references(outcome->body, category, *uri)) {
                        if (!attempted.count(ref)) queue.push_back(ref);
                    }
                }
            }
        }
    };

    events.emit(EventKind::round_start, now_utc(), std::nullopt, 0);
    std::uint64_t pages = 0;
    for (const auto& seed : seeds) {
        auto uri = Uri::parse(seed);
        if (!uri || !uri->is_absolute() || uri->host.empty()) {
            throw Error("sim crawl: seed is not an absolute URI: " + seed);
        }
        auto outcome = client.fetch(*uri);
        if (!outcome) {
            nlohmann::ordered_json error_line;
            error_line["kind"] = "error";
            error_line["at"] = format_iso8601_ms(now_utc());
            error_line["message"] = "server unreachable for seed: " + seed;
            events.emit_raw(error_line.dump());
            warc.flush();
            throw Error("sim crawl: server unreachable for seed: " + seed);
        }
        write_response_record(*uri, *outcome);
        attempted.insert(uri->str_without_fragment());
        if (outcome->status >= 200 && outcome->status < 300) {
            crawl_references(*uri, *outcome);
        }
        int delay = profile.per_page_delay_ms + jitter(jitter_rng);
        if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        ++pages;
        events.emit(EventKind::page_complete, now_utc(), seed, pages);
    }
    events.emit(EventKind::round_finish, now_utc(), std::nullopt, pages);
    warc.flush();
    result.event_count = events.count();
    result.pages_archived = pages;
    return result;
}

}  // namespace warcrace
