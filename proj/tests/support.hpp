#pragma once

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "warcrace/http.hpp"
#include "warcrace/warc.hpp"

namespace testsupport {

inline std::filesystem::path source_root() {
#ifdef WARCRACE_SOURCE_ROOT
    return WARCRACE_SOURCE_ROOT;
#else
    return ".";
#endif
}

inline std::string cli_path() {
#ifdef WARCRACE_BIN_PATH
    return WARCRACE_BIN_PATH;
#else
    return "warcrace";
#endif
}

inline std::filesystem::path fixtures_dir() { return source_root() / "fixtures"; }
inline std::filesystem::path profiles_dir() { return source_root() / "profiles"; }

/// Self-cleaning scratch directory.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = base / ("warcrace-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

inline CommandResult run_command(const std::string& command) {
    CommandResult result;
    FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
    if (!pipe) return result;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
    int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

/// Deterministic generator of structurally valid records for round-trip
/// property tests.
class RecordGenerator {
public:
    explicit RecordGenerator(std::uint64_t seed) : rng_(seed) {}

    warcrace::WarcRecord next() {
        static const char* kTypes[] = {"response", "request",  "revisit",
                                       "metadata", "warcinfo", "resource"};
        warcrace::WarcRecord record;
        record.type_name = kTypes[pick(0, 5)];
        record.record_type = warcrace::record_type_from_name(record.type_name);
        record.record_id = warcrace::new_record_id();
        record.record_date =
            warcrace::timestamp_from_millis(1577836800000LL + pick(0, 200000000) * 1000LL);
        if (record.record_type == warcrace::RecordType::response) {
            record.target_uri = random_uri();
            record.content_type = "application/http;msgtype=response";
            static const int kStatuses[] = {200, 201, 301, 304, 404, 500, 503};
            record.payload = warcrace::build_http_response(
                kStatuses[pick(0, 6)], "Whatever", random_media_type(), random_bytes(pick(0, 512)));
        } else {
            if (pick(0, 3) != 0) record.target_uri = random_uri();
            record.content_type = pick(0, 1) ? "application/octet-stream" : "text/plain";
            record.payload = random_bytes(pick(0, 2048));
            if (pick(0, 4) == 0) {
                record.extra_headers.emplace_back("WARC-Concurrent-To",
                                                  "<" + warcrace::new_record_id() + ">");
            }
        }
        record.content_length = record.payload.size();
        return record;
    }

    std::string random_uri() {
        static const char* kHosts[] = {"example.com", "www.fixture.org", "a.b.example.net"};
        static const char* kPaths[] = {"/", "/page", "/a/b/c.html", "/img/x.png", "/q"};
        std::string uri = std::string(pick(0, 1) ? "https://" : "http://") + kHosts[pick(0, 2)] +
                          kPaths[pick(0, 4)];
        if (pick(0, 2) == 0) uri += "?k=" + std::to_string(pick(0, 99));
        return uri;
    }

    std::string random_media_type() {
        static const char* kTypes[] = {"text/html", "text/css",  "application/javascript",
                                       "image/png", "video/mp4", "text/plain"};
        return kTypes[pick(0, 5)];
    }

    std::string random_bytes(int count) {
        std::string out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) out.push_back(static_cast<char>(pick(0, 255)));
        return out;
    }

    int pick(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng_);
    }

private:
    std::mt19937_64 rng_;
};

/// Field-by-field equality on record content (source location fields are
/// reader-assigned and excluded on purpose).
inline bool same_record_content(const warcrace::WarcRecord& a, const warcrace::WarcRecord& b) {
    return a.type_name == b.type_name && a.record_type == b.record_type &&
           a.target_uri == b.target_uri && a.record_date == b.record_date &&
           a.record_id == b.record_id && a.content_type == b.content_type &&
           a.content_length == b.content_length && a.payload == b.payload &&
           a.extra_headers == b.extra_headers;
}

}  // namespace testsupport
