#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "warcrace/error.hpp"
#include "warcrace/time.hpp"

namespace warcrace {

enum class EventKind { round_start, page_complete, round_finish };

inline std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::round_start: return "round_start";
        case EventKind::page_complete: return "page_complete";
        case EventKind::round_finish: return "round_finish";
    }
    return "round_start";
}

/// One line of a crawler's events file. This is the adapter contract: any
/// crawler that can append these lines can join a race.
struct ProgressEvent {
    EventKind kind = EventKind::round_start;
    Timestamp at{};
    std::optional<std::string> uri;  // required for page_complete
    std::uint64_t pages_so_far = 0;
};

inline std::string to_jsonl(const ProgressEvent& event) {
    nlohmann::ordered_json line;
    line["kind"] = std::string(to_string(event.kind));
    line["at"] = format_iso8601_ms(event.at);
    if (event.uri) line["uri"] = *event.uri;
    line["pages_so_far"] = event.pages_so_far;
    return line.dump();
}

/// Parse one JSONL line. Unknown kinds and blank lines yield nullopt so a
/// stream with foreign entries (e.g. a crawler's error line) stays readable.
/// Malformed JSON throws.
inline std::optional<ProgressEvent> parse_event_line(std::string_view line) {
    if (line.empty()) return std::nullopt;
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad event line: " + std::string(e.what()));
    }
    if (!obj.is_object() || !obj.contains("kind") || !obj.contains("at")) {
        throw Error("event line missing kind/at: " + std::string(line.substr(0, 80)));
    }
    std::string kind = obj["kind"].get<std::string>();
    ProgressEvent event;
    if (kind == "round_start") {
        event.kind = EventKind::round_start;
    } else if (kind == "page_complete") {
        event.kind = EventKind::page_complete;
    } else if (kind == "round_finish") {
        event.kind = EventKind::round_finish;
    } else {
        return std::nullopt;  // tolerated foreign kind
    }
    event.at = parse_iso8601(obj["at"].get<std::string>());
    if (obj.contains("uri") && obj["uri"].is_string()) event.uri = obj["uri"].get<std::string>();
    if (obj.contains("pages_so_far")) event.pages_so_far = obj["pages_so_far"].get<std::uint64_t>();
    if (event.kind == EventKind::page_complete && !event.uri) {
        throw Error("page_complete event without uri");
    }
    return event;
}

inline std::vector<ProgressEvent> read_events_file(const std::filesystem::path& path,
                                                   std::size_t* foreign_lines = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open events file: " + path.string());
    std::vector<ProgressEvent> out;
    std::size_t ignored = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (auto event = parse_event_line(line)) {
            out.push_back(std::move(*event));
        } else {
            ++ignored;
        }
    }
    if (foreign_lines) *foreign_lines = ignored;
    return out;
}

/// Enforces the per-crawler stream invariants: timestamps non-decreasing,
/// exactly one round_start (first), at most one round_finish (last),
/// pages_so_far non-decreasing.
inline void validate_event_stream(const std::vector<ProgressEvent>& events) {
    if (events.empty()) throw Error("event stream is empty");
    std::size_t starts = 0, finishes = 0;
    Timestamp prev_at = events.front().at;
    std::uint64_t prev_pages = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& event = events[i];
        if (event.at < prev_at) throw Error("event timestamps go backwards");
        prev_at = event.at;
        switch (event.kind) {
            case EventKind::round_start:
                if (++starts > 1) throw Error("multiple round_start events");
                if (i != 0) throw Error("round_start is not the first event");
                break;
            case EventKind::round_finish:
                if (++finishes > 1) throw Error("multiple round_finish events");
                if (i + 1 != events.size()) throw Error("events after round_finish");
                break;
            case EventKind::page_complete:
                if (event.pages_so_far < prev_pages) throw Error("pages_so_far decreased");
                prev_pages = event.pages_so_far;
                break;
        }
    }
    if (starts == 0) throw Error("event stream has no round_start");
}

/// Line-buffered writer; every event is flushed so a supervisor can tail the
/// file while the crawl is still running.
class EventLogWriter {
public:
    explicit EventLogWriter(const std::filesystem::path& path)
        : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw Error("cannot open events file for writing: " + path.string());
    }

    void emit(const ProgressEvent& event) {
        out_ << to_jsonl(event) << '\n';
        out_.flush();
        ++count_;
    }

    void emit(EventKind kind, Timestamp at, std::optional<std::string> uri,
              std::uint64_t pages_so_far) {
        emit(ProgressEvent{kind, at, std::move(uri), pages_so_far});
    }

    /// Free-form line outside the ProgressEvent schema (e.g. a crash note).
    /// Readers skip it.
    void emit_raw(const std::string& json_line) {
        out_ << json_line << '\n';
        out_.flush();
    }

    std::size_t count() const { return count_; }

private:
    std::ofstream out_;
    std::size_t count_ = 0;
};

}  // namespace warcrace
