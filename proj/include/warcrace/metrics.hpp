#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "warcrace/cdxj.hpp"
#include "warcrace/error.hpp"
#include "warcrace/events.hpp"
#include "warcrace/extract.hpp"
#include "warcrace/http.hpp"
#include "warcrace/uri.hpp"
#include "warcrace/warc.hpp"

namespace warcrace {

/// Classify a resource, preferring the server's declared media type over the
/// URI's extension. A declared-but-unrecognized type is "other": servers are
/// more authoritative than file names.
inline ResourceCategory classify_resource(const std::optional<std::string>& declared_content_type,
                                          std::string_view uri) {
    if (declared_content_type && !declared_content_type->empty()) {
        std::string mt = detail::normalize_media_type(*declared_content_type);
        if (!mt.empty() && mt != "unk" && mt != "warc/revisit") {
            if (mt == "application/javascript" || mt == "text/javascript")
                return ResourceCategory::javascript;
            if (mt == "text/css") return ResourceCategory::css;
            if (mt.rfind("image/", 0) == 0) return ResourceCategory::image;
            if (mt.rfind("video/", 0) == 0) return ResourceCategory::video;
            if (mt.rfind("audio/", 0) == 0) return ResourceCategory::audio;
            if (mt == "text/html" || mt == "application/xhtml+xml") return ResourceCategory::html;
            return ResourceCategory::other;
        }
    }

    std::string path;
    if (auto parsed = Uri::parse(uri)) {
        path = detail::lowercase(parsed->path);
    } else {
        path = detail::lowercase(uri.substr(0, uri.find_first_of("?#")));
    }
    auto slash = path.find_last_of('/');
    std::string_view name = std::string_view(path).substr(slash == std::string::npos ? 0 : slash + 1);
    auto dot = name.find_last_of('.');
    if (dot == std::string_view::npos) return ResourceCategory::other;
    std::string_view ext = name.substr(dot);

    if (ext == ".js" || ext == ".mjs") return ResourceCategory::javascript;
    if (ext == ".css") return ResourceCategory::css;
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".gif" || ext == ".webp" ||
        ext == ".svg" || ext == ".ico")
        return ResourceCategory::image;
    if (ext == ".mp4" || ext == ".webm") return ResourceCategory::video;
    if (ext == ".mp3" || ext == ".ogg" || ext == ".wav") return ResourceCategory::audio;
    if (ext == ".html" || ext == ".htm") return ResourceCategory::html;
    return ResourceCategory::other;
}

/// The per-crawler, per-round results file contents.
///
/// A reference captured only with a 404 is counted in `resources_404` AND in
/// `missing_by_type` under its category: the capture exists but the resource
/// is still missing from the archive. `finished` is in-memory state used by
/// ranking; it is not part of the file schema, and results loaded from disk
/// are treated as finished.
struct PerformanceResults {
    std::string crawler_name;
    int round = 1;
    std::uint64_t pages_archived = 0;
    double speedrun_seconds = 0.0;
    std::uint64_t resources_404 = 0;
    std::uint64_t resources_other_4xx_5xx = 0;
    std::map<ResourceCategory, std::uint64_t> missing_by_type;

    bool finished = true;  // not serialized
};

inline nlohmann::ordered_json to_json(const PerformanceResults& results) {
    nlohmann::ordered_json out;
    out["crawler_name"] = results.crawler_name;
    out["round"] = results.round;
    out["pages_archived"] = results.pages_archived;
    out["speedrun_seconds"] = results.speedrun_seconds;
    out["resources_404"] = results.resources_404;
    out["resources_other_4xx_5xx"] = results.resources_other_4xx_5xx;
    nlohmann::ordered_json missing = nlohmann::ordered_json::object();
    for (const auto& [category, count] : results.missing_by_type) {
        missing[std::string(to_string(category))] = count;
    }
    out["missing_by_type"] = missing;
    return out;
}

/// Unknown keys are ignored for forward compatibility; absent missing_by_type
/// keys mean zero.
inline PerformanceResults performance_results_from_json(const nlohmann::json& in) {
    PerformanceResults results;
    try {
        results.crawler_name = in.at("crawler_name").get<std::string>();
        results.round = in.at("round").get<int>();
        results.pages_archived = in.at("pages_archived").get<std::uint64_t>();
        results.speedrun_seconds = in.at("speedrun_seconds").get<double>();
        results.resources_404 = in.at("resources_404").get<std::uint64_t>();
        results.resources_other_4xx_5xx = in.at("resources_other_4xx_5xx").get<std::uint64_t>();
        if (in.contains("missing_by_type")) {
            for (const auto& [key, value] : in.at("missing_by_type").items()) {
                results.missing_by_type[category_from_string(key)] +=
                    value.get<std::uint64_t>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad results file: ") + e.what());
    }
    return results;
}

inline std::string results_filename(const std::string& crawler_name, int round) {
    return "results-" + crawler_name + "-round" + std::to_string(round) + ".json";
}

inline void save_performance_results(const PerformanceResults& results,
                                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write results file: " + path.string());
    out << to_json(results).dump(2) << '\n';
}

inline PerformanceResults load_performance_results(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open results file: " + path.string());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad results file " + path.string() + ": " + e.what());
    }
    return performance_results_from_json(parsed);
}

namespace detail {

inline std::string strip_fragment(const std::string& uri) {
    if (auto parsed = Uri::parse(uri)) return parsed->str_without_fragment();
    auto hash = uri.find('#');
    return hash == std::string::npos ? uri : uri.substr(0, hash);
}

}  // namespace detail

/// Compute the results file for one crawler and round from its WARC records
/// and its progress log.
///
/// "Missing" means: referenced by an archived (2xx) html or css payload but
/// never captured with a 2xx response; revisit records count as captures.
/// Missing URIs are deduplicated by absolute URI (fragment excluded).
///
/// `round_start_override` substitutes the race supervisor's shared round
/// start for the crawler's own round_start event, so launch skew counts
/// against the crawler. Without a round_finish event the elapsed time runs to
/// the last observed event and the results are marked unfinished.
inline PerformanceResults compute_performance_results(
    const std::vector<WarcRecord>& records, const std::vector<ProgressEvent>& crawl_log,
    const std::string& crawler_name, int round,
    std::optional<Timestamp> round_start_override = std::nullopt) {
    PerformanceResults results;
    results.crawler_name = crawler_name;
    results.round = round;

    const ProgressEvent* start_event = nullptr;
    const ProgressEvent* finish_event = nullptr;
    for (const auto& event : crawl_log) {
        if (event.kind == EventKind::round_start && !start_event) start_event = &event;
        if (event.kind == EventKind::round_finish) finish_event = &event;
        if (event.kind == EventKind::page_complete) ++results.pages_archived;
    }
    if (!start_event && !round_start_override) {
        throw Error(
            "crawl log has no round_start event; explicit round boundary timestamps "
            "are required to compute a speedrun time");
    }
    Timestamp start = round_start_override ? *round_start_override : start_event->at;
    if (finish_event) {
        results.speedrun_seconds = compute_speedrun_time(start, finish_event->at);
        results.finished = true;
    } else if (!crawl_log.empty()) {
        results.speedrun_seconds = compute_speedrun_time(start, crawl_log.back().at);
        results.finished = false;
    } else {
        results.speedrun_seconds = 0.0;
        results.finished = false;
    }

    // Response-record scan: status counters, capture set, reference extraction.
    std::set<std::string> captured_ok;
    std::set<std::string> referenced;
    for (const auto& record : records) {
        if (record.record_type == RecordType::revisit && record.target_uri) {
            captured_ok.insert(detail::strip_fragment(*record.target_uri));
            continue;
        }
        if (record.record_type != RecordType::response) continue;
        if (!looks_like_http_response(record.payload)) continue;
        HttpResponseMeta meta;
        try {
            meta = parse_http_response(record.payload);
        } catch (const Error&) {
            continue;
        }
        if (meta.status_code == 404) {
            ++results.resources_404;
        } else if (meta.status_code >= 400 && meta.status_code <= 599) {
            ++results.resources_other_4xx_5xx;
        }
        if (!record.target_uri) continue;
        std::string uri = detail::strip_fragment(*record.target_uri);
        if (meta.status_code >= 200 && meta.status_code < 300) {
            captured_ok.insert(uri);
            ResourceCategory category = classify_resource(meta.declared_content_type, uri);
            if (category == ResourceCategory::html || category == ResourceCategory::css) {
                if (auto base = Uri::parse(uri); base && base->is_absolute()) {
                    auto refs = extract_references(http_body(record.payload), category, *base);
                    referenced.insert(refs.begin(), refs.end());
                }
            }
        }
    }

    // A missing resource is categorized by its URI alone: what the archive
    // holds for it (if anything) is an error page whose media type describes
    // the error, not the resource.
    for (const auto& uri : referenced) {
        if (captured_ok.count(uri)) continue;
        ++results.missing_by_type[classify_resource(std::nullopt, uri)];
    }
    return results;
}

/// Roll-up of a CDXJ index: capture totals by status class and category plus
/// the capture time range.
struct CdxSummary {
    std::uint64_t total_captures = 0;
    std::map<std::string, std::uint64_t> by_status_class;       // 2xx/3xx/4xx/5xx/other
    std::map<ResourceCategory, std::uint64_t> by_category;
    std::optional<std::string> first_capture;  // timestamp14
    std::optional<std::string> last_capture;
};

inline CdxSummary summarize_cdx(const std::vector<CdxjEntry>& entries) {
    CdxSummary summary;
    for (const auto& entry : entries) {
        ++summary.total_captures;
        std::string status_class = "other";
        if (entry.status >= 200 && entry.status <= 299) status_class = "2xx";
        else if (entry.status >= 300 && entry.status <= 399) status_class = "3xx";
        else if (entry.status >= 400 && entry.status <= 499) status_class = "4xx";
        else if (entry.status >= 500 && entry.status <= 599) status_class = "5xx";
        ++summary.by_status_class[status_class];
        std::optional<std::string> mime;
        if (!entry.mime.empty()) mime = entry.mime;
        ++summary.by_category[classify_resource(mime, entry.original_url)];
        if (!summary.first_capture || entry.timestamp14 < *summary.first_capture) {
            summary.first_capture = entry.timestamp14;
        }
        if (!summary.last_capture || entry.timestamp14 > *summary.last_capture) {
            summary.last_capture = entry.timestamp14;
        }
    }
    return summary;
}

inline nlohmann::ordered_json to_json(const CdxSummary& summary) {
    nlohmann::ordered_json out;
    out["total_captures"] = summary.total_captures;
    nlohmann::ordered_json by_status = nlohmann::ordered_json::object();
    for (const auto& [status_class, count] : summary.by_status_class) by_status[status_class] = count;
    out["by_status_class"] = by_status;
    nlohmann::ordered_json by_category = nlohmann::ordered_json::object();
    for (const auto& [category, count] : summary.by_category) {
        by_category[std::string(to_string(category))] = count;
    }
    out["by_category"] = by_category;
    if (summary.first_capture) out["first_capture"] = *summary.first_capture;
    if (summary.last_capture) out["last_capture"] = *summary.last_capture;
    return out;
}

}  // namespace warcrace
