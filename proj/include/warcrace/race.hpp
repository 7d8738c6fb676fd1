#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "warcrace/error.hpp"
#include "warcrace/events.hpp"
#include "warcrace/metrics.hpp"
#include "warcrace/subprocess.hpp"
#include "warcrace/time.hpp"
#include "warcrace/uri.hpp"
#include "warcrace/warc.hpp"

namespace warcrace {

/// Declarative contract by which an external crawler joins a race: a command
/// template with {seeds_file}, {output_dir} and {events_file} placeholders,
/// a per-round timeout, and contributor names for roster patching.
struct CrawlerAdapter {
    std::string name;
    std::string command_template;
    double timeout_seconds = 1800.0;  // Table-1-scale rounds finish well within 30 minutes
    std::vector<std::string> contributors;
};

inline CrawlerAdapter adapter_from_json(const nlohmann::json& in) {
    CrawlerAdapter adapter;
    try {
        adapter.name = in.at("name").get<std::string>();
        adapter.command_template = in.at("command_template").get<std::string>();
        adapter.timeout_seconds = in.value("timeout_seconds", 1800.0);
        if (in.contains("contributors")) {
            adapter.contributors = in.at("contributors").get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad adapter file: ") + e.what());
    }
    for (const char* placeholder : {"{seeds_file}", "{output_dir}", "{events_file}"}) {
        if (adapter.command_template.find(placeholder) == std::string::npos) {
            throw Error("adapter command_template missing placeholder " + std::string(placeholder));
        }
    }
    if (adapter.timeout_seconds <= 0) throw Error("adapter timeout must be positive");
    return adapter;
}

inline CrawlerAdapter load_adapter_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open adapter file: " + path.string());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad adapter file " + path.string() + ": " + e.what());
    }
    return adapter_from_json(parsed);
}

/// One URI per line; '#' comments and blank lines ignored; duplicates
/// preserved. Every line must parse as an absolute URI or the load fails
/// with its line number.
inline std::vector<std::string> load_seed_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open seeds file: " + path.string());
    std::vector<std::string> seeds;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        auto parsed = Uri::parse(trimmed);
        if (!parsed || !parsed->is_absolute() || parsed->host.empty()) {
            throw Error("seeds file " + path.string() + " line " + std::to_string(line_number) +
                        ": not an absolute URI: " + std::string(trimmed));
        }
        seeds.emplace_back(trimmed);
    }
    return seeds;
}

/// One crawler's view of a round.
struct CrawlerRoundState {
    std::vector<ProgressEvent> events;
    std::vector<std::string> warc_paths;
    PerformanceResults results;
    int exit_code = 0;
    bool finished = false;   // saw a round_finish event
    bool timed_out = false;
};

struct RoundResult {
    int round = 1;
    std::vector<std::string> seeds;
    std::map<std::string, CrawlerRoundState> per_crawler;
    std::optional<std::string> winner;
};

/// The winner finished the whole seed set (a round_finish event and all
/// seeds archived) with the smallest speedrun time; millisecond ties break
/// to the lexicographically smaller name. Nullopt when nobody finished.
///
/// Rounds reconstructed from bare results files carry no events; for those,
/// completion falls back to the results' finished flag, and the seed-count
/// check is skipped when the seed list is unknown.
inline std::optional<std::string> determine_winner(const RoundResult& result) {
    std::optional<std::string> best;
    double best_time = 0.0;
    for (const auto& [name, state] : result.per_crawler) {
        bool has_events = !state.events.empty();
        bool complete = has_events ? state.finished : state.results.finished;
        if (!complete) continue;
        if (!result.seeds.empty() && state.results.pages_archived != result.seeds.size()) continue;
        double time = state.results.speedrun_seconds;
        if (!best || time < best_time || (time == best_time && name < *best)) {
            best = name;
            best_time = time;
        }
    }
    return best;
}

/// For rendering only: the crawler with the most pages archived, used when no
/// one finished.
inline std::optional<std::string> current_leader(const RoundResult& result) {
    std::optional<std::string> leader;
    std::uint64_t best_pages = 0;
    for (const auto& [name, state] : result.per_crawler) {
        if (!leader || state.results.pages_archived > best_pages) {
            leader = name;
            best_pages = state.results.pages_archived;
        }
    }
    return leader;
}

/// Timestamp at which a crawler archived its ⌈n/2⌉-th page (n = seed count),
/// the "halfway point" of a round. Nullopt if the crawler never got that far.
inline std::optional<Timestamp> halfway_split(const RoundResult& result,
                                              const std::string& crawler) {
    auto it = result.per_crawler.find(crawler);
    if (it == result.per_crawler.end() || result.seeds.empty()) return std::nullopt;
    std::size_t needed = (result.seeds.size() + 1) / 2;
    std::size_t seen = 0;
    for (const auto& event : it->second.events) {
        if (event.kind == EventKind::page_complete && ++seen == needed) return event.at;
    }
    return std::nullopt;
}

inline nlohmann::ordered_json to_json(const RoundResult& result) {
    nlohmann::ordered_json out;
    out["round"] = result.round;
    out["seeds"] = result.seeds;
    nlohmann::ordered_json crawlers = nlohmann::ordered_json::object();
    for (const auto& [name, state] : result.per_crawler) {
        nlohmann::ordered_json entry;
        nlohmann::ordered_json events = nlohmann::ordered_json::array();
        for (const auto& event : state.events) {
            events.push_back(nlohmann::ordered_json::parse(to_jsonl(event)));
        }
        entry["events"] = events;
        entry["warc_paths"] = state.warc_paths;
        entry["results"] = to_json(state.results);
        entry["exit_code"] = state.exit_code;
        entry["finished"] = state.finished;
        entry["timed_out"] = state.timed_out;
        crawlers[name] = entry;
    }
    out["per_crawler"] = crawlers;
    if (result.winner) out["winner"] = *result.winner;
    return out;
}

inline RoundResult round_result_from_json(const nlohmann::json& in) {
    RoundResult result;
    try {
        result.round = in.at("round").get<int>();
        result.seeds = in.at("seeds").get<std::vector<std::string>>();
        for (const auto& [name, entry] : in.at("per_crawler").items()) {
            CrawlerRoundState state;
            for (const auto& event : entry.at("events")) {
                if (auto parsed = parse_event_line(event.dump())) state.events.push_back(*parsed);
            }
            state.warc_paths = entry.at("warc_paths").get<std::vector<std::string>>();
            state.results = performance_results_from_json(entry.at("results"));
            state.exit_code = entry.value("exit_code", 0);
            state.finished = entry.value("finished", false);
            state.timed_out = entry.value("timed_out", false);
            state.results.finished = state.finished;
            result.per_crawler[name] = std::move(state);
        }
        if (in.contains("winner")) result.winner = in.at("winner").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad round file: ") + e.what());
    }
    return result;
}

struct RunRoundOptions {
    int poll_interval_ms = 5;
    bool gzip_hint = true;  // unused by the supervisor; kept for adapters that ask
};

namespace detail {

inline std::string substitute_placeholders(std::string command, const std::string& seeds_file,
                                           const std::string& output_dir,
                                           const std::string& events_file) {
    auto replace_all = [&command](std::string_view placeholder, const std::string& value) {
        std::size_t pos = 0;
        while ((pos = command.find(placeholder, pos)) != std::string::npos) {
            command.replace(pos, placeholder.size(), value);
            pos += value.size();
        }
    };
    replace_all("{seeds_file}", seeds_file);
    replace_all("{output_dir}", output_dir);
    replace_all("{events_file}", events_file);
    return command;
}

// Incremental JSONL tail: parses only complete new lines each poll.
class EventTail {
public:
    explicit EventTail(std::filesystem::path path) : path_(std::move(path)) {}

    void poll(std::vector<ProgressEvent>& sink) {
        std::ifstream in(path_, std::ios::binary);
        if (!in) return;
        in.seekg(static_cast<std::streamoff>(consumed_));
        std::string chunk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        buffer_ += chunk;
        consumed_ += chunk.size();
        std::size_t start = 0;
        while (true) {
            auto nl = buffer_.find('\n', start);
            if (nl == std::string::npos) break;
            std::string line = buffer_.substr(start, nl - start);
            start = nl + 1;
            if (line.empty()) continue;
            try {
                if (auto event = parse_event_line(line)) sink.push_back(*event);
            } catch (const Error&) {
                // damaged line; the results computation works from what parsed
            }
        }
        buffer_.erase(0, start);
    }

private:
    std::filesystem::path path_;
    std::uint64_t consumed_ = 0;
    std::string buffer_;
};

}  // namespace detail

/// Run one speedrun round: launch every adapter against the shared seed list,
/// tail their events files, enforce per-adapter timeouts, then analyze each
/// crawler's WARC output and persist the round.
///
/// A single shared round_start timestamp is taken before any launch, so
/// launch skew counts against every crawler equally. A crawler that exits
/// nonzero or times out before its round_finish is marked unfinished and
/// cannot win; the round errors only if every crawler fails.
///
/// Layout under `workdir`: rounds/round-<N>/seeds.txt, then per crawler
/// events.jsonl, warcs/, results.json, and stdout/stderr logs, plus the
/// persisted round.json.
inline RoundResult run_round(const std::vector<CrawlerAdapter>& adapters,
                             const std::vector<std::string>& seeds, int round,
                             const std::filesystem::path& workdir, RunRoundOptions options = {}) {
    namespace fs = std::filesystem;
    if (adapters.size() < 2) throw Error("run_round needs at least two adapters");
    if (seeds.empty()) throw Error("run_round needs a non-empty seed list");
    {
        std::set<std::string> names;
        for (const auto& adapter : adapters) {
            if (!names.insert(adapter.name).second) {
                throw Error("duplicate adapter name: " + adapter.name);
            }
        }
    }

    fs::path round_dir = workdir / "rounds" / ("round-" + std::to_string(round));
    fs::create_directories(round_dir);
    fs::path seeds_file = round_dir / "seeds.txt";
    {
        std::ofstream out(seeds_file, std::ios::trunc);
        for (const auto& seed : seeds) out << seed << '\n';
    }

    struct Runner {
        const CrawlerAdapter* adapter;
        fs::path dir;
        fs::path events_file;
        fs::path warc_dir;
        ChildProcess child;
        detail::EventTail tail{""};
        std::vector<ProgressEvent> events;
        std::optional<int> exit_code;
        bool timed_out = false;
    };

    std::vector<Runner> runners;
    runners.reserve(adapters.size());
    for (const auto& adapter : adapters) {
        Runner runner;
        runner.adapter = &adapter;
        runner.dir = round_dir / adapter.name;
        runner.events_file = runner.dir / "events.jsonl";
        runner.warc_dir = runner.dir / "warcs";
        fs::create_directories(runner.warc_dir);
        fs::remove(runner.events_file);
        runner.tail = detail::EventTail(runner.events_file);
        runners.push_back(std::move(runner));
    }

    // The shared round beginning: recorded before any crawler launches.
    Timestamp round_start = now_utc();

    for (auto& runner : runners) {
        std::string command = detail::substitute_placeholders(
            runner.adapter->command_template, seeds_file.string(), runner.warc_dir.string(),
            runner.events_file.string());
        runner.child = ChildProcess::spawn(command, runner.dir / "stdout.log",
                                           runner.dir / "stderr.log");
    }

    std::size_t still_running = runners.size();
    while (still_running > 0) {
        still_running = 0;
        Timestamp now = now_utc();
        for (auto& runner : runners) {
            if (runner.exit_code) continue;
            runner.tail.poll(runner.events);
            double elapsed =
                now < round_start ? 0.0 : compute_speedrun_time(round_start, now);
            if (elapsed > runner.adapter->timeout_seconds) {
                runner.child.kill_group();
                runner.timed_out = true;
            }
            runner.exit_code = runner.child.poll_exit();
            if (!runner.exit_code) ++still_running;
        }
        if (still_running > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(options.poll_interval_ms));
        }
    }

    RoundResult result;
    result.round = round;
    result.seeds = seeds;
    for (auto& runner : runners) {
        runner.tail.poll(runner.events);  // drain whatever was written at the end
        CrawlerRoundState state;
        state.events = std::move(runner.events);
        state.exit_code = runner.exit_code.value_or(-1);
        state.timed_out = runner.timed_out;
        state.finished = std::any_of(state.events.begin(), state.events.end(),
                                     [](const ProgressEvent& e) {
                                         return e.kind == EventKind::round_finish;
                                     });

        std::vector<WarcRecord> records;
        for (const auto& entry : fs::directory_iterator(runner.warc_dir)) {
            if (!entry.is_regular_file()) continue;
            auto name = entry.path().filename().string();
            if (name.ends_with(".warc") || name.ends_with(".warc.gz")) {
                state.warc_paths.push_back(entry.path().string());
            }
        }
        std::sort(state.warc_paths.begin(), state.warc_paths.end());
        for (const auto& path : state.warc_paths) {
            auto file_records = read_warc_file(path);
            records.insert(records.end(), std::make_move_iterator(file_records.begin()),
                           std::make_move_iterator(file_records.end()));
        }

        try {
            state.results = compute_performance_results(records, state.events,
                                                        runner.adapter->name, round, round_start);
        } catch (const Error&) {
            // a crawler that crashed before writing anything usable
            state.results.crawler_name = runner.adapter->name;
            state.results.round = round;
        }
        state.results.finished = state.finished;
        result.per_crawler[runner.adapter->name] = std::move(state);
    }
    bool all_failed = std::all_of(
        result.per_crawler.begin(), result.per_crawler.end(), [](const auto& entry) {
            return !entry.second.finished && entry.second.exit_code != 0;
        });
    if (all_failed) {
        throw Error("round " + std::to_string(round) + ": every crawler failed");
    }

    result.winner = determine_winner(result);

    for (const auto& [name, state] : result.per_crawler) {
        save_performance_results(state.results,
                                 round_dir / name / results_filename(name, round));
    }
    {
        std::ofstream out(round_dir / "round.json", std::ios::trunc);
        out << to_json(result).dump(2) << '\n';
    }
    return result;
}

}  // namespace warcrace
