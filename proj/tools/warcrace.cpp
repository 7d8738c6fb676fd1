// warcrace: crawler speedruns, WARC analytics, CDXJ indexing, and
// performance-to-game mapping behind one subcommand CLI. Stages hand off
// through files, so each can run (and be tested) alone.

#include <fnmatch.h>
#include <signal.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "warcrace/cdxj.hpp"
#include "warcrace/gamemap.hpp"
#include "warcrace/leaderboard.hpp"
#include "warcrace/metrics.hpp"
#include "warcrace/race.hpp"
#include "warcrace/simcrawler.hpp"
#include "warcrace/warc.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOperational = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_stop_requested{false};

void handle_stop_signal(int) { g_stop_requested = true; }

bool has_glob_chars(const std::string& text) {
    return text.find_first_of("*?[") != std::string::npos;
}

// Expand one glob against the filesystem ("*" crosses directory separators,
// so "rounds/round-*/**/results.json" works). A plain path passes through.
std::vector<std::string> expand_glob(const std::string& pattern) {
    if (!has_glob_chars(pattern)) return {pattern};
    auto first_glob = pattern.find_first_of("*?[");
    auto base_end = pattern.rfind('/', first_glob);
    fs::path base = base_end == std::string::npos ? fs::path(".") : fs::path(pattern.substr(0, base_end));
    std::vector<std::string> out;
    std::error_code ec;
    for (fs::recursive_directory_iterator it(base, ec), end; it != end; it.increment(ec)) {
        if (ec) break;
        if (!it->is_regular_file()) continue;
        std::string candidate = it->path().lexically_normal().generic_string();
        std::string normalized_pattern = fs::path(pattern).lexically_normal().generic_string();
        if (fnmatch(normalized_pattern.c_str(), candidate.c_str(), 0) == 0) {
            out.push_back(candidate);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<warcrace::WarcRecord> read_warcs(const std::vector<std::string>& paths) {
    std::vector<warcrace::WarcRecord> records;
    for (const auto& path : paths) {
        if (!fs::exists(path)) throw warcrace::Error("missing input file: " + path);
        auto file_records = warcrace::read_warc_file(path);
        records.insert(records.end(), std::make_move_iterator(file_records.begin()),
                       std::make_move_iterator(file_records.end()));
    }
    return records;
}

int cmd_analyze(const std::vector<std::string>& warc_paths, const std::string& events_path,
                const std::string& name, int round, const std::string& out_path) {
    if (!fs::exists(events_path)) throw warcrace::Error("missing input file: " + events_path);
    auto records = read_warcs(warc_paths);
    auto events = warcrace::read_events_file(events_path);
    auto results = warcrace::compute_performance_results(records, events, name, round);
    if (fs::path(out_path).has_parent_path()) {
        fs::create_directories(fs::path(out_path).parent_path());
    }
    warcrace::save_performance_results(results, out_path);
    std::cout << "analyzed " << records.size() << " records for " << name << " round " << round
              << ": pages=" << results.pages_archived
              << " speedrun=" << warcrace::format_hms(results.speedrun_seconds)
              << " 404s=" << results.resources_404
              << " other-4xx-5xx=" << results.resources_other_4xx_5xx << " -> " << out_path
              << "\n";
    return kExitOk;
}

int cmd_cdx_index(const std::string& warc_path, const std::string& out_path) {
    if (!fs::exists(warc_path)) throw warcrace::Error("missing input file: " + warc_path);
    auto records = warcrace::read_warc_file(warc_path);
    std::size_t skipped = 0;
    auto entries =
        warcrace::generate_cdxj(records, fs::path(warc_path).filename().string(), &skipped);
    warcrace::write_cdxj_file(out_path, entries);
    std::cout << "indexed " << entries.size() << " captures -> " << out_path;
    if (skipped > 0) std::cout << " (" << skipped << " records without a target URI skipped)";
    std::cout << "\n";
    return kExitOk;
}

int cmd_cdx_summary(const std::string& cdxj_path) {
    if (!fs::exists(cdxj_path)) throw warcrace::Error("missing input file: " + cdxj_path);
    auto entries = warcrace::read_cdxj_file(cdxj_path);
    auto summary = warcrace::summarize_cdx(entries);
    std::cout << warcrace::to_json(summary).dump(2) << "\n";
    return kExitOk;
}

int cmd_leaderboard(const std::vector<std::string>& patterns, const std::string& format) {
    std::vector<std::string> paths;
    for (const auto& pattern : patterns) {
        auto expanded = expand_glob(pattern);
        if (expanded.empty()) {
            throw warcrace::Error("no results files match: " + pattern);
        }
        paths.insert(paths.end(), expanded.begin(), expanded.end());
    }
    std::map<int, std::vector<warcrace::PerformanceResults>> by_round;
    for (const auto& path : paths) {
        if (!fs::exists(path)) throw warcrace::Error("missing input file: " + path);
        auto results = warcrace::load_performance_results(path);
        by_round[results.round].push_back(std::move(results));
    }
    std::vector<warcrace::RoundResult> rounds;
    for (const auto& [round, results] : by_round) {
        rounds.push_back(warcrace::round_from_results(round, results));
    }
    auto board = warcrace::build_leaderboard(rounds);
    if (format == "json") {
        std::cout << warcrace::to_json(board).dump(2) << "\n";
    } else {
        std::cout << warcrace::render_markdown(board);
    }
    return kExitOk;
}

int cmd_gamemap(const std::vector<std::string>& results_paths, const std::string& profile_path,
                const std::string& out_config, const std::string& out_script,
                const std::vector<std::string>& adapter_paths, const std::string& roster_path,
                const std::string& layout_path, const std::string& out_roster) {
    std::vector<warcrace::PerformanceResults> results;
    std::map<std::string, std::string> digest_by_name;
    for (const auto& path : results_paths) {
        if (!fs::exists(path)) throw warcrace::Error("missing input file: " + path);
        auto loaded = warcrace::load_performance_results(path);
        digest_by_name[loaded.crawler_name] = warcrace::results_digest(loaded);
        results.push_back(std::move(loaded));
    }
    auto profile = warcrace::load_game_profile(profile_path);
    auto ranking = warcrace::rank_crawlers(results);

    std::map<std::string, std::vector<std::string>> contributors;
    for (const auto& path : adapter_paths) {
        auto adapter = warcrace::load_adapter_file(path);
        contributors[adapter.name] = adapter.contributors;
    }
    std::vector<std::string> digests;
    for (const auto& tier : ranking) digests.push_back(digest_by_name.at(tier.crawler_name));

    auto config = warcrace::assign_perks(ranking, profile, contributors, digests);
    {
        std::ofstream out(out_config, std::ios::binary | std::ios::trunc);
        if (!out) throw warcrace::Error("cannot write game config: " + out_config);
        out << warcrace::to_json(config).dump(2) << "\n";
    }
    std::cout << "game config for " << profile.game_name << " -> " << out_config << "\n";
    for (const auto& tier : ranking) {
        std::cout << "  rank " << tier.rank << " (" << tier.tier_label
                  << "): " << tier.crawler_name << "\n";
    }

    if (!out_script.empty()) {
        auto script = warcrace::emit_automation_script(config, profile);
        std::ofstream out(out_script, std::ios::binary | std::ios::trunc);
        if (!out) throw warcrace::Error("cannot write automation script: " + out_script);
        out << warcrace::to_jsonl(script);
        std::cout << "automation script with " << script.size() << " actions -> " << out_script
                  << "\n";
    }

    if (!out_roster.empty() || !roster_path.empty() || !layout_path.empty()) {
        if (roster_path.empty() || layout_path.empty() || out_roster.empty()) {
            throw warcrace::Error("roster patching needs --roster, --layout and --out-roster");
        }
        if (!fs::exists(roster_path)) throw warcrace::Error("missing input file: " + roster_path);
        std::ifstream in(roster_path, std::ios::binary);
        std::string roster((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        auto layout = warcrace::load_roster_layout(layout_path);
        std::string patched = warcrace::patch_roster(roster, layout, config);
        std::ofstream out(out_roster, std::ios::binary | std::ios::trunc);
        if (!out) throw warcrace::Error("cannot write roster: " + out_roster);
        out << patched;
        std::cout << "patched roster for "
                  << (config.assignments.empty() ? std::string("(nobody)")
                                                 : config.assignments.front().team_name)
                  << " -> " << out_roster << "\n";
    }
    return kExitOk;
}

int cmd_race(const std::string& seeds_path, const std::vector<std::string>& adapter_paths,
             int rounds, const std::string& workdir) {
    if (!fs::exists(seeds_path)) throw warcrace::Error("missing input file: " + seeds_path);
    auto seeds = warcrace::load_seed_list(seeds_path);
    std::vector<warcrace::CrawlerAdapter> adapters;
    for (const auto& path : adapter_paths) {
        if (!fs::exists(path)) throw warcrace::Error("missing input file: " + path);
        adapters.push_back(warcrace::load_adapter_file(path));
    }
    fs::create_directories(workdir);

    std::vector<warcrace::RoundResult> round_results;
    for (int round = 1; round <= rounds; ++round) {
        std::cout << "round " << round << ": " << seeds.size() << " seeds, " << adapters.size()
                  << " crawlers..." << std::endl;
        auto result = warcrace::run_round(adapters, seeds, round, workdir);
        if (result.winner) {
            std::cout << "round " << round << " winner: " << *result.winner << " ("
                      << warcrace::format_hms(
                             result.per_crawler.at(*result.winner).results.speedrun_seconds)
                      << ")\n";
        } else {
            auto leader = warcrace::current_leader(result);
            std::cout << "round " << round << ": no crawler finished"
                      << (leader ? " (leader: " + *leader + ")" : "") << "\n";
        }
        round_results.push_back(std::move(result));
    }

    auto board = warcrace::build_leaderboard(round_results);
    std::string rendered = warcrace::render_markdown(board);
    std::cout << "\n" << rendered;
    std::ofstream out(fs::path(workdir) / "leaderboard.md", std::ios::trunc);
    out << rendered;
    return kExitOk;
}

int cmd_sim_serve(const std::string& site, const std::string& faults_path, int port) {
    std::vector<warcrace::FaultRule> faults;
    if (!faults_path.empty()) {
        if (!fs::exists(faults_path)) throw warcrace::Error("missing input file: " + faults_path);
        faults = warcrace::load_fault_rules(faults_path);
    }
    auto server = warcrace::serve_fixture(site, std::move(faults),
                                          static_cast<std::uint16_t>(port));
    std::cout << "serving " << site << " at " << server->base_url() << " (" << faults.size()
              << " fault rules); Ctrl-C to stop" << std::endl;
    ::signal(SIGINT, handle_stop_signal);
    ::signal(SIGTERM, handle_stop_signal);
    while (!g_stop_requested) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server->stop();
    std::cout << "served " << server->requests_served() << " requests\n";
    return kExitOk;
}

int cmd_sim_crawl(const std::string& seeds_path, int delay_ms, int jitter_ms,
                  std::uint64_t seed, const std::string& out_dir, const std::string& events_path) {
    if (!fs::exists(seeds_path)) throw warcrace::Error("missing input file: " + seeds_path);
    auto seeds = warcrace::load_seed_list(seeds_path);
    warcrace::SpeedProfile profile;
    profile.per_page_delay_ms = delay_ms;
    profile.jitter_ms = jitter_ms;
    profile.seed = seed;
    auto result = warcrace::run_sim_crawl(seeds, profile, out_dir, events_path);
    std::cout << "crawled " << result.pages_archived << " pages, " << result.event_count
              << " events -> " << result.warc_paths.front() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crawler speedruns and web-archive analytics"};
    app.require_subcommand(1);

    // race
    auto* race = app.add_subcommand("race", "run timed crawler speedrun rounds");
    std::string race_seeds, race_workdir = "race-workdir";
    std::vector<std::string> race_adapters;
    int race_rounds = 1;
    race->add_option("--seeds", race_seeds, "seed list file (one URI per line)")->required();
    race->add_option("--adapter", race_adapters, "crawler adapter JSON file (repeatable)")
        ->required()
        ->expected(-2);
    race->add_option("--rounds", race_rounds, "number of rounds")->check(CLI::PositiveNumber);
    race->add_option("--workdir", race_workdir, "working directory for round artifacts");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "compute a performance results file from WARCs");
    std::vector<std::string> analyze_warcs;
    std::string analyze_events, analyze_name, analyze_out;
    int analyze_round = 1;
    analyze->add_option("--warc", analyze_warcs, "WARC file (repeatable)")->required();
    analyze->add_option("--events", analyze_events, "crawler events JSONL file")->required();
    analyze->add_option("--name", analyze_name, "crawler name")->required();
    analyze->add_option("--round", analyze_round, "round number")->check(CLI::PositiveNumber);
    analyze->add_option("--out", analyze_out, "output results JSON path")->required();

    // cdx-index
    auto* cdx_index = app.add_subcommand("cdx-index", "generate a CDXJ index from a WARC file");
    std::string index_warc, index_out;
    cdx_index->add_option("--warc", index_warc, "WARC file")->required();
    cdx_index->add_option("--out", index_out, "output CDXJ path")->required();

    // cdx-summary
    auto* cdx_summary = app.add_subcommand("cdx-summary", "summarize a CDXJ index");
    std::string summary_path;
    cdx_summary->add_option("cdxj", summary_path, "CDXJ index file")->required();

    // gamemap
    auto* gamemap = app.add_subcommand("gamemap", "map round results to a game configuration");
    std::vector<std::string> gm_results, gm_adapters;
    std::string gm_profile, gm_out_config, gm_out_script, gm_roster, gm_layout, gm_out_roster;
    gamemap->add_option("--results", gm_results, "results JSON file (repeatable)")
        ->required()
        ->expected(-2);
    gamemap->add_option("--profile", gm_profile, "game profile JSON")->required();
    gamemap->add_option("--out-config", gm_out_config, "output game config path")->required();
    gamemap->add_option("--out-script", gm_out_script, "output automation script (JSONL)");
    gamemap->add_option("--adapter", gm_adapters,
                        "adapter JSON for contributor names (repeatable)");
    gamemap->add_option("--roster", gm_roster, "roster text file to patch");
    gamemap->add_option("--layout", gm_layout, "roster layout descriptor JSON");
    gamemap->add_option("--out-roster", gm_out_roster, "output patched roster path");

    // leaderboard
    auto* leaderboard = app.add_subcommand("leaderboard", "build a leaderboard from results files");
    std::vector<std::string> lb_patterns;
    std::string lb_format = "markdown";
    leaderboard->add_option("results", lb_patterns, "results files or globs")->required();
    leaderboard->add_option("--format", lb_format, "output format")
        ->check(CLI::IsMember({"markdown", "json"}));

    // sim-serve
    auto* sim_serve = app.add_subcommand("sim-serve", "serve the fixture site with fault injection");
    std::string serve_site, serve_faults;
    int serve_port = 0;
    sim_serve->add_option("--site", serve_site, "fixture site directory")->required();
    sim_serve->add_option("--faults", serve_faults, "fault rules JSON file");
    sim_serve->add_option("--port", serve_port, "TCP port (0 = ephemeral)")
        ->check(CLI::Range(0, 65535));

    // sim-crawl
    auto* sim_crawl = app.add_subcommand("sim-crawl", "run the simulated crawler over a seed list");
    std::string crawl_seeds, crawl_out = "sim-out", crawl_events = "events.jsonl";
    int crawl_delay = 0, crawl_jitter = 0;
    std::uint64_t crawl_seed = 0;
    sim_crawl->add_option("--seeds", crawl_seeds, "seed list file")->required();
    sim_crawl->add_option("--delay-ms", crawl_delay, "per-page delay in ms")
        ->check(CLI::NonNegativeNumber);
    sim_crawl->add_option("--jitter-ms", crawl_jitter, "per-page jitter bound in ms")
        ->check(CLI::NonNegativeNumber);
    sim_crawl->add_option("--seed", crawl_seed, "jitter RNG seed");
    sim_crawl->add_option("--out", crawl_out, "WARC output directory");
    sim_crawl->add_option("--events", crawl_events, "events JSONL output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*race) return cmd_race(race_seeds, race_adapters, race_rounds, race_workdir);
        if (*analyze)
            return cmd_analyze(analyze_warcs, analyze_events, analyze_name, analyze_round,
                               analyze_out);
        if (*cdx_index) return cmd_cdx_index(index_warc, index_out);
        if (*cdx_summary) return cmd_cdx_summary(summary_path);
        if (*gamemap)
            return cmd_gamemap(gm_results, gm_profile, gm_out_config, gm_out_script, gm_adapters,
                               gm_roster, gm_layout, gm_out_roster);
        if (*leaderboard) return cmd_leaderboard(lb_patterns, lb_format);
        if (*sim_serve) return cmd_sim_serve(serve_site, serve_faults, serve_port);
        if (*sim_crawl)
            return cmd_sim_crawl(crawl_seeds, crawl_delay, crawl_jitter, crawl_seed, crawl_out,
                                 crawl_events);
    } catch (const warcrace::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOperational;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitOperational;
    }
    return kExitUsage;
}
