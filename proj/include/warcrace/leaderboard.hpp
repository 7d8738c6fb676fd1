#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "warcrace/race.hpp"

namespace warcrace {

/// "H:MM:SS", rounded to the nearest whole second only at rendering time
/// (1173.6 s renders as "0:19:34").
inline std::string format_hms(double seconds) {
    long long total = std::llround(seconds);
    if (total < 0) total = 0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld:%02lld:%02lld", total / 3600, (total % 3600) / 60,
                  total % 60);
    return buf;
}

struct Leaderboard {
    struct Cell {
        std::optional<double> seconds;  // absent when the crawler is missing from the round
        bool finished = false;
        std::uint64_t pages_archived = 0;
    };
    struct Row {
        int round = 0;
        std::map<std::string, Cell> cells;
        std::optional<std::string> winner;
        std::optional<std::string> leader;  // only meaningful when winner is absent
    };

    std::vector<std::string> crawlers;  // column order (sorted by name)
    std::vector<Row> rows;
    std::map<std::string, double> averages;        // mean over rounds the crawler finished
    std::map<std::string, int> finished_rounds;    // how many rounds fed each average
    std::map<std::string, int> overall_winner_counts;
};

/// Aggregate per-round results into the Table-1 shape: one row per round, a
/// per-crawler average over the rounds it finished, and win counts. A crawler
/// missing from some rounds (or unfinished in them) still gets an average
/// over its finished rounds; the rendering flags it.
inline Leaderboard build_leaderboard(const std::vector<RoundResult>& rounds) {
    Leaderboard board;
    std::map<std::string, double> totals;
    for (const auto& round : rounds) {
        Leaderboard::Row row;
        row.round = round.round;
        for (const auto& [name, state] : round.per_crawler) {
            Leaderboard::Cell cell;
            cell.seconds = state.results.speedrun_seconds;
            cell.finished = state.events.empty() ? state.results.finished : state.finished;
            cell.pages_archived = state.results.pages_archived;
            row.cells[name] = cell;
            if (std::find(board.crawlers.begin(), board.crawlers.end(), name) ==
                board.crawlers.end()) {
                board.crawlers.push_back(name);
            }
            if (cell.finished) {
                totals[name] += *cell.seconds;
                ++board.finished_rounds[name];
            }
        }
        row.winner = round.winner ? round.winner : determine_winner(round);
        if (row.winner) {
            ++board.overall_winner_counts[*row.winner];
        } else {
            row.leader = current_leader(round);
        }
        board.rows.push_back(std::move(row));
    }
    std::sort(board.crawlers.begin(), board.crawlers.end());
    std::sort(board.rows.begin(), board.rows.end(),
              [](const Leaderboard::Row& a, const Leaderboard::Row& b) { return a.round < b.round; });
    for (const auto& [name, total] : totals) {
        board.averages[name] = total / board.finished_rounds[name];
    }
    return board;
}

/// Markdown table mirroring the published speedrun-results shape: a round
/// column, one time column per crawler (winner bolded), an average row, and
/// a rounds-won row. Unfinished cells render as DNF with the page count; an
/// average over fewer rounds than the table shows is marked with '*'.
inline std::string render_markdown(const Leaderboard& board) {
    std::string out = "| Round |";
    for (const auto& name : board.crawlers) out += " " + name + " |";
    out += "\n|" + std::string(" --- |");
    for (std::size_t i = 0; i < board.crawlers.size(); ++i) out += " --- |";
    out += "\n";

    for (const auto& row : board.rows) {
        out += "| " + std::to_string(row.round) + " |";
        for (const auto& name : board.crawlers) {
            auto it = row.cells.find(name);
            if (it == row.cells.end()) {
                out += " — |";
                continue;
            }
            const auto& cell = it->second;
            std::string text;
            if (cell.finished) {
                text = format_hms(*cell.seconds);
                if (row.winner && *row.winner == name) text = "**" + text + "**";
            } else {
                text = "DNF (" + std::to_string(cell.pages_archived) + " pages)";
                if (row.leader && *row.leader == name) text += " (leader)";
            }
            out += " " + text + " |";
        }
        out += "\n";
    }

    bool any_partial = false;
    out += "| Average speedrun time |";
    for (const auto& name : board.crawlers) {
        auto it = board.averages.find(name);
        if (it == board.averages.end()) {
            out += " — |";
            continue;
        }
        std::string text = format_hms(it->second);
        if (board.finished_rounds.at(name) != static_cast<int>(board.rows.size())) {
            text += "*";
            any_partial = true;
        }
        out += " " + text + " |";
    }
    out += "\n| Rounds won |";
    for (const auto& name : board.crawlers) {
        auto it = board.overall_winner_counts.find(name);
        out += " " + std::to_string(it == board.overall_winner_counts.end() ? 0 : it->second) +
               " |";
    }
    out += "\n";
    if (any_partial) out += "\n\\* average over the rounds this crawler finished\n";
    return out;
}

inline nlohmann::ordered_json to_json(const Leaderboard& board) {
    nlohmann::ordered_json out;
    out["crawlers"] = board.crawlers;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : board.rows) {
        nlohmann::ordered_json entry;
        entry["round"] = row.round;
        nlohmann::ordered_json cells = nlohmann::ordered_json::object();
        for (const auto& [name, cell] : row.cells) {
            nlohmann::ordered_json c;
            if (cell.seconds) c["speedrun_seconds"] = *cell.seconds;
            c["rendered"] = cell.finished
                                ? format_hms(cell.seconds.value_or(0.0))
                                : "DNF";
            c["finished"] = cell.finished;
            c["pages_archived"] = cell.pages_archived;
            cells[name] = c;
        }
        entry["cells"] = cells;
        if (row.winner) entry["winner"] = *row.winner;
        if (row.leader) entry["leader"] = *row.leader;
        rows.push_back(entry);
    }
    out["rows"] = rows;
    nlohmann::ordered_json averages = nlohmann::ordered_json::object();
    for (const auto& [name, seconds] : board.averages) {
        nlohmann::ordered_json entry;
        entry["speedrun_seconds"] = seconds;
        entry["rendered"] = format_hms(seconds);
        entry["rounds_counted"] = board.finished_rounds.at(name);
        averages[name] = entry;
    }
    out["averages"] = averages;
    nlohmann::ordered_json wins = nlohmann::ordered_json::object();
    for (const auto& name : board.crawlers) {
        auto it = board.overall_winner_counts.find(name);
        wins[name] = it == board.overall_winner_counts.end() ? 0 : it->second;
    }
    out["overall_winner_counts"] = wins;
    return out;
}

/// Build a synthetic round from bare results files (no events): the CLI path
/// for leaderboards over persisted results.
inline RoundResult round_from_results(int round, const std::vector<PerformanceResults>& results) {
    RoundResult out;
    out.round = round;
    for (const auto& result : results) {
        CrawlerRoundState state;
        state.results = result;
        state.finished = result.finished;
        out.per_crawler[result.crawler_name] = std::move(state);
    }
    out.winner = determine_winner(out);
    return out;
}

}  // namespace warcrace
