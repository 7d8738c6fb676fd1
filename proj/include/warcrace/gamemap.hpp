#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "warcrace/digest.hpp"
#include "warcrace/error.hpp"
#include "warcrace/metrics.hpp"

namespace warcrace {

struct TierAssignment {
    std::string crawler_name;
    int rank = 1;  // 1 = best
    std::string tier_label;
};

struct UiOption {
    enum class Action { click, key };
    Action action = Action::click;
    int x = 0;
    int y = 0;
    std::optional<std::string> key_code;
};

/// Declarative mapping from performance rank to in-game traits, plus the
/// optional screen layout the automation script is generated from.
struct GameProfile {
    std::string game_name;
    struct RankEntry {
        std::vector<std::string> perks;
        std::string weapon_tier;
        std::map<std::string, double> ratings;  // speed/passing/kicking + extras
    };
    std::map<int, RankEntry> rank_table;
    std::optional<std::map<std::string, UiOption>> ui_layout;
    // rating name -> true when a smaller number is better (e.g. a 40-yard
    // dash time); anything unlisted is higher-is-better
    std::map<std::string, bool> lower_is_better;
};

inline GameProfile game_profile_from_json(const nlohmann::json& in) {
    GameProfile profile;
    try {
        profile.game_name = in.at("game_name").get<std::string>();
        for (const auto& [rank_text, entry] : in.at("rank_table").items()) {
            int rank = std::stoi(rank_text);
            GameProfile::RankEntry rank_entry;
            if (entry.contains("perks"))
                rank_entry.perks = entry.at("perks").get<std::vector<std::string>>();
            rank_entry.weapon_tier = entry.value("weapon_tier", "");
            if (entry.contains("ratings")) {
                for (const auto& [key, value] : entry.at("ratings").items()) {
                    rank_entry.ratings[key] = value.get<double>();
                }
            }
            profile.rank_table[rank] = std::move(rank_entry);
        }
        if (in.contains("rating_polarity")) {
            for (const auto& [key, value] : in.at("rating_polarity").items()) {
                std::string polarity = value.get<std::string>();
                if (polarity != "lower_is_better" && polarity != "higher_is_better") {
                    throw Error("game profile: unknown rating polarity: " + polarity);
                }
                profile.lower_is_better[key] = polarity == "lower_is_better";
            }
        }
        if (in.contains("ui_layout")) {
            std::map<std::string, UiOption> layout;
            for (const auto& [option, spec] : in.at("ui_layout").items()) {
                UiOption ui;
                std::string action = spec.at("action").get<std::string>();
                if (action == "click") {
                    ui.action = UiOption::Action::click;
                    ui.x = spec.at("x").get<int>();
                    ui.y = spec.at("y").get<int>();
                } else if (action == "key") {
                    ui.action = UiOption::Action::key;
                    ui.key_code = spec.at("key_code").get<std::string>();
                } else {
                    throw Error("game profile: unknown ui action: " + action);
                }
                layout[option] = ui;
            }
            profile.ui_layout = std::move(layout);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad game profile: ") + e.what());
    }
    return profile;
}

inline GameProfile load_game_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open game profile: " + path.string());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad game profile " + path.string() + ": " + e.what());
    }
    return game_profile_from_json(parsed);
}

/// Rank crawlers for a round: finishers first by ascending speedrun time,
/// then unfinished crawlers by descending pages archived; all ties break to
/// the lexicographically smaller name. Ranks are a permutation of 1..N.
inline std::vector<TierAssignment> rank_crawlers(const std::vector<PerformanceResults>& results) {
    if (results.size() < 2) throw Error("ranking needs at least two crawlers");
    std::set<std::string> names;
    for (const auto& result : results) {
        if (!names.insert(result.crawler_name).second) {
            throw Error("duplicate crawler in ranking: " + result.crawler_name);
        }
        if (result.round != results.front().round) {
            throw Error("ranking mixes rounds " + std::to_string(results.front().round) + " and " +
                        std::to_string(result.round));
        }
    }

    std::vector<const PerformanceResults*> order;
    for (const auto& result : results) order.push_back(&result);
    std::sort(order.begin(), order.end(),
              [](const PerformanceResults* a, const PerformanceResults* b) {
                  if (a->finished != b->finished) return a->finished;  // finishers first
                  if (a->finished) {
                      if (a->speedrun_seconds != b->speedrun_seconds)
                          return a->speedrun_seconds < b->speedrun_seconds;
                  } else {
                      if (a->pages_archived != b->pages_archived)
                          return a->pages_archived > b->pages_archived;
                  }
                  return a->crawler_name < b->crawler_name;
              });

    std::vector<TierAssignment> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        TierAssignment tier;
        tier.crawler_name = order[i]->crawler_name;
        tier.rank = static_cast<int>(i + 1);
        tier.tier_label = i == 0                ? "fastest"
                          : i + 1 == order.size() ? "slowest"
                                                  : "rank-" + std::to_string(i + 1);
        out.push_back(std::move(tier));
    }
    return out;
}

struct GameAssignment {
    std::string crawler_name;
    std::vector<std::string> perks;
    std::string weapon_tier;
    std::map<std::string, double> ratings;
    std::string team_name;                  // always the crawler name
    std::vector<std::string> player_names;  // contributors; cycled at patch time
};

struct GameConfig {
    std::string game_name;
    std::vector<GameAssignment> assignments;     // rank order
    std::vector<std::string> source_results;     // digests of the input results
};

/// Map a ranking onto a profile: rank 1 takes the profile's best entry, the
/// last rank its worst. Every rank must be covered explicitly — inventing
/// intermediate game balance is not this tool's job. Contributor names fill
/// the player slots; a crawler with no contributors plays as itself.
inline GameConfig assign_perks(const std::vector<TierAssignment>& ranking,
                               const GameProfile& profile,
                               const std::map<std::string, std::vector<std::string>>& contributors = {},
                               std::vector<std::string> source_digests = {}) {
    GameConfig config;
    config.game_name = profile.game_name;
    config.source_results = std::move(source_digests);
    std::vector<int> missing;
    for (const auto& tier : ranking) {
        if (!profile.rank_table.count(tier.rank)) missing.push_back(tier.rank);
    }
    if (!missing.empty()) {
        std::string text;
        for (int rank : missing) text += (text.empty() ? "" : ", ") + std::to_string(rank);
        throw Error("game profile \"" + profile.game_name + "\" has no entry for rank(s): " + text);
    }
    for (const auto& tier : ranking) {
        const auto& entry = profile.rank_table.at(tier.rank);
        GameAssignment assignment;
        assignment.crawler_name = tier.crawler_name;
        assignment.perks = entry.perks;
        assignment.weapon_tier = entry.weapon_tier;
        assignment.ratings = entry.ratings;
        assignment.team_name = tier.crawler_name;
        if (auto it = contributors.find(tier.crawler_name);
            it != contributors.end() && !it->second.empty()) {
            assignment.player_names = it->second;
        } else {
            assignment.player_names = {tier.crawler_name};
        }
        config.assignments.push_back(std::move(assignment));
    }
    return config;
}

inline nlohmann::ordered_json to_json(const GameConfig& config) {
    nlohmann::ordered_json out;
    out["game_name"] = config.game_name;
    nlohmann::ordered_json assignments = nlohmann::ordered_json::array();
    for (const auto& assignment : config.assignments) {
        nlohmann::ordered_json entry;
        entry["crawler_name"] = assignment.crawler_name;
        entry["perks"] = assignment.perks;
        entry["weapon_tier"] = assignment.weapon_tier;
        nlohmann::ordered_json ratings = nlohmann::ordered_json::object();
        for (const auto& [key, value] : assignment.ratings) ratings[key] = value;
        entry["ratings"] = ratings;
        entry["team_name"] = assignment.team_name;
        entry["player_names"] = assignment.player_names;
        assignments.push_back(entry);
    }
    out["assignments"] = assignments;
    out["source_results"] = config.source_results;
    return out;
}

inline GameConfig game_config_from_json(const nlohmann::json& in) {
    GameConfig config;
    try {
        config.game_name = in.at("game_name").get<std::string>();
        for (const auto& entry : in.at("assignments")) {
            GameAssignment assignment;
            assignment.crawler_name = entry.at("crawler_name").get<std::string>();
            assignment.perks = entry.at("perks").get<std::vector<std::string>>();
            assignment.weapon_tier = entry.at("weapon_tier").get<std::string>();
            for (const auto& [key, value] : entry.at("ratings").items()) {
                assignment.ratings[key] = value.get<double>();
            }
            assignment.team_name = entry.at("team_name").get<std::string>();
            assignment.player_names = entry.at("player_names").get<std::vector<std::string>>();
            config.assignments.push_back(std::move(assignment));
        }
        if (in.contains("source_results")) {
            config.source_results = in.at("source_results").get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad game config: ") + e.what());
    }
    return config;
}

/// Digest of a results file's canonical serialization, for GameConfig
/// provenance.
inline std::string results_digest(const PerformanceResults& results) {
    return sha1_base32(to_json(results).dump());
}

// --- roster patching ------------------------------------------------------

/// Positions of the patchable fields in a delimited text roster. Everything
/// the layout does not address is preserved byte for byte.
struct RosterLayout {
    std::string delimiter = ",";
    std::size_t team_name_line = 0;
    std::size_t team_name_field = 0;
    std::vector<std::size_t> player_lines;
    std::size_t player_name_field = 0;
    struct RatingField {
        std::size_t field = 0;
        double min = 0.0;
        double max = 0.0;
    };
    std::map<std::string, RatingField> rating_fields;  // rating name -> position
};

inline RosterLayout roster_layout_from_json(const nlohmann::json& in) {
    RosterLayout layout;
    try {
        layout.delimiter = in.value("delimiter", ",");
        layout.team_name_line = in.at("team_name_line").get<std::size_t>();
        layout.team_name_field = in.at("team_name_field").get<std::size_t>();
        layout.player_lines = in.at("player_lines").get<std::vector<std::size_t>>();
        layout.player_name_field = in.at("player_name_field").get<std::size_t>();
        if (in.contains("rating_fields")) {
            for (const auto& [name, spec] : in.at("rating_fields").items()) {
                RosterLayout::RatingField field;
                field.field = spec.at("field").get<std::size_t>();
                field.min = spec.at("min").get<double>();
                field.max = spec.at("max").get<double>();
                layout.rating_fields[name] = field;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad roster layout: ") + e.what());
    }
    if (layout.delimiter.empty()) throw Error("roster layout: empty delimiter");
    return layout;
}

inline RosterLayout load_roster_layout(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open roster layout: " + path.string());
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad roster layout " + path.string() + ": " + e.what());
    }
    return roster_layout_from_json(parsed);
}

namespace detail {

// "4.4" rather than "4.400000"; integers print without a decimal point.
inline std::string format_rating(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

}  // namespace detail

/// Patch a text roster for the config's rank-1 assignment: the team name
/// becomes the crawler name, player names become the contributors (cycled
/// when the roster has more players), and the layout's rating fields take the
/// assignment's rating values. Only layout-addressed fields change; all other
/// bytes, including line endings, survive exactly. Patching twice with the
/// same config is a fixed point.
inline std::string patch_roster(const std::string& roster_text, const RosterLayout& layout,
                                const GameConfig& config) {
    if (config.assignments.empty()) return roster_text;
    const GameAssignment& assignment = config.assignments.front();

    // split into lines, remembering each line's terminator
    std::vector<std::string> lines;
    std::vector<std::string> endings;
    std::size_t pos = 0;
    while (pos <= roster_text.size()) {
        auto nl = roster_text.find('\n', pos);
        if (nl == std::string::npos) {
            if (pos < roster_text.size()) {
                lines.push_back(roster_text.substr(pos));
                endings.push_back("");
            }
            break;
        }
        std::string line = roster_text.substr(pos, nl - pos);
        std::string ending = "\n";
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
            ending = "\r\n";
        }
        lines.push_back(std::move(line));
        endings.push_back(std::move(ending));
        pos = nl + 1;
    }

    auto set_field = [&](std::size_t line_index, std::size_t field_index,
                         const std::string& value) {
        if (line_index >= lines.size()) {
            throw Error("roster layout addresses line " + std::to_string(line_index) +
                        " but the roster has " + std::to_string(lines.size()) + " lines");
        }
        std::string& line = lines[line_index];
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto delim = line.find(layout.delimiter, start);
            fields.push_back(line.substr(start, delim == std::string::npos ? std::string::npos
                                                                           : delim - start));
            if (delim == std::string::npos) break;
            start = delim + layout.delimiter.size();
        }
        if (field_index >= fields.size()) {
            throw Error("roster layout addresses field " + std::to_string(field_index) +
                        " on line " + std::to_string(line_index) + " but the line has " +
                        std::to_string(fields.size()) + " fields");
        }
        fields[field_index] = value;
        std::string rebuilt;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) rebuilt += layout.delimiter;
            rebuilt += fields[i];
        }
        line = std::move(rebuilt);
    };

    set_field(layout.team_name_line, layout.team_name_field, assignment.crawler_name);
    for (std::size_t i = 0; i < layout.player_lines.size(); ++i) {
        const std::string& player =
            assignment.player_names[i % assignment.player_names.size()];
        set_field(layout.player_lines[i], layout.player_name_field, player);
        for (const auto& [rating_name, field] : layout.rating_fields) {
            auto it = assignment.ratings.find(rating_name);
            if (it == assignment.ratings.end()) continue;
            if (it->second < field.min || it->second > field.max) {
                throw Error("rating " + rating_name + "=" + detail::format_rating(it->second) +
                            " outside the layout's declared range [" +
                            detail::format_rating(field.min) + ", " +
                            detail::format_rating(field.max) + "]");
            }
            set_field(layout.player_lines[i], field.field, detail::format_rating(it->second));
        }
    }

    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) out += lines[i] + endings[i];
    return out;
}

// --- automation scripts ----------------------------------------------------

struct UiAction {
    UiOption::Action type = UiOption::Action::click;
    int x = 0;
    int y = 0;
    std::optional<std::string> key_code;
    int delay_ms = 250;
};

/// The deterministic action plan that selects each assignment's options in
/// the game's UI: per assignment in rank order, one action per perk, then one
/// for the weapon tier (looked up as "weapon:<tier>"). Executing the plan
/// against a real game is out of scope here; this emits what an automation
/// driver would replay.
inline std::vector<UiAction> emit_automation_script(const GameConfig& config,
                                                    const GameProfile& profile,
                                                    int delay_ms = 250) {
    if (!profile.ui_layout) {
        throw Error("game profile \"" + profile.game_name + "\" has no ui_layout");
    }
    const auto& layout = *profile.ui_layout;
    std::vector<UiAction> script;
    auto push_option = [&](const std::string& option) {
        auto it = layout.find(option);
        if (it == layout.end()) {
            throw Error("ui_layout has no entry for option \"" + option + "\"");
        }
        UiAction action;
        action.type = it->second.action;
        action.x = it->second.x;
        action.y = it->second.y;
        action.key_code = it->second.key_code;
        action.delay_ms = delay_ms;
        script.push_back(std::move(action));
    };
    for (const auto& assignment : config.assignments) {
        for (const auto& perk : assignment.perks) push_option(perk);
        if (!assignment.weapon_tier.empty()) push_option("weapon:" + assignment.weapon_tier);
    }
    return script;
}

/// JSON-lines serialization: {"type":...,"x":...,"y":...} for clicks,
/// {"type":...,"key_code":...} for key presses; every action carries
/// delay_ms.
inline std::string to_jsonl(const std::vector<UiAction>& script) {
    std::string out;
    for (const auto& action : script) {
        nlohmann::ordered_json line;
        if (action.type == UiOption::Action::click) {
            line["type"] = "click";
            line["x"] = action.x;
            line["y"] = action.y;
        } else {
            line["type"] = "key";
            line["key_code"] = action.key_code.value_or("");
        }
        line["delay_ms"] = action.delay_ms;
        out += line.dump() + "\n";
    }
    return out;
}

}  // namespace warcrace
