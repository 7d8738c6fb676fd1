#pragma once

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "warcrace/uri.hpp"

namespace warcrace {

enum class ResourceCategory { javascript, css, image, video, audio, html, other };

inline std::string_view to_string(ResourceCategory category) {
    switch (category) {
        case ResourceCategory::javascript: return "javascript";
        case ResourceCategory::css: return "css";
        case ResourceCategory::image: return "image";
        case ResourceCategory::video: return "video";
        case ResourceCategory::audio: return "audio";
        case ResourceCategory::html: return "html";
        case ResourceCategory::other: return "other";
    }
    return "other";
}

inline ResourceCategory category_from_string(std::string_view name) {
    if (name == "javascript") return ResourceCategory::javascript;
    if (name == "css") return ResourceCategory::css;
    if (name == "image") return ResourceCategory::image;
    if (name == "video") return ResourceCategory::video;
    if (name == "audio") return ResourceCategory::audio;
    if (name == "html") return ResourceCategory::html;
    return ResourceCategory::other;
}

namespace detail {

struct HtmlAttr {
    std::string name;   // lowercased
    std::string value;  // entity-decoded
};

struct HtmlTag {
    std::string name;  // lowercased
    bool closing = false;
    std::vector<HtmlAttr> attrs;
};

inline std::string decode_entities(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '&') {
            auto match = [&](std::string_view entity, char replacement) {
                if (text.substr(i, entity.size()) == entity) {
                    out.push_back(replacement);
                    i += entity.size();
                    return true;
                }
                return false;
            };
            if (match("&amp;", '&') || match("&lt;", '<') || match("&gt;", '>') ||
                match("&quot;", '"') || match("&#39;", '\'')) {
                continue;
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

// Scans one tag starting at `pos` (which points at '<'). Returns the position
// just past the closing '>' and fills `tag`; false for things that are not
// start tags (comments were handled by the caller).
inline bool scan_tag(std::string_view html, std::size_t& pos, HtmlTag& tag) {
    std::size_t i = pos + 1;
    tag.closing = i < html.size() && html[i] == '/';
    if (tag.closing) ++i;
    std::size_t name_start = i;
    while (i < html.size() &&
           (std::isalnum(static_cast<unsigned char>(html[i])) || html[i] == '-' || html[i] == ':'))
        ++i;
    if (i == name_start) {
        pos = pos + 1;
        return false;
    }
    tag.name = lowercase(html.substr(name_start, i - name_start));
    tag.attrs.clear();

    while (i < html.size() && html[i] != '>') {
        while (i < html.size() &&
               (std::isspace(static_cast<unsigned char>(html[i])) || html[i] == '/'))
            ++i;
        if (i >= html.size() || html[i] == '>') break;
        std::size_t attr_start = i;
        while (i < html.size() && html[i] != '=' && html[i] != '>' && html[i] != '/' &&
               !std::isspace(static_cast<unsigned char>(html[i])))
            ++i;
        HtmlAttr attr;
        attr.name = lowercase(html.substr(attr_start, i - attr_start));
        while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
        if (i < html.size() && html[i] == '=') {
            ++i;
            while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
            if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
                char quote = html[i++];
                std::size_t value_start = i;
                while (i < html.size() && html[i] != quote) ++i;
                attr.value = decode_entities(html.substr(value_start, i - value_start));
                if (i < html.size()) ++i;
            } else {
                std::size_t value_start = i;
                while (i < html.size() && html[i] != '>' &&
                       !std::isspace(static_cast<unsigned char>(html[i])))
                    ++i;
                attr.value = decode_entities(html.substr(value_start, i - value_start));
            }
        }
        if (!attr.name.empty()) tag.attrs.push_back(std::move(attr));
    }
    pos = i < html.size() ? i + 1 : html.size();
    return true;
}

inline bool rel_wants_resource(std::string_view rel) {
    // stylesheet and icon rels only; hyperlink rels are navigation, not
    // embedded resources.
    std::string lowered = lowercase(rel);
    std::size_t start = 0;
    while (start <= lowered.size()) {
        auto sp = lowered.find(' ', start);
        std::string_view token(lowered.data() + start,
                               (sp == std::string::npos ? lowered.size() : sp) - start);
        if (token == "stylesheet" || token == "icon") return true;
        if (sp == std::string::npos) break;
        start = sp + 1;
    }
    return false;
}

inline void collect_srcset(std::string_view srcset, std::vector<std::string>& out) {
    std::size_t start = 0;
    while (start <= srcset.size()) {
        auto comma = srcset.find(',', start);
        std::string_view candidate =
            srcset.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                 : comma - start);
        while (!candidate.empty() && std::isspace(static_cast<unsigned char>(candidate.front())))
            candidate.remove_prefix(1);
        auto sp = candidate.find_first_of(" \t\n\r");
        std::string_view url = candidate.substr(0, sp);
        if (!url.empty()) out.emplace_back(url);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
}

inline void extract_html_references(std::string_view html, std::vector<std::string>& out) {
    std::size_t pos = 0;
    while (pos < html.size()) {
        pos = html.find('<', pos);
        if (pos == std::string_view::npos) break;
        if (html.substr(pos, 4) == "<!--") {
            auto end = html.find("-->", pos + 4);
            pos = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        HtmlTag tag;
        if (!scan_tag(html, pos, tag)) continue;
        if (tag.closing) continue;

        auto attr_value = [&](std::string_view name) -> const std::string* {
            for (const auto& attr : tag.attrs)
                if (attr.name == name) return &attr.value;
            return nullptr;
        };

        if (const auto* src = attr_value("src"); src && !src->empty()) out.push_back(*src);
        if (const auto* poster = attr_value("poster"); poster && !poster->empty())
            out.push_back(*poster);
        if (const auto* srcset = attr_value("srcset")) collect_srcset(*srcset, out);
        if (tag.name == "link") {
            const auto* rel = attr_value("rel");
            const auto* href = attr_value("href");
            if (rel && href && !href->empty() && rel_wants_resource(*rel)) out.push_back(*href);
        }

        // skip raw-text element content so URLs inside code are not mistaken
        // for markup
        if (tag.name == "script" || tag.name == "style") {
            std::string closer = "</" + tag.name;
            auto end = lowercase(html.substr(pos)).find(closer);
            if (end == std::string::npos) break;
            pos += end;
        }
    }
}

inline void extract_css_references(std::string_view css, std::vector<std::string>& out) {
    std::size_t i = 0;
    auto skip_comment = [&]() {
        if (css.substr(i, 2) == "/*") {
            auto end = css.find("*/", i + 2);
            i = end == std::string_view::npos ? css.size() : end + 2;
            return true;
        }
        return false;
    };
    while (i < css.size()) {
        if (skip_comment()) continue;
        if ((css[i] == 'u' || css[i] == 'U') && i + 4 <= css.size() &&
            lowercase(css.substr(i, 4)) == "url(" &&
            (i == 0 || !(std::isalnum(static_cast<unsigned char>(css[i - 1])) ||
                         css[i - 1] == '-' || css[i - 1] == '_'))) {
            i += 4;
            while (i < css.size() && std::isspace(static_cast<unsigned char>(css[i]))) ++i;
            std::string url;
            if (i < css.size() && (css[i] == '"' || css[i] == '\'')) {
                char quote = css[i++];
                std::size_t start = i;
                while (i < css.size() && css[i] != quote) ++i;
                url = std::string(css.substr(start, i - start));
            } else {
                std::size_t start = i;
                while (i < css.size() && css[i] != ')' &&
                       !std::isspace(static_cast<unsigned char>(css[i])))
                    ++i;
                url = std::string(css.substr(start, i - start));
            }
            if (!url.empty()) out.push_back(std::move(url));
        } else if (css[i] == '@' && lowercase(css.substr(i, 7)) == "@import") {
            i += 7;
            while (i < css.size() && std::isspace(static_cast<unsigned char>(css[i]))) ++i;
            if (i < css.size() && (css[i] == '"' || css[i] == '\'')) {
                char quote = css[i++];
                std::size_t start = i;
                while (i < css.size() && css[i] != quote) ++i;
                out.emplace_back(css.substr(start, i - start));
            }
            // "@import url(...)" falls through to the url( scanner
        } else {
            ++i;
        }
    }
}

}  // namespace detail

/// Embedded-resource references of an archived html or css payload, resolved
/// against `base`, fragments stripped, deduplicated. Only http(s) results are
/// kept; data:/javascript:/mailto: pseudo-references are not fetchable
/// resources. Inputs in other categories yield an empty set.
inline std::set<std::string> extract_references(std::string_view payload,
                                                ResourceCategory category, const Uri& base) {
    std::vector<std::string> raw;
    if (category == ResourceCategory::html) {
        detail::extract_html_references(payload, raw);
    } else if (category == ResourceCategory::css) {
        detail::extract_css_references(payload, raw);
    }
    std::set<std::string> out;
    for (const auto& reference : raw) {
        try {
            Uri resolved = resolve(base, reference);
            if (resolved.scheme != "http" && resolved.scheme != "https") continue;
            resolved.fragment.reset();
            out.insert(resolved.str());
        } catch (const Error&) {
            // unresolvable reference: lossy extraction beats none
        }
    }
    return out;
}

}  // namespace warcrace
