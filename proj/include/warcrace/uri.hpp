#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "warcrace/error.hpp"

namespace warcrace {

/// Minimal RFC 3986 URI split into components. Components are kept verbatim
/// (no percent-decoding); `str()` reassembles them losslessly apart from the
/// normalizations applied by `resolve`.
struct Uri {
    std::string scheme;  // lowercased on parse
    std::string userinfo;
    std::string host;
    std::optional<std::uint16_t> port;
    std::string path;  // may be empty
    std::optional<std::string> query;
    std::optional<std::string> fragment;

    bool has_authority = false;

    bool is_absolute() const { return !scheme.empty(); }

    std::string authority() const {
        std::string out;
        if (!userinfo.empty()) out += userinfo + "@";
        out += host;
        if (port) out += ":" + std::to_string(*port);
        return out;
    }

    std::string str() const {
        std::string out;
        if (!scheme.empty()) out += scheme + ":";
        if (has_authority) out += "//" + authority();
        out += path;
        if (query) out += "?" + *query;
        if (fragment) out += "#" + *fragment;
        return out;
    }

    /// The URI without its fragment part.
    std::string str_without_fragment() const {
        Uri copy = *this;
        copy.fragment.reset();
        return copy.str();
    }

    static std::optional<Uri> parse(std::string_view text);
};

namespace detail {

inline bool is_scheme_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// RFC 3986 section 5.2.4.
inline std::string remove_dot_segments(std::string_view path) {
    std::string input(path);
    std::string output;
    while (!input.empty()) {
        if (input.rfind("../", 0) == 0) {
            input.erase(0, 3);
        } else if (input.rfind("./", 0) == 0) {
            input.erase(0, 2);
        } else if (input.rfind("/./", 0) == 0) {
            input.erase(0, 2);  // keep the leading slash
        } else if (input == "/.") {
            input = "/";
        } else if (input.rfind("/../", 0) == 0) {
            input.erase(0, 3);
            auto pos = output.find_last_of('/');
            output.erase(pos == std::string::npos ? 0 : pos);
        } else if (input == "/..") {
            input = "/";
            auto pos = output.find_last_of('/');
            output.erase(pos == std::string::npos ? 0 : pos);
        } else if (input == "." || input == "..") {
            input.clear();
        } else {
            std::size_t start = input[0] == '/' ? 1 : 0;
            std::size_t next = input.find('/', start);
            output += input.substr(0, next == std::string::npos ? input.size() : next);
            input.erase(0, next == std::string::npos ? input.size() : next);
        }
    }
    return output;
}

}  // namespace detail

inline std::optional<Uri> Uri::parse(std::string_view text) {
    Uri out;
    std::string_view rest = text;

    // scheme
    auto colon = rest.find(':');
    if (colon != std::string_view::npos && colon > 0 &&
        std::isalpha(static_cast<unsigned char>(rest[0]))) {
        bool ok = true;
        for (std::size_t i = 1; i < colon; ++i) ok = ok && detail::is_scheme_char(rest[i]);
        // a ':' inside the path (e.g. "a/b:c") is not a scheme separator
        auto slash = rest.find('/');
        if (ok && (slash == std::string_view::npos || colon < slash)) {
            out.scheme = detail::lowercase(rest.substr(0, colon));
            rest = rest.substr(colon + 1);
        }
    }

    // authority
    if (rest.rfind("//", 0) == 0) {
        out.has_authority = true;
        rest = rest.substr(2);
        auto end = rest.find_first_of("/?#");
        std::string_view auth = rest.substr(0, end);
        rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
        auto at = auth.find('@');
        if (at != std::string_view::npos) {
            out.userinfo = std::string(auth.substr(0, at));
            auth = auth.substr(at + 1);
        }
        std::string_view host = auth;
        if (!auth.empty() && auth[0] == '[') {  // IPv6 literal
            auto close = auth.find(']');
            if (close == std::string_view::npos) return std::nullopt;
            host = auth.substr(0, close + 1);
            auth = auth.substr(close + 1);
        } else {
            auto port_colon = auth.find(':');
            host = auth.substr(0, port_colon);
            auth = port_colon == std::string_view::npos ? std::string_view{}
                                                        : auth.substr(port_colon);
        }
        if (!auth.empty() && auth[0] == ':') {
            std::string_view digits = auth.substr(1);
            if (!digits.empty()) {
                std::uint32_t value = 0;
                for (char c : digits) {
                    if (c < '0' || c > '9') return std::nullopt;
                    value = value * 10 + static_cast<std::uint32_t>(c - '0');
                    if (value > 65535) return std::nullopt;
                }
                out.port = static_cast<std::uint16_t>(value);
            }
        }
        out.host = detail::lowercase(host);
    }

    // fragment, then query, then whatever remains is the path
    auto hash = rest.find('#');
    if (hash != std::string_view::npos) {
        out.fragment = std::string(rest.substr(hash + 1));
        rest = rest.substr(0, hash);
    }
    auto qmark = rest.find('?');
    if (qmark != std::string_view::npos) {
        out.query = std::string(rest.substr(qmark + 1));
        rest = rest.substr(0, qmark);
    }
    out.path = std::string(rest);
    return out;
}

/// Scheme default ports that `resolve` and SURT drop.
inline std::optional<std::uint16_t> default_port(std::string_view scheme) {
    if (scheme == "http") return 80;
    if (scheme == "https") return 443;
    return std::nullopt;
}

/// RFC 3986 section 5.2 reference resolution. `base` must be absolute.
inline Uri resolve(const Uri& base, std::string_view reference) {
    if (!base.is_absolute()) throw Error("resolve: base URI must be absolute");
    auto ref = Uri::parse(reference);
    if (!ref) throw Error("resolve: unparseable reference: " + std::string(reference));

    Uri target;
    if (ref->is_absolute()) {
        target = *ref;
        target.path = detail::remove_dot_segments(target.path);
    } else if (ref->has_authority) {
        target = *ref;
        target.scheme = base.scheme;
        target.path = detail::remove_dot_segments(target.path);
    } else {
        target.scheme = base.scheme;
        target.has_authority = base.has_authority;
        target.userinfo = base.userinfo;
        target.host = base.host;
        target.port = base.port;
        if (ref->path.empty()) {
            target.path = base.path;
            target.query = ref->query ? ref->query : base.query;
        } else {
            if (ref->path[0] == '/') {
                target.path = detail::remove_dot_segments(ref->path);
            } else {
                std::string merged;
                if (base.has_authority && base.path.empty()) {
                    merged = "/" + ref->path;
                } else {
                    auto pos = base.path.find_last_of('/');
                    merged = (pos == std::string::npos ? std::string{}
                                                       : base.path.substr(0, pos + 1)) +
                             ref->path;
                }
                target.path = detail::remove_dot_segments(merged);
            }
            target.query = ref->query;
        }
        target.fragment = ref->fragment;
    }
    if (target.port && default_port(target.scheme) == target.port) target.port.reset();
    if (target.has_authority && target.path.empty()) target.path = "/";
    return target;
}

}  // namespace warcrace
