#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "warcrace/digest.hpp"
#include "warcrace/error.hpp"

namespace warcrace {

struct HttpResponseMeta {
    int status_code = 0;
    std::optional<std::string> declared_content_type;
    std::string payload_digest;  // "sha1:" + base32 over the body
    std::uint64_t payload_length = 0;
};

namespace detail {

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

// Splits an archived HTTP message into head and body. Accepts bare-LF
// separators, which show up in real crawler output.
inline std::pair<std::string_view, std::string_view> split_http_message(std::string_view payload) {
    auto crlf = payload.find("\r\n\r\n");
    auto lf = payload.find("\n\n");
    if (crlf != std::string_view::npos && (lf == std::string_view::npos || crlf < lf)) {
        return {payload.substr(0, crlf), payload.substr(crlf + 4)};
    }
    if (lf != std::string_view::npos) {
        return {payload.substr(0, lf), payload.substr(lf + 2)};
    }
    return {payload, std::string_view{}};
}

}  // namespace detail

inline bool looks_like_http_response(std::string_view payload) {
    return payload.rfind("HTTP/", 0) == 0;
}

/// Parse the HTTP message stored in a response record's payload: status code,
/// declared Content-Type, and digest/length of the body. Throws Error when the
/// payload does not start with an HTTP status line.
inline HttpResponseMeta parse_http_response(std::string_view payload) {
    if (!looks_like_http_response(payload)) {
        throw Error("not an HTTP response payload");
    }
    auto [head, body] = detail::split_http_message(payload);

    auto line_end = head.find('\n');
    std::string_view status_line = head.substr(0, line_end);
    if (!status_line.empty() && status_line.back() == '\r') status_line.remove_suffix(1);

    // "HTTP/1.1 200 OK" — the reason phrase is optional
    auto first_sp = status_line.find(' ');
    if (first_sp == std::string_view::npos) throw Error("malformed HTTP status line");
    std::string_view code_text = status_line.substr(first_sp + 1);
    auto second_sp = code_text.find(' ');
    if (second_sp != std::string_view::npos) code_text = code_text.substr(0, second_sp);
    if (code_text.size() != 3) throw Error("malformed HTTP status code");
    int status = 0;
    for (char c : code_text) {
        if (c < '0' || c > '9') throw Error("malformed HTTP status code");
        status = status * 10 + (c - '0');
    }
    if (status < 100 || status > 599) throw Error("HTTP status code out of range");

    HttpResponseMeta meta;
    meta.status_code = status;

    std::string_view rest = line_end == std::string_view::npos ? std::string_view{}
                                                               : head.substr(line_end + 1);
    while (!rest.empty()) {
        auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        if (detail::iequals(line.substr(0, colon), "Content-Type")) {
            std::string_view value = line.substr(colon + 1);
            while (!value.empty() && (value.front() == ' ' || value.front() == '\t'))
                value.remove_prefix(1);
            while (!value.empty() && (value.back() == ' ' || value.back() == '\t'))
                value.remove_suffix(1);
            meta.declared_content_type = std::string(value);
        }
    }

    meta.payload_length = body.size();
    meta.payload_digest = sha1_base32(body);
    return meta;
}

/// The body part of an archived HTTP response payload.
inline std::string_view http_body(std::string_view payload) {
    return detail::split_http_message(payload).second;
}

/// Assemble an HTTP/1.1 response message (used by the simulator when writing
/// response records).
inline std::string build_http_response(int status, std::string_view reason,
                                       std::optional<std::string_view> content_type,
                                       std::string_view body) {
    std::string out = "HTTP/1.1 " + std::to_string(status) + " " + std::string(reason) + "\r\n";
    if (content_type) out += "Content-Type: " + std::string(*content_type) + "\r\n";
    out += "Content-Length: " + std::to_string(body.size()) + "\r\n";
    out += "\r\n";
    out += body;
    return out;
}

}  // namespace warcrace
