#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "warcrace/error.hpp"
#include "warcrace/uri.hpp"

namespace warcrace {

/// Sort-friendly URI Reordering Transform. "https://www.Example.com/A?b=2&a=1"
/// becomes "com,example)/a?a=1&b=2". Scheme and fragment are dropped, default
/// ports removed, host labels reversed, everything lowercased, query keys
/// sorted. Throws Error for relative or host-less URIs.
inline std::string surt_canonicalize(std::string_view uri) {
    auto parsed = Uri::parse(uri);
    if (!parsed || !parsed->is_absolute() || parsed->host.empty()) {
        throw Error("surt: not an absolute URI with a host: " + std::string(uri));
    }

    std::string host = parsed->host;  // already lowercased by parse
    if (host.rfind("www.", 0) == 0 && host.size() > 4) host.erase(0, 4);

    std::vector<std::string> labels;
    std::size_t start = 0;
    while (start <= host.size()) {
        auto dot = host.find('.', start);
        labels.push_back(host.substr(start, dot == std::string::npos ? std::string::npos
                                                                     : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    std::reverse(labels.begin(), labels.end());

    std::string key;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) key += ",";
        key += labels[i];
    }
    if (parsed->port && default_port(parsed->scheme) != parsed->port) {
        key += ":" + std::to_string(*parsed->port);
    }
    key += ")";

    std::string path = detail::lowercase(parsed->path);
    if (path.empty()) path = "/";
    key += path;

    if (parsed->query && !parsed->query->empty()) {
        std::string q = detail::lowercase(*parsed->query);
        std::vector<std::string> params;
        std::size_t pos = 0;
        while (pos <= q.size()) {
            auto amp = q.find('&', pos);
            std::string part =
                q.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
            if (!part.empty()) params.push_back(std::move(part));
            if (amp == std::string::npos) break;
            pos = amp + 1;
        }
        std::stable_sort(params.begin(), params.end(),
                         [](const std::string& a, const std::string& b) {
                             return a.substr(0, a.find('=')) < b.substr(0, b.find('='));
                         });
        key += "?";
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (i) key += "&";
            key += params[i];
        }
    }
    return key;
}

}  // namespace warcrace
