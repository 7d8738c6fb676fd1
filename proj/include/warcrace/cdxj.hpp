#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "warcrace/error.hpp"
#include "warcrace/http.hpp"
#include "warcrace/surt.hpp"
#include "warcrace/time.hpp"
#include "warcrace/warc.hpp"

namespace warcrace {

/// One index line: SURT key, 14-digit capture timestamp, and the capture's
/// location and shape inside its WARC file.
struct CdxjEntry {
    std::string surt_key;
    std::string timestamp14;
    std::string original_url;
    std::string mime;
    int status = 0;
    std::string digest;
    std::uint64_t length = 0;
    std::uint64_t offset = 0;
    std::string filename;
};

inline std::string to_cdxj_line(const CdxjEntry& entry) {
    nlohmann::ordered_json block;
    block["url"] = entry.original_url;
    block["mime"] = entry.mime;
    block["status"] = entry.status;
    block["digest"] = entry.digest;
    block["length"] = entry.length;
    block["offset"] = entry.offset;
    block["filename"] = entry.filename;
    return entry.surt_key + " " + entry.timestamp14 + " " + block.dump();
}

inline CdxjEntry parse_cdxj_line(std::string_view line) {
    auto sp1 = line.find(' ');
    auto sp2 = line.find(' ', sp1 == std::string_view::npos ? sp1 : sp1 + 1);
    if (sp1 == std::string_view::npos || sp2 == std::string_view::npos) {
        throw Error("malformed CDXJ line: " + std::string(line.substr(0, 60)));
    }
    CdxjEntry entry;
    entry.surt_key = std::string(line.substr(0, sp1));
    entry.timestamp14 = std::string(line.substr(sp1 + 1, sp2 - sp1 - 1));
    if (!parse_timestamp14(entry.timestamp14)) {
        throw Error("bad CDXJ timestamp: " + entry.timestamp14);
    }
    nlohmann::json block;
    try {
        block = nlohmann::json::parse(line.substr(sp2 + 1));
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad CDXJ JSON block: " + std::string(e.what()));
    }
    entry.original_url = block.value("url", "");
    entry.mime = block.value("mime", "");
    entry.status = block.value("status", 0);
    entry.digest = block.value("digest", "");
    entry.length = block.value("length", std::uint64_t{0});
    entry.offset = block.value("offset", std::uint64_t{0});
    entry.filename = block.value("filename", "");
    return entry;
}

namespace detail {

inline bool cdxj_key_less(const CdxjEntry& a, const CdxjEntry& b) {
    if (a.surt_key != b.surt_key) return a.surt_key < b.surt_key;
    return a.timestamp14 < b.timestamp14;
}

// Strip parameters and lowercase: "Text/HTML; charset=utf-8" -> "text/html".
inline std::string normalize_media_type(std::string_view value) {
    auto semi = value.find(';');
    return std::string(trim(lowercase(value.substr(0, semi))));
}

}  // namespace detail

/// Index response and revisit records from one WARC file. Entries come out
/// sorted by (surt_key, timestamp14), stable by offset for duplicate keys.
/// Records without a target URI are skipped and counted.
inline std::vector<CdxjEntry> generate_cdxj(const std::vector<WarcRecord>& records,
                                            const std::string& filename,
                                            std::size_t* skipped = nullptr) {
    std::vector<CdxjEntry> out;
    std::size_t skip_count = 0;
    for (const auto& record : records) {
        if (record.record_type != RecordType::response &&
            record.record_type != RecordType::revisit) {
            continue;
        }
        if (!record.target_uri || record.target_uri->empty()) {
            ++skip_count;
            continue;
        }
        CdxjEntry entry;
        try {
            entry.surt_key = surt_canonicalize(*record.target_uri);
        } catch (const Error&) {
            ++skip_count;
            continue;
        }
        entry.timestamp14 = format_timestamp14(record.record_date);
        entry.original_url = *record.target_uri;
        entry.length = record.source_length;
        entry.offset = record.source_offset;
        entry.filename = filename;

        if (looks_like_http_response(record.payload)) {
            try {
                HttpResponseMeta meta = parse_http_response(record.payload);
                entry.status = meta.status_code;
                entry.digest = meta.payload_digest;
                entry.mime = meta.declared_content_type
                                 ? detail::normalize_media_type(*meta.declared_content_type)
                                 : "unk";
            } catch (const Error&) {
                entry.status = 0;
                entry.mime = "unk";
                entry.digest = sha1_base32(record.payload);
            }
        } else {
            entry.status = 0;
            entry.mime = "unk";
            entry.digest = sha1_base32(record.payload);
        }
        if (record.record_type == RecordType::revisit) entry.mime = "warc/revisit";
        out.push_back(std::move(entry));
    }
    std::stable_sort(out.begin(), out.end(), detail::cdxj_key_less);
    if (skipped) *skipped = skip_count;
    return out;
}

/// UTF-8, LF-terminated lines.
inline void write_cdxj_file(const std::filesystem::path& path,
                            const std::vector<CdxjEntry>& entries) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open CDXJ file for writing: " + path.string());
    for (const auto& entry : entries) out << to_cdxj_line(entry) << '\n';
}

inline std::vector<CdxjEntry> read_cdxj_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open CDXJ file: " + path.string());
    std::vector<CdxjEntry> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(parse_cdxj_line(line));
    }
    return out;
}

}  // namespace warcrace
