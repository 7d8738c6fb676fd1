#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "warcrace/error.hpp"
#include "warcrace/gzip.hpp"
#include "warcrace/time.hpp"

namespace warcrace {

enum class RecordType { response, request, revisit, metadata, warcinfo, resource, other };

inline RecordType record_type_from_name(std::string_view name) {
    if (name == "response") return RecordType::response;
    if (name == "request") return RecordType::request;
    if (name == "revisit") return RecordType::revisit;
    if (name == "metadata") return RecordType::metadata;
    if (name == "warcinfo") return RecordType::warcinfo;
    if (name == "resource") return RecordType::resource;
    return RecordType::other;
}

/// One WARC record. `type_name` holds the exact WARC-Type header value so
/// that types outside the enum still round-trip; `extra_headers` carries
/// any header fields beyond the core set, in file order.
struct WarcRecord {
    RecordType record_type = RecordType::other;
    std::string type_name;
    std::optional<std::string> target_uri;
    Timestamp record_date{};  // second precision on the wire
    std::string record_id;    // "<urn:uuid:...>" without the angle brackets
    std::string content_type;
    std::uint64_t content_length = 0;
    std::string payload;
    std::vector<std::pair<std::string, std::string>> extra_headers;

    std::uint64_t source_offset = 0;
    std::uint64_t source_length = 0;  // bytes this record occupies in its file
    std::string source_filename;
};

/// Fresh "urn:uuid:..." (version 4) record id.
inline std::string new_record_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::uint64_t hi = rng();
    std::uint64_t lo = rng();
    hi = (hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;  // version 4
    lo = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;  // variant 10
    char buf[48];
    std::snprintf(buf, sizeof(buf), "urn:uuid:%08x-%04x-%04x-%04x-%012llx",
                  static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xffff),
                  static_cast<unsigned>(hi & 0xffff), static_cast<unsigned>(lo >> 48),
                  static_cast<unsigned long long>(lo & 0xffffffffffffULL));
    return buf;
}

/// Serialize one record as WARC/1.1 bytes; whole-record gzip member when
/// `gzipped`. Rejects records whose fields violate the format.
inline std::string write_warc_record(const WarcRecord& record, bool gzipped) {
    if (record.type_name.empty()) throw Error("warc write: empty record type");
    if (record.record_id.empty()) throw Error("warc write: empty record id");
    if (record.content_length != record.payload.size()) {
        throw Error("warc write: content_length " + std::to_string(record.content_length) +
                    " does not match payload size " + std::to_string(record.payload.size()));
    }
    if (record.record_type == RecordType::response) {
        if (!record.target_uri) throw Error("warc write: response record without target URI");
        if (record.payload.rfind("HTTP/", 0) != 0) {
            throw Error("warc write: response payload must begin with an HTTP status line");
        }
    }

    std::string out;
    out += "WARC/1.1\r\n";
    out += "WARC-Record-ID: <" + record.record_id + ">\r\n";
    out += "WARC-Type: " + record.type_name + "\r\n";
    out += "WARC-Date: " + format_warc_date(record.record_date) + "\r\n";
    if (record.target_uri) out += "WARC-Target-URI: " + *record.target_uri + "\r\n";
    if (!record.content_type.empty()) out += "Content-Type: " + record.content_type + "\r\n";
    for (const auto& [name, value] : record.extra_headers) {
        out += name + ": " + value + "\r\n";
    }
    out += "Content-Length: " + std::to_string(record.content_length) + "\r\n";
    out += "\r\n";
    out += record.payload;
    out += "\r\n\r\n";

    return gzipped ? gzip_compress(out) : out;
}

struct WarcReaderOptions {
    bool strict = false;  // malformed records become fatal instead of skipped
};

namespace detail {

// Pull-parser over an in-memory block. read offsets are relative to the block.
struct BlockCursor {
    std::string_view data;
    std::size_t pos = 0;

    bool at_end() const { return pos >= data.size(); }

    // Reads through "\n", strips "\r\n"/"\n". False at end of block.
    bool read_line(std::string_view& line) {
        if (at_end()) return false;
        auto nl = data.find('\n', pos);
        std::size_t end = nl == std::string_view::npos ? data.size() : nl;
        line = data.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = nl == std::string_view::npos ? data.size() : nl + 1;
        return true;
    }
};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Streaming reader over plain or per-record-gzipped WARC input, detected
/// from the leading magic bytes. Malformed header blocks are skipped and
/// counted (fatal under `strict`); a truncated payload is always fatal.
class WarcReader {
public:
    struct Skipped {
        std::uint64_t offset;
        std::string reason;
    };

    WarcReader(std::istream& in, std::string filename = {}, WarcReaderOptions options = {})
        : in_(in), filename_(std::move(filename)), options_(options) {
        char magic[2];
        in_.read(magic, 2);
        std::streamsize got = in_.gcount();
        std::string head(magic, static_cast<std::size_t>(got));
        gzipped_ = got == 2 && static_cast<unsigned char>(magic[0]) == 0x1f &&
                   static_cast<unsigned char>(magic[1]) == 0x8b;
        if (gzipped_) {
            inflater_ = std::make_unique<GzipMemberInflater>(in_, std::move(head));
        } else {
            pending_ = std::move(head);
        }
    }

    const std::vector<Skipped>& skipped() const { return skipped_; }
    bool gzipped() const { return gzipped_; }

    /// Next record in file order; nullopt at clean end of input.
    std::optional<WarcRecord> next() {
        if (gzipped_) return next_gzipped();
        return next_plain();
    }

    /// Drain the stream into a vector.
    std::vector<WarcRecord> read_all() {
        std::vector<WarcRecord> out;
        while (auto rec = next()) out.push_back(std::move(*rec));
        return out;
    }

private:
    std::optional<WarcRecord> next_gzipped() {
        while (true) {
            if (!member_.empty()) {
                detail::BlockCursor cursor{member_, member_pos_};
                auto rec = parse_from_block(cursor, member_offset_, member_size_);
                member_pos_ = cursor.pos;
                if (rec) return rec;
                member_.clear();
                member_pos_ = 0;
                continue;  // exhausted this member, pull the next one
            }
            auto member = inflater_->next();
            if (!member) return std::nullopt;
            member_ = std::move(member->data);
            member_pos_ = 0;
            member_offset_ = member->offset;
            member_size_ = member->compressed_size;
        }
    }

    std::optional<WarcRecord> next_plain() {
        while (true) {
            refill(65536);
            if (pending_.empty()) return std::nullopt;
            detail::BlockCursor cursor{pending_, 0};
            std::uint64_t record_start = pending_offset_;
            auto rec = try_parse_plain(cursor, record_start);
            // try_parse_plain consumed cursor.pos bytes of pending_
            pending_offset_ += cursor.pos;
            pending_.erase(0, cursor.pos);
            if (rec) return rec;
            if (done_) return std::nullopt;
        }
    }

    // Plain-stream parse: the header block must fit in the buffered window;
    // the payload is streamed through `pending_` with refills.
    std::optional<WarcRecord> try_parse_plain(detail::BlockCursor& cursor, std::uint64_t base) {
        skip_blank_lines(cursor);
        if (cursor.at_end()) {
            done_ = true;
            return std::nullopt;
        }
        std::size_t version_pos = cursor.pos;
        std::uint64_t record_offset = base + version_pos;

        WarcRecord rec;
        std::string reason;
        if (!parse_header_block(cursor, rec, reason)) {
            if (options_.strict) throw ParseError("warc: " + reason, record_offset);
            skipped_.push_back({record_offset, reason});
            resync_plain(cursor);
            return std::nullopt;  // caller loops
        }

        // Payload: may extend beyond the current window.
        std::string payload;
        payload.reserve(static_cast<std::size_t>(rec.content_length));
        std::size_t available = pending_.size() - cursor.pos;
        std::size_t take = static_cast<std::size_t>(
            std::min<std::uint64_t>(available, rec.content_length));
        payload.append(pending_, cursor.pos, take);
        cursor.pos += take;
        while (payload.size() < rec.content_length) {
            // window exhausted mid-payload: drop consumed bytes, refill
            pending_offset_ += cursor.pos;
            pending_.erase(0, cursor.pos);
            cursor = detail::BlockCursor{pending_, 0};
            if (!refill(65536) || pending_.empty()) {
                throw ParseError("warc: truncated payload (expected " +
                                     std::to_string(rec.content_length) + " bytes, got " +
                                     std::to_string(payload.size()) + ")",
                                 record_offset);
            }
            cursor.data = pending_;
            take = static_cast<std::size_t>(std::min<std::uint64_t>(
                pending_.size(), rec.content_length - payload.size()));
            payload.append(pending_, 0, take);
            cursor.pos = take;
        }
        rec.payload = std::move(payload);

        // Terminator: two CRLFs. Make sure they are buffered before consuming.
        if (pending_.size() - cursor.pos < 4) {
            pending_offset_ += cursor.pos;
            pending_.erase(0, cursor.pos);
            refill(65536);
            cursor = detail::BlockCursor{pending_, 0};
        }
        consume_terminator(cursor);

        rec.source_offset = record_offset;
        rec.source_length = (pending_offset_ + cursor.pos) - record_offset;
        rec.source_filename = filename_;
        return rec;
    }

    // Gzip-member parse: the whole member is in memory.
    std::optional<WarcRecord> parse_from_block(detail::BlockCursor& cursor, std::uint64_t offset,
                                               std::uint64_t compressed_size) {
        skip_blank_lines(cursor);
        if (cursor.at_end()) return std::nullopt;

        WarcRecord rec;
        std::string reason;
        std::uint64_t record_offset = offset;  // member start in the compressed file
        if (!parse_header_block(cursor, rec, reason)) {
            if (options_.strict) throw ParseError("warc: " + reason, record_offset);
            skipped_.push_back({record_offset, reason});
            cursor.pos = cursor.data.size();  // abandon the rest of the member
            return std::nullopt;
        }
        if (cursor.data.size() - cursor.pos < rec.content_length) {
            throw ParseError("warc: truncated payload (expected " +
                                 std::to_string(rec.content_length) + " bytes, got " +
                                 std::to_string(cursor.data.size() - cursor.pos) + ")",
                             record_offset);
        }
        rec.payload = std::string(cursor.data.substr(cursor.pos,
                                                     static_cast<std::size_t>(rec.content_length)));
        cursor.pos += static_cast<std::size_t>(rec.content_length);
        consume_terminator(cursor);
        rec.source_offset = record_offset;
        rec.source_length = compressed_size;
        rec.source_filename = filename_;
        return rec;
    }

    bool parse_header_block(detail::BlockCursor& cursor, WarcRecord& rec, std::string& reason) {
        std::string_view line;
        if (!cursor.read_line(line)) {
            reason = "missing version line";
            return false;
        }
        if (line != "WARC/1.0" && line != "WARC/1.1") {
            reason = "unsupported version line: " + std::string(line.substr(0, 40));
            return false;
        }
        bool saw_length = false;
        bool saw_date = false;
        while (true) {
            if (!cursor.read_line(line)) {
                reason = "header block not terminated";
                return false;
            }
            if (line.empty()) break;
            auto colon = line.find(':');
            if (colon == std::string_view::npos) {
                reason = "malformed header field: " + std::string(line.substr(0, 40));
                return false;
            }
            std::string name(detail::trim(line.substr(0, colon)));
            std::string value(detail::trim(line.substr(colon + 1)));
            if (name == "WARC-Type") {
                rec.type_name = value;
                rec.record_type = record_type_from_name(value);
            } else if (name == "WARC-Record-ID") {
                if (value.size() >= 2 && value.front() == '<' && value.back() == '>') {
                    value = value.substr(1, value.size() - 2);
                }
                rec.record_id = value;
            } else if (name == "WARC-Date") {
                try {
                    rec.record_date = parse_iso8601(value);
                    saw_date = true;
                } catch (const Error&) {
                    reason = "bad WARC-Date: " + value;
                    return false;
                }
            } else if (name == "WARC-Target-URI") {
                if (value.size() >= 2 && value.front() == '<' && value.back() == '>') {
                    value = value.substr(1, value.size() - 2);
                }
                rec.target_uri = value;
            } else if (name == "Content-Type") {
                rec.content_type = value;
            } else if (name == "Content-Length") {
                try {
                    rec.content_length = std::stoull(value);
                    saw_length = true;
                } catch (const std::exception&) {
                    reason = "bad Content-Length: " + value;
                    return false;
                }
            } else {
                rec.extra_headers.emplace_back(std::move(name), std::move(value));
            }
        }
        if (rec.type_name.empty()) {
            reason = "missing WARC-Type";
            return false;
        }
        if (!saw_date) {
            reason = "missing WARC-Date";
            return false;
        }
        if (!saw_length) {
            reason = "missing Content-Length";
            return false;
        }
        return true;
    }

    static void skip_blank_lines(detail::BlockCursor& cursor) {
        while (!cursor.at_end()) {
            std::size_t save = cursor.pos;
            std::string_view line;
            cursor.read_line(line);
            if (!line.empty()) {
                cursor.pos = save;
                return;
            }
        }
    }

    static void consume_terminator(detail::BlockCursor& cursor) {
        // Expect CRLFCRLF; tolerate fewer/looser line breaks.
        for (int i = 0; i < 2 && !cursor.at_end(); ++i) {
            std::size_t save = cursor.pos;
            std::string_view line;
            cursor.read_line(line);
            if (!line.empty()) {
                cursor.pos = save;
                return;
            }
        }
    }

    // After a malformed header, scan forward to the next plausible record start.
    void resync_plain(detail::BlockCursor& cursor) {
        while (true) {
            std::size_t save = cursor.pos;
            std::string_view line;
            if (!cursor.read_line(line)) {
                if (!refill(65536)) {
                    done_ = true;
                    return;
                }
                cursor.data = pending_;
                continue;
            }
            if (line.rfind("WARC/1.", 0) == 0) {
                cursor.pos = save;
                return;
            }
        }
    }

    bool refill(std::size_t chunk) {
        if (!in_.good()) return false;
        std::size_t old = pending_.size();
        pending_.resize(old + chunk);
        in_.read(pending_.data() + old, static_cast<std::streamsize>(chunk));
        std::streamsize got = in_.gcount();
        pending_.resize(old + static_cast<std::size_t>(got));
        return got > 0;
    }

    std::istream& in_;
    std::string filename_;
    WarcReaderOptions options_;
    bool gzipped_ = false;
    bool done_ = false;

    // plain mode
    std::string pending_;
    std::uint64_t pending_offset_ = 0;  // absolute offset of pending_[0]

    // gzip mode
    std::unique_ptr<GzipMemberInflater> inflater_;
    std::string member_;
    std::size_t member_pos_ = 0;
    std::uint64_t member_offset_ = 0;
    std::uint64_t member_size_ = 0;

    std::vector<Skipped> skipped_;
};

/// Parse a whole stream. `skipped`, when given, receives the malformed-record
/// count (always zero under strict options, which throw instead).
inline std::vector<WarcRecord> read_warc_stream(std::istream& in, std::string filename = {},
                                                WarcReaderOptions options = {},
                                                std::size_t* skipped = nullptr) {
    WarcReader reader(in, std::move(filename), options);
    auto records = reader.read_all();
    if (skipped) *skipped = reader.skipped().size();
    return records;
}

inline std::vector<WarcRecord> read_warc_file(const std::filesystem::path& path,
                                              WarcReaderOptions options = {},
                                              std::size_t* skipped = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open WARC file: " + path.string());
    return read_warc_stream(in, path.filename().string(), options, skipped);
}

/// Appends records to a file, one gzip member per record when `gzipped`.
/// `write` fills in the record's source location fields.
class WarcWriter {
public:
    WarcWriter(const std::filesystem::path& path, bool gzipped)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc), gzipped_(gzipped) {
        if (!out_) throw Error("cannot open WARC file for writing: " + path.string());
    }

    void write(WarcRecord& record) {
        std::string bytes = write_warc_record(record, gzipped_);
        record.source_offset = offset_;
        record.source_length = bytes.size();
        record.source_filename = path_.filename().string();
        out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out_) throw Error("write failed: " + path_.string());
        offset_ += bytes.size();
    }

    void flush() { out_.flush(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    bool gzipped_;
    std::uint64_t offset_ = 0;
};

}  // namespace warcrace
