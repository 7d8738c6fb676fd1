#pragma once

#include <zlib.h>

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>

#include "warcrace/error.hpp"

namespace warcrace {

/// Compress `data` as a single gzip member.
inline std::string gzip_compress(std::string_view data, int level = 6) {
    z_stream zs{};
    if (deflateInit2(&zs, level, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw Error("deflateInit2 failed");
    }
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    std::string out;
    char buf[16384];
    int rc = Z_OK;
    do {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        rc = deflate(&zs, Z_FINISH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            deflateEnd(&zs);
            throw Error("deflate failed: rc=" + std::to_string(rc));
        }
        out.append(buf, sizeof(buf) - zs.avail_out);
    } while (rc != Z_STREAM_END);
    deflateEnd(&zs);
    return out;
}

/// Reads a stream of concatenated gzip members one member at a time,
/// reporting where each member started in the compressed input. WARC
/// readers need the boundaries because each record is its own member.
class GzipMemberInflater {
public:
    struct Member {
        std::uint64_t offset = 0;           // compressed offset of the member start
        std::uint64_t compressed_size = 0;  // bytes the member occupies in the input
        std::string data;                   // decompressed contents
    };

    GzipMemberInflater(std::istream& in, std::string carried = {})
        : in_(in), inbuf_(std::move(carried)) {}

    ~GzipMemberInflater() {
        if (open_) inflateEnd(&zs_);
    }

    GzipMemberInflater(const GzipMemberInflater&) = delete;
    GzipMemberInflater& operator=(const GzipMemberInflater&) = delete;

    /// Next member, or nullopt at clean end of input.
    std::optional<Member> next() {
        if (!fill() && inbuf_.empty()) return std::nullopt;

        Member m;
        m.offset = consumed_total_;
        if (!open_) {
            zs_ = z_stream{};
            if (inflateInit2(&zs_, 15 + 16) != Z_OK) throw Error("inflateInit2 failed");
            open_ = true;
        } else {
            inflateReset(&zs_);
        }

        char out[16384];
        bool done = false;
        while (!done) {
            if (inbuf_.empty() && !fill()) {
                throw ParseError("truncated gzip member", m.offset);
            }
            zs_.next_in = reinterpret_cast<Bytef*>(inbuf_.data());
            zs_.avail_in = static_cast<uInt>(inbuf_.size());
            do {
                zs_.next_out = reinterpret_cast<Bytef*>(out);
                zs_.avail_out = sizeof(out);
                int rc = inflate(&zs_, Z_NO_FLUSH);
                if (rc == Z_STREAM_END) {
                    done = true;
                } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
                    throw ParseError(std::string("gzip decode failed: ") +
                                         (zs_.msg ? zs_.msg : "unknown"),
                                     m.offset);
                }
                m.data.append(out, sizeof(out) - zs_.avail_out);
            } while (!done && zs_.avail_in > 0);
            std::size_t used = inbuf_.size() - zs_.avail_in;
            consumed_total_ += used;
            inbuf_.erase(0, used);
        }
        m.compressed_size = consumed_total_ - m.offset;
        return m;
    }

private:
    bool fill() {
        if (!in_.good()) return !inbuf_.empty();
        char buf[65536];
        in_.read(buf, sizeof(buf));
        std::streamsize got = in_.gcount();
        if (got > 0) inbuf_.append(buf, static_cast<std::size_t>(got));
        return !inbuf_.empty();
    }

    std::istream& in_;
    std::string inbuf_;
    std::uint64_t consumed_total_ = 0;
    z_stream zs_{};
    bool open_ = false;
};

}  // namespace warcrace
