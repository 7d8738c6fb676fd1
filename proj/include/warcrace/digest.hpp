#pragma once

#include <openssl/evp.h>

#include <array>
#include <string>
#include <string_view>

#include "warcrace/error.hpp"

namespace warcrace {

namespace detail {

// RFC 4648 base32, uppercase. 20 input bytes encode to exactly 32 characters,
// so sha1 digests never need padding.
inline std::string base32_encode(const unsigned char* data, std::size_t len) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
    std::string out;
    out.reserve((len * 8 + 4) / 5);
    int bits = 0;
    unsigned int acc = 0;
    for (std::size_t i = 0; i < len; ++i) {
        acc = (acc << 8) | data[i];
        bits += 8;
        while (bits >= 5) {
            out.push_back(kAlphabet[(acc >> (bits - 5)) & 0x1f]);
            bits -= 5;
        }
    }
    if (bits > 0) out.push_back(kAlphabet[(acc << (5 - bits)) & 0x1f]);
    return out;
}

}  // namespace detail

/// sha1 of `data` in the "sha1:" + base32 notation used by capture indexes.
inline std::string sha1_base32(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int md_len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &md_len, EVP_sha1(), nullptr) != 1) {
        throw Error("sha1 digest failed");
    }
    return "sha1:" + detail::base32_encode(md.data(), md_len);
}

}  // namespace warcrace
