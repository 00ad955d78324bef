#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace strhound::codec {

using Bytes = std::vector<std::uint8_t>;

struct CodecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CipherError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- text encodings -------------------------------------------------------

/// UTF-16 to UTF-8. Lone surrogates are written as their 3-byte generalized
/// form (WTF-8) so that arbitrary code unit sequences survive a round trip.
std::string to_wtf8(std::u16string_view s);
/// Inverse of to_wtf8. Malformed sequences decode to U+FFFD.
std::u16string from_wtf8(std::string_view s);

/// UTF-16 to UTF-8 bytes, lone surrogates replaced by '?'.
Bytes utf8_bytes(std::u16string_view s);
/// Decodes UTF-8, each malformed subsequence becomes one U+FFFD.
std::u16string utf8_decode(std::span<const std::uint8_t> b);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(std::span<const std::uint8_t> b) { return std::string(b.begin(), b.end()); }

// --- binary-to-text -------------------------------------------------------

std::string b64_encode(std::span<const std::uint8_t> data);
/// Standard alphabet, padding required; throws CodecError.
Bytes b64_decode(std::string_view text);

/// ASCII85 without delimiters; all-zero groups use 'z'.
std::string b85_encode(std::span<const std::uint8_t> data);
Bytes b85_decode(std::string_view text);

/// Percent-encodes the UTF-8 form of `s`; only A-Z a-z 0-9 - _ . ~ stay literal.
std::u16string url_encode(std::u16string_view s);
/// Decodes %XX escapes; throws CodecError on a malformed escape.
std::u16string url_decode(std::u16string_view s);

/// Renders the bytes as an unsigned big-endian integer in `radix` (2..36),
/// digits 0-9a-z. A 0x01 marker byte is prefixed so leading zero bytes survive.
std::string bigint_encode(std::span<const std::uint8_t> data, int radix);
Bytes bigint_decode(std::string_view text, int radix);

// --- ciphers --------------------------------------------------------------

/// Raw AES-128 block transforms (no padding).
void aes128_encrypt_block(const std::uint8_t key[16], const std::uint8_t in[16], std::uint8_t out[16]);
void aes128_decrypt_block(const std::uint8_t key[16], const std::uint8_t in[16], std::uint8_t out[16]);

/// AES-128 ECB with PKCS#7 padding. Throws CipherError on a bad key, length or padding.
Bytes aes128_ecb_encrypt(std::span<const std::uint8_t> data, std::span<const std::uint8_t> key);
Bytes aes128_ecb_decrypt(std::span<const std::uint8_t> data, std::span<const std::uint8_t> key);

}  // namespace strhound::codec
