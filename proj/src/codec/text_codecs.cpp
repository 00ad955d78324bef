#include <array>

#include "strhound/codec/codec.hpp"

namespace strhound::codec {

namespace {

constexpr std::string_view kB64Alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr std::string_view kDigits = "0123456789abcdefghijklmnopqrstuvwxyz";

constexpr std::array<std::int8_t, 256> make_b64_table() {
  std::array<std::int8_t, 256> t{};
  for (auto& v : t) v = -1;
  for (std::size_t i = 0; i < kB64Alphabet.size(); ++i) t[static_cast<unsigned char>(kB64Alphabet[i])] = static_cast<std::int8_t>(i);
  return t;
}

constexpr auto kB64Table = make_b64_table();

int hex_value(char16_t c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool unreserved(std::uint8_t c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
         c == '.' || c == '~';
}

}  // namespace

std::string b64_encode(std::span<const std::uint8_t> data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += kB64Alphabet[v & 63];
  }
  const std::size_t rest = data.size() - i;
  if (rest == 1) {
    const std::uint32_t v = data[i] << 16;
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

Bytes b64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw CodecError("base64: length not a multiple of 4");
  Bytes out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = kB64Table[static_cast<unsigned char>(c)];
      if (d < 0 || pad > 0) throw CodecError("base64: invalid character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string b85_encode(std::span<const std::uint8_t> data) {
  std::string out;
  out.reserve(data.size() * 5 / 4 + 5);
  for (std::size_t i = 0; i < data.size(); i += 4) {
    const std::size_t n = std::min<std::size_t>(4, data.size() - i);
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) v = (v << 8) | (k < n ? data[i + k] : 0);
    if (n == 4 && v == 0) {
      out += 'z';
      continue;
    }
    char buf[5];
    for (int k = 4; k >= 0; --k) {
      buf[k] = static_cast<char>('!' + v % 85);
      v /= 85;
    }
    out.append(buf, n + 1);
  }
  return out;
}

Bytes b85_decode(std::string_view text) {
  Bytes out;
  out.reserve(text.size() * 4 / 5 + 4);
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == 'z') {
      out.insert(out.end(), 4, 0);
      ++i;
      continue;
    }
    const std::size_t n = std::min<std::size_t>(5, text.size() - i);
    if (n == 1) throw CodecError("ascii85: dangling character");
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      int d = 84;
      if (k < n) {
        const char c = text[i + k];
        if (c < '!' || c > 'u') throw CodecError("ascii85: invalid character");
        d = c - '!';
      }
      v = v * 85 + static_cast<std::uint64_t>(d);
    }
    if (v > 0xFFFFFFFFull) throw CodecError("ascii85: group overflow");
    for (std::size_t k = 0; k + 1 < n; ++k) out.push_back(static_cast<std::uint8_t>(v >> (24 - 8 * k)));
    i += n;
  }
  return out;
}

std::u16string url_encode(std::u16string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::u16string out;
  for (const std::uint8_t c : utf8_bytes(s)) {
    if (unreserved(c)) {
      out += static_cast<char16_t>(c);
    } else {
      out += u'%';
      out += static_cast<char16_t>(kHex[c >> 4]);
      out += static_cast<char16_t>(kHex[c & 15]);
    }
  }
  return out;
}

std::u16string url_decode(std::u16string_view s) {
  Bytes raw;
  std::u16string out;
  auto flush = [&] {
    if (!raw.empty()) {
      out += utf8_decode(raw);
      raw.clear();
    }
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == u'%') {
      if (i + 2 >= s.size()) throw CodecError("url: truncated escape");
      const int hi = hex_value(s[i + 1]);
      const int lo = hex_value(s[i + 2]);
      if (hi < 0 || lo < 0) throw CodecError("url: invalid escape");
      raw.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
      i += 2;
    } else {
      flush();
      out += s[i];
    }
  }
  flush();
  return out;
}

std::string bigint_encode(std::span<const std::uint8_t> data, int radix) {
  if (radix < 2 || radix > 36) throw CodecError("bigint: radix out of range");
  // Repeated division of the big-endian magnitude (marker byte included).
  std::vector<std::uint32_t> num;
  num.reserve(data.size() + 1);
  num.push_back(1);
  num.insert(num.end(), data.begin(), data.end());
  std::string digits;
  std::size_t start = 0;
  while (start < num.size()) {
    std::uint32_t rem = 0;
    for (std::size_t k = start; k < num.size(); ++k) {
      const std::uint32_t cur = rem * 256 + num[k];
      num[k] = cur / static_cast<std::uint32_t>(radix);
      rem = cur % static_cast<std::uint32_t>(radix);
    }
    digits += kDigits[rem];
    while (start < num.size() && num[start] == 0) ++start;
  }
  return {digits.rbegin(), digits.rend()};
}

Bytes bigint_decode(std::string_view text, int radix) {
  if (radix < 2 || radix > 36) throw CodecError("bigint: radix out of range");
  if (text.empty()) throw CodecError("bigint: empty input");
  Bytes num;  // little-endian base-256
  for (const char c : text) {
    const auto pos = kDigits.find(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    if (pos == std::string_view::npos || static_cast<int>(pos) >= radix) throw CodecError("bigint: invalid digit");
    std::uint32_t carry = static_cast<std::uint32_t>(pos);
    for (auto& b : num) {
      const std::uint32_t cur = b * static_cast<std::uint32_t>(radix) + carry;
      b = static_cast<std::uint8_t>(cur & 0xFF);
      carry = cur >> 8;
    }
    while (carry) {
      num.push_back(static_cast<std::uint8_t>(carry & 0xFF));
      carry >>= 8;
    }
  }
  if (num.empty() || num.back() != 1) throw CodecError("bigint: missing marker byte");
  num.pop_back();
  return {num.rbegin(), num.rend()};
}

}  // namespace strhound::codec
