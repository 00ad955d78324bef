#include "strhound/codec/codec.hpp"

namespace strhound::codec {

namespace {

void put_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

void put_utf16(std::u16string& out, char32_t cp) {
  if (cp < 0x10000) {
    out += static_cast<char16_t>(cp);
  } else {
    cp -= 0x10000;
    out += static_cast<char16_t>(0xD800 + (cp >> 10));
    out += static_cast<char16_t>(0xDC00 + (cp & 0x3FF));
  }
}

// Walks a UTF-16 string yielding code points; lone surrogates are passed
// through as-is (values D800..DFFF) and the caller decides what to do.
template <typename Fn>
void for_each_code_point(std::u16string_view s, Fn&& fn) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    char32_t c = s[i];
    if (c >= 0xD800 && c <= 0xDBFF && i + 1 < s.size() && s[i + 1] >= 0xDC00 && s[i + 1] <= 0xDFFF) {
      c = 0x10000 + ((c - 0xD800) << 10) + (s[i + 1] - 0xDC00);
      ++i;
    }
    fn(c);
  }
}

// Decodes one sequence starting at b[i]. Returns the code point (or U+FFFD)
// and advances i past the maximal subpart consumed. Surrogate code points are
// accepted only when `allow_surrogates` is set.
char32_t decode_one(std::span<const std::uint8_t> b, std::size_t& i, bool allow_surrogates) {
  const std::uint8_t c0 = b[i];
  if (c0 < 0x80) {
    ++i;
    return c0;
  }
  int len;
  char32_t cp;
  std::uint8_t lo = 0x80, hi = 0xBF;
  if (c0 >= 0xC2 && c0 <= 0xDF) {
    len = 2;
    cp = c0 & 0x1F;
  } else if (c0 >= 0xE0 && c0 <= 0xEF) {
    len = 3;
    cp = c0 & 0x0F;
    if (c0 == 0xE0) lo = 0xA0;
    if (c0 == 0xED && !allow_surrogates) hi = 0x9F;
  } else if (c0 >= 0xF0 && c0 <= 0xF4) {
    len = 4;
    cp = c0 & 0x07;
    if (c0 == 0xF0) lo = 0x90;
    if (c0 == 0xF4) hi = 0x8F;
  } else {
    ++i;
    return 0xFFFD;
  }
  std::size_t j = i + 1;
  for (int k = 1; k < len; ++k, ++j) {
    if (j >= b.size()) {
      i = j;
      return 0xFFFD;
    }
    const std::uint8_t c = b[j];
    const std::uint8_t l = k == 1 ? lo : 0x80;
    const std::uint8_t h = k == 1 ? hi : 0xBF;
    if (c < l || c > h) {
      i = j;
      return 0xFFFD;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  i = j;
  return cp;
}

}  // namespace

std::string to_wtf8(std::u16string_view s) {
  std::string out;
  out.reserve(s.size());
  for_each_code_point(s, [&](char32_t cp) { put_utf8(out, cp); });
  return out;
}

std::u16string from_wtf8(std::string_view s) {
  std::span<const std::uint8_t> b(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  std::u16string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < b.size()) put_utf16(out, decode_one(b, i, true));
  return out;
}

Bytes utf8_bytes(std::u16string_view s) {
  std::string out;
  out.reserve(s.size());
  for_each_code_point(s, [&](char32_t cp) {
    if (cp >= 0xD800 && cp <= 0xDFFF) cp = '?';
    put_utf8(out, cp);
  });
  return to_bytes(out);
}

std::u16string utf8_decode(std::span<const std::uint8_t> b) {
  std::u16string out;
  out.reserve(b.size());
  std::size_t i = 0;
  while (i < b.size()) put_utf16(out, decode_one(b, i, false));
  return out;
}

}  // namespace strhound::codec
