#include <array>
#include <cstring>

#include "strhound/codec/codec.hpp"

namespace strhound::codec {

namespace {

using Block = std::array<std::uint8_t, 16>;
using RoundKeys = std::array<std::uint8_t, 176>;

constexpr std::uint8_t xtime(std::uint8_t x) { return static_cast<std::uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1B : 0)); }

constexpr std::uint8_t gmul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  while (b) {
    if (b & 1) p ^= a;
    a = xtime(a);
    b >>= 1;
  }
  return p;
}

// S-box derived from the multiplicative inverse in GF(2^8) plus the affine map.
constexpr std::array<std::uint8_t, 256> make_sbox() {
  std::array<std::uint8_t, 256> s{};
  for (int x = 0; x < 256; ++x) {
    std::uint8_t inv = 0;
    if (x) {
      for (int y = 1; y < 256; ++y)
        if (gmul(static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y)) == 1) {
          inv = static_cast<std::uint8_t>(y);
          break;
        }
    }
    std::uint8_t r = inv;
    for (int k = 1; k <= 4; ++k) r ^= static_cast<std::uint8_t>((inv << k) | (inv >> (8 - k)));
    s[x] = r ^ 0x63;
  }
  return s;
}

constexpr auto kSbox = make_sbox();

constexpr std::array<std::uint8_t, 256> make_inv_sbox() {
  std::array<std::uint8_t, 256> inv{};
  for (int x = 0; x < 256; ++x) inv[kSbox[x]] = static_cast<std::uint8_t>(x);
  return inv;
}

constexpr auto kInvSbox = make_inv_sbox();

RoundKeys expand_key(const std::uint8_t key[16]) {
  RoundKeys w{};
  std::memcpy(w.data(), key, 16);
  std::uint8_t rcon = 1;
  for (int i = 16; i < 176; i += 4) {
    std::uint8_t t[4] = {w[i - 4], w[i - 3], w[i - 2], w[i - 1]};
    if (i % 16 == 0) {
      const std::uint8_t first = t[0];
      t[0] = kSbox[t[1]] ^ rcon;
      t[1] = kSbox[t[2]];
      t[2] = kSbox[t[3]];
      t[3] = kSbox[first];
      rcon = xtime(rcon);
    }
    for (int k = 0; k < 4; ++k) w[i + k] = w[i - 16 + k] ^ t[k];
  }
  return w;
}

void add_round_key(Block& s, const RoundKeys& w, int round) {
  for (int i = 0; i < 16; ++i) s[i] ^= w[round * 16 + i];
}

// State is column-major: s[4*c + r].
void shift_rows(Block& s) {
  Block t = s;
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < 4; ++c) s[4 * c + r] = t[4 * ((c + r) % 4) + r];
}

void inv_shift_rows(Block& s) {
  Block t = s;
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < 4; ++c) s[4 * ((c + r) % 4) + r] = t[4 * c + r];
}

void mix_columns(Block& s) {
  for (int c = 0; c < 4; ++c) {
    std::uint8_t* a = &s[4 * c];
    const std::uint8_t a0 = a[0], a1 = a[1], a2 = a[2], a3 = a[3];
    a[0] = xtime(a0) ^ (xtime(a1) ^ a1) ^ a2 ^ a3;
    a[1] = a0 ^ xtime(a1) ^ (xtime(a2) ^ a2) ^ a3;
    a[2] = a0 ^ a1 ^ xtime(a2) ^ (xtime(a3) ^ a3);
    a[3] = (xtime(a0) ^ a0) ^ a1 ^ a2 ^ xtime(a3);
  }
}

void inv_mix_columns(Block& s) {
  for (int c = 0; c < 4; ++c) {
    std::uint8_t* a = &s[4 * c];
    const std::uint8_t a0 = a[0], a1 = a[1], a2 = a[2], a3 = a[3];
    a[0] = gmul(a0, 14) ^ gmul(a1, 11) ^ gmul(a2, 13) ^ gmul(a3, 9);
    a[1] = gmul(a0, 9) ^ gmul(a1, 14) ^ gmul(a2, 11) ^ gmul(a3, 13);
    a[2] = gmul(a0, 13) ^ gmul(a1, 9) ^ gmul(a2, 14) ^ gmul(a3, 11);
    a[3] = gmul(a0, 11) ^ gmul(a1, 13) ^ gmul(a2, 9) ^ gmul(a3, 14);
  }
}

void encrypt_block(const RoundKeys& w, const std::uint8_t in[16], std::uint8_t out[16]) {
  Block s;
  std::memcpy(s.data(), in, 16);
  add_round_key(s, w, 0);
  for (int round = 1; round <= 10; ++round) {
    for (auto& b : s) b = kSbox[b];
    shift_rows(s);
    if (round != 10) mix_columns(s);
    add_round_key(s, w, round);
  }
  std::memcpy(out, s.data(), 16);
}

void decrypt_block(const RoundKeys& w, const std::uint8_t in[16], std::uint8_t out[16]) {
  Block s;
  std::memcpy(s.data(), in, 16);
  add_round_key(s, w, 10);
  for (int round = 9; round >= 0; --round) {
    inv_shift_rows(s);
    for (auto& b : s) b = kInvSbox[b];
    add_round_key(s, w, round);
    if (round != 0) inv_mix_columns(s);
  }
  std::memcpy(out, s.data(), 16);
}

void check_key(std::span<const std::uint8_t> key) {
  if (key.size() != 16) throw CipherError("aes: key must be 16 bytes");
}

}  // namespace

void aes128_encrypt_block(const std::uint8_t key[16], const std::uint8_t in[16], std::uint8_t out[16]) {
  encrypt_block(expand_key(key), in, out);
}

void aes128_decrypt_block(const std::uint8_t key[16], const std::uint8_t in[16], std::uint8_t out[16]) {
  decrypt_block(expand_key(key), in, out);
}

Bytes aes128_ecb_encrypt(std::span<const std::uint8_t> data, std::span<const std::uint8_t> key) {
  check_key(key);
  const RoundKeys w = expand_key(key.data());
  const std::size_t pad = 16 - data.size() % 16;
  Bytes buf(data.begin(), data.end());
  buf.insert(buf.end(), pad, static_cast<std::uint8_t>(pad));
  for (std::size_t i = 0; i < buf.size(); i += 16) encrypt_block(w, &buf[i], &buf[i]);
  return buf;
}

Bytes aes128_ecb_decrypt(std::span<const std::uint8_t> data, std::span<const std::uint8_t> key) {
  check_key(key);
  if (data.empty() || data.size() % 16 != 0) throw CipherError("aes: ciphertext length not a multiple of 16");
  const RoundKeys w = expand_key(key.data());
  Bytes buf(data.begin(), data.end());
  for (std::size_t i = 0; i < buf.size(); i += 16) decrypt_block(w, &buf[i], &buf[i]);
  const std::uint8_t pad = buf.back();
  if (pad == 0 || pad > 16) throw CipherError("aes: bad padding");
  for (std::size_t i = buf.size() - pad; i < buf.size(); ++i)
    if (buf[i] != pad) throw CipherError("aes: bad padding");
  buf.resize(buf.size() - pad);
  return buf;
}

}  // namespace strhound::codec
