#include <gmp.h>
#include <gtest/gtest.h>
#include <openssl/evp.h>

#include <cstring>
#include <random>

#include "strhound/codec/codec.hpp"

using namespace strhound::codec;

namespace {

Bytes hex(std::string_view h) {
  Bytes out;
  for (std::size_t i = 0; i + 1 < h.size(); i += 2) out.push_back(static_cast<std::uint8_t>(std::stoi(std::string(h.substr(i, 2)), nullptr, 16)));
  return out;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> byte(0, 255);
  Bytes b(len(rng));
  for (auto& x : b) x = static_cast<std::uint8_t>(byte(rng));
  // Bias some samples toward zero runs, which exercise the 'z' and marker paths.
  if (!b.empty() && rng() % 4 == 0) std::fill(b.begin(), b.begin() + static_cast<long>(b.size() / 2), 0);
  return b;
}

Bytes openssl_ecb(const Bytes& data, const Bytes& key) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr);
  Bytes out(data.size() + 16);
  int n1 = 0, n2 = 0;
  EVP_EncryptUpdate(ctx, out.data(), &n1, data.data(), static_cast<int>(data.size()));
  EVP_EncryptFinal_ex(ctx, out.data() + n1, &n2);
  EVP_CIPHER_CTX_free(ctx);
  out.resize(static_cast<std::size_t>(n1 + n2));
  return out;
}

std::string gmp_radix(const Bytes& data, int radix) {
  mpz_t z;
  mpz_init(z);
  Bytes marked{1};
  marked.insert(marked.end(), data.begin(), data.end());
  mpz_import(z, marked.size(), 1, 1, 1, 0, marked.data());
  std::string s(mpz_sizeinbase(z, radix) + 2, '\0');
  mpz_get_str(s.data(), radix, z);
  mpz_clear(z);
  s.resize(std::strlen(s.c_str()));
  return s;
}

TEST(Aes, FipsAppendixC1) {
  const Bytes key = hex("000102030405060708090a0b0c0d0e0f");
  const Bytes pt = hex("00112233445566778899aabbccddeeff");
  std::uint8_t ct[16];
  aes128_encrypt_block(key.data(), pt.data(), ct);
  EXPECT_EQ(Bytes(ct, ct + 16), hex("69c4e0d86a7b0430d8cdb78070b4c55a"));
  std::uint8_t back[16];
  aes128_decrypt_block(key.data(), ct, back);
  EXPECT_EQ(Bytes(back, back + 16), pt);
}

TEST(Aes, MatchesOpenSsl) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    Bytes key = random_bytes(rng, 16);
    key.resize(16, 0x5a);
    const Bytes data = random_bytes(rng, 80);
    const Bytes ours = aes128_ecb_encrypt(data, key);
    ASSERT_EQ(ours, openssl_ecb(data, key));
    ASSERT_EQ(aes128_ecb_decrypt(ours, key), data);
  }
}

TEST(Aes, BadKeyAndPadding) {
  const Bytes key15(15, 1);
  EXPECT_THROW(aes128_ecb_decrypt(Bytes(16, 0), key15), CipherError);
  EXPECT_THROW(aes128_ecb_encrypt(Bytes(3, 0), key15), CipherError);
  const Bytes key(16, 1);
  EXPECT_THROW(aes128_ecb_decrypt(Bytes(15, 0), key), CipherError);
  // A block whose plaintext ends in 0x00 is not valid PKCS#7.
  std::uint8_t zero[16] = {}, ct[16];
  aes128_encrypt_block(key.data(), zero, ct);
  EXPECT_THROW(aes128_ecb_decrypt(Bytes(ct, ct + 16), key), CipherError);
}

TEST(Base64, KnownValues) {
  EXPECT_EQ(b64_encode(to_bytes("hello")), "aGVsbG8=");
  EXPECT_EQ(b64_encode(Bytes{}), "");
  EXPECT_EQ(to_string(b64_decode("aGVsbG8=")), "hello");
  EXPECT_TRUE(b64_decode("").empty());
  EXPECT_THROW(b64_decode("aGVsbG8"), CodecError);
  EXPECT_THROW(b64_decode("aG=sbG8="), CodecError);
  EXPECT_THROW(b64_decode("aGVs*G8="), CodecError);
}

TEST(Base85, KnownValues) {
  EXPECT_EQ(b85_encode(Bytes(4, 0)), "z");
  EXPECT_EQ(b85_encode(to_bytes("Man ")), "9jqo^");
  EXPECT_EQ(to_string(b85_decode("9jqo^")), "Man ");
  EXPECT_THROW(b85_decode("9"), CodecError);
}

TEST(Url, KnownValues) {
  EXPECT_EQ(url_encode(u" /"), u"%20%2F");
  EXPECT_EQ(url_encode(u"a-b_c.d~"), u"a-b_c.d~");
  EXPECT_EQ(url_encode(u"é"), u"%C3%A9");
  EXPECT_EQ(url_decode(u"%C3%A9x"), u"éx");
  EXPECT_THROW(url_decode(u"%4"), CodecError);
  EXPECT_THROW(url_decode(u"%zz"), CodecError);
}

TEST(BigInt, KnownValues) {
  EXPECT_EQ(bigint_encode(Bytes{}, 16), "1");
  EXPECT_EQ(bigint_encode(Bytes{0xff}, 16), "1ff");
  EXPECT_EQ(bigint_decode("100", 16), Bytes{0x00});
  EXPECT_THROW(bigint_decode("", 10), CodecError);
  EXPECT_THROW(bigint_decode("0", 10), CodecError);
}

TEST(BigInt, MatchesGmp) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Bytes b = random_bytes(rng, 40);
    const int radix = 2 + static_cast<int>(rng() % 35);
    const std::string s = bigint_encode(b, radix);
    ASSERT_EQ(s, gmp_radix(b, radix)) << "radix " << radix;
    ASSERT_EQ(bigint_decode(s, radix), b);
  }
}

TEST(Utf, Wtf8KeepsLoneSurrogates) {
  std::u16string s = u"x";
  s += static_cast<char16_t>(0xDC00);
  s += u"y\U0001F600";
  EXPECT_EQ(from_wtf8(to_wtf8(s)), s);
  EXPECT_EQ(utf8_decode(utf8_bytes(u"é中")), u"é中");
}

TEST(Utf, MalformedSubpartsBecomeReplacement) {
  const Bytes b{'a', 0xC3, 'b', 0xE2, 0x82, 'c', 0xFF};
  EXPECT_EQ(utf8_decode(b), u"a�b�c�");
}

// Randomized round trips, 10k inputs per codec.
TEST(RoundTrip, AllCodecs) {
  std::mt19937_64 rng(2024);
  const Bytes key = hex("2b7e151628aed2a6abf7158809cf4f3c");
  for (int i = 0; i < 10000; ++i) {
    const Bytes b = random_bytes(rng, 64);
    ASSERT_EQ(b64_decode(b64_encode(b)), b);
    ASSERT_EQ(b85_decode(b85_encode(b)), b);
    ASSERT_EQ(bigint_decode(bigint_encode(b, 36), 36), b);
    ASSERT_EQ(aes128_ecb_decrypt(aes128_ecb_encrypt(b, key), key), b);
    std::u16string s;
    for (const auto x : b) s += static_cast<char16_t>(x * 97 % 0xD000);
    ASSERT_EQ(url_decode(url_encode(s)), s);
    ASSERT_EQ(from_wtf8(to_wtf8(s)), s);
  }
}

}  // namespace
