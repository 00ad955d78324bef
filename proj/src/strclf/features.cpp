#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include <boost/regex.hpp>
#include <zlib.h>

#include "strhound/codec/codec.hpp"
#include "strhound/data.hpp"
#include "strhound/obf/obf.hpp"
#include "strhound/strclf/strclf.hpp"

namespace strhound::strclf {

namespace {

constexpr std::size_t kFormatCount = 27;
constexpr std::size_t kCells = 96;

const std::array<std::string_view, kFeatureCount> kNames = {
    // format flags, in the order of the pattern table
    "user_agent", "url", "regex_charset", "network_protocol", "os_command", "json", "encoding_name", "email", "dtd",
    "html_color", "classpath", "sql", "programming_keywords", "country_name", "xml", "ip", "http_status", "date",
    "numeric", "crypto_primitive", "phone_brand", "html_entity", "certificate", "android_certificate",
    "private_public_key", "social_network", "encoded_image",
    // statistics
    "chi_squared", "deviation_from_average", "entropy",
    // androdet
    "equals", "dashes", "slashes", "pluses", "repetitive_chars",
    // compression, context
    "compression_ratio", "crypto_context",
    // dictionary
    "shortest_word", "longest_word", "word_count", "unique_words",
    // characteristics
    "vowels", "consonants", "digits", "length", "unique_chars", "non_letters", "max_run", "max_same_char"};

std::size_t cell(std::uint8_t b) { return (b >= 0x20 && b <= 0x7E) ? b - 0x20 : kCells - 1; }

std::array<double, kCells> cell_histogram(std::u16string_view s) {
  std::array<double, kCells> h{};
  for (const char c : codec::to_wtf8(s)) h[cell(static_cast<std::uint8_t>(c))] += 1;
  return h;
}

bool is_ascii_letter(char16_t c) { return (c >= u'a' && c <= u'z') || (c >= u'A' && c <= u'Z'); }
bool is_cjk(char16_t c) { return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF); }

bool is_letter(char16_t c) {
  if (is_ascii_letter(c)) return true;
  if (c >= 0xC0 && c <= 0x24F) return c != 0xD7 && c != 0xF7;
  return (c >= 0x370 && c <= 0x3FF) || (c >= 0x400 && c <= 0x4FF) || (c >= 0x3040 && c <= 0x30FF) || is_cjk(c) ||
         (c >= 0xAC00 && c <= 0xD7AF);
}

bool is_vowel(char16_t c) {
  switch (c | 0x20) {
    case u'a': case u'e': case u'i': case u'o': case u'u': return is_ascii_letter(c);
    default: return false;
  }
}

bool is_upper(char16_t c) { return c >= u'A' && c <= u'Z'; }
bool is_lower(char16_t c) { return (c >= u'a' && c <= u'z') || (c >= 0xDF && c <= 0xFF && c != 0xF7); }

char16_t lower(char16_t c) {
  if (is_upper(c)) return static_cast<char16_t>(c + 32);
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return static_cast<char16_t>(c + 32);
  return c;
}

// Latin runs split at camel-case boundaries: "HTTPServerName" -> HTTP Server Name.
void split_latin(std::u16string_view run, std::vector<std::u16string>& out) {
  std::size_t start = 0;
  for (std::size_t i = 1; i <= run.size(); ++i) {
    bool cut = i == run.size();
    if (!cut) {
      const char16_t a = run[i - 1], b = run[i];
      if (is_lower(a) && is_upper(b)) cut = true;
      else if (is_upper(a) && is_upper(b) && i + 1 < run.size() && is_lower(run[i + 1])) cut = true;
    }
    if (cut) {
      std::u16string w;
      for (std::size_t k = start; k < i; ++k) w += lower(run[k]);
      out.push_back(std::move(w));
      start = i;
    }
  }
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() { return kNames; }

int feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<int>(i);
  return -1;
}

double chi_squared_uniform(std::u16string_view s) {
  if (s.empty()) return 0;
  const auto h = cell_histogram(s);
  double n = 0;
  for (const double v : h) n += v;
  const double e = n / kCells;
  double chi = 0;
  for (const double o : h) chi += (o - e) * (o - e) / e;
  return chi;
}

double normalized_entropy(std::u16string_view s) {
  std::map<char16_t, int> counts;
  for (const char16_t c : s) ++counts[c];
  if (counts.size() < 2) return 0;
  double h = 0;
  const double n = static_cast<double>(s.size());
  for (const auto& [c, k] : counts) {
    const double p = k / n;
    h -= p * std::log2(p);
  }
  return h / std::log2(static_cast<double>(counts.size()));
}

double compression_ratio(std::u16string_view s) { return compression_ratio(codec::to_bytes(codec::to_wtf8(s))); }

double compression_ratio(std::span<const std::uint8_t> raw) {
  if (raw.empty()) return 1;
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<Bytef> buf(len);
  if (compress2(buf.data(), &len, reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                Z_DEFAULT_COMPRESSION) != Z_OK)
    throw std::runtime_error("zlib compression failed");
  return static_cast<double>(len) / static_cast<double>(raw.size());
}

struct FeatureExtractor::Impl {
  std::vector<std::pair<std::string, boost::regex>> formats;
  std::unordered_set<std::u16string> words;
  std::size_t max_cjk_word = 1;
  std::vector<std::string> crypto_packages;
  std::array<double, kCells> reference{};
};

FeatureExtractor::FeatureExtractor(const std::filesystem::path& dir) : impl_(std::make_unique<Impl>()) {
  for (const auto& line : read_lines(dir / "format_patterns.tsv")) {
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw std::runtime_error("malformed format pattern line: " + line);
    boost::regex::flag_type flags = boost::regex::perl;
    if (line.substr(t1 + 1, t2 - t1 - 1).find('i') != std::string::npos) flags |= boost::regex::icase;
    impl_->formats.emplace_back(line.substr(0, t1), boost::regex(line.substr(t2 + 1), flags));
  }
  if (impl_->formats.size() != kFormatCount)
    throw std::runtime_error("expected 27 format patterns, found " + std::to_string(impl_->formats.size()));
  for (std::size_t i = 0; i < kFormatCount; ++i)
    if (impl_->formats[i].first != kNames[i])
      throw std::runtime_error("format pattern " + impl_->formats[i].first + " out of order");
  for (const auto& w : read_lines(dir / "wordlist.txt")) {
    std::u16string u = codec::from_wtf8(w);
    if (!u.empty() && is_cjk(u[0])) impl_->max_cjk_word = std::max(impl_->max_cjk_word, u.size());
    impl_->words.insert(std::move(u));
  }
  impl_->crypto_packages = read_lines(dir / "crypto_packages.txt");
  // Reference distribution: the average cell frequencies over the phrase list.
  std::array<double, kCells> total{};
  double n = 0;
  for (const auto& line : read_lines(dir / "phrases.txt", false)) {
    const auto h = cell_histogram(codec::from_wtf8(line));
    for (std::size_t i = 0; i < kCells; ++i) total[i] += h[i];
  }
  for (const double v : total) n += v;
  for (std::size_t i = 0; i < kCells; ++i) impl_->reference[i] = n > 0 ? total[i] / n : 0;
}

FeatureExtractor::~FeatureExtractor() = default;

const FeatureExtractor& FeatureExtractor::standard() {
  static const FeatureExtractor fx(data_dir());
  return fx;
}

double FeatureExtractor::deviation_from_average(std::u16string_view s) const {
  if (s.empty()) return 0;
  const auto h = cell_histogram(s);
  double n = 0;
  for (const double v : h) n += v;
  double d = 0;
  for (std::size_t i = 0; i < kCells; ++i) d += std::abs(h[i] / n - impl_->reference[i]);
  return d;
}

std::vector<std::u16string> FeatureExtractor::dictionary_words(std::u16string_view s) const {
  std::vector<std::u16string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_letter(s[i]) && !is_cjk(s[i])) {
      std::size_t j = i;
      while (j < s.size() && is_letter(s[j]) && !is_cjk(s[j])) ++j;
      split_latin(s.substr(i, j - i), tokens);
      i = j;
    } else if (is_cjk(s[i])) {
      std::size_t j = i;
      while (j < s.size() && is_cjk(s[j])) ++j;
      // Greedy longest match against the CJK part of the wordlist.
      std::size_t k = i;
      while (k < j) {
        std::size_t len = std::min(impl_->max_cjk_word, j - k);
        for (; len > 1; --len)
          if (impl_->words.count(std::u16string(s.substr(k, len)))) break;
        tokens.emplace_back(s.substr(k, len));
        k += len;
      }
      i = j;
    } else {
      ++i;
    }
  }
  std::vector<std::u16string> out;
  for (auto& t : tokens) {
    const bool cjk = is_cjk(t[0]);
    if ((cjk || t.size() >= 2) && impl_->words.count(t)) out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> FeatureExtractor::matching_formats(std::u16string_view s) const {
  const std::string u = codec::to_wtf8(s);
  std::vector<std::string> out;
  for (const auto& [name, re] : impl_->formats)
    if (boost::regex_search(u, re)) out.push_back(name);
  return out;
}

FeatureVector FeatureExtractor::extract(std::u16string_view s, const FeatureContext& ctx) const {
  FeatureVector f{};
  std::size_t k = 0;
  const std::string u = codec::to_wtf8(s);
  for (const auto& [name, re] : impl_->formats) f[k++] = boost::regex_search(u, re) ? 1 : 0;

  f[k++] = chi_squared_uniform(s);
  f[k++] = deviation_from_average(s);
  f[k++] = normalized_entropy(s);

  // Counts of '=', '-', '/', '+' and the total length of runs of a repeated
  // character (runs of length >= 2).
  int eq = 0, dash = 0, slash = 0, plus = 0, repetitive = 0;
  int max_run = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    const int run = static_cast<int>(j - i);
    if (run >= 2) repetitive += run;
    max_run = std::max(max_run, run);
    i = j;
  }
  std::map<char16_t, int> counts;
  int vowels = 0, consonants = 0, digits = 0, non_letters = 0;
  for (const char16_t c : s) {
    ++counts[c];
    eq += c == u'=';
    dash += c == u'-';
    slash += c == u'/';
    plus += c == u'+';
    if (is_vowel(c)) ++vowels;
    else if (is_ascii_letter(c)) ++consonants;
    if (c >= u'0' && c <= u'9') ++digits;
    if (!is_letter(c)) ++non_letters;
  }
  f[k++] = eq;
  f[k++] = dash;
  f[k++] = slash;
  f[k++] = plus;
  f[k++] = repetitive;

  f[k++] = compression_ratio(s);

  const auto& pkgs = ctx.crypto_packages ? *ctx.crypto_packages : impl_->crypto_packages;
  bool crypto = false;
  for (const auto& p : pkgs)
    if (!p.empty() && ctx.class_name.rfind(p, 0) == 0) crypto = true;
  f[k++] = crypto ? 1 : 0;

  const auto words = dictionary_words(s);
  std::size_t shortest = 0, longest = 0;
  std::unordered_set<std::u16string> unique;
  for (const auto& w : words) {
    shortest = shortest == 0 ? w.size() : std::min(shortest, w.size());
    longest = std::max(longest, w.size());
    unique.insert(w);
  }
  f[k++] = static_cast<double>(shortest);
  f[k++] = static_cast<double>(longest);
  f[k++] = static_cast<double>(words.size());
  f[k++] = static_cast<double>(unique.size());

  int max_same = 0;
  for (const auto& [c, n] : counts) max_same = std::max(max_same, n);
  f[k++] = vowels;
  f[k++] = consonants;
  f[k++] = digits;
  f[k++] = static_cast<double>(s.size());
  f[k++] = static_cast<double>(counts.size());
  f[k++] = non_letters;
  f[k++] = max_run;
  f[k++] = max_same;
  return f;
}

std::string_view to_string(Label l) { return l == Label::Obfuscated ? "obfuscated" : "plain"; }

bool is_digit_only(std::u16string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char16_t c) { return c >= u'0' && c <= u'9'; });
}

}  // namespace strhound::strclf
