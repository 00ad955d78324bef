#include <random>

#include "strhound/codec/codec.hpp"
#include "strhound/obf/obf.hpp"
#include "strhound/strclf/strclf.hpp"

namespace strhound::strclf {

namespace {

std::u16string capitalized(std::u16string w) {
  if (!w.empty() && w[0] >= u'a' && w[0] <= u'z') w[0] = static_cast<char16_t>(w[0] - 32);
  return w;
}

std::vector<std::u16string> words_of(const std::u16string& phrase) {
  std::vector<std::u16string> out;
  std::u16string cur;
  for (const char16_t c : phrase) {
    if (c == u' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Plain strings assembled from phrase material the way application code
// tends to build them.
std::u16string compose(std::mt19937_64& rng, const std::vector<std::u16string>& ph) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto phrase = [&]() -> const std::u16string& { return ph[static_cast<std::size_t>(pick(0, static_cast<int>(ph.size()) - 1))]; };
  const auto a = words_of(phrase());
  const auto b = words_of(phrase());
  auto word = [&](const std::vector<std::u16string>& ws) { return ws.empty() ? std::u16string(u"x") : ws[static_cast<std::size_t>(pick(0, static_cast<int>(ws.size()) - 1))]; };
  switch (pick(0, 5)) {
    case 0: return phrase() + u" " + phrase();
    case 1: return phrase() + u": " + phrase();
    case 2: return word(a) + capitalized(word(b));
    case 3: return word(a) + u"_" + word(b) + u"_" + codec::from_wtf8(std::to_string(pick(0, 99)));
    case 4: return u"/" + word(a) + u"/" + word(b);
    default: return phrase() + u" (" + codec::from_wtf8(std::to_string(pick(0, 5000))) + u")";
  }
}

}  // namespace

std::vector<LabeledString> synthesize_string_corpus(std::uint64_t seed, std::size_t per_side) {
  std::mt19937_64 rng(seed);
  const auto& ph = obf::phrases();
  std::vector<LabeledString> out;

  // Plain side: the phrase list first, then compositions.
  std::vector<std::size_t> order(ph.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < per_side; ++i) {
    if (i < order.size()) out.push_back({ph[order[i]], Label::Plain, "phrase"});
    else out.push_back({compose(rng, ph), Label::Plain, "composed"});
  }

  // Obfuscated side: literal forms of the string-literal schemes. A small
  // share renders the encrypted bytes as a decimal number, the digit-only
  // form some obfuscators emit.
  std::vector<const obf::Scheme*> schemes;
  for (const auto& s : obf::scheme_catalog())
    if (obf::obfuscated_literal(s, u"probe", 0)) schemes.push_back(&s);
  std::uniform_int_distribution<std::size_t> any_phrase(0, ph.size() - 1);
  std::uniform_int_distribution<std::size_t> any_scheme(0, schemes.size() - 1);
  std::bernoulli_distribution digits(0.03);
  std::size_t made = 0;
  while (made < per_side) {
    const std::u16string& plain = ph[any_phrase(rng)];
    if (digits(rng)) {
      codec::Bytes b = codec::utf8_bytes(plain);
      const auto key = static_cast<std::uint8_t>(rng() % 255 + 1);
      for (auto& x : b) x ^= key;
      out.push_back({codec::from_wtf8(codec::bigint_encode(b, 10)), Label::Obfuscated, "bigint10"});
      ++made;
      continue;
    }
    const obf::Scheme& s = *schemes[any_scheme(rng)];
    auto lit = obf::obfuscated_literal(s, plain, rng());
    // An encoding that leaves the text unchanged hides nothing.
    if (!lit || *lit == plain) continue;
    out.push_back({std::move(*lit), Label::Obfuscated, s.id});
    ++made;
  }
  return out;
}

std::vector<Sample> featurize(const std::vector<LabeledString>& strings, const FeatureExtractor& fx) {
  std::vector<Sample> out;
  out.reserve(strings.size());
  for (const auto& s : strings) out.push_back({fx.extract(s.text), s.label});
  return out;
}

}  // namespace strhound::strclf
