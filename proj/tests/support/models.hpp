#pragma once

// Classifier models trained on the synthetic corpora, shared by tests that
// run the whole pipeline.

#include "strhound/methclf/methclf.hpp"
#include "strhound/obf/obf.hpp"
#include "strhound/slicer/slicer.hpp"
#include "strhound/strclf/strclf.hpp"

namespace testmodels {

inline strhound::methclf::SignatureSet train_signatures(int seeds, std::uint64_t first = 0) {
  using namespace strhound;
  std::vector<methclf::DeobSample> all;
  for (std::uint64_t seed = first; seed < first + static_cast<std::uint64_t>(seeds); ++seed) {
    const auto pp = obf::generate_plain_program(seed, obf::SizeClass::S);
    for (const auto& sc : obf::scheme_catalog())
      for (const bool inl : {false, true}) {
        if (inl && !sc.can_inline) continue;
        const auto d = methclf::deobfuscation_samples(pp, obf::apply_scheme(pp, sc, seed, {.force_inline = inl}));
        all.insert(all.end(), d.begin(), d.end());
      }
  }
  return methclf::build_signatures(all);
}

struct Trained {
  strhound::strclf::DecisionTree tree;
  strhound::methclf::SignatureSet sigs;
  strhound::slicer::Models models() const { return {&tree, nullptr, &sigs}; }
};

inline const Trained& small() {
  static const Trained t = [] {
    using namespace strhound;
    Trained r;
    const auto strings = strclf::synthesize_string_corpus(11, 6000);
    r.tree = strclf::train_tree(strclf::featurize(strings, strclf::FeatureExtractor::standard()), {}, 11).tree;
    r.sigs = train_signatures(12);
    return r;
  }();
  return t;
}

}  // namespace testmodels
