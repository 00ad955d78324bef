#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "strhound/sir/types.hpp"
#include "strhound/vm/vm.hpp"

namespace strhound::obf {

enum class SizeClass { S, M, L };
std::optional<SizeClass> parse_size_class(std::string_view s);
int instruction_limit(SizeClass c);

enum class LoiKind { CallArg, FieldWrite, ArrayStore, Return };
std::string_view to_string(LoiKind k);

/// A string literal placed by the generator together with the instruction
/// that consumes it.
struct EmbeddedString {
  std::u16string text;
  std::string cls;
  std::string method;
  int const_index = 0;  // the `const string` instruction
  int loi_index = 0;
  int operand = 0;  // position of the string among the LoI's srcs
  LoiKind kind = LoiKind::CallArg;
};

struct PlainProgram {
  std::string id;
  sir::Program program;
  std::vector<EmbeddedString> strings;
};

/// Phrase list shared by the generator and the string corpus (loaded once).
const std::vector<std::u16string>& phrases();

PlainProgram generate_plain_program(std::uint64_t seed, SizeClass size);

/// Plain helper methods of the kinds the generator emits (negatives for the
/// method classifier).
std::vector<sir::Method> generate_plain_methods(std::uint64_t seed, int count);

// --- scheme catalog -------------------------------------------------------

struct Scheme {
  std::string id;
  std::string cipher;    // none, xor-const, xor-rolling, add-rotate, aes128
  std::string encoding;  // none, b64, b85, url, bigint-base33, split-concat
  std::vector<std::string> countermeasures;
  std::string example_package;  // the ad library row the scheme models
  bool can_inline = false;
};

const std::vector<Scheme>& scheme_catalog();
const Scheme* find_scheme(std::string_view id);

struct ManifestEntry {
  std::u16string plaintext;
  std::string scheme;
  std::string cls;
  std::string method;
  int loi = 0;
  std::string representation;  // string-literal | byte-array
  bool skipped = false;
  std::string skip_reason;
  // Bookkeeping for in-process checks; not serialized.
  int operand = 0;
  int value_def = -1;  // instruction producing the decoded string
  bool inlined = false;
  std::string deob_method;  // extracted helper, if any
  std::optional<std::u16string> encoded;  // obfuscated literal, string-literal schemes only
};

struct Manifest {
  std::string program_id;
  std::string scheme;
  std::vector<ManifestEntry> entries;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

struct Obfuscated {
  sir::Program program;
  Manifest manifest;
};

struct ApplyOptions {
  /// Forces the inline (true) or extracted (false) variant where the scheme
  /// supports both; unset keeps the seed-driven choice.
  std::optional<bool> force_inline;
};

Obfuscated apply_scheme(const PlainProgram& plain, const Scheme& scheme, std::uint64_t seed,
                        const ApplyOptions& opts = {});

/// The literal form a plaintext takes under a string-literal scheme, as it
/// would appear in emitted code. Returns nullopt for byte-array schemes.
std::optional<std::u16string> obfuscated_literal(const Scheme& scheme, const std::u16string& plain,
                                                 std::uint64_t seed);

// --- verification -----------------------------------------------------------

/// Runs every entry point of both programs with hooks on the LoIs and
/// compares the strings observed there against the plaintexts.
struct DiffReport {
  int checked = 0;
  int mismatched = 0;
  std::vector<std::string> problems;
};
DiffReport differential_check(const PlainProgram& plain, const Obfuscated& obf, vm::Limits limits = {});

/// Strings observed at each (class, method, LoI) of `p` when running all
/// entry points; keyed in manifest order. Missing entries were not reached.
std::vector<std::optional<std::u16string>> observe_lois(const sir::Program& p, const Manifest& m,
                                                        vm::Limits limits = {});

/// Makes the decoding of `entry` loop forever: a loop that never exits is
/// placed in front of the value definition and feeds one of its operands.
/// Returns false if the entry has no suitable operand.
bool inject_infinite_loop(Obfuscated& obf, std::size_t entry);

// --- corpus -------------------------------------------------------------------

struct CorpusOptions {
  int n_programs = 1;
  std::vector<std::string> schemes;  // empty = full catalog
  std::uint64_t seed = 0;
  SizeClass size = SizeClass::S;
  bool verify = true;
};

struct CorpusProgram {
  PlainProgram plain;
  std::vector<Obfuscated> variants;  // one per scheme, catalog order
};

std::vector<CorpusProgram> generate_corpus(const CorpusOptions& opts);

/// Writes `<out>/<id>/plain.sir`, `<out>/<id>/<scheme>.sir`,
/// `<out>/<id>/<scheme>.manifest.json` and `<out>/index.json`.
void write_corpus(const std::vector<CorpusProgram>& corpus, const std::filesystem::path& out,
                  bool balance = false);

struct CorpusIndexEntry {
  std::string program_id;
  std::string scheme;  // "plain" for the unobfuscated program
  std::filesystem::path sir;
  std::filesystem::path manifest;  // empty for plain
};
std::vector<CorpusIndexEntry> read_corpus_index(const std::filesystem::path& dir);

/// Manifests on disk do not carry the inline flag. It is rebuilt from the
/// programs: inline variants add no helper method to the host class.
void restore_inline_flags(const sir::Program& plain, Obfuscated& obf);

}  // namespace strhound::obf
