#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "strhound/sir/dataflow.hpp"
#include "strhound/sir/types.hpp"
#include "strhound/slicer/slicer.hpp"
#include "strhound/vm/vm.hpp"

namespace strhound::harness {

/// A slice rebuilt as a replacement body for its host method. Indices of the
/// original body are preserved: dropped instructions become jumps to the next
/// instruction, the LoI jumps to an appended tail that logs the criterion's
/// value and returns the declared type's default.
struct ExecutableSlice {
  std::string cls;
  sir::Method method;  // same name and signature as the host
  int loi = 0;
  int criterion = 0;
  std::vector<int> seeded;  // registers given default values up front
};

ExecutableSlice build_executable(const sir::Program& p, const sir::Class& c, const sir::Method& m,
                                 const sir::DataflowIndex& dfi, const std::set<int>& n_slice, int loi, int s_crit);

/// Copy of `p` with the host body replaced. An abstract host class becomes
/// concrete and its abstract methods get default-returning bodies.
sir::Program inject_context(const sir::Program& p, const ExecutableSlice& es);

struct Budgets {
  vm::Limits limits{std::chrono::milliseconds(5000), 10'000'000};
  std::chrono::milliseconds grace{100};  // watchdog slack on top of the wall budget
};

struct SliceResult {
  std::string cls;
  std::string method;
  std::string signature;  // Method::signature() of the host
  int loi = 0;
  int criterion = 0;
  unsigned reasons = 0;  // of the host candidate
  vm::Outcome outcome;
  std::vector<std::u16string> recovered;
  double wall_ms = 0;
  std::vector<int> seeded;
};

/// Runs the host method of `es` in a fresh VM over `injected` with default
/// arguments. A stop request on `stop` ends the run as a timeout.
SliceResult run_slice(const sir::Program& injected, const ExecutableSlice& es, const Budgets& budgets,
                      std::stop_token stop = {});

struct Finding {
  std::u16string text;
  std::string cls;
  std::string method;
  int loi = 0;
};

struct AnalysisOptions {
  Budgets budgets;
  int workers = 1;
  /// Drop recovered strings that appear as literals anywhere in the program.
  bool exclude_constants = true;
};

struct ProgramAnalysis {
  std::vector<slicer::Candidate> candidates;
  std::vector<SliceResult> slices;  // ordered by (class, method, LoI, criterion)
  std::vector<Finding> findings;    // unique by (string, LoI), in slice order
  int lois = 0;
  int criteria = 0;
};

/// Candidates, LoIs, criteria, slices and executions for one program.
ProgramAnalysis deobfuscate_program(const sir::Program& p, const slicer::Models& models, const AnalysisOptions& opts);

nlohmann::json to_json(const SliceResult& r);
SliceResult slice_result_from_json(const nlohmann::json& j);
/// Writes `dir/<id>.json`: the slice results as an array.
void write_results(const std::filesystem::path& dir, const std::string& program_id, const ProgramAnalysis& a);
std::vector<SliceResult> read_results(const std::filesystem::path& file);

}  // namespace strhound::harness
