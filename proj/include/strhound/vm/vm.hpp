#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "strhound/sir/intrinsics.hpp"
#include "strhound/sir/types.hpp"

namespace strhound::vm {

struct Array;
struct Object;
struct Builder {
  std::u16string buf;
};

using StrRef = std::shared_ptr<const std::u16string>;

/// Runtime value. Primitives are stored as int64 already normalized to the
/// declared width (int wraps at 32 bits, byte is signed 8-bit, char is
/// unsigned 16-bit, bool is 0/1).
struct Value {
  std::variant<std::monostate, std::int64_t, StrRef, std::shared_ptr<Array>, std::shared_ptr<Object>,
               std::shared_ptr<Builder>>
      v;

  Value() = default;
  static Value null() { return {}; }
  static Value of_int(std::int64_t x) {
    Value r;
    r.v = x;
    return r;
  }
  static Value of_string(std::u16string s) {
    Value r;
    r.v = std::make_shared<const std::u16string>(std::move(s));
    return r;
  }
  static Value of_array(std::shared_ptr<Array> a) {
    Value r;
    r.v = std::move(a);
    return r;
  }

  bool is_null() const { return std::holds_alternative<std::monostate>(v); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_string() const { return std::holds_alternative<StrRef>(v); }
  bool is_array() const { return std::holds_alternative<std::shared_ptr<Array>>(v); }
  std::int64_t as_int() const { return is_int() ? std::get<std::int64_t>(v) : 0; }
  const std::u16string* as_string() const { return is_string() ? std::get<StrRef>(v).get() : nullptr; }
  Array* as_array() const { return is_array() ? std::get<std::shared_ptr<Array>>(v).get() : nullptr; }
  Object* as_object() const;
  Builder* as_builder() const;
};

struct Array {
  sir::SirType elem;
  std::vector<Value> items;
};

struct Object {
  std::string cls;
  std::map<std::string, Value, std::less<>> fields;
};

Value default_value(const sir::SirType& t);
/// Truncates an integer to the width of a primitive type.
std::int64_t normalize(const sir::SirType& t, std::int64_t x);
/// Byte array value from raw bytes / back.
Value make_byte_array(const std::vector<std::uint8_t>& b);
std::vector<std::uint8_t> byte_array_bytes(const Array& a);

enum class Status { Completed, Fault, Timeout, StepBudgetExhausted };
enum class FaultKind {
  DivideByZero,
  IndexOutOfBounds,
  NullPointer,
  NegativeArraySize,
  Codec,
  Cipher,
  StackOverflow,
  OutOfMemory,
  BadEntry,
};

std::string_view to_string(Status s);
std::string_view to_string(FaultKind k);

struct Limits {
  std::chrono::milliseconds wall{5000};  // <= 0 disables the wall-clock check
  std::uint64_t steps = 10'000'000;      // 0 disables the step budget
};

struct Outcome {
  Status status = Status::Completed;
  std::optional<FaultKind> fault;
  std::string fault_site;  // "Class.method@index"
  std::string message;
  std::vector<std::u16string> logged;   // Log.record, in order
  std::vector<std::u16string> printed;  // Sys.out, in order
  std::optional<Value> return_value;
  std::uint64_t steps = 0;
};

/// Instruction-level observation hook used by differential testing: called
/// before a watched instruction executes, with the frame's registers.
struct Site {
  std::string cls;
  std::string method;
  std::vector<sir::SirType> params;
  int index = 0;
  friend auto operator<=>(const Site&, const Site&) = default;
};
using SiteHook = std::function<void(const Site&, const std::vector<Value>& regs)>;

/// A single-use interpreter instance. Static state, the stream channel and
/// the log belong to the instance; nothing is shared between instances.
class Vm {
 public:
  explicit Vm(const sir::Program& p, Limits limits = {});
  ~Vm();
  Vm(const Vm&) = delete;
  Vm& operator=(const Vm&) = delete;

  void watch(const Site& s);
  void set_hook(SiteHook hook) { hook_ = std::move(hook); }

  /// Runs `cls.method` (first overload with that name unless `params` is
  /// given). Missing arguments are filled with default values; instance
  /// methods receive a fresh receiver object.
  Outcome run(const std::string& cls, const std::string& method, std::vector<Value> args = {},
              const std::vector<sir::SirType>* params = nullptr, std::stop_token stop = {});

 private:
  struct MethodInfo;
  struct Fault;
  struct Halt;

  const MethodInfo& info(const sir::Class& c, const sir::Method& m);
  void ensure_initialized(const sir::Class& c);
  Value invoke(const sir::Class& c, const sir::Method& m, std::vector<Value> args);
  Value call_intrinsic(sir::IntrinsicId id, const std::vector<Value>& args, const sir::Instruction& ins);
  void tick();
  std::shared_ptr<Object> new_object(const sir::Class& c);
  Value make_string(std::u16string s);
  void charge(std::size_t units);

  const sir::Program& program_;
  Limits limits_;
  std::unordered_map<const sir::Method*, std::unique_ptr<MethodInfo>> infos_;
  std::unordered_map<std::string, int> init_state_;  // 1 = running/done
  std::unordered_map<std::string, std::unordered_map<std::string, Value>> statics_;
  std::deque<std::vector<std::uint8_t>> stream_;
  struct Frame {
    const sir::Class* cls;
    const sir::Method* method;
  };
  std::vector<Frame> stack_;
  std::vector<Site> watched_;
  SiteHook hook_;
  Outcome out_;
  std::uint64_t steps_ = 0;
  std::uint64_t allocated_ = 0;
  std::chrono::steady_clock::time_point deadline_;
  std::stop_token stop_;
};

/// Convenience: fresh VM, one run.
Outcome execute(const sir::Program& p, const std::string& cls, const std::string& method,
                std::vector<Value> args = {}, Limits limits = {}, std::stop_token stop = {});

}  // namespace strhound::vm
