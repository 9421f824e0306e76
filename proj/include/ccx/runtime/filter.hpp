#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccx/core/clock.hpp"
#include "ccx/core/error.hpp"
#include "ccx/core/types.hpp"
#include "ccx/tam/tam.hpp"

namespace ccx {

class RunningBlock;

enum class FilterState { Created, Initialized, Running, Stopped, Faulted };

const char* state_name(FilterState s);

/// One frame committed to the filter's own stream at tick end.
struct OutputFrame {
  Timestamp t;
  Payload payload;
};

/// Empty means "no output" for this tick.
using FilterOutput = std::vector<OutputFrame>;

inline FilterOutput emit(Timestamp now, Payload payload) { return {OutputFrame{now, std::move(payload)}}; }

struct FilterContext {
  const DataBlockDescriptor& block;
  const FilterDescriptor& descriptor;
  StreamKey output;
  const Tam& tam;
  const Clock& clock;
  /// Null when the filter runs outside a RunningBlock (unit tests).
  const RunningBlock* running = nullptr;

  const Params& params() const { return descriptor.params; }
  std::string param(const std::string& key, const std::string& fallback) const;
  double param_double(const std::string& key, double fallback) const;
  long long param_int(const std::string& key, long long fallback) const;
};

/// Outcome of a command injected into an event-driven filter.
struct InjectionResult {
  bool accepted = false;
  std::string error;  // e.g. "ValidationFailed"
  std::string key;    // offending field, when relevant
};

/// Behavioral contract of a filter implementation.
class FilterImpl {
 public:
  virtual ~FilterImpl() = default;

  virtual void init(const FilterContext& /*ctx*/) {}
  /// Called once per tick with inputs synchronized at `now`. Frames returned
  /// are committed to the filter's stream after the call returns.
  virtual FilterOutput process(const SyncTuple& inputs, Timestamp now) = 0;
  virtual void shutdown() {}

  virtual std::optional<PayloadKind> output_kind() const { return std::nullopt; }
  /// Unscheduled filters only produce frames through injection.
  virtual bool scheduled() const { return true; }
  virtual InjectionResult inject(const Payload& /*payload*/) { return {false, "NotCommandTarget", {}}; }
};

class UnknownFilterType : public Error {
 public:
  explicit UnknownFilterType(const std::string& type) : Error("unknown filter type '" + type + "'") {}
};

/// type_name -> constructor.
class FilterRegistry {
 public:
  using Factory = std::function<std::unique_ptr<FilterImpl>()>;

  void add(const std::string& type_name, Factory factory);
  bool contains(const std::string& type_name) const { return factories_.contains(type_name); }
  /// Throws UnknownFilterType.
  std::unique_ptr<FilterImpl> create(const std::string& type_name) const;
  std::vector<std::string> types() const;

 private:
  std::map<std::string, Factory> factories_;
};

}  // namespace ccx
