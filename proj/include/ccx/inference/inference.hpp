#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ccx/runtime/filter.hpp"
#include "ccx/tam/tam.hpp"

namespace ccx {

class WrongPayloadKind : public Error {
 public:
  WrongPayloadKind(PayloadKind expected, PayloadKind got)
      : Error(std::string("expected ") + kind_name(expected) + " payload, got " + kind_name(got)) {}
  explicit WrongPayloadKind(const std::string& what) : Error(what) {}
};

/// tau_i + 1 samples per input stream, oldest first, all at or before end_t.
struct TemporalWindow {
  struct Branch {
    StreamKey key;
    std::vector<TamEntry> samples;
  };

  std::uint32_t tau_i = 0;
  Timestamp end_t;
  std::vector<Branch> branches;
};

/// tau_o outputs; the k-th (1-based) is meant for base_t + k * step_ms.
struct PredictionHorizon {
  std::uint32_t tau_o = 0;
  Timestamp base_t;
  std::uint32_t step_ms = 0;
  std::vector<Payload> outputs;
};

/// Queries tau_i + 1 samples per key at t. Writes nothing and throws
/// InsufficientHistory(key) for the first key that lacks history.
TemporalWindow assemble_window(const Tam& tam, const std::vector<StreamKey>& keys, Timestamp t, std::uint32_t tau_i);

struct AdapterSpec {
  std::vector<PayloadKind> inputs;  // one per input branch
  PayloadKind output = PayloadKind::ScalarVec;
  std::uint32_t tau_i = 0;
  std::uint32_t tau_o = 1;
};

/// A deterministic model behind a declared I/O spec.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual const AdapterSpec& spec() const = 0;
  /// Must return exactly spec().tau_o outputs of kind spec().output.
  virtual PredictionHorizon infer(const TemporalWindow& window, std::uint32_t step_ms) = 0;
};

/// Builds an adapter from filter params (tau_i, tau_o and adapter keys).
using AdapterFactory = std::function<std::unique_ptr<ModelAdapter>(const Params&)>;

std::map<std::string, AdapterFactory> builtin_adapters();

/// Registers "inference.<name>" for every builtin adapter.
void register_inference_filters(FilterRegistry& registry);

/// Wraps an adapter as a filter. Each tick stores the tau_o outputs as frames at
/// now+1 ... now+tau_o; dt_ms must exceed tau_o. Param.step_ms defaults to dt_ms.
std::unique_ptr<FilterImpl> make_inference_filter(AdapterFactory factory);

// Adapters, exposed for direct use.
std::unique_ptr<ModelAdapter> make_identity_adapter(const Params& params);
std::unique_ptr<ModelAdapter> make_moving_average_adapter(const Params& params);
std::unique_ptr<ModelAdapter> make_toy_segmentation_adapter(const Params& params);
std::unique_ptr<ModelAdapter> make_pose_extrapolation_adapter(const Params& params);

/// Per-pixel threshold: below `threshold` is free (0), otherwise occupied (255).
OccupancyGrid toy_segmentation(const ImageRaw& image, std::uint8_t threshold, float cell_size_m);

}  // namespace ccx
