#include "ccx/inference/inference.hpp"

#include <algorithm>

namespace ccx {

TemporalWindow assemble_window(const Tam& tam, const std::vector<StreamKey>& keys, Timestamp t, std::uint32_t tau_i) {
  TemporalWindow w;
  w.tau_i = tau_i;
  w.end_t = t;
  for (const auto& key : keys) {
    w.branches.push_back({key, tam.query_window(key, t, std::size_t{tau_i} + 1)});
  }
  return w;
}

namespace {

std::uint32_t param_u32(const Params& p, const std::string& key, std::uint32_t fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  try {
    auto v = std::stoll(it->second);
    if (v < 0) throw std::out_of_range(key);
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw Error("param " + key + " must be a non-negative integer");
  }
}

double param_f64(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw Error("param " + key + " must be a number");
  }
}

const TamEntry& newest_of(const TemporalWindow& w) {
  if (w.branches.empty() || w.branches.front().samples.empty()) throw Error("adapter needs one input");
  return w.branches.front().samples.back();
}

PredictionHorizon repeat(const TemporalWindow& w, std::uint32_t tau_o, std::uint32_t step_ms, const Payload& p) {
  return {tau_o, w.end_t, step_ms, std::vector<Payload>(tau_o, p)};
}

class IdentityAdapter final : public ModelAdapter {
 public:
  explicit IdentityAdapter(const Params& p) {
    spec_.tau_i = param_u32(p, "tau_i", 0);
    spec_.tau_o = param_u32(p, "tau_o", 1);
  }
  const AdapterSpec& spec() const override { return spec_; }
  PredictionHorizon infer(const TemporalWindow& w, std::uint32_t step_ms) override {
    return repeat(w, spec_.tau_o, step_ms, newest_of(w).payload);
  }

 private:
  AdapterSpec spec_;
};

class MovingAverageAdapter final : public ModelAdapter {
 public:
  explicit MovingAverageAdapter(const Params& p) {
    spec_.inputs = {PayloadKind::ScalarVec};
    spec_.output = PayloadKind::ScalarVec;
    spec_.tau_i = param_u32(p, "tau_i", 2);
    spec_.tau_o = param_u32(p, "tau_o", 1);
  }
  const AdapterSpec& spec() const override { return spec_; }
  PredictionHorizon infer(const TemporalWindow& w, std::uint32_t step_ms) override {
    newest_of(w);
    const auto& samples = w.branches.front().samples;
    std::vector<ScalarVec> vecs;
    for (const auto& s : samples) {
      if (s.payload.kind != PayloadKind::ScalarVec) throw WrongPayloadKind(PayloadKind::ScalarVec, s.payload.kind);
      vecs.push_back(decode_scalar_vec(s.payload));
    }
    std::size_t n = vecs.front().values.size();
    ScalarVec mean{std::vector<double>(n, 0.0)};
    for (const auto& v : vecs) {
      if (v.values.size() != n) throw Error("moving_average: vector length changed within window");
      for (std::size_t i = 0; i < n; ++i) mean.values[i] += v.values[i];
    }
    for (auto& x : mean.values) x /= static_cast<double>(vecs.size());
    return repeat(w, spec_.tau_o, step_ms, encode(mean));
  }

 private:
  AdapterSpec spec_;
};

class ToySegmentationAdapter final : public ModelAdapter {
 public:
  explicit ToySegmentationAdapter(const Params& p) {
    spec_.inputs = {PayloadKind::ImageRaw};
    spec_.output = PayloadKind::OccupancyGrid;
    spec_.tau_i = param_u32(p, "tau_i", 0);
    spec_.tau_o = param_u32(p, "tau_o", 1);
    auto th = param_u32(p, "threshold", 128);
    if (th > 255) throw Error("threshold must be within 0..255");
    threshold_ = static_cast<std::uint8_t>(th);
    cell_size_ = static_cast<float>(param_f64(p, "cell_size", 0.1));
  }
  const AdapterSpec& spec() const override { return spec_; }
  PredictionHorizon infer(const TemporalWindow& w, std::uint32_t step_ms) override {
    const auto& p = newest_of(w).payload;
    if (p.kind != PayloadKind::ImageRaw) throw WrongPayloadKind(PayloadKind::ImageRaw, p.kind);
    return repeat(w, spec_.tau_o, step_ms, encode(toy_segmentation(decode_image(p), threshold_, cell_size_)));
  }

 private:
  AdapterSpec spec_;
  std::uint8_t threshold_ = 128;
  float cell_size_ = 0.1f;
};

// Constant-velocity extrapolation of the newest POSE2D samples.
class PoseExtrapolationAdapter final : public ModelAdapter {
 public:
  explicit PoseExtrapolationAdapter(const Params& p) {
    spec_.inputs = {PayloadKind::Pose2D};
    spec_.output = PayloadKind::Trajectory;
    spec_.tau_i = param_u32(p, "tau_i", 1);
    spec_.tau_o = param_u32(p, "tau_o", 3);
    if (spec_.tau_i < 1) throw Error("pose extrapolation needs tau_i >= 1");
  }
  const AdapterSpec& spec() const override { return spec_; }
  PredictionHorizon infer(const TemporalWindow& w, std::uint32_t step_ms) override {
    newest_of(w);
    const auto& s = w.branches.front().samples;
    for (const auto& e : s) {
      if (e.payload.kind != PayloadKind::Pose2D) throw WrongPayloadKind(PayloadKind::Pose2D, e.payload.kind);
    }
    auto first = decode_pose2d(s.front().payload);
    auto last = decode_pose2d(s.back().payload);
    double span = static_cast<double>(s.back().t.millis - s.front().t.millis);
    double vx = span > 0 ? (last.x - first.x) / span : 0.0;
    double vy = span > 0 ? (last.y - first.y) / span : 0.0;
    PredictionHorizon h{spec_.tau_o, w.end_t, step_ms, {}};
    for (std::uint32_t k = 1; k <= spec_.tau_o; ++k) {
      double ahead = static_cast<double>(w.end_t.millis - s.back().t.millis) + static_cast<double>(k) * step_ms;
      Trajectory tr;
      tr.points.push_back({last.x + vx * ahead, last.y + vy * ahead, w.end_t.millis + std::uint64_t{k} * step_ms});
      h.outputs.push_back(encode(tr));
    }
    return h;
  }

 private:
  AdapterSpec spec_;
};

class InferenceFilter final : public FilterImpl {
 public:
  explicit InferenceFilter(AdapterFactory factory) : factory_(std::move(factory)) {}

  void init(const FilterContext& ctx) override {
    adapter_ = factory_(ctx.params());
    tam_ = &ctx.tam;
    inputs_ = ctx.descriptor.inputs;
    step_ms_ = static_cast<std::uint32_t>(ctx.param_int("step_ms", ctx.descriptor.dt_ms));
    const auto& spec = adapter_->spec();
    if (spec.tau_o == 0) throw Error("tau_o must be at least 1");
    if (ctx.descriptor.dt_ms <= spec.tau_o) throw Error("dt_ms must exceed tau_o");
    if (inputs_.empty()) throw Error("inference filter needs inputs");
  }

  FilterOutput process(const SyncTuple&, Timestamp now) override {
    auto window = assemble_window(*tam_, inputs_, now, adapter_->spec().tau_i);
    auto horizon = adapter_->infer(window, step_ms_);
    if (horizon.outputs.size() != adapter_->spec().tau_o) throw Error("adapter returned wrong horizon length");
    FilterOutput out;
    for (std::size_t k = 0; k < horizon.outputs.size(); ++k) {
      if (horizon.outputs[k].kind != adapter_->spec().output) {
        throw WrongPayloadKind(adapter_->spec().output, horizon.outputs[k].kind);
      }
      out.push_back({Timestamp{now.millis + k + 1}, std::move(horizon.outputs[k])});
    }
    return out;
  }

  std::optional<PayloadKind> output_kind() const override {
    return adapter_ ? std::optional(adapter_->spec().output) : std::nullopt;
  }

 private:
  AdapterFactory factory_;
  std::unique_ptr<ModelAdapter> adapter_;
  const Tam* tam_ = nullptr;
  std::vector<StreamKey> inputs_;
  std::uint32_t step_ms_ = 0;
};

}  // namespace

OccupancyGrid toy_segmentation(const ImageRaw& image, std::uint8_t threshold, float cell_size_m) {
  if (image.channels != 1) throw WrongPayloadKind("segmentation expects a single-channel image");
  OccupancyGrid g{image.width, image.height, cell_size_m, Bytes(image.pixels.size())};
  std::transform(image.pixels.begin(), image.pixels.end(), g.cells.begin(),
                 [threshold](std::uint8_t px) { return px < threshold ? std::uint8_t{0} : std::uint8_t{255}; });
  return g;
}

std::unique_ptr<ModelAdapter> make_identity_adapter(const Params& p) { return std::make_unique<IdentityAdapter>(p); }
std::unique_ptr<ModelAdapter> make_moving_average_adapter(const Params& p) {
  return std::make_unique<MovingAverageAdapter>(p);
}
std::unique_ptr<ModelAdapter> make_toy_segmentation_adapter(const Params& p) {
  return std::make_unique<ToySegmentationAdapter>(p);
}
std::unique_ptr<ModelAdapter> make_pose_extrapolation_adapter(const Params& p) {
  return std::make_unique<PoseExtrapolationAdapter>(p);
}

std::map<std::string, AdapterFactory> builtin_adapters() {
  return {{"identity", make_identity_adapter},
          {"moving_average", make_moving_average_adapter},
          {"toy_segmentation", make_toy_segmentation_adapter},
          {"pose_extrapolation", make_pose_extrapolation_adapter}};
}

std::unique_ptr<FilterImpl> make_inference_filter(AdapterFactory factory) {
  return std::make_unique<InferenceFilter>(std::move(factory));
}

void register_inference_filters(FilterRegistry& registry) {
  for (auto& [name, factory] : builtin_adapters()) {
    registry.add("inference." + name, [f = factory] { return make_inference_filter(f); });
  }
}

}  // namespace ccx
