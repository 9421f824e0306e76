#include "ccx/runtime/builtin.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ccx/runtime/block.hpp"

namespace ccx {

namespace {

class CounterFilter final : public FilterImpl {
 public:
  void init(const FilterContext& ctx) override { next_ = static_cast<double>(ctx.param_int("start", 0)); }
  FilterOutput process(const SyncTuple&, Timestamp now) override { return emit(now, encode(ScalarVec{{next_++}})); }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::ScalarVec; }

 private:
  double next_ = 0;
};

class PoseCircleFilter final : public FilterImpl {
 public:
  void init(const FilterContext& ctx) override {
    radius_ = ctx.param_double("radius", 1.0);
    period_ms_ = ctx.param_double("period_ms", 10000.0);
    if (period_ms_ <= 0) throw Error("source.pose_circle: period_ms must be positive");
  }
  FilterOutput process(const SyncTuple&, Timestamp now) override {
    double phase = 2.0 * std::numbers::pi * std::fmod(static_cast<double>(now.millis), period_ms_) / period_ms_;
    return emit(now, encode(Pose2D{radius_ * std::cos(phase), radius_ * std::sin(phase),
                                   std::remainder(phase + std::numbers::pi / 2, 2 * std::numbers::pi)}));
  }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::Pose2D; }

 private:
  double radius_ = 1.0;
  double period_ms_ = 10000.0;
};

class ImagePatternFilter final : public FilterImpl {
 public:
  void init(const FilterContext& ctx) override {
    width_ = static_cast<std::uint16_t>(ctx.param_int("width", 32));
    height_ = static_cast<std::uint16_t>(ctx.param_int("height", 32));
    if (width_ == 0 || height_ == 0) throw Error("source.image_pattern: empty image");
  }
  FilterOutput process(const SyncTuple&, Timestamp now) override {
    ImageRaw img{width_, height_, 1, Bytes(std::size_t{width_} * height_)};
    auto shift = static_cast<std::size_t>(now.millis / 10);
    for (std::size_t r = 0; r < height_; ++r) {
      for (std::size_t c = 0; c < width_; ++c) {
        img.pixels[r * width_ + c] = static_cast<std::uint8_t>((c + r + shift) * 255 / (width_ + height_));
      }
    }
    return emit(now, encode(img));
  }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::ImageRaw; }

 private:
  std::uint16_t width_ = 32;
  std::uint16_t height_ = 32;
};

class PassthroughFilter final : public FilterImpl {
 public:
  FilterOutput process(const SyncTuple& inputs, Timestamp now) override {
    if (inputs.samples.empty()) return {};
    return emit(now, inputs.samples.front().payload);
  }
};

class CommandInputFilter final : public FilterImpl {
 public:
  void init(const FilterContext& ctx) override {
    std::stringstream ss(ctx.param("required", ""));
    for (std::string key; std::getline(ss, key, ',');) {
      if (!key.empty()) required_.push_back(key);
    }
  }
  FilterOutput process(const SyncTuple&, Timestamp) override { return {}; }
  bool scheduled() const override { return false; }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::Command; }

  InjectionResult inject(const Payload& payload) override {
    if (payload.kind != PayloadKind::Command) return {false, "WrongPayloadKind", {}};
    Command cmd;
    try {
      cmd = decode_command(payload);
    } catch (const MalformedPayload&) {
      return {false, "ValidationFailed", {}};
    }
    for (const auto& key : required_) {
      if (!cmd.fields.contains(key)) return {false, "ValidationFailed", key};
    }
    return {true, {}, {}};
  }

 private:
  std::vector<std::string> required_;
};

class ClockSignalsFilter final : public FilterImpl {
 public:
  void init(const FilterContext& ctx) override {
    block_ = ctx.running;
    self_ = ctx.descriptor.id;
  }
  FilterOutput process(const SyncTuple&, Timestamp now) override {
    if (!block_) return {};
    ScalarVec out;
    auto stats = block_->stats();
    for (const auto& f : stats.filters) {
      if (f.id == self_ || f.is_remote) continue;
      Tick last{};
      if (const auto* log = block_->clock_log(f.id)) {
        auto ticks = log->ticks();
        if (!ticks.empty()) last = ticks.back();
      }
      out.values.insert(out.values.end(),
                        {static_cast<double>(f.id.value), static_cast<double>(f.ticks),
                         static_cast<double>(f.skipped), static_cast<double>(last.start.millis),
                         static_cast<double>(last.end.millis), static_cast<double>(f.state)});
    }
    return emit(now, encode(out));
  }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::ScalarVec; }

 private:
  const RunningBlock* block_ = nullptr;
  FilterId self_;
};

class FaultFilter final : public FilterImpl {
 public:
  void init(const FilterContext& ctx) override { fault_at_ = ctx.param_int("fault_at", 1); }
  FilterOutput process(const SyncTuple&, Timestamp now) override {
    if (++ticks_ >= fault_at_) throw Error("division by zero");
    return emit(now, encode(ScalarVec{{static_cast<double>(ticks_)}}));
  }

 private:
  long long fault_at_ = 1;
  long long ticks_ = 0;
};

template <typename T>
FilterRegistry::Factory make() {
  return [] { return std::make_unique<T>(); };
}

}  // namespace

void register_builtin_filters(FilterRegistry& registry) {
  registry.add("source.counter", make<CounterFilter>());
  registry.add("source.pose_circle", make<PoseCircleFilter>());
  registry.add("source.image_pattern", make<ImagePatternFilter>());
  registry.add("transform.passthrough", make<PassthroughFilter>());
  registry.add("command.input", make<CommandInputFilter>());
  registry.add("diag.clock_signals", make<ClockSignalsFilter>());
  registry.add("fault.divide", make<FaultFilter>());
}

}  // namespace ccx
