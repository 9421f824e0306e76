#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ccx/core/bytes.hpp"
#include "ccx/core/error.hpp"
#include "ccx/core/types.hpp"

namespace ccx {

enum class MsgType : std::uint8_t {
  Data = 1,
  Subscribe = 2,
  Unsubscribe = 3,
  Ping = 4,
  Pong = 5,
};

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 32;
inline constexpr std::size_t kMaxFrameSize = 16u * 1024u * 1024u;
inline constexpr std::uint8_t kWireMagic[4] = {'C', 'C', 'X', '1'};

/// One frame on a DataChannel connection (and one record in a stream log).
/// `payload_kind` is 0 for control frames without a typed payload.
struct WireFrame {
  std::uint8_t version = kWireVersion;
  MsgType msg_type = MsgType::Data;
  CoreId core;
  FilterId filter;
  Timestamp t;
  std::uint16_t payload_kind = 0;
  Bytes payload;

  bool operator==(const WireFrame&) const = default;

  StreamKey key() const { return StreamKey{core, filter}; }
};

class MalformedFrame : public Error {
 public:
  explicit MalformedFrame(std::string reason) : Error("malformed frame: " + reason), reason_(std::move(reason)) {}
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
};

class FrameTooLarge : public Error {
 public:
  explicit FrameTooLarge(std::size_t size) : Error("frame of " + std::to_string(size) + " bytes exceeds 16 MiB") {}
};

WireFrame make_data_frame(const StreamFrame& frame);
WireFrame make_control_frame(MsgType type, const StreamKey& key, Timestamp t = {});
/// SUBSCRIBE / UNSUBSCRIBE frames carry the subscriber's CoreId as an 8-byte payload.
WireFrame make_subscribe_frame(MsgType type, CoreId subscriber, const StreamKey& key);
CoreId subscriber_of(const WireFrame& frame);
/// Throws MalformedFrame when the frame is not DATA or its payload kind is unknown.
StreamFrame to_stream_frame(const WireFrame& frame);

/// Big-endian layout: "CCX1" | version u8 | msg_type u8 | core u64 | filter u32 |
/// t u64 | payload_kind u16 | payload_len u32 | payload.
Bytes encode_frame(const WireFrame& f);
void encode_frame_into(const WireFrame& f, Bytes& out);

/// Decodes exactly one frame occupying all of `bytes`.
WireFrame decode_frame(ByteView bytes);

/// Parses a header and returns the payload length it announces. `header` must
/// hold at least kFrameHeaderSize bytes.
std::uint32_t decode_header_payload_len(ByteView header);

/// Decodes the frame at the start of `bytes`; returns nullopt when `bytes`
/// holds only a prefix of a frame. Sets `consumed` to the frame size.
std::optional<WireFrame> decode_prefix(ByteView bytes, std::size_t& consumed);

/// Latency between a sender and a receiver timestamp on a common clock:
/// receiver_t - sender_t (may be negative under residual offset error).
std::int64_t measure_latency(Timestamp sender_t, Timestamp receiver_t);

}  // namespace ccx
