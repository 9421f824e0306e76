#include "ccx/transport/wire.hpp"

#include <algorithm>

namespace ccx {

WireFrame make_data_frame(const StreamFrame& frame) {
  WireFrame f;
  f.msg_type = MsgType::Data;
  f.core = frame.key.core;
  f.filter = frame.key.filter;
  f.t = frame.t;
  f.payload_kind = static_cast<std::uint16_t>(frame.payload.kind);
  f.payload = frame.payload.bytes;
  return f;
}

WireFrame make_control_frame(MsgType type, const StreamKey& key, Timestamp t) {
  WireFrame f;
  f.msg_type = type;
  f.core = key.core;
  f.filter = key.filter;
  f.t = t;
  return f;
}

WireFrame make_subscribe_frame(MsgType type, CoreId subscriber, const StreamKey& key) {
  auto f = make_control_frame(type, key);
  ByteWriter(f.payload).u64(subscriber.value);
  return f;
}

CoreId subscriber_of(const WireFrame& frame) {
  if (frame.payload.size() != 8) return CoreId{};
  return CoreId{ByteReader(frame.payload).u64()};
}

StreamFrame to_stream_frame(const WireFrame& frame) {
  if (frame.msg_type != MsgType::Data) throw MalformedFrame("not a data frame");
  if (!is_payload_kind(frame.payload_kind)) throw MalformedFrame("payload_kind");
  return StreamFrame{frame.key(), frame.t, Payload{static_cast<PayloadKind>(frame.payload_kind), frame.payload}};
}

void encode_frame_into(const WireFrame& f, Bytes& out) {
  auto total = kFrameHeaderSize + f.payload.size();
  if (total > kMaxFrameSize) throw FrameTooLarge(total);
  out.reserve(out.size() + total);
  ByteWriter w(out);
  w.raw(ByteView(kWireMagic, 4));
  w.u8(f.version);
  w.u8(static_cast<std::uint8_t>(f.msg_type));
  w.u64(f.core.value);
  w.u32(f.filter.value);
  w.u64(f.t.millis);
  w.u16(f.payload_kind);
  w.u32(static_cast<std::uint32_t>(f.payload.size()));
  w.raw(f.payload);
}

Bytes encode_frame(const WireFrame& f) {
  Bytes out;
  encode_frame_into(f, out);
  return out;
}

namespace {

struct Header {
  std::uint8_t version;
  std::uint8_t msg_type;
  std::uint64_t core;
  std::uint32_t filter;
  std::uint64_t t;
  std::uint16_t payload_kind;
  std::uint32_t payload_len;
};

Header parse_header(ByteView bytes) {
  if (bytes.size() < kFrameHeaderSize) throw MalformedFrame("truncated header");
  if (!std::equal(kWireMagic, kWireMagic + 4, bytes.begin())) throw MalformedFrame("magic");
  ByteReader r(bytes.subspan(4, kFrameHeaderSize - 4));
  Header h{};
  h.version = r.u8();
  h.msg_type = r.u8();
  h.core = r.u64();
  h.filter = r.u32();
  h.t = r.u64();
  h.payload_kind = r.u16();
  h.payload_len = r.u32();
  if (h.version != kWireVersion) throw MalformedFrame("version");
  if (h.msg_type < 1 || h.msg_type > 5) throw MalformedFrame("msg_type");
  if (h.payload_kind != 0 && !is_payload_kind(h.payload_kind)) throw MalformedFrame("payload_kind");
  if (h.msg_type == static_cast<std::uint8_t>(MsgType::Data) && h.payload_kind == 0) {
    throw MalformedFrame("payload_kind");
  }
  if (kFrameHeaderSize + static_cast<std::size_t>(h.payload_len) > kMaxFrameSize) throw MalformedFrame("too large");
  return h;
}

WireFrame build(const Header& h, ByteView payload) {
  WireFrame f;
  f.version = h.version;
  f.msg_type = static_cast<MsgType>(h.msg_type);
  f.core = CoreId{h.core};
  f.filter = FilterId{h.filter};
  f.t = Timestamp{h.t};
  f.payload_kind = h.payload_kind;
  f.payload.assign(payload.begin(), payload.end());
  return f;
}

}  // namespace

std::uint32_t decode_header_payload_len(ByteView header) { return parse_header(header).payload_len; }

WireFrame decode_frame(ByteView bytes) {
  auto h = parse_header(bytes);
  auto body = bytes.size() - kFrameHeaderSize;
  if (body < h.payload_len) throw MalformedFrame("truncated payload");
  if (body > h.payload_len) throw MalformedFrame("payload_len");
  return build(h, bytes.subspan(kFrameHeaderSize));
}

std::optional<WireFrame> decode_prefix(ByteView bytes, std::size_t& consumed) {
  consumed = 0;
  if (bytes.size() < kFrameHeaderSize) return std::nullopt;
  auto h = parse_header(bytes);
  auto total = kFrameHeaderSize + static_cast<std::size_t>(h.payload_len);
  if (bytes.size() < total) return std::nullopt;
  consumed = total;
  return build(h, bytes.subspan(kFrameHeaderSize, h.payload_len));
}

std::int64_t measure_latency(Timestamp sender_t, Timestamp receiver_t) {
  return static_cast<std::int64_t>(receiver_t.millis) - static_cast<std::int64_t>(sender_t.millis);
}

}  // namespace ccx
