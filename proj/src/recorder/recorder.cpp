#include "ccx/recorder/recorder.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>

namespace ccx {

namespace fs = std::filesystem;

const StreamLogInfo* RecordingManifest::find(const StreamKey& key) const {
  for (const auto& s : streams) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

nlohmann::json to_json(const DataBlockDescriptor& d) {
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& f : d.filters) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& k : f.inputs) inputs.push_back(to_string(k));
    filters.push_back({{"id", f.id.value},
                       {"name", f.name},
                       {"type", f.type_name},
                       {"dt_ms", f.dt_ms},
                       {"inputs", inputs},
                       {"is_remote", f.is_remote},
                       {"params", f.params}});
  }
  return {{"core", d.core.value}, {"clock_origin", d.clock_origin.millis}, {"filters", filters}};
}

DataBlockDescriptor datablock_from_json(const nlohmann::json& j) {
  DataBlockDescriptor d;
  d.core = CoreId{j.at("core").get<std::uint64_t>()};
  d.clock_origin = Timestamp{j.value("clock_origin", std::uint64_t{0})};
  for (const auto& f : j.at("filters")) {
    FilterDescriptor fd;
    fd.id = FilterId{f.at("id").get<std::uint32_t>()};
    fd.name = f.at("name").get<std::string>();
    fd.type_name = f.value("type", std::string{});
    fd.dt_ms = f.at("dt_ms").get<std::uint32_t>();
    for (const auto& k : f.value("inputs", nlohmann::json::array())) fd.inputs.push_back(parse_stream_key(k.get<std::string>()));
    fd.is_remote = f.value("is_remote", false);
    fd.params = f.value("params", Params{});
    d.filters.push_back(std::move(fd));
  }
  return d;
}

nlohmann::json to_json(const RecordingManifest& m) {
  nlohmann::json streams = nlohmann::json::array();
  for (const auto& s : m.streams) {
    streams.push_back({{"key", to_string(s.key)}, {"log", s.log_file}, {"index", s.index_file}, {"frames", s.frames}});
  }
  return {{"format_version", m.format_version},
          {"start_t", m.start_t.millis},
          {"datablock", to_json(m.datablock)},
          {"streams", streams}};
}

RecordingManifest manifest_from_json(const nlohmann::json& j) {
  RecordingManifest m;
  m.format_version = j.at("format_version").get<std::uint32_t>();
  m.start_t = Timestamp{j.at("start_t").get<std::uint64_t>()};
  m.datablock = datablock_from_json(j.at("datablock"));
  for (const auto& s : j.at("streams")) {
    m.streams.push_back({parse_stream_key(s.at("key").get<std::string>()), s.at("log").get<std::string>(),
                         s.value("index", std::string{}), s.value("frames", std::uint64_t{0})});
  }
  return m;
}

std::string log_file_name(const StreamKey& key) {
  return "stream_" + std::to_string(key.core.value) + "_" + std::to_string(key.filter.value) + ".ccxl";
}

std::string index_file_name(const StreamKey& key) {
  return "stream_" + std::to_string(key.core.value) + "_" + std::to_string(key.filter.value) + ".ccxi";
}

StreamLogWriter::StreamLogWriter(const fs::path& log, const fs::path& index)
    : log_path_(log), log_(log, std::ios::binary | std::ios::trunc), index_(index, std::ios::binary | std::ios::trunc) {
  if (!log_ || !index_) throw IoError("cannot open " + log.string() + " for writing");
}

void StreamLogWriter::append(const WireFrame& frame) {
  auto bytes = encode_frame(frame);
  log_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  log_.flush();
  if (!log_) throw IoError("write to " + log_path_.string() + " failed");
  Bytes entry;
  ByteWriter w(entry);
  w.u64(frame.t.millis);
  w.u64(offset_);
  index_.write(reinterpret_cast<const char*>(entry.data()), static_cast<std::streamsize>(entry.size()));
  index_.flush();
  if (!index_) throw IoError("index write for " + log_path_.string() + " failed");
  offset_ += bytes.size();
  ++frames_;
}

namespace {

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

template <typename Fn>
void scan_frames(const Bytes& data, Fn&& fn) {
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t used = 0;
    auto frame = decode_prefix(ByteView(data).subspan(pos), used);
    if (!frame) break;
    fn(*frame, pos);
    pos += used;
  }
}

}  // namespace

std::vector<WireFrame> read_stream_log(const fs::path& log) {
  std::vector<WireFrame> out;
  scan_frames(read_file(log), [&](WireFrame& f, std::size_t) { out.push_back(std::move(f)); });
  return out;
}

std::vector<IndexEntry> scan_index(const fs::path& log) {
  std::vector<IndexEntry> out;
  scan_frames(read_file(log), [&](const WireFrame& f, std::size_t pos) { out.push_back({f.t, pos}); });
  return out;
}

std::vector<IndexEntry> read_index(const fs::path& index) {
  auto data = read_file(index);
  ByteReader r(data);
  std::vector<IndexEntry> out;
  while (r.remaining() >= 16) {
    IndexEntry e;
    e.t = Timestamp{r.u64()};
    e.offset = r.u64();
    out.push_back(e);
  }
  return out;
}

void write_manifest(const fs::path& dir, const RecordingManifest& manifest) {
  auto tmp = dir / (std::string(kManifestFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << to_json(manifest).dump(2) << '\n';
    if (!out) throw IoError("cannot write manifest in " + dir.string());
  }
  fs::rename(tmp, dir / kManifestFile);
}

RecordingManifest load_manifest(const fs::path& dir) {
  RecordingManifest m;
  try {
    std::ifstream in(dir / kManifestFile);
    if (!in) throw ManifestInvalid("missing " + (dir / kManifestFile).string());
    m = manifest_from_json(nlohmann::json::parse(in));
  } catch (const ManifestInvalid&) {
    throw;
  } catch (const std::exception& e) {
    throw ManifestInvalid(e.what());
  }
  if (m.format_version != kRecordingFormatVersion) {
    throw ManifestInvalid("unsupported format_version " + std::to_string(m.format_version));
  }
  for (const auto& s : m.streams) {
    auto path = dir / s.log_file;
    if (!fs::exists(path)) throw ManifestInvalid("missing log " + path.string());
    try {
      read_stream_log(path);
    } catch (const std::exception& e) {
      throw ManifestInvalid(path.string() + ": " + e.what());
    }
  }
  return m;
}

Recorder::Recorder(Tam& tam, std::vector<StreamKey> keys, fs::path dir, DataBlockDescriptor snapshot,
                   std::shared_ptr<Clock> clock)
    : tam_(tam), keys_(std::move(keys)), dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  manifest_.start_t = clock->now();
  manifest_.datablock = std::move(snapshot);
  for (const auto& key : keys_) {
    if (writers_.contains(key)) continue;
    writers_[key] = std::make_unique<StreamLogWriter>(dir_ / log_file_name(key), dir_ / index_file_name(key));
    manifest_.streams.push_back({key, log_file_name(key), index_file_name(key), 0});
  }
  write_manifest(dir_, manifest_);
  writer_ = std::thread([this] { writer_loop(); });
  for (const auto& [key, _] : writers_) {
    observers_.push_back(tam_.observe(key, [this](const StreamFrame& f) {
      std::lock_guard lock(mutex_);
      if (stopping_ || !error_.empty()) return;
      queue_.push_back(f);
      wake_.notify_one();
    }));
  }
}

Recorder::~Recorder() {
  try {
    stop();
  } catch (const std::exception& e) {
    spdlog::error("recorder stop: {}", e.what());
  }
}

void Recorder::writer_loop() {
  std::unique_lock lock(mutex_);
  while (true) {
    wake_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) return;
    auto frame = std::move(queue_.front());
    queue_.pop_front();
    lock.unlock();
    std::string failure;
    try {
      writers_.at(frame.key)->append(make_data_frame(frame));
    } catch (const std::exception& e) {
      failure = e.what();
    }
    lock.lock();
    if (!failure.empty()) {
      error_ = failure;
      queue_.clear();
      spdlog::error("recording aborted: {}", failure);
      return;
    }
    ++counts_[frame.key];
  }
}

RecordingManifest Recorder::stop() {
  if (stopped_) return manifest_;
  for (auto id : observers_) tam_.unobserve(id);
  observers_.clear();
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (writer_.joinable()) writer_.join();
  stopped_ = true;
  for (auto& s : manifest_.streams) s.frames = writers_.at(s.key)->frames();
  write_manifest(dir_, manifest_);
  return manifest_;
}

bool Recorder::failed() const {
  std::lock_guard lock(mutex_);
  return !error_.empty();
}

std::string Recorder::error() const {
  std::lock_guard lock(mutex_);
  return error_;
}

std::uint64_t Recorder::frames(const StreamKey& key) const {
  std::lock_guard lock(mutex_);
  auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

namespace {

class ReplayFilter final : public FilterImpl {
 public:
  void init(const FilterContext& ctx) override {
    fs::path dir = ctx.param("dir", "");
    auto manifest = load_manifest(dir);
    auto key = parse_stream_key(ctx.param("stream", to_string(ctx.output)));
    const auto* info = manifest.find(key);
    if (!info) throw ManifestInvalid("stream " + to_string(key) + " not recorded");
    speed_ = ctx.param_double("speed", 1.0);
    if (!(speed_ > 0)) throw Error("replay speed must be positive");
    loop_ = ctx.param("loop", "false") == "true";
    for (auto& f : read_stream_log(dir / info->log_file)) {
      if (f.msg_type == MsgType::Data) frames_.push_back(std::move(f));
    }
    if (!frames_.empty()) {
      span_ = static_cast<double>(frames_.back().t.millis - frames_.front().t.millis) / speed_;
      gap_ = frames_.size() > 1 ? std::max(1.0, span_ / static_cast<double>(frames_.size() - 1)) : 1.0;
    }
  }

  FilterOutput process(const SyncTuple&, Timestamp now) override {
    FilterOutput out;
    if (frames_.empty() || done_) return out;
    if (!now0_) now0_ = now;
    while (true) {
      const auto& f = frames_[index_];
      double rel = static_cast<double>(f.t.millis - frames_.front().t.millis) / speed_ + cycle_base_;
      Timestamp t{now0_->millis + static_cast<std::uint64_t>(std::floor(rel))};
      if (t > now) break;
      if (last_ && t <= *last_) t = Timestamp{last_->millis + 1};
      out.push_back({t, Payload{static_cast<PayloadKind>(f.payload_kind), f.payload}});
      last_ = t;
      if (++index_ == frames_.size()) {
        if (!loop_) {
          done_ = true;
          break;
        }
        index_ = 0;
        cycle_base_ += span_ + gap_;
      }
    }
    return out;
  }

 private:
  std::vector<WireFrame> frames_;
  double speed_ = 1.0;
  bool loop_ = false;
  double span_ = 0;
  double gap_ = 1;
  double cycle_base_ = 0;
  std::size_t index_ = 0;
  bool done_ = false;
  std::optional<Timestamp> now0_;
  std::optional<Timestamp> last_;
};

}  // namespace

DataBlockDescriptor make_replay_datablock(const RecordingManifest& manifest, const fs::path& dir, double speed,
                                          bool loop) {
  if (!(speed > 0)) throw Error("replay speed must be positive");
  DataBlockDescriptor d = manifest.datablock;
  if (!d.core.valid() && !manifest.streams.empty()) d.core = manifest.streams.front().key.core;

  auto replay_params = [&](const StreamKey& key) {
    return Params{{"dir", fs::absolute(dir).string()},
                  {"stream", to_string(key)},
                  {"speed", std::to_string(speed)},
                  {"loop", loop ? "true" : "false"}};
  };

  std::set<StreamKey> covered;
  std::map<StreamKey, StreamKey> rewrite;
  for (auto& f : d.filters) {
    auto key = output_key(d, f);
    if (!manifest.find(key) || !(f.is_remote || f.inputs.empty())) continue;
    covered.insert(key);
    if (key.core != d.core) rewrite[key] = StreamKey{d.core, f.id};
    f.type_name = "replay";
    f.is_remote = false;
    f.inputs.clear();
    f.dt_ms = 1;
    f.params = replay_params(key);
  }
  for (const auto& s : manifest.streams) {
    if (covered.contains(s.key) || d.find(s.key.filter)) continue;
    if (s.key.core != d.core) rewrite[s.key] = StreamKey{d.core, s.key.filter};
    d.filters.push_back(FilterDescriptor{s.key.filter, "replay_" + std::to_string(s.key.filter.value), "replay", 1, {},
                                         false, replay_params(s.key)});
  }
  for (auto& f : d.filters) {
    for (auto& in : f.inputs) {
      if (auto it = rewrite.find(in); it != rewrite.end()) in = it->second;
    }
  }
  return d;
}

void register_recorder_filters(FilterRegistry& registry) {
  registry.add("replay", [] { return std::make_unique<ReplayFilter>(); });
}

}  // namespace ccx
