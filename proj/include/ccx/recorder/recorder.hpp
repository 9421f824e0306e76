#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccx/runtime/filter.hpp"
#include "ccx/tam/tam.hpp"
#include "ccx/transport/wire.hpp"

namespace ccx {

class IoError : public Error {
 public:
  using Error::Error;
};

class ManifestInvalid : public Error {
 public:
  explicit ManifestInvalid(const std::string& what) : Error("invalid recording manifest: " + what) {}
};

inline constexpr std::uint32_t kRecordingFormatVersion = 1;
inline constexpr const char* kManifestFile = "manifest.ccxm";

struct StreamLogInfo {
  StreamKey key;
  std::string log_file;    // relative to the recording directory
  std::string index_file;
  std::uint64_t frames = 0;
};

struct RecordingManifest {
  std::uint32_t format_version = kRecordingFormatVersion;
  Timestamp start_t;
  DataBlockDescriptor datablock;
  std::vector<StreamLogInfo> streams;

  const StreamLogInfo* find(const StreamKey& key) const;
};

nlohmann::json to_json(const DataBlockDescriptor& d);
DataBlockDescriptor datablock_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RecordingManifest& m);
RecordingManifest manifest_from_json(const nlohmann::json& j);

std::string log_file_name(const StreamKey& key);    // stream_<core>_<filter>.ccxl
std::string index_file_name(const StreamKey& key);  // stream_<core>_<filter>.ccxi

struct IndexEntry {
  Timestamp t;
  std::uint64_t offset = 0;

  bool operator==(const IndexEntry&) const = default;
};

/// Append-only frame log plus index sidecar. Each frame is flushed on append.
class StreamLogWriter {
 public:
  StreamLogWriter(const std::filesystem::path& log, const std::filesystem::path& index);

  /// Throws IoError.
  void append(const WireFrame& frame);
  std::uint64_t frames() const { return frames_; }

 private:
  std::filesystem::path log_path_;
  std::ofstream log_;
  std::ofstream index_;
  std::uint64_t offset_ = 0;
  std::uint64_t frames_ = 0;
};

/// Every complete frame of a log, in order; a trailing partial frame is ignored.
/// Throws IoError when the file cannot be read and MalformedFrame on corruption.
std::vector<WireFrame> read_stream_log(const std::filesystem::path& log);
/// Index entries rebuilt by scanning the log.
std::vector<IndexEntry> scan_index(const std::filesystem::path& log);
/// Complete entries of an index sidecar.
std::vector<IndexEntry> read_index(const std::filesystem::path& index);

void write_manifest(const std::filesystem::path& dir, const RecordingManifest& manifest);
/// Parses the manifest and checks that every referenced log exists and parses.
/// Throws ManifestInvalid.
RecordingManifest load_manifest(const std::filesystem::path& dir);

/// Records every TAM insert on `keys` into `dir` until stop(). File writes run
/// on a dedicated writer thread; an I/O failure ends the recording without
/// affecting the inserting filters.
class Recorder {
 public:
  Recorder(Tam& tam, std::vector<StreamKey> keys, std::filesystem::path dir, DataBlockDescriptor snapshot = {},
           std::shared_ptr<Clock> clock = default_clock());
  ~Recorder();
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  /// Drains pending frames, writes the manifest and returns it. Idempotent.
  RecordingManifest stop();
  bool failed() const;
  std::string error() const;
  std::uint64_t frames(const StreamKey& key) const;

 private:
  void writer_loop();

  Tam& tam_;
  std::vector<StreamKey> keys_;
  std::filesystem::path dir_;
  RecordingManifest manifest_;
  std::map<StreamKey, std::unique_ptr<StreamLogWriter>> writers_;
  std::vector<Tam::ObserverId> observers_;

  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<StreamFrame> queue_;
  bool stopping_ = false;
  bool stopped_ = false;
  std::string error_;
  std::map<StreamKey, std::uint64_t> counts_;
  std::thread writer_;
};

/// Copy of the recorded DataBlock in which recorded source filters (no inputs)
/// and recorded remote filters become "replay" filters reading `dir`. Remote
/// streams are re-emitted under this core, and inputs naming them are rewritten.
DataBlockDescriptor make_replay_datablock(const RecordingManifest& manifest, const std::filesystem::path& dir,
                                          double speed = 1.0, bool loop = false);

/// Registers "replay": Param.dir, Param.stream (core:filter), Param.speed, Param.loop.
/// Frames are re-emitted at now0 + (t - t0) / speed with payload bytes unchanged.
void register_recorder_filters(FilterRegistry& registry);

}  // namespace ccx
