#include "ccx/transport/channel.hpp"

#include <condition_variable>
#include <mutex>
#include <thread>

namespace ccx {

std::optional<WireFrame> receive_for(Connection& connection, std::chrono::milliseconds timeout) {
  std::mutex mutex;
  std::condition_variable cv;
  bool done = false;
  std::thread watchdog([&] {
    std::unique_lock lock(mutex);
    if (!cv.wait_for(lock, timeout, [&] { return done; })) connection.close();
  });
  std::optional<WireFrame> frame;
  try {
    frame = connection.receive();
  } catch (...) {
    {
      std::lock_guard lock(mutex);
      done = true;
    }
    cv.notify_all();
    watchdog.join();
    throw;
  }
  {
    std::lock_guard lock(mutex);
    done = true;
  }
  cv.notify_all();
  watchdog.join();
  return frame;
}

}  // namespace ccx
