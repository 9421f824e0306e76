#include "ccx/cli/console.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace ccx {

std::string Console::help() {
  return "commands:\n"
         "  <filter id>  newest output of that filter\n"
         "  t            clock-signal table\n"
         "  q            stop the DataBlock and exit\n";
}

std::string Console::latest_line(FilterId id) {
  const auto& d = block_.descriptor();
  const auto* f = d.find(id);
  if (!f) return fmt::format("no filter {}", id.value);
  auto key = output_key(d, *f);
  auto entries = block_.tam().has_stream(key) ? block_.tam().entries(key) : std::vector<TamEntry>{};
  if (entries.empty()) return fmt::format("[{}] {}: no output yet", id.value, f->name);
  const auto& last = entries.back();
  return fmt::format("[{}] {} t={} {}", id.value, f->name, last.t.millis, summarize(last.payload));
}

std::string Console::clock_table() const {
  std::string out = fmt::format("{:>5} {:<20} {:>8} {:>9} {:>10} {:>10} {:>9} {:>8}  {}\n", "id", "name", "ticks",
                                "ticks/s", "mean ms", "max ms", "high ms", "skipped", "state");
  for (const auto& f : block_.descriptor().filters) {
    const auto* log = block_.clock_log(f.id);
    if (!log) continue;
    auto s = summarize(log->ticks());
    out += fmt::format("{:>5} {:<20} {:>8} {:>9.2f} {:>10.2f} {:>10.2f} {:>9.2f} {:>8}  {}\n", f.id.value,
                       f.name.substr(0, 20), log->total(), s.ticks_per_s, s.mean_period_ms, s.max_period_ms,
                       s.mean_high_ms, log->skipped(), state_name(block_.state(f.id)));
  }
  return out;
}

bool Console::handle(const std::string& raw) {
  auto b = raw.find_first_not_of(" \t\r");
  if (b == std::string::npos) return true;
  auto line = raw.substr(b, raw.find_last_not_of(" \t\r") - b + 1);
  if (line == "q") return false;
  if (line == "t") {
    out_ << clock_table() << std::flush;
    return true;
  }
  std::uint32_t id = 0;
  auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), id);
  if (ec == std::errc() && p == line.data() + line.size()) {
    out_ << latest_line(FilterId{id}) << '\n' << std::flush;
    return true;
  }
  out_ << help() << std::flush;
  return true;
}

bool Console::run(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (!handle(line)) return true;
  }
  return false;
}

}  // namespace ccx
