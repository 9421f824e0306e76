#include "ccx/runtime/filter.hpp"

namespace ccx {

const char* state_name(FilterState s) {
  switch (s) {
    case FilterState::Created: return "Created";
    case FilterState::Initialized: return "Initialized";
    case FilterState::Running: return "Running";
    case FilterState::Stopped: return "Stopped";
    case FilterState::Faulted: return "Faulted";
  }
  return "?";
}

std::string FilterContext::param(const std::string& key, const std::string& fallback) const {
  auto it = descriptor.params.find(key);
  return it == descriptor.params.end() ? fallback : it->second;
}

double FilterContext::param_double(const std::string& key, double fallback) const {
  auto it = descriptor.params.find(key);
  if (it == descriptor.params.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw Error("filter " + std::to_string(descriptor.id.value) + ": param " + key + " is not a number");
  }
}

long long FilterContext::param_int(const std::string& key, long long fallback) const {
  auto it = descriptor.params.find(key);
  if (it == descriptor.params.end()) return fallback;
  try {
    std::size_t used = 0;
    auto v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error("filter " + std::to_string(descriptor.id.value) + ": param " + key + " is not an integer");
  }
}

void FilterRegistry::add(const std::string& type_name, Factory factory) { factories_[type_name] = std::move(factory); }

std::unique_ptr<FilterImpl> FilterRegistry::create(const std::string& type_name) const {
  auto it = factories_.find(type_name);
  if (it == factories_.end()) throw UnknownFilterType(type_name);
  return it->second();
}

std::vector<std::string> FilterRegistry::types() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : factories_) out.push_back(k);
  return out;
}

}  // namespace ccx
