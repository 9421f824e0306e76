#include "ccx/inference/inference.hpp"
#include "ccx/recorder/recorder.hpp"
#include "ccx/runtime/builtin.hpp"

namespace ccx {

FilterRegistry default_registry() {
  FilterRegistry r;
  register_builtin_filters(r);
  register_inference_filters(r);
  register_recorder_filters(r);
  return r;
}

}  // namespace ccx
