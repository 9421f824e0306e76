#pragma once

#include "ccx/runtime/filter.hpp"

namespace ccx {

/// Registers the runtime's own filter types:
///   source.counter        SCALAR_VEC {k}, k counting ticks from Param.start (default 0)
///   source.pose_circle    POSE2D on a circle (Param.radius m, Param.period_ms)
///   source.image_pattern  IMAGE_RAW gradient moving with time (Param.width, Param.height)
///   transform.passthrough re-emits its first input unchanged
///   command.input         unscheduled; holds injected COMMANDs (Param.required = "a,b")
///   diag.clock_signals    SCALAR_VEC rows of [id, ticks, skipped, last_start, last_end, state]
///   fault.divide          throws on its Param.fault_at-th tick (default 1)
void register_builtin_filters(FilterRegistry& registry);

/// Builtins plus inference, recorder and simulation filters.
FilterRegistry default_registry();

}  // namespace ccx
