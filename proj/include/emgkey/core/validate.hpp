#pragma once

#include "emgkey/core/recording.hpp"

#include <string>
#include <vector>

namespace emgkey {

/// One broken invariant. `rule` is a stable machine-readable tag:
///   stream.missing, stream.duplicate, channels.count, values.shape,
///   values.finite, timestamps.empty, timestamps.monotonic, keys.order,
///   keys.orphan_release, keys.layout, keys.span
struct Violation {
  std::string field;
  std::string rule;
  std::string detail;
};

/// Empty iff the recording satisfies every structural invariant.
std::vector<Violation> validate_recording(const SensorRecording& rec);

std::string describe(const std::vector<Violation>& violations);

}  // namespace emgkey
