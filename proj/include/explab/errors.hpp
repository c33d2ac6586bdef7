#pragma once

#include <stdexcept>
#include <string>

namespace explab {

// Scenario/file validation problems. CLI exit code 1.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A conditioning event has zero mass: names unit, exposure value, context.
// CLI exit code 2.
struct OverlapViolation : std::runtime_error {
  int unit;                 // external (1-indexed)
  std::string exposure;     // rendered exposure value
  std::string context;
  OverlapViolation(int unit_ext, std::string exposure_str, std::string ctx)
      : std::runtime_error("overlap violation: unit " + std::to_string(unit_ext) +
                           ", exposure " + exposure_str + ", context " + ctx),
        unit(unit_ext),
        exposure(std::move(exposure_str)),
        context(std::move(ctx)) {}
};

// The event T_i = t' does not determine a unique neighborhood subvector.
struct PindownViolation : std::runtime_error {
  int unit;
  PindownViolation(int unit_ext, const std::string& detail)
      : std::runtime_error("pin-down violation at unit " + std::to_string(unit_ext) +
                           ": " + detail),
        unit(unit_ext) {}
};

struct EmptySubpopulation : std::runtime_error {
  EmptySubpopulation() : std::runtime_error("subpopulation is empty; tau undefined") {}
};

// n (or neighborhood size) exceeds the configured enumeration cap.
struct CapExceeded : std::runtime_error {
  explicit CapExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingCell : std::runtime_error {
  explicit MissingCell(const std::string& msg) : std::runtime_error(msg) {}
};

// Best-response iteration cycled without reaching a fixed point.
struct NoConvergence : std::runtime_error {
  explicit NoConvergence(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace explab
