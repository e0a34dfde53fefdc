#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ttfm {

/// Numerical or statistical failure inside an estimation stage.
/// `stage()` names the pipeline step that failed ("order-selection",
/// "factor-recovery", ...) so callers can surface it in diagnostics.
class estimation_error : public std::runtime_error {
 public:
  estimation_error(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace ttfm
