#pragma once

namespace tomo {

inline constexpr const char* kToolName = "tomo-kit";
inline constexpr const char* kToolVersion = "1.0.0";

// Bumped whenever a field of the JSON report changes meaning or layout.
inline constexpr const char* kReportSchema = "tomo-report/1";

} // namespace tomo
