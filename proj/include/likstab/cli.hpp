#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace likstab::cli {

inline constexpr const char* kReportVersion = "likstab-report/1";

enum ExitCode { ok = 0, validation_error = 2, numerical_error = 3 };

/// Runs one subcommand. `args` excludes the program name. The report goes to
/// --out (plus a `<out>.meta.json` sidecar holding the timestamp) or, without
/// --out, to `out`. Messages go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace likstab::cli
