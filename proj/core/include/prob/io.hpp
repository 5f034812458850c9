#pragma once

#include <string>

namespace prob {

/// Writes to `path + ".tmp"` and renames over `path`, so readers never see a
/// partially written file.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

/// Fixed-precision decimal used by CSV/SVG output ("%.6g" style).
std::string format_number(double value, int precision = 6);

}  // namespace prob
