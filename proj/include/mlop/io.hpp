#pragma once

#include "mlop/core.hpp"

#include <filesystem>
#include <string_view>

namespace mlop {

// CSV point clouds: one point per line, comma separated, no header, '.'
// decimal separator. Blank lines are ignored; a trailing '\r' is tolerated.
// Errors carry 1-based row/column positions.
PointCloud load_cloud(const std::filesystem::path& path);
PointCloud parse_cloud(std::string_view text);

// Writes 17 significant digits so that load_cloud restores every bit.
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path);

// Same format for arbitrary (possibly non point-cloud) matrices such as
// image masks or a sketch. Empty matrices are rejected.
Matrix load_matrix(const std::filesystem::path& path);
void save_matrix(const Matrix& m, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace mlop
