#ifndef ISOKIT_IO_HPP
#define ISOKIT_IO_HPP

#include "isokit/geometry.hpp"
#include "isokit/smooth_map.hpp"

#include <filesystem>

namespace isokit {

inline constexpr int kSchemaVersion = 1;

struct ParsedPoints {
  PointConfig config;
  std::vector<std::string> warnings;  // duplicate points, with indices
};

// CSV (one point per row, numeric columns, optional trailing label) or a
// JSON array of arrays; malformed rows are reported with their row number.
ParsedPoints parse_point_file(const std::filesystem::path& path,
                              int expected_dim = -1);

void write_point_csv(const PointConfig& config, const std::filesystem::path& path);

// TSV with a one-line header: sampled map images for external plotting.
void write_map_samples_tsv(const SmoothMap& map, const std::vector<Vec>& samples,
                           const std::filesystem::path& path);

void write_json_file(const Json& j, const std::filesystem::path& path);

}  // namespace isokit

#endif  // ISOKIT_IO_HPP
