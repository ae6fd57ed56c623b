#include "isokit/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace isokit {

namespace {

bool parse_double(const std::string& field, double& out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' ||
                         *(end - 1) == '\r')) {
    --end;
  }
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end && begin != end;
}

}  // namespace

ParsedPoints parse_point_file(const std::filesystem::path& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");

  ParsedPoints out;
  std::vector<Vec> points;
  std::vector<std::string> labels;
  bool any_label = false;

  if (path.extension() == ".json") {
    Json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError(path.string() + ": expected an array");
    int row = 0;
    for (const Json& entry : j) {
      ++row;
      if (!entry.is_array()) {
        throw ParseError(path.string() + ": row " + std::to_string(row) +
                         " is not an array");
      }
      Vec p(entry.size());
      for (std::size_t i = 0; i < entry.size(); ++i) {
        if (!entry[i].is_number()) {
          throw ParseError(path.string() + ": non-numeric field at row " +
                           std::to_string(row));
        }
        p[static_cast<Eigen::Index>(i)] = entry[i];
      }
      points.push_back(std::move(p));
    }
  } else {
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (fields.empty()) continue;
      // optional trailing label: last field non-numeric
      double tmp;
      std::string label;
      if (!parse_double(fields.back(), tmp)) {
        label = fields.back();
        fields.pop_back();
        any_label = true;
      }
      if (fields.empty()) {
        throw ParseError(path.string() + ": no numeric fields at row " +
                         std::to_string(row));
      }
      Vec p(fields.size());
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (!parse_double(fields[i], p[static_cast<Eigen::Index>(i)])) {
          throw ParseError(path.string() + ": non-numeric field '" + fields[i] +
                           "' at row " + std::to_string(row));
        }
      }
      if (expected_dim > 0 && static_cast<int>(fields.size()) != expected_dim) {
        throw ParseError(path.string() + ": row " + std::to_string(row) + " has " +
                         std::to_string(fields.size()) + " columns, expected " +
                         std::to_string(expected_dim));
      }
      points.push_back(std::move(p));
      labels.push_back(label);
    }
  }
  if (points.empty()) throw ParseError(path.string() + ": no points");
  const int dim = static_cast<int>(points[0].size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (static_cast<int>(points[i].size()) != dim) {
      throw ParseError(path.string() + ": row " + std::to_string(i + 1) +
                       " has inconsistent dimension");
    }
  }
  if (expected_dim > 0 && dim != expected_dim) {
    throw ParseError(path.string() + ": dimension " + std::to_string(dim) +
                     ", expected " + std::to_string(expected_dim));
  }
  // duplicate warnings
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if ((points[i] - points[j]).norm() == 0.0) {
        out.warnings.push_back("duplicate points at rows " + std::to_string(i + 1) +
                               " and " + std::to_string(j + 1));
      }
    }
  }
  out.config = PointConfig(dim, std::move(points),
                           any_label ? std::move(labels) : std::vector<std::string>{});
  return out;
}

void write_point_csv(const PointConfig& config, const std::filesystem::path& path) {
  std::ofstream outfile(path);
  if (!outfile) throw ParseError("cannot write '" + path.string() + "'");
  outfile.precision(17);
  for (int i = 0; i < config.size(); ++i) {
    for (int k = 0; k < config.dim; ++k) {
      if (k) outfile << ",";
      outfile << config.points[static_cast<std::size_t>(i)][k];
    }
    if (!config.labels.empty()) outfile << "," << config.labels[static_cast<std::size_t>(i)];
    outfile << "\n";
  }
}

void write_map_samples_tsv(const SmoothMap& map, const std::vector<Vec>& samples,
                           const std::filesystem::path& path) {
  std::ofstream outfile(path);
  if (!outfile) throw ParseError("cannot write '" + path.string() + "'");
  outfile.precision(17);
  const int d = map.dim();
  for (int k = 0; k < d; ++k) outfile << "x" << k << "\t";
  for (int k = 0; k < d; ++k) outfile << "f" << k << (k + 1 < d ? "\t" : "\n");
  for (const Vec& x : samples) {
    const Vec y = map.evaluate(x);
    for (int k = 0; k < d; ++k) outfile << x[k] << "\t";
    for (int k = 0; k < d; ++k) outfile << y[k] << (k + 1 < d ? "\t" : "\n");
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  std::ofstream outfile(path);
  if (!outfile) throw ParseError("cannot write '" + path.string() + "'");
  outfile << j.dump(2) << "\n";
}

}  // namespace isokit
