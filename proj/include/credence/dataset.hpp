#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "credence/linalg.hpp"

namespace credence {

/// Observed data: a feature matrix (rows = observations), optional
/// labels, and column names. For binary classification tasks the labels
/// are restricted to {0, 1}.
struct Dataset {
  Matrix features;
  std::optional<Vec> labels;
  std::vector<std::string> feature_names;

  std::size_t n_rows() const { return features.rows(); }
  std::size_t n_features() const { return features.cols(); }

  bool labels_are_binary() const {
    if (!labels) return false;
    for (const double y : *labels) {
      if (y != 0.0 && y != 1.0) return false;
    }
    return true;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_csv_number(const std::string& field, std::size_t row, const std::string& col) {
  if (field.empty()) {
    throw std::runtime_error("Dataset: missing value at data row " + std::to_string(row) +
                             ", column '" + col + "' (no imputation)");
  }
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("Dataset: non-numeric value '" + field + "' at data row " +
                             std::to_string(row) + ", column '" + col + "'");
  }
  if (pos != field.size()) {
    throw std::runtime_error("Dataset: malformed value '" + field + "' at data row " +
                             std::to_string(row) + ", column '" + col + "'");
  }
  return v;
}

}  // namespace detail

/// Loads a header-first CSV. All columns are features except an optional
/// final column named `label`. Missing values are an error.
inline Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Dataset: cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("Dataset: empty file " + path.string());
  std::vector<std::string> header = detail::split_csv_line(line);
  if (header.empty()) throw std::runtime_error("Dataset: empty header in " + path.string());

  const bool has_label = header.back() == "label";
  const std::size_t n_features = header.size() - (has_label ? 1 : 0);
  if (n_features == 0) throw std::runtime_error("Dataset: no feature columns in " + path.string());

  std::vector<Vec> rows;
  Vec labels;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("Dataset: row " + std::to_string(row_index) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(header.size()));
    }
    Vec row(n_features);
    for (std::size_t j = 0; j < n_features; ++j) {
      row[j] = detail::parse_csv_number(fields[j], row_index, header[j]);
    }
    rows.push_back(std::move(row));
    if (has_label) {
      labels.push_back(detail::parse_csv_number(fields.back(), row_index, "label"));
    }
    ++row_index;
  }

  Dataset ds;
  ds.features = Matrix(rows.size(), n_features);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < n_features; ++j) ds.features(i, j) = rows[i][j];
  }
  if (has_label) ds.labels = std::move(labels);
  ds.feature_names.assign(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(n_features));
  return ds;
}

}  // namespace credence
