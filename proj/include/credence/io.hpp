#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "credence/advi.hpp"
#include "credence/bnn.hpp"
#include "credence/dataset.hpp"
#include "credence/diagnostics.hpp"
#include "credence/sample_set.hpp"

namespace credence::io {

using nlohmann::json;

/// Round-trip-exact decimal form, locale-independent.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// RFC-4180-style quoting: only fields containing a comma, quote, or
/// newline get wrapped.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) {
    append_row(header);
  }

  void append_row(std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) buffer_ += ',';
      buffer_ += csv_field(fields[i]);
    }
    buffer_ += '\n';
  }
  void append_row(const std::vector<std::string>& fields) {
    append_row(std::span<const std::string>(fields));
  }

  const std::string& str() const { return buffer_; }
  void save(const std::filesystem::path& path) const { write_text(path, buffer_); }

 private:
  std::string buffer_;
};

inline std::vector<std::string> param_names(std::size_t dim) {
  std::vector<std::string> names(dim);
  for (std::size_t i = 0; i < dim; ++i) names[i] = "param_" + std::to_string(i);
  return names;
}

/// One row per draw: constrained coordinates then sampler stats.
inline void write_draws_csv(const std::filesystem::path& path, const SampleSet& samples,
                            std::vector<std::string> names = {}) {
  if (names.empty()) names = param_names(samples.dim());
  if (names.size() != samples.dim()) {
    throw std::invalid_argument("write_draws_csv: name count mismatch");
  }
  std::vector<std::string> header = names;
  for (const char* col : {"log_density", "accepted", "tree_depth", "divergent", "energy_error",
                          "accept_stat", "chain_id"}) {
    header.emplace_back(col);
  }
  CsvWriter csv(header);
  std::vector<std::string> row(header.size());
  for (std::size_t i = 0; i < samples.n_draws(); ++i) {
    const auto theta = samples.constrained_draw(i);
    const DrawStats& s = samples.stats()[i];
    std::size_t c = 0;
    for (std::size_t j = 0; j < samples.dim(); ++j) row[c++] = format_double(theta[j]);
    row[c++] = format_double(samples.log_densities()[i]);
    row[c++] = s.accepted ? "1" : "0";
    row[c++] = std::to_string(s.tree_depth);
    row[c++] = s.divergent ? "1" : "0";
    row[c++] = format_double(s.energy_error);
    row[c++] = format_double(s.accept_stat);
    row[c++] = std::to_string(s.chain_id);
    csv.append_row(row);
  }
  csv.save(path);
}

/// Reads back the parameter columns of a draws CSV (everything before
/// the log_density column).
inline Matrix read_draws_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open draws csv: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty draws csv: " + path.string());
  const std::vector<std::string> header = detail::split_csv_line(line);
  std::size_t dim = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "log_density") {
      dim = i;
      break;
    }
  }
  if (dim == 0 || dim == header.size()) {
    throw std::runtime_error("draws csv missing parameter columns: " + path.string());
  }
  std::vector<Vec> rows;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    Vec row(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      row[j] = detail::parse_csv_number(fields[j], row_index, header[j]);
    }
    rows.push_back(std::move(row));
    ++row_index;
  }
  Matrix m(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::vector<std::string> header = ds.feature_names;
  if (header.size() != ds.n_features()) {
    header = param_names(ds.n_features());
  }
  if (ds.labels) header.emplace_back("label");
  CsvWriter csv(header);
  std::vector<std::string> row(header.size());
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < ds.n_features(); ++j) row[c++] = format_double(ds.features(i, j));
    if (ds.labels) row[c++] = format_double((*ds.labels)[i]);
    csv.append_row(row);
  }
  csv.save(path);
}

/// Per-dimension summary plus chain health, as stable-keyed JSON.
inline json sample_summary_json(const SampleSet& samples, const ChainStats& stats,
                                double hpd_mass = 0.9) {
  json dims = json::array();
  for (std::size_t j = 0; j < samples.dim(); ++j) {
    const Vec column = samples.constrained_column(j);
    const HpdInterval interval = hpd(column, hpd_mass);
    dims.push_back({{"index", j},
                    {"mean", stats.mean[j]},
                    {"std", stats.stddev[j]},
                    {"hpd_low", interval.low},
                    {"hpd_high", interval.high},
                    {"hpd_mass", hpd_mass},
                    {"ess", stats.ess[j]}});
  }
  return json{{"n_draws", samples.n_draws()},
              {"acceptance_rate", stats.acceptance_rate},
              {"mean_accept_stat", stats.mean_accept_stat},
              {"divergence_count", stats.divergence_count},
              {"params", dims}};
}

inline json variational_state_json(const VariationalState& state) {
  const std::size_t k = state.dim();
  std::vector<double> lower;
  lower.reserve(k * (k + 1) / 2);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) lower.push_back(state.l_factor(i, j));
  }
  return json{{"family", state.family == VariationalFamily::MeanField ? "meanfield" : "fullrank"},
              {"dim", k},
              {"mu", state.mu},
              {"l_factor", lower}};
}

inline VariationalState variational_state_from_json(const json& j) {
  VariationalState state;
  const std::string family = j.at("family").get<std::string>();
  if (family == "meanfield") {
    state.family = VariationalFamily::MeanField;
  } else if (family == "fullrank") {
    state.family = VariationalFamily::FullRank;
  } else {
    throw std::runtime_error("variational state: unknown family '" + family + "'");
  }
  state.mu = j.at("mu").get<Vec>();
  const std::size_t k = state.mu.size();
  const Vec lower = j.at("l_factor").get<Vec>();
  if (lower.size() != k * (k + 1) / 2) {
    throw std::runtime_error("variational state: l_factor length mismatch");
  }
  state.l_factor = Matrix(k, k);
  std::size_t c = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j2 = 0; j2 <= i; ++j2) state.l_factor(i, j2) = lower[c++];
  }
  return state;
}

inline void write_elbo_trace_csv(const std::filesystem::path& path,
                                 std::span<const std::pair<std::size_t, double>> trace) {
  CsvWriter csv({"iteration", "elbo"});
  for (const auto& [iter, elbo] : trace) {
    csv.append_row({std::to_string(iter), format_double(elbo)});
  }
  csv.save(path);
}

/// Flattens a JSON object into dotted key,value rows so the same
/// summary can be emitted as CSV.
inline void flatten_json(const json& j, const std::string& prefix, CsvWriter& csv) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      flatten_json(value, prefix.empty() ? key : prefix + "." + key, csv);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      flatten_json(j[i], prefix + "[" + std::to_string(i) + "]", csv);
    }
  } else {
    csv.append_row({prefix, j.is_string() ? j.get<std::string>() : j.dump()});
  }
}

inline std::string summary_as_csv(const json& j) {
  CsvWriter csv({"key", "value"});
  flatten_json(j, "", csv);
  return csv.str();
}

}  // namespace credence::io
