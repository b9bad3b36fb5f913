#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "credence/advi.hpp"
#include "credence/bnn.hpp"
#include "credence/conjugate.hpp"
#include "credence/dataset.hpp"
#include "credence/diagnostics.hpp"
#include "credence/errors.hpp"
#include "credence/hmc.hpp"
#include "credence/io.hpp"
#include "credence/metropolis.hpp"
#include "credence/model.hpp"
#include "credence/nuts.hpp"
#include "credence/powerball.hpp"

namespace credence::cli {

inline constexpr const char* tool_version = "0.1.0";
inline constexpr const char* manifest_schema_version = "1";

using io::json;

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 2;
inline constexpr int numeric = 3;
inline constexpr int state = 4;
}  // namespace exit_code

// ---------------------------------------------------------------------------
// artifact helpers

inline void write_manifest(const std::filesystem::path& dir, const std::string& command,
                           const json& args) {
  const json manifest{{"schema_version", manifest_schema_version},
                      {"tool", "credence"},
                      {"tool_version", tool_version},
                      {"command", command},
                      {"args", args}};
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline void write_summary(const std::filesystem::path& dir, const json& summary,
                          const std::string& format) {
  if (format == "csv") {
    io::write_text(dir / "summary.csv", io::summary_as_csv(summary));
  } else {
    io::write_text(dir / "summary.json", summary.dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// model presets

struct ModelOptions {
  std::string name;
  double alpha = 1.0;
  double beta = 1.0;
  std::uint64_t heads = 0;
  std::uint64_t tails = 0;
  std::uint64_t events = 0;
  std::uint64_t intervals = 0;
  std::vector<double> dir_alpha;
  std::vector<std::uint64_t> dir_counts;
  std::vector<double> gauss_mean;
  std::string gauss_cov;
};

inline void add_model_flags(CLI::App* cmd, ModelOptions& opts) {
  cmd->add_option("--model", opts.name, "model preset")
      ->required()
      ->check(CLI::IsMember({"beta-bernoulli", "gamma-poisson", "dirichlet-categorical",
                             "gaussian"}));
  cmd->add_option("--alpha", opts.alpha, "prior alpha (Beta/Gamma shape)");
  cmd->add_option("--beta", opts.beta, "prior beta (Beta) / rate (Gamma)");
  cmd->add_option("--heads", opts.heads, "observed heads (beta-bernoulli)");
  cmd->add_option("--tails", opts.tails, "observed tails (beta-bernoulli)");
  cmd->add_option("--events", opts.events, "total event count (gamma-poisson)");
  cmd->add_option("--intervals", opts.intervals, "observation intervals (gamma-poisson)");
  cmd->add_option("--dir-alpha", opts.dir_alpha, "Dirichlet prior alphas")->delimiter(',');
  cmd->add_option("--dir-counts", opts.dir_counts, "category counts")->delimiter(',');
  cmd->add_option("--mean", opts.gauss_mean, "Gaussian target mean")->delimiter(',');
  cmd->add_option("--cov", opts.gauss_cov,
                  "Gaussian target covariance, rows ';'-separated (e.g. \"1,0.9;0.9,1\")");
}

inline Matrix parse_cov(const std::string& text, std::size_t dim) {
  Matrix cov(dim, dim);
  std::stringstream rows(text);
  std::string row;
  std::size_t i = 0;
  while (std::getline(rows, row, ';')) {
    if (i >= dim) throw std::invalid_argument("--cov: too many rows");
    std::stringstream cells(row);
    std::string cell;
    std::size_t j = 0;
    while (std::getline(cells, cell, ',')) {
      if (j >= dim) throw std::invalid_argument("--cov: too many columns");
      cov(i, j) = std::stod(cell);
      ++j;
    }
    if (j != dim) throw std::invalid_argument("--cov: short row");
    ++i;
  }
  if (i != dim) throw std::invalid_argument("--cov: expected " + std::to_string(dim) + " rows");
  return cov;
}

/// Unnormalized multivariate Gaussian demo target with the given mean
/// and covariance (identity transform).
inline LogDensityModel gaussian_model(const Vec& mean_vec, const Matrix& cov) {
  const std::size_t dim = mean_vec.size();
  const Matrix chol = cholesky(cov);
  Matrix precision(dim, dim);
  for (std::size_t j = 0; j < dim; ++j) {
    Vec unit(dim, 0.0);
    unit[j] = 1.0;
    const Vec column = cholesky_solve(chol, unit);
    for (std::size_t i = 0; i < dim; ++i) precision(i, j) = column[i];
  }
  return LogDensityModel(
      dim,
      [mean_vec, precision]<class S>(std::span<const S> x) -> S {
        S quad = S(0.0);
        for (std::size_t i = 0; i < mean_vec.size(); ++i) {
          for (std::size_t j = 0; j < mean_vec.size(); ++j) {
            quad += precision(i, j) * (x[i] - mean_vec[i]) * (x[j] - mean_vec[j]);
          }
        }
        return -0.5 * quad;
      },
      make_identity_transform(dim));
}

inline LogDensityModel build_model(const ModelOptions& opts) {
  if (opts.name == "beta-bernoulli") {
    return beta_bernoulli_model(opts.alpha, opts.beta, opts.heads, opts.tails);
  }
  if (opts.name == "gamma-poisson") {
    return gamma_poisson_model(opts.alpha, opts.beta, opts.events, opts.intervals);
  }
  if (opts.name == "dirichlet-categorical") {
    if (opts.dir_alpha.empty()) throw std::invalid_argument("--dir-alpha is required");
    std::vector<std::uint64_t> counts = opts.dir_counts;
    if (counts.empty()) counts.assign(opts.dir_alpha.size(), 0);
    return dirichlet_categorical_model(opts.dir_alpha, counts);
  }
  if (opts.name == "gaussian") {
    if (opts.gauss_mean.empty()) throw std::invalid_argument("--mean is required");
    const std::size_t dim = opts.gauss_mean.size();
    const Matrix cov = opts.gauss_cov.empty() ? Matrix::identity(dim)
                                              : parse_cov(opts.gauss_cov, dim);
    return gaussian_model(opts.gauss_mean, cov);
  }
  throw std::invalid_argument("unknown model preset: " + opts.name);
}

inline std::vector<std::string> model_param_names(const ModelOptions& opts, std::size_t dim) {
  if (opts.name == "beta-bernoulli") return {"p"};
  if (opts.name == "gamma-poisson") return {"lambda"};
  if (opts.name == "dirichlet-categorical") {
    std::vector<std::string> names(dim);
    for (std::size_t i = 0; i < dim; ++i) names[i] = "gamma_" + std::to_string(i);
    return names;
  }
  std::vector<std::string> names(dim);
  for (std::size_t i = 0; i < dim; ++i) names[i] = "x" + std::to_string(i);
  return names;
}

inline json model_args_json(const ModelOptions& opts) {
  json j{{"model", opts.name}};
  if (opts.name == "beta-bernoulli") {
    j["alpha"] = opts.alpha;
    j["beta"] = opts.beta;
    j["heads"] = opts.heads;
    j["tails"] = opts.tails;
  } else if (opts.name == "gamma-poisson") {
    j["alpha"] = opts.alpha;
    j["beta"] = opts.beta;
    j["events"] = opts.events;
    j["intervals"] = opts.intervals;
  } else if (opts.name == "dirichlet-categorical") {
    j["dir_alpha"] = opts.dir_alpha;
    j["dir_counts"] = opts.dir_counts;
  } else if (opts.name == "gaussian") {
    j["mean"] = opts.gauss_mean;
    j["cov"] = opts.gauss_cov;
  }
  return j;
}

// ---------------------------------------------------------------------------
// sample

struct SampleOptions {
  ModelOptions model;
  std::string sampler = "nuts";
  std::size_t n_samples = 1000;
  std::size_t n_warmup = 1000;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "json";
  std::vector<double> proposal_scale{1.0};
  double step_size = 0.1;
  std::size_t n_leapfrog = 20;
  double target_accept = 0.8;
  std::size_t max_depth = 10;
};

inline int cmd_sample(const SampleOptions& opts) {
  const LogDensityModel model = build_model(opts.model);
  const std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);

  SampleSet samples(model.dim());
  if (opts.sampler == "mh") {
    MhConfig cfg;
    cfg.proposal_scale = opts.proposal_scale;
    cfg.n_samples = opts.n_samples;
    cfg.n_warmup = opts.n_warmup;
    cfg.seed = opts.seed;
    samples = metropolis_hastings(model, cfg);
  } else if (opts.sampler == "hmc") {
    HmcConfig cfg;
    cfg.step_size = opts.step_size;
    cfg.n_leapfrog = opts.n_leapfrog;
    cfg.n_samples = opts.n_samples;
    cfg.n_warmup = opts.n_warmup;
    cfg.seed = opts.seed;
    samples = hmc(model, cfg);
  } else {
    NutsConfig cfg;
    cfg.target_accept = opts.target_accept;
    cfg.max_tree_depth = opts.max_depth;
    cfg.n_samples = opts.n_samples;
    cfg.n_warmup = opts.n_warmup;
    cfg.seed = opts.seed;
    samples = nuts(model, cfg);
  }

  const ChainStats stats = chain_stats(samples);
  io::write_draws_csv(dir / "draws.csv", samples,
                      model_param_names(opts.model, model.dim()));
  const json summary = io::sample_summary_json(samples, stats);
  write_summary(dir, summary, opts.format);

  json args = model_args_json(opts.model);
  args["sampler"] = opts.sampler;
  args["n"] = opts.n_samples;
  args["warmup"] = opts.n_warmup;
  args["seed"] = opts.seed;
  args["out"] = opts.out_dir;
  args["format"] = opts.format;
  if (opts.sampler == "mh") args["proposal_scale"] = opts.proposal_scale;
  if (opts.sampler == "hmc") {
    args["step"] = opts.step_size;
    args["leapfrog"] = opts.n_leapfrog;
  }
  if (opts.sampler == "nuts") {
    args["target_accept"] = opts.target_accept;
    args["max_depth"] = opts.max_depth;
  }
  write_manifest(dir, "sample", args);
  return exit_code::ok;
}

// ---------------------------------------------------------------------------
// advi

struct AdviOptions {
  ModelOptions model;
  std::string family = "fullrank";
  std::size_t n_iterations = 2000;
  std::size_t n_mc_samples = 10;
  double base_step = 0.1;
  double step_decay = 0.7;
  std::size_t check_every = 10;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "json";
};

inline int cmd_advi(const AdviOptions& opts) {
  const LogDensityModel model = build_model(opts.model);
  const std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);

  AdviConfig cfg;
  cfg.n_mc_samples = opts.n_mc_samples;
  cfg.base_step = opts.base_step;
  cfg.step_decay = opts.step_decay;
  cfg.n_iterations = opts.n_iterations;
  cfg.elbo_check_every = opts.check_every;
  cfg.seed = opts.seed;
  const VariationalFamily family = opts.family == "meanfield" ? VariationalFamily::MeanField
                                                              : VariationalFamily::FullRank;

  const AdviResult result = run_advi(model, family, cfg);

  io::write_text(dir / "state.json", io::variational_state_json(result.state).dump(2) + "\n");
  io::write_elbo_trace_csv(dir / "elbo_trace.csv", result.elbo_trace);

  const std::size_t k = result.state.dim();
  Matrix sigma(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t m = 0; m < k; ++m) {
        s += result.state.l_factor(i, m) * result.state.l_factor(j, m);
      }
      sigma(i, j) = s;
    }
  }
  json summary{{"family", opts.family},
               {"iterations", opts.n_iterations},
               {"aborted", result.aborted},
               {"diagnostic", result.diagnostic},
               {"mu", result.state.mu},
               {"sigma", sigma.data()},
               {"final_elbo", result.elbo_trace.empty() ? json(nullptr)
                                                        : json(result.elbo_trace.back().second)}};
  write_summary(dir, summary, opts.format);

  json args = model_args_json(opts.model);
  args["family"] = opts.family;
  args["iters"] = opts.n_iterations;
  args["mc_samples"] = opts.n_mc_samples;
  args["step"] = opts.base_step;
  args["decay"] = opts.step_decay;
  args["check_every"] = opts.check_every;
  args["seed"] = opts.seed;
  args["out"] = opts.out_dir;
  args["format"] = opts.format;
  write_manifest(dir, "advi", args);

  if (result.aborted) {
    std::cerr << "advi: " << result.diagnostic << " (last-good state persisted)\n";
    return exit_code::numeric;
  }
  return exit_code::ok;
}

// ---------------------------------------------------------------------------
// powerball

struct PowerballSynthesizeOptions {
  std::size_t n_tickets = 20000;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "json";
};

inline int cmd_powerball_synthesize(const PowerballSynthesizeOptions& opts) {
  const std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);
  const std::uint64_t data_seed = Rng(opts.seed).substream("data").seed();
  const Dataset ds = synthesize_powerball(opts.n_tickets, data_seed);
  io::write_dataset_csv(dir / "dataset.csv", ds);

  const json summary{{"n_tickets", opts.n_tickets},
                     {"n_rows", ds.n_rows()},
                     {"bayes_optimal_accuracy", bayes_optimal_accuracy()}};
  write_summary(dir, summary, opts.format);
  write_manifest(dir, "powerball synthesize",
                 json{{"tickets", opts.n_tickets},
                      {"seed", opts.seed},
                      {"out", opts.out_dir},
                      {"format", opts.format}});
  return exit_code::ok;
}

struct PowerballTrainOptions {
  std::string data_file;
  std::string method = "nuts";
  std::vector<std::size_t> hidden{5};
  std::string activation = "tanh";
  double prior_std = 1.0;
  bool raw_input = false;
  std::size_t n_samples = 2000;
  std::size_t n_warmup = 1000;
  std::size_t max_depth = 10;
  double target_accept = 0.8;
  std::size_t n_iterations = 30000;
  std::size_t n_mc_samples = 5;
  double base_step = 2e-5;
  double step_decay = 0.7;
  std::size_t check_every = 100;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "json";
};

inline BnnArchitecture arch_from_json(const json& j) {
  BnnArchitecture arch;
  arch.input_dim = j.at("input_dim").get<std::size_t>();
  arch.hidden_layers = j.at("hidden_layers").get<std::vector<std::size_t>>();
  arch.activation = j.at("activation").get<std::string>() == "logistic" ? Activation::Logistic
                                                                        : Activation::Tanh;
  arch.prior_std = j.at("prior_std").get<double>();
  arch.input_log_transform = j.at("input_log_transform").get<bool>();
  return arch;
}

inline json arch_to_json(const BnnArchitecture& arch) {
  return json{{"input_dim", arch.input_dim},
              {"hidden_layers", arch.hidden_layers},
              {"activation", arch.activation == Activation::Logistic ? "logistic" : "tanh"},
              {"prior_std", arch.prior_std},
              {"input_log_transform", arch.input_log_transform}};
}

inline int cmd_powerball_train(const PowerballTrainOptions& opts) {
  const Dataset data = load_dataset_csv(opts.data_file);
  if (!data.labels) throw std::invalid_argument("train: dataset has no label column");

  BnnArchitecture arch;
  arch.input_dim = data.n_features();
  arch.hidden_layers = opts.hidden;
  arch.activation = opts.activation == "logistic" ? Activation::Logistic : Activation::Tanh;
  arch.prior_std = opts.prior_std;
  arch.input_log_transform = !opts.raw_input;
  arch.validate();

  const LogDensityModel model = bnn_log_joint(arch, data);
  const std::uint64_t sampler_seed = Rng(opts.seed).substream("sampler").seed();

  const std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);

  json summary;
  bool aborted = false;
  std::string diagnostic;
  if (opts.method == "nuts") {
    NutsConfig cfg;
    cfg.target_accept = opts.target_accept;
    cfg.max_tree_depth = opts.max_depth;
    cfg.n_samples = opts.n_samples;
    cfg.n_warmup = opts.n_warmup;
    cfg.seed = sampler_seed;
    const SampleSet samples = nuts(model, cfg);
    std::vector<std::string> names(model.dim());
    for (std::size_t i = 0; i < names.size(); ++i) names[i] = "w_" + std::to_string(i);
    io::write_draws_csv(dir / "draws.csv", samples, names);
    const ChainStats stats = chain_stats(samples);
    summary = io::sample_summary_json(samples, stats);
  } else {
    AdviConfig cfg;
    cfg.n_mc_samples = opts.n_mc_samples;
    cfg.base_step = opts.base_step;
    cfg.step_decay = opts.step_decay;
    cfg.n_iterations = opts.n_iterations;
    cfg.elbo_check_every = opts.check_every;
    cfg.seed = sampler_seed;
    const VariationalFamily family = opts.method == "advi-meanfield"
                                         ? VariationalFamily::MeanField
                                         : VariationalFamily::FullRank;
    const AdviResult result = run_advi(model, family, cfg);
    io::write_text(dir / "state.json", io::variational_state_json(result.state).dump(2) + "\n");
    io::write_elbo_trace_csv(dir / "elbo_trace.csv", result.elbo_trace);
    aborted = result.aborted;
    diagnostic = result.diagnostic;
    summary = json{{"aborted", result.aborted},
                   {"diagnostic", result.diagnostic},
                   {"final_elbo", result.elbo_trace.empty()
                                      ? json(nullptr)
                                      : json(result.elbo_trace.back().second)}};
  }
  summary["method"] = opts.method;
  summary["n_weights"] = model.dim();
  write_summary(dir, summary, opts.format);

  const json train_meta{{"schema_version", manifest_schema_version},
                        {"arch", arch_to_json(arch)},
                        {"method", opts.method},
                        {"seed", opts.seed}};
  io::write_text(dir / "train_meta.json", train_meta.dump(2) + "\n");

  write_manifest(dir, "powerball train",
                 json{{"data", opts.data_file},
                      {"method", opts.method},
                      {"hidden", opts.hidden},
                      {"activation", opts.activation},
                      {"prior_std", opts.prior_std},
                      {"raw_input", opts.raw_input},
                      {"n", opts.n_samples},
                      {"warmup", opts.n_warmup},
                      {"max_depth", opts.max_depth},
                      {"target_accept", opts.target_accept},
                      {"iters", opts.n_iterations},
                      {"mc_samples", opts.n_mc_samples},
                      {"step", opts.base_step},
                      {"decay", opts.step_decay},
                      {"check_every", opts.check_every},
                      {"seed", opts.seed},
                      {"out", opts.out_dir},
                      {"format", opts.format}});

  if (aborted) {
    std::cerr << "powerball train: " << diagnostic << " (last-good state persisted)\n";
    return exit_code::numeric;
  }
  return exit_code::ok;
}

/// Loads the fitted posterior from a train directory as a weight-draw
/// matrix. Throws StateError when the directory has no training
/// artifacts.
inline Matrix load_weight_draws(const std::filesystem::path& train_dir,
                                const BnnArchitecture& arch, const std::string& method,
                                std::size_t n_draws, std::uint64_t seed) {
  if (method == "nuts") {
    const Matrix all = io::read_draws_csv(train_dir / "draws.csv");
    if (all.cols() != arch.n_weights()) {
      throw StateError("train artifacts do not match the recorded architecture");
    }
    return all;
  }
  std::ifstream in(train_dir / "state.json");
  if (!in) throw StateError("missing state.json in " + train_dir.string());
  json j;
  in >> j;
  const VariationalState state = io::variational_state_from_json(j);
  Rng rng = Rng(seed).substream("predictive");
  return draws_from(state, n_draws, rng);
}

inline json load_train_meta(const std::filesystem::path& train_dir) {
  std::ifstream in(train_dir / "train_meta.json");
  if (!in) {
    throw StateError("no training artifacts in '" + train_dir.string() +
                     "' (run powerball train first)");
  }
  json j;
  in >> j;
  return j;
}

struct PowerballEvaluateOptions {
  std::string train_dir;
  std::string data_file;
  double threshold = 0.5;
  std::size_t n_draws = 1000;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "json";
};

inline int cmd_powerball_evaluate(const PowerballEvaluateOptions& opts) {
  const json meta = load_train_meta(opts.train_dir);
  const BnnArchitecture arch = arch_from_json(meta.at("arch"));
  const std::string method = meta.at("method").get<std::string>();
  const Matrix weight_draws =
      load_weight_draws(opts.train_dir, arch, method, opts.n_draws, opts.seed);

  const Dataset test = load_dataset_csv(opts.data_file);
  if (!test.labels) throw std::invalid_argument("evaluate: dataset has no label column");
  if (test.n_features() != arch.input_dim) {
    throw std::invalid_argument("evaluate: dataset width does not match the trained network");
  }

  Rng rng = Rng(opts.seed).substream("evaluate");

  // predictions per distinct feature row; test values repeat heavily
  std::map<Vec, std::size_t> distinct;
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    const auto row = test.features.row(i);
    distinct.emplace(Vec(row.begin(), row.end()), 0);
  }
  Matrix queries(distinct.size(), arch.input_dim);
  std::size_t q = 0;
  for (auto& [row, index] : distinct) {
    index = q;
    for (std::size_t j = 0; j < arch.input_dim; ++j) queries(q, j) = row[j];
    ++q;
  }
  const std::vector<PredictiveSummary> distinct_preds =
      posterior_predictive(arch, weight_draws, queries, opts.n_draws, rng);

  Vec predictions(test.n_rows());
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    const auto row = test.features.row(i);
    predictions[i] = distinct_preds[distinct.at(Vec(row.begin(), row.end()))].mean_prob;
  }
  const ConfusionMatrix cm = confusion(predictions, *test.labels, opts.threshold);

  const std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);

  // per-value uncertainty table over the full 0..69 range; 0 is never
  // observed in training and probes out-of-support behavior
  json uncertainty_rows = json::array();
  if (arch.input_dim == 1) {
    Matrix values(static_cast<std::size_t>(powerball_pool) + 1, 1);
    for (std::size_t v = 0; v <= static_cast<std::size_t>(powerball_pool); ++v) {
      values(v, 0) = static_cast<double>(v);
    }
    const std::vector<PredictiveSummary> preds =
        posterior_predictive(arch, weight_draws, values, opts.n_draws, rng);
    io::CsvWriter csv({"value", "mean_prob", "std_prob", "hpd_low", "hpd_high"});
    for (std::size_t v = 0; v < preds.size(); ++v) {
      csv.append_row({io::format_double(values(v, 0)), io::format_double(preds[v].mean_prob),
                      io::format_double(preds[v].std_prob), io::format_double(preds[v].hpd_low),
                      io::format_double(preds[v].hpd_high)});
      uncertainty_rows.push_back({{"value", values(v, 0)},
                                  {"mean_prob", preds[v].mean_prob},
                                  {"std_prob", preds[v].std_prob}});
    }
    csv.save(dir / "uncertainty.csv");
  }

  io::CsvWriter confusion_csv({"", "predicted_0", "predicted_1"});
  confusion_csv.append_row({"actual_0", std::to_string(cm.tn), std::to_string(cm.fp)});
  confusion_csv.append_row({"actual_1", std::to_string(cm.fn), std::to_string(cm.tp)});
  confusion_csv.save(dir / "confusion.csv");

  const json metrics{{"accuracy", cm.accuracy()},
                     {"threshold", opts.threshold},
                     {"n_test", cm.total()},
                     {"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}}},
                     {"fpr", cm.fpr()},
                     {"fnr", cm.fnr()},
                     {"bayes_optimal_accuracy", bayes_optimal_accuracy()}};
  io::write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_summary(dir, metrics, opts.format);

  write_manifest(dir, "powerball evaluate",
                 json{{"train", opts.train_dir},
                      {"data", opts.data_file},
                      {"threshold", opts.threshold},
                      {"draws", opts.n_draws},
                      {"seed", opts.seed},
                      {"out", opts.out_dir},
                      {"format", opts.format}});
  return exit_code::ok;
}

struct PowerballBoundaryOptions {
  std::string train_dir;
  double lo = 0.0;
  double hi = 69.0;
  std::size_t resolution = 70;
  std::size_t n_draws = 500;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "json";
};

inline int cmd_powerball_boundary(const PowerballBoundaryOptions& opts) {
  const json meta = load_train_meta(opts.train_dir);
  const BnnArchitecture arch = arch_from_json(meta.at("arch"));
  const std::string method = meta.at("method").get<std::string>();
  const Matrix weight_draws =
      load_weight_draws(opts.train_dir, arch, method, opts.n_draws, opts.seed);

  Rng rng = Rng(opts.seed).substream("boundary");
  const BoundaryGrid grid =
      decision_boundary_grid(arch, weight_draws, opts.lo, opts.hi, opts.resolution,
                             opts.n_draws, rng);

  const std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);

  std::vector<std::string> header;
  for (std::size_t j = 0; j < grid.points.cols(); ++j) header.push_back("x" + std::to_string(j));
  header.emplace_back("mean_prob");
  header.emplace_back("std_prob");
  io::CsvWriter csv(header);
  for (std::size_t i = 0; i < grid.points.rows(); ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < grid.points.cols(); ++j) {
      row.push_back(io::format_double(grid.points(i, j)));
    }
    row.push_back(io::format_double(grid.summaries[i].mean_prob));
    row.push_back(io::format_double(grid.summaries[i].std_prob));
    csv.append_row(row);
  }
  csv.save(dir / "boundary.csv");

  const json summary{{"rows", grid.points.rows()}, {"resolution", opts.resolution}};
  write_summary(dir, summary, opts.format);
  write_manifest(dir, "powerball boundary",
                 json{{"train", opts.train_dir},
                      {"lo", opts.lo},
                      {"hi", opts.hi},
                      {"resolution", opts.resolution},
                      {"draws", opts.n_draws},
                      {"seed", opts.seed},
                      {"out", opts.out_dir},
                      {"format", opts.format}});
  return exit_code::ok;
}

struct PowerballWeightsOptions {
  std::string train_dir;
  std::size_t n_draws = 1000;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "json";
};

inline int cmd_powerball_weights(const PowerballWeightsOptions& opts) {
  const json meta = load_train_meta(opts.train_dir);
  const BnnArchitecture arch = arch_from_json(meta.at("arch"));
  const std::string method = meta.at("method").get<std::string>();
  const Matrix weight_draws =
      load_weight_draws(opts.train_dir, arch, method, opts.n_draws, opts.seed);

  const std::vector<WeightSummary> table = weight_posterior_summary(arch, weight_draws);

  const std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);
  io::CsvWriter csv({"layer", "index", "mean", "std", "hpd_low", "hpd_high"});
  for (const WeightSummary& w : table) {
    csv.append_row({w.layer, std::to_string(w.index), io::format_double(w.mean),
                    io::format_double(w.stddev), io::format_double(w.hpd_low),
                    io::format_double(w.hpd_high)});
  }
  csv.save(dir / "weights.csv");

  const json summary{{"n_weights", table.size()}};
  write_summary(dir, summary, opts.format);
  write_manifest(dir, "powerball weights",
                 json{{"train", opts.train_dir},
                      {"draws", opts.n_draws},
                      {"seed", opts.seed},
                      {"out", opts.out_dir},
                      {"format", opts.format}});
  return exit_code::ok;
}

// ---------------------------------------------------------------------------
// entry point

inline int run(std::vector<std::string> args) {
  CLI::App app{"credence: Bayesian inference over differentiable log densities"};
  app.require_subcommand(1);

  SampleOptions sample_opts;
  CLI::App* sample_cmd = app.add_subcommand("sample", "draw posterior samples with MCMC");
  add_model_flags(sample_cmd, sample_opts.model);
  sample_cmd->add_option("--sampler", sample_opts.sampler, "mh | hmc | nuts")
      ->check(CLI::IsMember({"mh", "hmc", "nuts"}));
  sample_cmd->add_option("--n", sample_opts.n_samples, "posterior draws");
  sample_cmd->add_option("--warmup", sample_opts.n_warmup, "warmup iterations (discarded)");
  sample_cmd->add_option("--seed", sample_opts.seed, "RNG seed");
  sample_cmd->add_option("--out", sample_opts.out_dir, "output directory")->required();
  sample_cmd->add_option("--format", sample_opts.format, "summary format")
      ->check(CLI::IsMember({"json", "csv"}));
  sample_cmd->add_option("--proposal-scale", sample_opts.proposal_scale,
                         "MH Gaussian proposal std (scalar or per-dim)")
      ->delimiter(',');
  sample_cmd->add_option("--step", sample_opts.step_size, "HMC leapfrog step size");
  sample_cmd->add_option("--leapfrog", sample_opts.n_leapfrog, "HMC leapfrog steps");
  sample_cmd->add_option("--target-accept", sample_opts.target_accept, "NUTS adaptation target");
  sample_cmd->add_option("--max-depth", sample_opts.max_depth, "NUTS max tree depth");

  AdviOptions advi_opts;
  CLI::App* advi_cmd = app.add_subcommand("advi", "fit a Gaussian variational approximation");
  add_model_flags(advi_cmd, advi_opts.model);
  advi_cmd->add_option("--family", advi_opts.family, "meanfield | fullrank")
      ->check(CLI::IsMember({"meanfield", "fullrank"}));
  advi_cmd->add_option("--iters", advi_opts.n_iterations, "optimization iterations");
  advi_cmd->add_option("--mc-samples", advi_opts.n_mc_samples, "MC draws per gradient");
  advi_cmd->add_option("--step", advi_opts.base_step, "base step size");
  advi_cmd->add_option("--decay", advi_opts.step_decay, "Robbins-Monro decay exponent");
  advi_cmd->add_option("--check-every", advi_opts.check_every, "ELBO trace interval");
  advi_cmd->add_option("--seed", advi_opts.seed, "RNG seed");
  advi_cmd->add_option("--out", advi_opts.out_dir, "output directory")->required();
  advi_cmd->add_option("--format", advi_opts.format, "summary format")
      ->check(CLI::IsMember({"json", "csv"}));

  CLI::App* powerball_cmd = app.add_subcommand("powerball", "bin-classification experiment");
  powerball_cmd->require_subcommand(1);

  PowerballSynthesizeOptions synth_opts;
  CLI::App* synth_cmd =
      powerball_cmd->add_subcommand("synthesize", "generate the synthetic ticket dataset");
  synth_cmd->add_option("--tickets", synth_opts.n_tickets, "number of tickets");
  synth_cmd->add_option("--seed", synth_opts.seed, "RNG seed");
  synth_cmd->add_option("--out", synth_opts.out_dir, "output directory")->required();
  synth_cmd->add_option("--format", synth_opts.format, "summary format")
      ->check(CLI::IsMember({"json", "csv"}));

  PowerballTrainOptions train_opts;
  CLI::App* train_cmd = powerball_cmd->add_subcommand("train", "fit the BNN posterior");
  train_cmd->add_option("--data", train_opts.data_file, "training dataset CSV")->required();
  train_cmd->add_option("--method", train_opts.method, "nuts | advi-meanfield | advi-fullrank")
      ->check(CLI::IsMember({"nuts", "advi-meanfield", "advi-fullrank"}));
  train_cmd->add_option("--hidden", train_opts.hidden, "hidden layer sizes")->delimiter(',');
  train_cmd->add_option("--activation", train_opts.activation, "tanh | logistic")
      ->check(CLI::IsMember({"tanh", "logistic"}));
  train_cmd->add_option("--prior-std", train_opts.prior_std, "Gaussian prior std");
  train_cmd->add_flag("--raw-input", train_opts.raw_input, "disable the log(1+x) input transform");
  train_cmd->add_option("--n", train_opts.n_samples, "NUTS posterior draws");
  train_cmd->add_option("--warmup", train_opts.n_warmup, "NUTS warmup iterations");
  train_cmd->add_option("--max-depth", train_opts.max_depth, "NUTS max tree depth");
  train_cmd->add_option("--target-accept", train_opts.target_accept, "NUTS adaptation target");
  train_cmd->add_option("--iters", train_opts.n_iterations, "ADVI iterations");
  train_cmd->add_option("--mc-samples", train_opts.n_mc_samples, "ADVI MC draws per gradient");
  train_cmd->add_option("--step", train_opts.base_step, "ADVI base step size");
  train_cmd->add_option("--decay", train_opts.step_decay, "ADVI step decay exponent");
  train_cmd->add_option("--check-every", train_opts.check_every, "ADVI ELBO trace interval");
  train_cmd->add_option("--seed", train_opts.seed, "RNG seed");
  train_cmd->add_option("--out", train_opts.out_dir, "output directory")->required();
  train_cmd->add_option("--format", train_opts.format, "summary format")
      ->check(CLI::IsMember({"json", "csv"}));

  PowerballEvaluateOptions eval_opts;
  CLI::App* eval_cmd =
      powerball_cmd->add_subcommand("evaluate", "held-out accuracy and uncertainty table");
  eval_cmd->add_option("--train", eval_opts.train_dir, "training artifact directory")->required();
  eval_cmd->add_option("--data", eval_opts.data_file, "evaluation dataset CSV")->required();
  eval_cmd->add_option("--threshold", eval_opts.threshold, "classification threshold");
  eval_cmd->add_option("--draws", eval_opts.n_draws, "posterior draws per prediction");
  eval_cmd->add_option("--seed", eval_opts.seed, "RNG seed");
  eval_cmd->add_option("--out", eval_opts.out_dir, "output directory")->required();
  eval_cmd->add_option("--format", eval_opts.format, "summary format")
      ->check(CLI::IsMember({"json", "csv"}));

  PowerballBoundaryOptions boundary_opts;
  CLI::App* boundary_cmd =
      powerball_cmd->add_subcommand("boundary", "posterior predictive over a value grid");
  boundary_cmd->add_option("--train", boundary_opts.train_dir, "training artifact directory")
      ->required();
  boundary_cmd->add_option("--lo", boundary_opts.lo, "grid lower bound");
  boundary_cmd->add_option("--hi", boundary_opts.hi, "grid upper bound");
  boundary_cmd->add_option("--resolution", boundary_opts.resolution, "grid points per axis");
  boundary_cmd->add_option("--draws", boundary_opts.n_draws, "posterior draws per prediction");
  boundary_cmd->add_option("--seed", boundary_opts.seed, "RNG seed");
  boundary_cmd->add_option("--out", boundary_opts.out_dir, "output directory")->required();
  boundary_cmd->add_option("--format", boundary_opts.format, "summary format")
      ->check(CLI::IsMember({"json", "csv"}));

  PowerballWeightsOptions weights_opts;
  CLI::App* weights_cmd =
      powerball_cmd->add_subcommand("weights", "per-weight posterior summary table");
  weights_cmd->add_option("--train", weights_opts.train_dir, "training artifact directory")
      ->required();
  weights_cmd->add_option("--draws", weights_opts.n_draws, "posterior draws");
  weights_cmd->add_option("--seed", weights_opts.seed, "RNG seed");
  weights_cmd->add_option("--out", weights_opts.out_dir, "output directory")->required();
  weights_cmd->add_option("--format", weights_opts.format, "summary format")
      ->check(CLI::IsMember({"json", "csv"}));

  std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return exit_code::usage;
  }

  try {
    if (*sample_cmd) return cmd_sample(sample_opts);
    if (*advi_cmd) return cmd_advi(advi_opts);
    if (*synth_cmd) return cmd_powerball_synthesize(synth_opts);
    if (*train_cmd) return cmd_powerball_train(train_opts);
    if (*eval_cmd) return cmd_powerball_evaluate(eval_opts);
    if (*boundary_cmd) return cmd_powerball_boundary(boundary_opts);
    if (*weights_cmd) return cmd_powerball_weights(weights_opts);
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::state;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::numeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::usage;
  }
  std::cerr << "error: no command selected\n" << app.help();
  return exit_code::usage;
}

}  // namespace credence::cli
