#pragma once

// Experiment orchestration: runs the expansion protocol (grow the graph node
// by node, tracking the recursive solution against batch re-solves and the
// graph-free baseline), sweeps over training sizes and noise realizations,
// and emits CSV reports. Also the timing benchmark behind the `bench`
// subcommand.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "lrg/dataset.hpp"
#include "lrg/errors.hpp"
#include "lrg/eval.hpp"
#include "lrg/features.hpp"
#include "lrg/graph.hpp"
#include "lrg/io.hpp"
#include "lrg/lrg.hpp"
#include "lrg/nrlrg.hpp"

namespace lrg {

struct ExperimentConfig {
  // data source
  std::string source = "synthetic";  // "synthetic" | "csv"
  std::string signals_csv;
  std::string coords_csv;
  std::string pairing = "lag";  // "lag" | "split"
  int lag = 2;
  int split_inputs = 30;
  int split_outputs = 30;
  SyntheticSpec synth;
  int train_count = 64;

  // feature map
  std::string feature_kind = "identity";  // "identity" | "random-sigmoid"
  int feature_dim = 0;                    // 0 = input dim (identity) or twice it (sigmoid)
  std::uint64_t feature_seed = 7;

  // expansion
  int initial_nodes = 5;
  std::vector<int> insertion_order;  // 1-based node ids after the initial block; empty = natural

  // noise and sweep
  double snr_db = 10.0;
  int trials = 1;
  std::vector<int> train_sizes;  // sweep of N; empty = {train_count}
  std::uint64_t noise_seed = 99;

  // hyperparameter selection
  CvConfig cv;                // empty grids = log-spaced defaults
  std::string cv_at = "m0";   // select on the initial subgraph ("m0") or the full graph ("full")

  // output
  std::string output_path = "report.csv";
  bool measure_time = false;  // wall times are nondeterministic; off keeps reports byte-stable
};

struct ReportRow {
  std::string method;  // "LR", "LRG" or "NR-LRG"
  int nodes = 0;
  int train_size = 0;
  int trial = 0;
  double nmse = 0.0;
  double wall_time_s = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  bool targets_are_clean = true;
};

// ---------------------------------------------------------------------------
// Config files: `key = value` lines, '#' comments, lists comma-separated.

namespace detail {

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

inline int to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw validation_error("config key '" + key + "': cannot parse '" + v + "' as an integer");
  }
}

inline double to_double(const std::string& v, const std::string& key) {
  try {
    return parse_cell(v, 0, 0);
  } catch (const validation_error&) {
    throw validation_error("config key '" + key + "': cannot parse '" + v + "' as a number");
  }
}

inline bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw validation_error("config key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw validation_error("config line " + std::to_string(line_no) +
                             ": expected 'key = value', got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));

    if (key == "source") cfg.source = value;
    else if (key == "signals_csv") cfg.signals_csv = value;
    else if (key == "coords_csv") cfg.coords_csv = value;
    else if (key == "pairing") cfg.pairing = value;
    else if (key == "lag") cfg.lag = detail::to_int(value, key);
    else if (key == "split_inputs") cfg.split_inputs = detail::to_int(value, key);
    else if (key == "split_outputs") cfg.split_outputs = detail::to_int(value, key);
    else if (key == "train_count") cfg.train_count = detail::to_int(value, key);
    else if (key == "synth_nodes") cfg.synth.nodes = detail::to_int(value, key);
    else if (key == "synth_input_dim") cfg.synth.input_dim = detail::to_int(value, key);
    else if (key == "synth_samples") cfg.synth.samples = detail::to_int(value, key);
    else if (key == "synth_gamma") cfg.synth.gamma = detail::to_double(value, key);
    else if (key == "synth_seed") cfg.synth.seed = detail::to_int(value, key);
    else if (key == "feature_kind") cfg.feature_kind = value;
    else if (key == "feature_dim") cfg.feature_dim = detail::to_int(value, key);
    else if (key == "feature_seed") cfg.feature_seed = detail::to_int(value, key);
    else if (key == "initial_nodes") cfg.initial_nodes = detail::to_int(value, key);
    else if (key == "insertion_order") {
      for (const auto& item : detail::split_list(value))
        cfg.insertion_order.push_back(detail::to_int(item, key));
    } else if (key == "snr_db") cfg.snr_db = detail::to_double(value, key);
    else if (key == "trials") cfg.trials = detail::to_int(value, key);
    else if (key == "train_sizes") {
      for (const auto& item : detail::split_list(value))
        cfg.train_sizes.push_back(detail::to_int(item, key));
    } else if (key == "noise_seed") cfg.noise_seed = detail::to_int(value, key);
    else if (key == "cv_folds") cfg.cv.folds = detail::to_int(value, key);
    else if (key == "cv_alpha_grid") {
      for (const auto& item : detail::split_list(value))
        cfg.cv.alpha_grid.push_back(detail::to_double(item, key));
    } else if (key == "cv_beta_grid") {
      for (const auto& item : detail::split_list(value))
        cfg.cv.beta_grid.push_back(detail::to_double(item, key));
    } else if (key == "cv_at") cfg.cv_at = value;
    else if (key == "output_path") cfg.output_path = value;
    else if (key == "measure_time") cfg.measure_time = detail::to_bool(value, key);
    else throw validation_error("config line " + std::to_string(line_no) + ": unknown key '" +
                                key + "'");
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config '" + path + "'");
  return parse_config(in);
}

// ---------------------------------------------------------------------------

namespace detail {

struct PreparedData {
  Dataset ds;
  Matrix adjacency;   // full graph, original node order
  Matrix design_all;  // N_total x K
};

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData prep;
  if (cfg.source == "synthetic") {
    prep.ds = make_synthetic(cfg.synth);
  } else if (cfg.source == "csv") {
    if (cfg.signals_csv.empty() || cfg.coords_csv.empty())
      throw validation_error("csv source needs signals_csv and coords_csv");
    const SignalTable table = read_signal_table(cfg.signals_csv);
    if (cfg.pairing == "lag") {
      prep.ds = make_lagged_pairs(table.values, cfg.lag);
    } else if (cfg.pairing == "split") {
      prep.ds = split_in_out(table.values, cfg.split_inputs, cfg.split_outputs);
    } else {
      throw validation_error("pairing must be 'lag' or 'split', got '" + cfg.pairing + "'");
    }
    prep.ds.node_coords = read_coords_csv(cfg.coords_csv);
    prep.ds.targets_are_clean = false;
  } else {
    throw validation_error("source must be 'synthetic' or 'csv', got '" + cfg.source + "'");
  }

  const int m = static_cast<int>(prep.ds.targets_clean.cols());
  if (static_cast<int>(prep.ds.node_coords.size()) != m)
    throw validation_error("have " + std::to_string(prep.ds.node_coords.size()) +
                           " node coordinates for " + std::to_string(m) + " target nodes");
  prep.ds = with_split(std::move(prep.ds), cfg.train_count);
  prep.adjacency = geodesic_adjacency(prep.ds.node_coords);

  const int input_dim = static_cast<int>(prep.ds.inputs.cols());
  FeatureMap map = [&] {
    if (cfg.feature_kind == "identity") {
      if (cfg.feature_dim != 0 && cfg.feature_dim != input_dim)
        throw validation_error("identity feature map cannot change the dimension");
      return FeatureMap::identity(input_dim);
    }
    if (cfg.feature_kind == "random-sigmoid") {
      const int k = cfg.feature_dim > 0 ? cfg.feature_dim : 2 * input_dim;
      return FeatureMap::random_sigmoid(input_dim, k, cfg.feature_seed);
    }
    throw validation_error("feature_kind must be 'identity' or 'random-sigmoid', got '" +
                           cfg.feature_kind + "'");
  }();
  prep.design_all = map.design_matrix(prep.ds.inputs);
  return prep;
}

// Chain order: the initial block keeps natural order; the remainder follows
// the configured insertion order (1-based ids) or natural order.
inline std::vector<int> chain_order(const ExperimentConfig& cfg, int node_count) {
  const int m0 = cfg.initial_nodes;
  if (m0 < 1 || m0 > node_count)
    throw validation_error("initial_nodes " + std::to_string(m0) + " out of range for " +
                           std::to_string(node_count) + " nodes");
  std::vector<int> order(node_count);
  for (int i = 0; i < m0; ++i) order[i] = i;
  if (cfg.insertion_order.empty()) {
    for (int i = m0; i < node_count; ++i) order[i] = i;
    return order;
  }
  if (static_cast<int>(cfg.insertion_order.size()) != node_count - m0)
    throw validation_error("insertion_order must list exactly the " +
                           std::to_string(node_count - m0) + " nodes after the initial block");
  std::vector<bool> seen(node_count, false);
  for (int i = 0; i < m0; ++i) seen[i] = true;
  for (int i = 0; i < node_count - m0; ++i) {
    const int id = cfg.insertion_order[i];  // 1-based
    if (id < m0 + 1 || id > node_count || seen[id - 1])
      throw validation_error("insertion_order entry " + std::to_string(id) +
                             " is not a valid unseen node id in " + std::to_string(m0 + 1) +
                             ".." + std::to_string(node_count));
    seen[id - 1] = true;
    order[m0 + i] = id - 1;
  }
  return order;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline CvConfig effective_cv(const CvConfig& cv) {
  CvConfig out = cv;
  if (out.alpha_grid.empty()) out.alpha_grid = default_hyper_grid();
  if (out.beta_grid.empty()) out.beta_grid = default_hyper_grid();
  return out;
}

}  // namespace detail

/// Runs the full expansion protocol. For every (train size, trial): add noise
/// to the training targets, cross-validate hyperparameters, start the
/// recursion on the initial subgraph, then absorb the remaining nodes one at
/// a time, scoring LR, LRG (batch re-solve) and NR-LRG (recursive) on the
/// held-out samples at every graph size. If a trial aborts, the rows gathered
/// so far are flushed to the configured output path before the error
/// propagates.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg);

inline void write_report(const ExperimentReport& report, const std::string& path);

namespace detail {

inline void run_one_trial(const ExperimentConfig& cfg, const PreparedData& prep,
                          const std::vector<int>& chain, const Matrix& adjacency_chain,
                          int train_size, int sweep_index, int trial,
                          ExperimentReport& report) {
  const int node_count = static_cast<int>(adjacency_chain.rows());
  const int m0 = cfg.initial_nodes;
  const int test_count = prep.ds.test_count;

  // Targets in chain order; training rows get noise, test rows stay as-is.
  Matrix targets_chain(prep.ds.targets_clean.rows(), node_count);
  for (int j = 0; j < node_count; ++j)
    targets_chain.col(j) = prep.ds.targets_clean.col(chain[j]);

  const Matrix train_design = prep.design_all.topRows(train_size);
  const Matrix test_design = prep.design_all.bottomRows(test_count);
  const Matrix test_truth = targets_chain.bottomRows(test_count);
  const Matrix train_targets =
      add_noise(targets_chain.topRows(train_size),
                NoiseSpec{cfg.snr_db, mix_seed(cfg.noise_seed, sweep_index, trial)});

  // Hyperparameters: LRG by cross-validation (reused by NR-LRG), LR with the
  // graph term disabled.
  const CvConfig cv = effective_cv(cfg.cv);
  const bool cv_full = cfg.cv_at == "full";
  if (!cv_full && cfg.cv_at != "m0")
    throw validation_error("cv_at must be 'm0' or 'full', got '" + cfg.cv_at + "'");
  const int cv_nodes = cv_full ? node_count : m0;
  const Matrix cv_lap =
      Graph::from_adjacency(adjacency_chain.topLeftCorner(cv_nodes, cv_nodes)).laplacian();
  const HyperParams hp =
      cross_validate(train_design, train_targets.leftCols(cv_nodes), cv_lap, cv);
  CvConfig cv_lr = cv;
  cv_lr.beta_grid = {0.0};
  const HyperParams hp_lr = cross_validate(train_design, train_targets.leftCols(cv_nodes),
                                           Matrix::Zero(cv_nodes, cv_nodes), cv_lr);

  const auto emit = [&](const std::string& method, int nodes, double err, double secs) {
    report.rows.push_back(ReportRow{method, nodes, train_size, trial, err,
                                    cfg.measure_time ? secs : 0.0});
  };
  const auto score = [&](const Matrix& coeffs, int nodes) {
    return nmse(test_design * coeffs, test_truth.leftCols(nodes));
  };

  // Initial subgraph: all three methods solve the same batch problem.
  const Graph g0 = Graph::from_adjacency(adjacency_chain.topLeftCorner(m0, m0));
  auto t0 = std::chrono::steady_clock::now();
  RecursionState state =
      init_state(g0, train_design, train_targets.leftCols(m0), hp.alpha, hp.beta);
  emit("NR-LRG", m0, score(state.coeffs, m0), seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  Matrix coeffs_lrg =
      solve_batch(LrgProblem{train_design, train_targets.leftCols(m0), g0.laplacian(),
                             hp.alpha, hp.beta});
  emit("LRG", m0, score(coeffs_lrg, m0), seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  Matrix coeffs_lr = solve_batch(LrgProblem{train_design, train_targets.leftCols(m0),
                                            Matrix::Zero(m0, m0), hp_lr.alpha, 0.0});
  emit("LR", m0, score(coeffs_lr, m0), seconds_since(t0));

  // Expansion: recursive update vs batch re-solves at every size.
  for (int m = m0; m < node_count; ++m) {
    const Vector attachment = adjacency_chain.col(m).head(m);
    const Vector new_targets = train_targets.col(m);

    t0 = std::chrono::steady_clock::now();
    state = add_node(state, attachment, new_targets);
    emit("NR-LRG", m + 1, score(state.coeffs, m + 1), seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    coeffs_lrg = solve_batch(LrgProblem{train_design, train_targets.leftCols(m + 1),
                                        state.graph.laplacian(), hp.alpha, hp.beta});
    emit("LRG", m + 1, score(coeffs_lrg, m + 1), seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    coeffs_lr = solve_batch(LrgProblem{train_design, train_targets.leftCols(m + 1),
                                       Matrix::Zero(m + 1, m + 1), hp_lr.alpha, 0.0});
    emit("LR", m + 1, score(coeffs_lr, m + 1), seconds_since(t0));
  }
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw validation_error("trials must be positive");
  const detail::PreparedData prep = detail::prepare_data(cfg);
  const int node_count = static_cast<int>(prep.ds.targets_clean.cols());
  const std::vector<int> chain = detail::chain_order(cfg, node_count);

  Matrix adjacency_chain(node_count, node_count);
  for (int i = 0; i < node_count; ++i)
    for (int j = 0; j < node_count; ++j)
      adjacency_chain(i, j) = prep.adjacency(chain[i], chain[j]);

  std::vector<int> train_sizes = cfg.train_sizes.empty() ? std::vector<int>{cfg.train_count}
                                                         : cfg.train_sizes;
  for (int n : train_sizes)
    if (n < 1 || n > prep.ds.train_count)
      throw validation_error("train size " + std::to_string(n) + " exceeds the training pool of " +
                             std::to_string(prep.ds.train_count));

  ExperimentReport report;
  report.targets_are_clean = prep.ds.targets_are_clean;
  try {
    for (std::size_t ni = 0; ni < train_sizes.size(); ++ni)
      for (int trial = 0; trial < cfg.trials; ++trial)
        detail::run_one_trial(cfg, prep, chain, adjacency_chain, train_sizes[ni],
                              static_cast<int>(ni), trial, report);
  } catch (...) {
    if (!report.rows.empty()) {
      try {
        write_report(report, cfg.output_path);
      } catch (...) {
        // the original error matters more than the flush failure
      }
    }
    throw;
  }
  return report;
}

namespace detail {

inline std::string aggregate_path(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "_agg";
  return path.substr(0, dot) + "_agg" + path.substr(dot);
}

}  // namespace detail

/// Writes the row-level CSV (`method,M,N,trial,nmse,wall_time_s`) and a
/// plotting-ready aggregate with per-(method, M, N) means next to it.
inline void write_report(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << "method,M,N,trial,nmse,wall_time_s\n";
  for (const ReportRow& row : report.rows)
    out << row.method << ',' << row.nodes << ',' << row.train_size << ',' << row.trial << ','
        << format_double(row.nmse) << ',' << format_double(row.wall_time_s) << '\n';
  if (!out) throw io_error("failed writing '" + path + "'");

  struct Agg {
    double nmse_sum = 0.0;
    double time_sum = 0.0;
    int count = 0;
  };
  std::map<std::tuple<std::string, int, int>, Agg> groups;
  for (const ReportRow& row : report.rows) {
    Agg& agg = groups[{row.method, row.nodes, row.train_size}];
    agg.nmse_sum += row.nmse;
    agg.time_sum += row.wall_time_s;
    ++agg.count;
  }
  const std::string agg_file = detail::aggregate_path(path);
  std::ofstream agg_out(agg_file);
  if (!agg_out) throw io_error("cannot open '" + agg_file + "' for writing");
  agg_out << "method,M,N,mean_nmse,mean_wall_time_s,trials\n";
  for (const auto& [key, agg] : groups)
    agg_out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
            << format_double(agg.nmse_sum / agg.count) << ','
            << format_double(agg.time_sum / agg.count) << ',' << agg.count << '\n';
  if (!agg_out) throw io_error("failed writing '" + agg_file + "'");
}

// ---------------------------------------------------------------------------

struct BenchResult {
  int nodes = 0, features = 0, samples = 0, reps = 0;
  double update_median_s = 0.0;
  double batch_median_s = 0.0;
  double ratio = 0.0;  // update / batch
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Times one recursive node update at graph size M against a full batch
/// re-solve of the grown (M+1)-node problem, median over `reps` repetitions.
inline BenchResult bench_update_vs_batch(int nodes, int features, int samples, double alpha,
                                         double beta, int reps, std::uint64_t seed) {
  if (nodes < 1 || features < 1 || samples < 1 || reps < 1)
    throw validation_error("bench: all sizes must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);

  Matrix adjacency = Matrix::Zero(nodes, nodes);
  for (int i = 0; i < nodes; ++i)
    for (int j = i + 1; j < nodes; ++j) adjacency(i, j) = adjacency(j, i) = u01(rng);
  Matrix design(samples, features);
  for (int i = 0; i < samples; ++i)
    for (int j = 0; j < features; ++j) design(i, j) = n01(rng);
  Matrix targets(samples, nodes + 1);
  for (int i = 0; i < samples; ++i)
    for (int j = 0; j <= nodes; ++j) targets(i, j) = n01(rng);
  Vector attachment(nodes);
  for (int i = 0; i < nodes; ++i) attachment(i) = u01(rng);

  const Graph g = Graph::from_adjacency(adjacency);
  const RecursionState state =
      init_state(g, design, targets.leftCols(nodes), alpha, beta, /*verify=*/false);
  const Graph grown = append_node(g, attachment);

  std::vector<double> update_times, batch_times;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    const RecursionState next = add_node(state, attachment, targets.col(nodes));
    update_times.push_back(detail::seconds_since(t0));
    if (!next.coeffs.allFinite()) throw numerical_error("bench: update produced non-finite W");

    t0 = std::chrono::steady_clock::now();
    const Matrix w = solve_batch(LrgProblem{design, targets, grown.laplacian(), alpha, beta});
    batch_times.push_back(detail::seconds_since(t0));
    if (!w.allFinite()) throw numerical_error("bench: batch solve produced non-finite W");
  }

  BenchResult result;
  result.nodes = nodes;
  result.features = features;
  result.samples = samples;
  result.reps = reps;
  result.update_median_s = detail::median(update_times);
  result.batch_median_s = detail::median(batch_times);
  result.ratio = result.update_median_s / result.batch_median_s;
  return result;
}

}  // namespace lrg
