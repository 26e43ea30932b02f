// Command-line front end: graph construction from coordinates, batch
// training, recursive expansion from a state snapshot, the full experiment
// sweep, and the recursive-vs-batch timing benchmark.
//
// Exit codes: 0 success, 1 validation error, 2 numerical breakdown, 3 I/O.

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrg/dataset.hpp"
#include "lrg/eval.hpp"
#include "lrg/experiment.hpp"
#include "lrg/features.hpp"
#include "lrg/graph.hpp"
#include "lrg/io.hpp"
#include "lrg/lrg.hpp"
#include "lrg/nrlrg.hpp"

namespace {

struct DataOptions {
  std::string signals_csv;
  std::string coords_csv;
  std::string adjacency_csv;
  std::string pairing = "lag";
  int lag = 2;
  int split_inputs = 30;
  int split_outputs = 30;
};

void add_data_options(CLI::App* cmd, DataOptions& opts) {
  cmd->add_option("--signals", opts.signals_csv, "signal CSV (header of node names, one row per sample)")
      ->required();
  cmd->add_option("--coords", opts.coords_csv, "coordinate CSV (name,lat,lon) for the geodesic graph");
  cmd->add_option("--adjacency", opts.adjacency_csv, "precomputed adjacency CSV instead of coordinates");
  cmd->add_option("--pairing", opts.pairing, "sample pairing: 'lag' or 'split'")
      ->check(CLI::IsMember({"lag", "split"}));
  cmd->add_option("--lag", opts.lag, "prediction lag in rows for 'lag' pairing");
  cmd->add_option("--split-in", opts.split_inputs, "input column count for 'split' pairing");
  cmd->add_option("--split-out", opts.split_outputs, "output column count for 'split' pairing");
}

lrg::Dataset load_dataset(const DataOptions& opts) {
  const lrg::SignalTable table = lrg::read_signal_table(opts.signals_csv);
  if (opts.pairing == "lag") return lrg::make_lagged_pairs(table.values, opts.lag);
  return lrg::split_in_out(table.values, opts.split_inputs, opts.split_outputs);
}

lrg::Matrix load_adjacency(const DataOptions& opts, int expected_nodes) {
  lrg::Matrix adjacency;
  if (!opts.adjacency_csv.empty()) {
    adjacency = lrg::read_adjacency_csv(opts.adjacency_csv);
  } else if (!opts.coords_csv.empty()) {
    adjacency = lrg::geodesic_adjacency(lrg::read_coords_csv(opts.coords_csv));
  } else {
    throw lrg::validation_error("provide either --coords or --adjacency");
  }
  if (adjacency.rows() != expected_nodes)
    throw lrg::validation_error("graph has " + std::to_string(adjacency.rows()) +
                                " nodes but the signals define " +
                                std::to_string(expected_nodes));
  return adjacency;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- build-graph -----------------------------------------------------------

struct BuildGraphOptions {
  std::string coords_csv;
  std::string output;
};

void run_build_graph(const BuildGraphOptions& opts) {
  const auto coords = lrg::read_coords_csv(opts.coords_csv);
  const lrg::Matrix adjacency = lrg::geodesic_adjacency(coords);
  std::vector<std::string> names(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) names[i] = coords[i].name;
  lrg::write_adjacency_csv(adjacency, names, opts.output);
  std::cout << "wrote " << adjacency.rows() << "x" << adjacency.cols() << " adjacency to "
            << opts.output << "\n";
}

// --- train ------------------------------------------------------------------

struct TrainOptions {
  DataOptions data;
  int train_count = 0;  // 0 = three quarters of the pairs
  int subgraph = 0;     // 0 = all nodes
  double alpha = 1.0;
  double beta = 1.0;
  bool use_cv = false;
  int cv_folds = 4;
  std::string feature_kind = "identity";
  int feature_dim = 0;
  std::uint64_t feature_seed = 7;
  double snr_db = 0.0;
  bool add_noise = false;
  std::uint64_t noise_seed = 99;
  std::string state_out;
};

void run_train(const TrainOptions& opts) {
  lrg::Dataset ds = load_dataset(opts.data);
  const int total = static_cast<int>(ds.inputs.rows());
  const int train_count = opts.train_count > 0 ? opts.train_count : std::max(1, 3 * total / 4);
  ds = lrg::with_split(std::move(ds), train_count);

  const int all_nodes = static_cast<int>(ds.targets_clean.cols());
  const lrg::Matrix adjacency = load_adjacency(opts.data, all_nodes);
  const int nodes = opts.subgraph > 0 ? opts.subgraph : all_nodes;
  if (nodes > all_nodes)
    throw lrg::validation_error("--subgraph " + std::to_string(nodes) + " exceeds " +
                                std::to_string(all_nodes) + " nodes");
  const lrg::Graph graph =
      lrg::Graph::from_adjacency(adjacency.topLeftCorner(nodes, nodes));

  const int input_dim = static_cast<int>(ds.inputs.cols());
  const lrg::FeatureMap map = [&] {
    if (opts.feature_kind == "identity") return lrg::FeatureMap::identity(input_dim);
    const int k = opts.feature_dim > 0 ? opts.feature_dim : 2 * input_dim;
    return lrg::FeatureMap::random_sigmoid(input_dim, k, opts.feature_seed);
  }();

  const lrg::Matrix design_all = map.design_matrix(ds.inputs);
  const lrg::Matrix design = design_all.topRows(train_count);
  lrg::Matrix targets = ds.targets_clean.topRows(train_count).leftCols(nodes);
  if (opts.add_noise)
    targets = lrg::add_noise(targets, lrg::NoiseSpec{opts.snr_db, opts.noise_seed});

  double alpha = opts.alpha, beta = opts.beta;
  if (opts.use_cv) {
    lrg::CvConfig cv;
    cv.folds = opts.cv_folds;
    cv.alpha_grid = lrg::default_hyper_grid();
    cv.beta_grid = lrg::default_hyper_grid();
    const lrg::HyperParams hp = lrg::cross_validate(design, targets, graph.laplacian(), cv);
    alpha = hp.alpha;
    beta = hp.beta;
    std::cout << "cross-validation selected alpha=" << alpha << " beta=" << beta << "\n";
  }
  if (alpha <= 0.0)
    throw lrg::validation_error("training requires alpha > 0 (got " + std::to_string(alpha) + ")");

  const auto t0 = std::chrono::steady_clock::now();
  const lrg::RecursionState state = lrg::init_state(graph, design, targets, alpha, beta);
  const double secs = elapsed(t0);

  lrg::save_state(state, opts.state_out);
  std::cout << "trained " << nodes << " nodes, " << map.output_dim() << " features, "
            << train_count << " samples in " << secs << " s\n";
  std::cout << "training cost: "
            << lrg::cost(state.coeffs,
                         lrg::LrgProblem{design, targets, graph.laplacian(), alpha, beta})
            << "\n";
  if (ds.test_count > 0) {
    const lrg::Matrix test_pred =
        design_all.bottomRows(ds.test_count) * state.coeffs;
    const lrg::Matrix test_truth = ds.targets_clean.bottomRows(ds.test_count).leftCols(nodes);
    std::cout << "test NMSE: " << lrg::nmse(test_pred, test_truth) << "\n";
  }
  std::cout << "state written to " << opts.state_out << "\n";
}

// --- expand ------------------------------------------------------------------

struct ExpandOptions {
  DataOptions data;
  std::string state_in;
  std::string state_out;
  std::string report;
  int until = 0;  // 0 = all nodes
  std::vector<int> order;
  bool verify = false;
};

void run_expand(const ExpandOptions& opts) {
  lrg::RecursionState state = lrg::load_state(opts.state_in);
  state.verify = opts.verify;

  const lrg::Dataset ds = load_dataset(opts.data);
  const int all_nodes = static_cast<int>(ds.targets_clean.cols());
  const lrg::Matrix adjacency = load_adjacency(opts.data, all_nodes);

  const int n = state.sample_count();
  if (ds.inputs.rows() < n)
    throw lrg::validation_error("signals provide " + std::to_string(ds.inputs.rows()) +
                                " pairs but the snapshot was trained on " + std::to_string(n));

  const int start = state.node_count();
  const int until = opts.until > 0 ? opts.until : all_nodes;
  if (until < start || until > all_nodes)
    throw lrg::validation_error("--until " + std::to_string(until) + " out of range " +
                                std::to_string(start) + ".." + std::to_string(all_nodes));

  // Snapshots do not retain column ids: the existing nodes are taken to be
  // the first `start` signal columns, in file order.
  std::vector<int> chain(start);
  for (int i = 0; i < start; ++i) chain[i] = i;
  std::vector<int> incoming;
  if (opts.order.empty()) {
    for (int id = start + 1; id <= until; ++id) incoming.push_back(id);
  } else {
    incoming = opts.order;
    if (static_cast<int>(incoming.size()) != until - start)
      throw lrg::validation_error("--order must list exactly " + std::to_string(until - start) +
                                  " node ids");
  }

  std::ofstream report;
  if (!opts.report.empty()) {
    report.open(opts.report);
    if (!report) throw lrg::io_error("cannot open '" + opts.report + "' for writing");
    report << "M,node,wall_time_s,fq_residual\n";
  }

  for (int id : incoming) {
    if (id < 1 || id > all_nodes)
      throw lrg::validation_error("node id " + std::to_string(id) + " out of range 1.." +
                                  std::to_string(all_nodes));
    const int node = id - 1;
    lrg::Vector attachment(state.node_count());
    for (int i = 0; i < state.node_count(); ++i) attachment(i) = adjacency(node, chain[i]);
    const lrg::Vector new_targets = ds.targets_clean.col(node).head(n);

    const auto t0 = std::chrono::steady_clock::now();
    state = lrg::add_node(state, attachment, new_targets);
    const double secs = elapsed(t0);
    chain.push_back(node);

    const double residual = lrg::inverse_residual(state);
    std::cout << "M=" << state.node_count() << " node=" << id << " update=" << secs
              << " s, |FQ-I|=" << residual << "\n";
    if (report)
      report << state.node_count() << ',' << id << ',' << lrg::format_double(secs) << ','
             << lrg::format_double(residual) << '\n';
  }
  if (state.fallback_count > 0)
    std::cout << "verify fallback re-solved " << state.fallback_count << " time(s)\n";

  if (!opts.state_out.empty()) {
    lrg::save_state(state, opts.state_out);
    std::cout << "state written to " << opts.state_out << "\n";
  }
}

// --- experiment ---------------------------------------------------------------

struct ExperimentOptions {
  std::string config;
  std::string output;
};

void run_experiment_cmd(const ExperimentOptions& opts) {
  lrg::ExperimentConfig cfg = lrg::parse_config(opts.config);
  if (!opts.output.empty()) cfg.output_path = opts.output;
  const lrg::ExperimentReport report = lrg::run_experiment(cfg);
  lrg::write_report(report, cfg.output_path);
  std::cout << "wrote " << report.rows.size() << " rows to " << cfg.output_path
            << " (aggregate alongside)\n";
}

// --- bench ---------------------------------------------------------------------

struct BenchOptions {
  int nodes = 50;
  int features = 10;
  int samples = 100;
  double alpha = 1.0;
  double beta = 0.5;
  int reps = 10;
  std::uint64_t seed = 42;
  std::string output;
};

void run_bench(const BenchOptions& opts) {
  const lrg::BenchResult r = lrg::bench_update_vs_batch(opts.nodes, opts.features, opts.samples,
                                                        opts.alpha, opts.beta, opts.reps,
                                                        opts.seed);
  std::cout << "M=" << r.nodes << " K=" << r.features << " N=" << r.samples
            << " reps=" << r.reps << "\n";
  std::cout << "recursive update median: " << r.update_median_s << " s\n";
  std::cout << "batch re-solve median:   " << r.batch_median_s << " s\n";
  std::cout << "ratio (update/batch):    " << r.ratio << "\n";
  if (!opts.output.empty()) {
    std::ofstream out(opts.output);
    if (!out) throw lrg::io_error("cannot open '" + opts.output + "' for writing");
    out << "nodes,features,samples,reps,update_median_s,batch_median_s,ratio\n";
    out << r.nodes << ',' << r.features << ',' << r.samples << ',' << r.reps << ','
        << lrg::format_double(r.update_median_s) << ',' << lrg::format_double(r.batch_median_s)
        << ',' << lrg::format_double(r.ratio) << '\n';
    if (!out) throw lrg::io_error("failed writing '" + opts.output + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear regression over graphs with node-recursive coefficient updates"};
  app.require_subcommand(1);

  BuildGraphOptions build_opts;
  auto* build = app.add_subcommand("build-graph", "geodesic adjacency from a coordinate CSV");
  build->add_option("--coords", build_opts.coords_csv, "coordinate CSV (name,lat,lon)")->required();
  build->add_option("--output,-o", build_opts.output, "adjacency CSV to write")->required();
  build->callback([&] { run_build_graph(build_opts); });

  TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "fit batch coefficients, write a state snapshot");
  add_data_options(train, train_opts.data);
  train->add_option("--train", train_opts.train_count, "training rows (default: 3/4 of the pairs)");
  train->add_option("--subgraph", train_opts.subgraph, "fit only the first M nodes");
  train->add_option("--alpha", train_opts.alpha, "ridge weight (must stay > 0)");
  train->add_option("--beta", train_opts.beta, "graph smoothness weight");
  train->add_flag("--cv", train_opts.use_cv, "select alpha and beta by cross-validation");
  train->add_option("--cv-folds", train_opts.cv_folds, "cross-validation folds");
  train->add_option("--feature", train_opts.feature_kind, "feature map: identity or random-sigmoid")
      ->check(CLI::IsMember({"identity", "random-sigmoid"}));
  train->add_option("--features", train_opts.feature_dim, "feature count K (default 2x input dim)");
  train->add_option("--feature-seed", train_opts.feature_seed, "seed for random feature parameters");
  train->add_flag("--noise", train_opts.add_noise, "add Gaussian noise to training targets");
  train->add_option("--snr", train_opts.snr_db, "SNR in dB for --noise");
  train->add_option("--noise-seed", train_opts.noise_seed, "noise seed");
  train->add_option("--state", train_opts.state_out, "state snapshot to write")->required();
  train->callback([&] { run_train(train_opts); });

  ExpandOptions expand_opts;
  auto* expand = app.add_subcommand("expand", "grow a snapshot node by node (recursive updates)");
  add_data_options(expand, expand_opts.data);
  expand->add_option("--state", expand_opts.state_in, "state snapshot to grow")->required();
  expand->add_option("--state-out", expand_opts.state_out, "grown snapshot to write");
  expand->add_option("--report", expand_opts.report, "per-step CSV (M,node,wall_time_s,fq_residual)");
  expand->add_option("--until", expand_opts.until, "grow to this node count (default: all)");
  expand->add_option("--order", expand_opts.order, "comma-separated 1-based node ids to append")
      ->delimiter(',');
  expand->add_flag("--verify", expand_opts.verify, "re-check FQ=I each step, rebuild on drift");
  expand->callback([&] { run_expand(expand_opts); });

  ExperimentOptions exp_opts;
  auto* experiment = app.add_subcommand("experiment", "full expansion sweep from a config file");
  experiment->add_option("--config", exp_opts.config, "experiment config file")->required();
  experiment->add_option("--output,-o", exp_opts.output, "override the report path");
  experiment->callback([&] { run_experiment_cmd(exp_opts); });

  BenchOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "time one recursive update against a batch re-solve");
  bench->add_option("--nodes", bench_opts.nodes, "graph size M before the update");
  bench->add_option("--features", bench_opts.features, "feature count K");
  bench->add_option("--samples", bench_opts.samples, "training samples N");
  bench->add_option("--alpha", bench_opts.alpha, "ridge weight");
  bench->add_option("--beta", bench_opts.beta, "graph smoothness weight");
  bench->add_option("--reps", bench_opts.reps, "repetitions for the median");
  bench->add_option("--seed", bench_opts.seed, "problem seed");
  bench->add_option("--output,-o", bench_opts.output, "write the result as CSV");
  bench->callback([&] { run_bench(bench_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const lrg::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const lrg::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const lrg::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
