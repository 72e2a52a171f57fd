#include "hast/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hast/engine.hpp"
#include "hast/metrics.hpp"
#include "hast/plot.hpp"
#include "hast/server.hpp"
#include "hast/session.hpp"

namespace hast::cli {

using nlohmann::json;
namespace fs = std::filesystem;

bool is_builtin_dataset(const std::string& name) {
  return name == "blobs4" || name.rfind("blobs:", 0) == 0;
}

Dataset builtin_dataset(const std::string& name) {
  if (name == "blobs4") {
    Dataset ds = generate_blobs(4, 500, 16, kBlobs4Separation, 7);
    ds.name = "blobs4";
    return ds;
  }
  if (name.rfind("blobs:", 0) == 0) {
    std::istringstream in(name.substr(6));
    int classes = 0, per_class = 0, dim = 0;
    double separation = 0.0;
    std::uint64_t seed = 0;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    if (!(in >> classes >> c1 >> per_class >> c2 >> dim >> c3 >> separation >> c4 >> seed) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw std::invalid_argument("expected blobs:C,PER_CLASS,DIM,SEPARATION,SEED, got '" + name + "'");
    Dataset ds = generate_blobs(classes, per_class, dim, separation, seed);
    ds.name = name;
    return ds;
  }
  throw std::invalid_argument("unknown built-in dataset '" + name + "'");
}

fs::path resolve_data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("HAST_DATA_DIR"); env && *env) return env;
  return "hast-data";
}

namespace {

struct DatasetArgs {
  std::string dataset;
  std::string test;
  int num_classes = 0;
  std::string metric = "accuracy";
  std::string name;

  void add_to(CLI::App* cmd, bool dataset_required) {
    auto* opt = cmd->add_option("--dataset", dataset,
                                "Built-in name (blobs4, blobs:C,N,D,SEP,SEED) or training JSONL");
    if (dataset_required) opt->required();
    cmd->add_option("--test", test, "Test JSONL (file datasets)");
    cmd->add_option("--num-classes", num_classes, "Number of classes (default: inferred)");
    cmd->add_option("--metric", metric, "accuracy or macro-f1");
    cmd->add_option("--name", name, "Dataset name (default: file stem)");
  }

  Dataset load(const std::string& spec) const {
    if (is_builtin_dataset(spec)) return builtin_dataset(spec);
    LoadOptions opts;
    opts.name = name.empty() ? fs::path(spec).stem().string() : name;
    opts.metric = parse_metric(metric);
    if (num_classes > 0) opts.num_classes = num_classes;
    std::optional<fs::path> test_path;
    if (!test.empty()) test_path = test;
    return load_dataset(spec, test_path, opts);
  }
};

struct RunArgs {
  DatasetArgs data;
  std::string config_file;
  std::string strategy;
  std::string self_training;
  std::string classifier;
  std::size_t runs = 0;
  std::uint64_t seed = 0;
  std::string out = "results";
  double label_noise = 0.0;
  std::size_t queries = 0, batch_size = 0, seed_size = 0, k = 0, iterations = 0, subsample = 0,
              m_neighbors = 0;
  double beta = 0.0, lr = 0.0, verips_threshold = 0.0;
  int epochs = 0;
  bool no_class_weighting = false, dynamic_beta = false, stratified_seed = false,
       noise_on_seed = false, query_with_human_model = false;
  CLI::App* cmd = nullptr;

  bool given(const std::string& flag) const { return cmd->count(flag) > 0; }

  ExperimentConfig config() const {
    ExperimentConfig c;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw std::runtime_error("cannot open config file " + config_file);
      c = config_from_json(json::parse(in));
    }
    if (given("--strategy")) c.query_strategy = parse_query_strategy(strategy);
    if (given("--self-training")) c.self_training = parse_self_training(self_training);
    if (given("--classifier")) c.classifier.kind = parse_model_kind(classifier);
    if (given("--runs")) c.num_runs = runs;
    if (given("--seed")) c.rng_seed = seed;
    if (given("--label-noise")) c.label_noise = label_noise;
    if (given("--queries")) c.num_queries = queries;
    if (given("--batch-size")) c.batch_size = batch_size;
    if (given("--seed-size")) c.seed_size = seed_size;
    if (given("--k")) c.k = k;
    if (given("--iterations")) c.self_train_iterations = iterations;
    if (given("--subsample")) c.subsample_size = subsample;
    if (given("--m-neighbors")) c.m_neighbors = m_neighbors;
    if (given("--beta")) c.beta = beta;
    if (given("--lr")) c.classifier.learning_rate = lr;
    if (given("--epochs")) c.classifier.epochs = epochs;
    if (given("--verips-threshold")) c.verips_threshold = verips_threshold;
    if (no_class_weighting) c.class_weighting = false;
    if (dynamic_beta) c.dynamic_beta = true;
    if (stratified_seed) c.stratified_seed = true;
    if (noise_on_seed) c.noise_on_seed = true;
    if (query_with_human_model) c.query_with_self_trained = false;
    validate(c);
    return c;
  }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

int run_command(const RunArgs& args) {
  const ExperimentConfig base = args.config();
  const Dataset dataset = args.data.load(args.data.dataset);
  validate(base, dataset);

  std::vector<std::future<LearningCurve>> jobs;
  for (std::size_t r = 0; r < base.num_runs; ++r) {
    ExperimentConfig cfg = base;
    cfg.rng_seed = base.rng_seed + r;
    jobs.push_back(std::async(std::launch::async,
                              [&dataset, cfg] { return run_active_learning(dataset, cfg); }));
  }
  std::vector<LearningCurve> curves;
  for (auto& job : jobs) curves.push_back(job.get());
  const RunAggregate agg = aggregate_runs(curves);

  const fs::path out_dir = args.out;
  fs::create_directories(out_dir);
  json curves_doc = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "rng_seed,labeled_count,score,pseudo_count\n";
  for (const auto& c : curves) {
    curves_doc.push_back(c.to_json());
    for (const auto& p : c.points)
      csv << c.rng_seed << ',' << p.labeled_count << ',' << p.score << ',' << p.pseudo_count << '\n';
  }
  json agg_doc = agg.to_json();
  agg_doc["dataset"] = dataset.name;
  agg_doc["config"] = to_json(base);
  write_file(out_dir / "curves.json", curves_doc.dump(2) + "\n");
  write_file(out_dir / "curves.csv", csv.str());
  write_file(out_dir / "aggregate.json", agg_doc.dump(2) + "\n");

  const std::string label = to_string(base.query_strategy) + " + " + to_string(base.self_training);
  const PlotSeries series = series_from_json(agg_doc, label);
  write_file(out_dir / "learning_curve.svg",
             render_learning_curves_svg(std::span(&series, 1), dataset.name, to_string(dataset.metric)));

  std::cout << dataset.name << "  " << label << "  runs=" << curves.size() << "\n"
            << "final " << to_string(dataset.metric) << ": " << agg.final_score.mean << " +/- "
            << agg.final_score.std;
  if (agg.labeled_counts.size() >= 2)
    std::cout << "   auc: " << agg.area_under_curve.mean << " +/- " << agg.area_under_curve.std;
  std::cout << "\nwrote " << (out_dir / "curves.json").string() << ", aggregate.json, curves.csv, "
            << "learning_curve.svg\n";
  return 0;
}

std::map<InstanceId, Label> read_seed_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open seed-label file " + path.string());
  std::map<InstanceId, Label> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json obj = json::parse(line);
    out[obj.at("id").get<InstanceId>()] = obj.at("label").get<Label>();
  }
  return out;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> datasets;
  std::string data_dir;
  std::string seed_labels;
  std::string ui_dir;
};

int serve_command(const ServeArgs& args) {
  DatasetRegistry registry;
  registry.add("blobs4", std::make_shared<const Dataset>(builtin_dataset("blobs4")));
  for (const auto& spec : args.datasets) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--dataset expects NAME=TRAIN[,TEST], got '" + spec + "'");
    const std::string name = spec.substr(0, eq);
    std::string train = spec.substr(eq + 1);
    std::optional<fs::path> test;
    if (const auto comma = train.find(','); comma != std::string::npos) {
      test = train.substr(comma + 1);
      train.resize(comma);
    }
    if (is_builtin_dataset(train)) {
      registry.add(name, std::make_shared<const Dataset>(builtin_dataset(train)));
    } else {
      LoadOptions opts;
      opts.name = name;
      registry.add(name, std::make_shared<const Dataset>(load_dataset(train, test, opts)));
    }
  }

  SessionOptions opts;
  opts.data_dir = resolve_data_dir(args.data_dir);
  if (!args.seed_labels.empty()) opts.seed_labels = read_seed_labels(args.seed_labels);

  SessionManager sessions(std::move(registry), opts);
  httplib::Server server;
  register_routes(server, sessions);
  if (!args.ui_dir.empty() && !server.set_mount_point("/", args.ui_dir))
    throw std::runtime_error("cannot serve UI directory " + args.ui_dir);
  std::cerr << "serving on http://" << args.host << ':' << args.port << " (data dir "
            << opts.data_dir.string() << ", " << sessions.session_ids().size()
            << " sessions restored)\n";
  if (!server.listen(args.host, args.port)) {
    std::cerr << "error: cannot listen on " << args.host << ':' << args.port << "\n";
    return 1;
  }
  return 0;
}

struct PlotArgs {
  std::vector<std::string> inputs;
  std::string out = "learning_curve.svg";
  std::string title = "Learning curves";
  std::string y_label = "score";
};

int plot_command(const PlotArgs& args) {
  std::vector<PlotSeries> series;
  for (const auto& spec : args.inputs) {
    std::string name = spec, path = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
      name = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    }
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    const json doc = json::parse(in);
    if (doc.is_array()) {
      for (std::size_t i = 0; i < doc.size(); ++i)
        series.push_back(series_from_json(doc[i], name + " #" + std::to_string(i)));
    } else {
      series.push_back(series_from_json(doc, name));
    }
  }
  write_file(args.out, render_learning_curves_svg(series, args.title, args.y_label));
  std::cout << "wrote " << args.out << "\n";
  return 0;
}

int validate_command(const DatasetArgs& args) {
  const Dataset ds = args.load(args.dataset);
  std::vector<std::size_t> counts(static_cast<std::size_t>(ds.num_classes), 0);
  for (const auto& inst : ds.train) ++counts[static_cast<std::size_t>(inst.true_label)];
  json summary{{"name", ds.name},       {"train", ds.train.size()},     {"test", ds.test.size()},
               {"num_classes", ds.num_classes}, {"dim", ds.dim()},      {"metric", to_string(ds.metric)},
               {"class_counts", counts}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning with HAST self-training"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  RunArgs run;
  run.cmd = app.add_subcommand("run", "Simulated-oracle experiment over several seeds");
  run.data.add_to(run.cmd, true);
  run.cmd->add_option("--config", run.config_file, "Experiment config JSON (flags override it)");
  run.cmd->add_option("--strategy", run.strategy, "random, breaking-ties, contrastive-predictions");
  run.cmd->add_option("--self-training", run.self_training, "none, hast, verips, threshold");
  run.cmd->add_option("--classifier", run.classifier, "logistic-regression, nearest-centroid");
  run.cmd->add_option("--runs", run.runs, "Number of runs (seeds seed .. seed+runs-1)");
  run.cmd->add_option("--seed", run.seed, "First RNG seed");
  run.cmd->add_option("--out", run.out, "Output directory");
  run.cmd->add_option("--label-noise", run.label_noise, "Oracle label-noise probability");
  run.cmd->add_option("--queries", run.queries, "Number of queries Q");
  run.cmd->add_option("--batch-size", run.batch_size, "Query batch size B");
  run.cmd->add_option("--seed-size", run.seed_size, "Initial labeled set size");
  run.cmd->add_option("--k", run.k, "KNN neighbours for the pseudo-label vote");
  run.cmd->add_option("--beta", run.beta, "Pseudo-label down-weighting factor");
  run.cmd->add_option("--iterations", run.iterations, "Self-training iterations T");
  run.cmd->add_option("--subsample", run.subsample, "Unlabeled subsample size");
  run.cmd->add_option("--m-neighbors", run.m_neighbors, "Contrastive-predictions neighbourhood");
  run.cmd->add_option("--verips-threshold", run.verips_threshold, "VERIPS margin threshold");
  run.cmd->add_option("--lr", run.lr, "Classifier learning rate");
  run.cmd->add_option("--epochs", run.epochs, "Classifier epochs");
  run.cmd->add_flag("--no-class-weighting", run.no_class_weighting, "Set every class weight to 1");
  run.cmd->add_flag("--dynamic-beta", run.dynamic_beta, "beta = min(1, |human| / |pseudo|)");
  run.cmd->add_flag("--stratified-seed", run.stratified_seed, "Class-stratified seed set");
  run.cmd->add_flag("--noise-on-seed", run.noise_on_seed, "Apply label noise to the seed set too");
  run.cmd->add_flag("--query-with-human-model", run.query_with_human_model,
                    "Query with the model trained before self-training");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service for live annotation sessions");
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port");
  serve_cmd->add_option("--dataset", serve.datasets, "NAME=TRAIN[,TEST] (repeatable); blobs4 is built in");
  serve_cmd->add_option("--data-dir", serve.data_dir, "Session directory (default $HAST_DATA_DIR or ./hast-data)");
  serve_cmd->add_option("--seed-labels", serve.seed_labels, "JSONL of {id, label} answering seed batches");
  serve_cmd->add_option("--ui", serve.ui_dir, "Static directory served at /");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "Render curve or aggregate JSON files to SVG");
  plot_cmd->add_option("inputs", plot.inputs, "[NAME=]FILE, aggregate.json or curves.json")->required();
  plot_cmd->add_option("--out", plot.out, "Output SVG");
  plot_cmd->add_option("--title", plot.title, "Chart title");
  plot_cmd->add_option("--y-label", plot.y_label, "Y axis label");

  DatasetArgs check;
  auto* check_cmd = app.add_subcommand("validate-dataset", "Parse and validate a JSONL dataset");
  check_cmd->add_option("dataset", check.dataset, "Training JSONL or built-in name")->required();
  check_cmd->add_option("--test", check.test, "Test JSONL");
  check_cmd->add_option("--num-classes", check.num_classes, "Number of classes");
  check_cmd->add_option("--metric", check.metric, "accuracy or macro-f1");
  check_cmd->add_option("--name", check.name, "Dataset name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto logger = spdlog::get("hast");
  if (!logger) logger = spdlog::stderr_color_mt("hast");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run.cmd) return run_command(run);
    if (*serve_cmd) return serve_command(serve);
    if (*plot_cmd) return plot_command(plot);
    if (*check_cmd) return validate_command(check);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int main(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("hast");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace hast::cli
