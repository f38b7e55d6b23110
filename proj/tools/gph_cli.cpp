// gph: train, apply and evaluate Gaussian process hash functions.
//
// stdout carries data (CSV, key-value blocks); logs and diagnostics go to
// stderr. Exit codes: 0 ok, 1 usage, 2 data/format, 3 numerical.

#include "gph/gph.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

const CLI::Validator kWritablePath(
    [](std::string &path) -> std::string {
      const fs::path parent = fs::path(path).parent_path();
      if (!parent.empty() && !fs::is_directory(parent)) {
        return "directory does not exist: " + parent.string();
      }
      return {};
    },
    "PATH");

void log_line(const std::string &s) { std::cerr << s << '\n'; }

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) {
    throw gph::UsageError("failed writing '" + path + "'");
  }
}

gph::FeatureDataset prepare(const std::string &path, bool normalize) {
  auto ds = gph::load_features(path);
  ds.validate();
  return normalize ? gph::normalize(ds, log_line) : ds;
}

void add_config(CLI::App *sub) {
  sub->add_option("--config", "Flat 'key = value' file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
}

// Splices `--key=value` for every config entry not already given on the
// command line, so unknown keys fail like unknown flags.
std::vector<std::string> expand_config(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    }
  }
  if (path.empty() || !fs::is_regular_file(path)) {
    return args;
  }
  std::ifstream in(path);
  std::vector<std::string> extra;
  for (const auto &item : CLI::ConfigTOML().from_config(in)) {
    if (!item.parents.empty()) {
      throw gph::UsageError(path + ": sections are not supported, use flat 'key = value' lines");
    }
    const std::string flag = "--" + item.name;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string &a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) {
      std::string value;
      for (const auto &v : item.inputs) value += (value.empty() ? "" : ",") + v;
      extra.push_back(flag + "=" + value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

// ------------------------------------------------------------ gen-data

struct GenOptions {
  std::string out;
  gph::Index n = 200;
  int classes = 4;
  gph::Index dim = 2;
  double spread = 0.1;
  std::uint64_t seed = 0;
  bool packed = false;
};

void setup_gen(CLI::App &app, GenOptions &o) {
  auto *sub = app.add_subcommand("gen-data", "Write a synthetic clustered dataset");
  add_config(sub);
  sub->add_option("--out", o.out, "Output prefix: <out>.features.csv (or .gphf) and <out>.labels.csv")
      ->required()
      ->check(kWritablePath);
  sub->add_option("--n", o.n, "Number of items")->check(CLI::NonNegativeNumber);
  sub->add_option("--classes", o.classes, "Number of classes (>= 2)");
  sub->add_option("--dim", o.dim, "Feature dimension")->check(CLI::PositiveNumber);
  sub->add_option("--spread", o.spread, "Gaussian noise std around each class center");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_flag("--packed", o.packed, "Write features in the binary GPHF format");
}

void run_gen(const GenOptions &o) {
  const auto lab = gph::synthetic_clusters(o.n, o.classes, o.dim, o.spread, o.seed);
  const std::string features = o.out + (o.packed ? ".features.gphf" : ".features.csv");
  const std::string labels = o.out + ".labels.csv";
  if (o.packed) {
    gph::save_features_packed(lab.data, features);
  } else {
    gph::save_features_csv(lab.data, features);
  }
  gph::save_labels(lab.labels, labels);
  std::cerr << "wrote " << o.n << " items, " << o.classes << " classes, d = " << o.dim << " to "
            << features << " and " << labels << '\n';
}

// --------------------------------------------------------------- train

struct TrainOptions {
  std::string features;
  std::string labels;
  std::string out_model;
  std::string report;
  std::optional<double> sigma_y;
  gph::TrainConfig cfg;
};

void setup_train(CLI::App &app, TrainOptions &o) {
  auto *sub = app.add_subcommand("train", "Learn a hash model from labeled features");
  add_config(sub);
  auto &c = o.cfg;
  sub->add_option("--features", o.features, "Feature file (CSV or GPHF)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--labels", o.labels, "Label file, rows 'id,label[;label]*'")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out-model", o.out_model, "Model file to write")->required()->check(kWritablePath);
  sub->add_option("--bits", c.num_bits, "Code length m");
  sub->add_option("--inducing", c.num_inducing, "Number of inducing points r");
  sub->add_option("--representatives", c.num_representatives, "Number of representative items t");
  sub->add_option("--sigma-y", o.sigma_y, "Similarity likelihood scale (default 2/bits)");
  sub->add_option("--sigma-f", c.kernel.signal_std, "Kernel signal standard deviation");
  sub->add_option("--length-scale", c.kernel.length_scale, "Kernel length scale");
  sub->add_option("--jitter", c.kernel.jitter, "Base diagonal jitter");
  sub->add_option("--max-sweeps", c.max_sweeps, "Maximum outer sweeps");
  sub->add_option("--ep-passes", c.ep_inner_passes, "EP passes per bit per sweep");
  sub->add_option("--damping", c.damping, "EP damping in (0, 1]");
  sub->add_option("--block-size", c.block_size, "Site updates between posterior refreshes");
  sub->add_option("--patience", c.code_freeze_patience,
                  "Quiet sweeps before early stop (0 disables)");
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--workers", c.workers, "Worker threads for per-bit EP")->envname("GPH_WORKERS");
  sub->add_flag("--randomized-scan", c.randomized_scan, "Visit code entries in random order");
  sub->add_option("--report", o.report, "Report prefix: <report>.log and <report>.csv")
      ->check(kWritablePath);
}

void run_train(TrainOptions &o) {
  o.cfg.sigma_y = o.sigma_y;
  o.cfg.validate();
  const auto data = prepare(o.features, true);
  const auto labels = gph::load_labels(o.labels);

  std::vector<std::string> lines;
  const gph::MessageSink sink = [&](const std::string &s) {
    lines.push_back(s);
    log_line(s);
  };
  const auto result = gph::train(data, labels, o.cfg, sink);
  gph::save_model(result.model, o.out_model);
  const auto summary = gph::report_summary(result.report);
  std::cerr << summary;
  if (!o.report.empty()) {
    std::string log;
    for (const auto &l : lines) log += l + '\n';
    write_text(o.report + ".log", log + summary);
    write_text(o.report + ".csv", gph::report_csv(result.report));
  }
}

// -------------------------------------------------------------- encode

struct EncodeOptions {
  std::string model;
  std::string features;
  std::string out_codes;
  bool no_normalize = false;
};

void setup_encode(CLI::App &app, EncodeOptions &o) {
  auto *sub = app.add_subcommand("encode", "Hash features with a trained model");
  add_config(sub);
  sub->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
  sub->add_option("--features", o.features, "Feature file (CSV or GPHF)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out-codes", o.out_codes, "Codes file to write")->required()->check(kWritablePath);
  sub->add_flag("--no-normalize", o.no_normalize, "Use features as given instead of centering and scaling");
}

gph::HammingIndex encode_file(const gph::HashModel &model, const std::string &path, bool normalize) {
  const auto data = prepare(path, normalize);
  if (data.n() > 0 && data.d() != model.d()) {
    throw gph::DimensionError("feature dimension " + std::to_string(data.d()) +
                              " does not match model dimension " + std::to_string(model.d()));
  }
  const auto codes = gph::encode_batch(model, data.features);
  gph::HammingIndex index(model.m());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    index.add(data.ids[i], codes[i]);
  }
  return index;
}

void run_encode(const EncodeOptions &o) {
  const auto model = gph::load_model(o.model);
  const auto index = encode_file(model, o.features, !o.no_normalize);
  gph::save_codes(index, o.out_codes);
  std::cerr << "encoded " << index.size() << " items with " << model.m() << " bits\n";
}

// -------------------------------------------------------------- search

struct SearchOptions {
  std::string codes;
  std::string query_codes;
  std::string query_features;
  std::string model;
  std::size_t k = 10;
  std::optional<int> radius;
  bool no_normalize = false;
};

void setup_search(CLI::App &app, SearchOptions &o) {
  auto *sub = app.add_subcommand("search", "Rank indexed codes for each query");
  add_config(sub);
  sub->add_option("--codes", o.codes, "Indexed codes file")->required()->check(CLI::ExistingFile);
  auto *qc = sub->add_option("--query-codes", o.query_codes, "Query codes file")->check(CLI::ExistingFile);
  auto *qf = sub->add_option("--query-features", o.query_features, "Query feature file (needs --model)")
                 ->check(CLI::ExistingFile);
  auto *model = sub->add_option("--model", o.model, "Model used to encode --query-features")
                    ->check(CLI::ExistingFile);
  qc->excludes(qf);
  qf->needs(model);
  sub->add_option("--k", o.k, "Results per query")->check(CLI::PositiveNumber);
  sub->add_option("--radius", o.radius, "Return every item within this Hamming radius instead")
      ->check(CLI::NonNegativeNumber);
  sub->add_flag("--no-normalize", o.no_normalize, "Use query features as given");
}

void run_search(const SearchOptions &o) {
  if (o.query_codes.empty() == o.query_features.empty()) {
    throw gph::UsageError("search: give exactly one of --query-codes or --query-features");
  }
  const auto index = gph::load_codes(o.codes);
  const auto queries = o.query_codes.empty()
                           ? encode_file(gph::load_model(o.model), o.query_features, !o.no_normalize)
                           : gph::load_codes(o.query_codes);
  if (queries.size() > 0 && queries.code_length() != index.code_length()) {
    throw gph::DimensionError("query codes have " + std::to_string(queries.code_length()) +
                              " bits, index has " + std::to_string(index.code_length()));
  }
  std::string out = o.radius ? "query_id,item_id,distance\n" : "query_id,rank,item_id,distance\n";
  for (std::size_t p = 0; p < queries.size(); ++p) {
    const auto qid = std::to_string(queries.ids()[p]) + ',';
    if (index.empty()) continue;
    if (o.radius) {
      auto hits = index.search(queries.code_at(p), index.size());
      std::erase_if(hits, [&](const gph::SearchHit &h) { return h.distance > *o.radius; });
      std::sort(hits.begin(), hits.end(), [](const auto &a, const auto &b) { return a.id < b.id; });
      for (const auto &h : hits) {
        out += qid + std::to_string(h.id) + ',' + std::to_string(h.distance) + '\n';
      }
    } else {
      const auto hits = index.search(queries.code_at(p), o.k);
      for (std::size_t r = 0; r < hits.size(); ++r) {
        out += qid + std::to_string(r + 1) + ',' + std::to_string(hits[r].id) + ',' +
               std::to_string(hits[r].distance) + '\n';
      }
    }
  }
  std::cout << out;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string codes;
  std::string labels;
  std::string out;
  int radius = 2;
  int workers = 1;
};

void setup_eval(CLI::App &app, EvalOptions &o) {
  auto *sub = app.add_subcommand("eval", "Leave-one-out retrieval evaluation");
  add_config(sub);
  sub->add_option("--codes", o.codes, "Codes file")->required()->check(CLI::ExistingFile);
  sub->add_option("--labels", o.labels, "Label file")->required()->check(CLI::ExistingFile);
  sub->add_option("--radius", o.radius, "Hamming radius for precision")->check(CLI::NonNegativeNumber);
  sub->add_option("--workers", o.workers, "Worker threads")->envname("GPH_WORKERS")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "Also write <out>.txt and <out>.csv")->check(kWritablePath);
}

void run_eval(const EvalOptions &o) {
  const auto index = gph::load_codes(o.codes);
  const auto labels = gph::load_labels(o.labels);
  const auto report = gph::evaluate(index, labels, o.radius, o.workers);
  const auto kv = gph::to_key_value(report);
  const auto curve = gph::pr_curve_csv(report);
  std::cout << kv << '\n' << curve;
  if (!o.out.empty()) {
    write_text(o.out + ".txt", kv);
    write_text(o.out + ".csv", curve);
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Gaussian process hashing: learn compact binary codes from labeled data"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  GenOptions gen;
  TrainOptions train;
  EncodeOptions encode;
  SearchOptions search;
  EvalOptions eval;
  setup_gen(app, gen);
  setup_train(app, train);
  setup_encode(app, encode);
  setup_search(app, search);
  setup_eval(app, eval);

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const gph::UsageError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(gph::ErrorKind::usage);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(gph::ErrorKind::usage);
  }

  try {
    if (app.got_subcommand("gen-data")) run_gen(gen);
    if (app.got_subcommand("train")) run_train(train);
    if (app.got_subcommand("encode")) run_encode(encode);
    if (app.got_subcommand("search")) run_search(search);
    if (app.got_subcommand("eval")) run_eval(eval);
  } catch (const gph::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(gph::ErrorKind::format);
  }
  return 0;
}
