#pragma once

// Benchmark harness: declarative config -> prepared feature files -> grid of
// (encoder x architecture x seed) runs -> "mean ± std" tables.
//
// Config keys (JSON; relative paths resolve against the config file's dir):
//   dataset       {"dir": path, "name": str}
//               | {"synthetic": {"nodes","classes","p_in","p_out","dim","sep",
//                                "text_words","text_vocab","topic_prob","seed"}}
//   encoders      [{"name": str, "kind": "tfidf"|"file"|"remote", ...}]
//                   tfidf:  "vocab_size" (required), "binary" (bool, word presence)
//                   file:   "path" (EMB1); omitted = the dataset's own features
//                   remote: "endpoint", "model", "batch_size", "cache_dir",
//                           "max_in_flight", "api_key_env"
//   archs         ["gcn", "graph_transformer", "mlp"]
//   split         "high" | "low" | "fixed"
//   split_low     {"per_class": 20, "n_val": 500, "n_test": 1000}
//   model         {"layers": 4, "hidden": 64, "heads": 4, "dropout": 0.5}
//   train         {"epochs": 300, "patience": 10, "lr": 0.01,
//                  "weight_decay": 5e-4, "seeds": [..] | "num_seeds": n}
//   features_dir  where prepared EMB1 files go (default "features")
//   output        {"format": "md"|"tex"|"csv", "path": file}
//   workers       worker threads for the grid (default 1)
//   precision     "double" | "float"
//
// Seeds: run seed s uses split seed derive_seed(s, 1), init seed
// derive_seed(s, 2) and dropout stream derived from s inside train().

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tagforge/checkpoint.hpp"
#include "tagforge/dataset.hpp"
#include "tagforge/emb1.hpp"
#include "tagforge/error.hpp"
#include "tagforge/model.hpp"
#include "tagforge/planetoid.hpp"
#include "tagforge/remote.hpp"
#include "tagforge/text.hpp"
#include "tagforge/train.hpp"

namespace tagforge {

enum class EncoderKind { tfidf, file, remote };
enum class SplitProtocol { low, high, fixed };
enum class OutputFormat { markdown, latex, csv };
enum class Precision { f64, f32 };

struct EncoderSpec {
  std::string name;
  EncoderKind kind = EncoderKind::tfidf;
  std::size_t vocab_size = 0;
  bool binary = false;
  std::filesystem::path path;  // file kind; empty = dataset features
  RemoteSpec remote;
};

struct DatasetRef {
  std::filesystem::path dir;
  std::string name;
  std::optional<SyntheticSpec> synthetic;
  std::uint64_t synthetic_seed = 0;
};

struct BenchConfig {
  DatasetRef dataset;
  std::vector<EncoderSpec> encoders;
  std::vector<Arch> archs;
  SplitProtocol split = SplitProtocol::high;
  std::size_t per_class = 20;
  std::size_t n_val = 500;
  std::size_t n_test = 1000;
  ModelSpec model;
  TrainSpec train;
  std::filesystem::path features_dir = "features";
  OutputFormat format = OutputFormat::markdown;
  std::filesystem::path out;
  std::size_t workers = 1;
  Precision precision = Precision::f64;
};

inline OutputFormat parse_format(std::string_view s) {
  if (s == "md" || s == "markdown") return OutputFormat::markdown;
  if (s == "tex" || s == "latex") return OutputFormat::latex;
  if (s == "csv") return OutputFormat::csv;
  throw ConfigError("unknown output format '" + std::string(s) + "' (expected md, tex, csv)");
}

inline std::string_view to_string(SplitProtocol p) noexcept {
  switch (p) {
    case SplitProtocol::low: return "low";
    case SplitProtocol::high: return "high";
    case SplitProtocol::fixed: return "fixed";
  }
  return "?";
}

namespace detail {

template <typename V>
V get_or(const nlohmann::json& j, const char* key, V fallback) {
  return j.contains(key) ? j.at(key).get<V>() : fallback;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.empty() || p.is_absolute() ? p : base / p;
}

inline std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c)) : '_');
  return out;
}

}  // namespace detail

/// Parses and validates a config document. Throws ConfigError.
inline BenchConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  using detail::get_or;
  BenchConfig c;
  try {
    const auto& d = j.at("dataset");
    if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      SyntheticSpec sp;
      sp.num_nodes = get_or(s, "nodes", sp.num_nodes);
      sp.num_classes = get_or(s, "classes", sp.num_classes);
      sp.p_in = get_or(s, "p_in", sp.p_in);
      sp.p_out = get_or(s, "p_out", sp.p_out);
      sp.dim = get_or(s, "dim", sp.dim);
      sp.sep = get_or(s, "sep", sp.sep);
      sp.text_words = get_or(s, "text_words", sp.text_words);
      sp.text_vocab = get_or(s, "text_vocab", sp.text_vocab);
      sp.topic_prob = get_or(s, "topic_prob", sp.topic_prob);
      c.dataset.synthetic = sp;
      c.dataset.synthetic_seed = get_or<std::uint64_t>(s, "seed", 0);
      c.dataset.name = get_or<std::string>(d, "name", "synthetic");
    } else {
      c.dataset.dir = detail::resolve(base_dir, d.at("dir").get<std::string>());
      c.dataset.name = d.at("name").get<std::string>();
    }

    for (const auto& e : j.at("encoders")) {
      EncoderSpec enc;
      enc.name = e.at("name").get<std::string>();
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "tfidf") {
        enc.kind = EncoderKind::tfidf;
        if (!e.contains("vocab_size")) throw ConfigError("encoder '" + enc.name + "': vocab_size is required");
        enc.vocab_size = e.at("vocab_size").get<std::size_t>();
        enc.binary = get_or(e, "binary", false);
      } else if (kind == "file") {
        enc.kind = EncoderKind::file;
        enc.path = detail::resolve(base_dir, get_or<std::string>(e, "path", ""));
      } else if (kind == "remote") {
        enc.kind = EncoderKind::remote;
        enc.remote.endpoint = e.at("endpoint").get<std::string>();
        enc.remote.model = e.at("model").get<std::string>();
        enc.remote.batch_size = get_or<std::size_t>(e, "batch_size", 32);
        enc.remote.max_in_flight = get_or<std::size_t>(e, "max_in_flight", 1);
        enc.remote.cache_dir = detail::resolve(base_dir, get_or<std::string>(e, "cache_dir", ""));
        if (e.contains("api_key_env"))
          if (const char* key = std::getenv(e.at("api_key_env").get<std::string>().c_str())) enc.remote.api_key = key;
      } else {
        throw ConfigError("encoder '" + enc.name + "': unknown kind '" + kind + "'");
      }
      c.encoders.push_back(std::move(enc));
    }
    for (const auto& a : j.at("archs")) c.archs.push_back(parse_arch(a.get<std::string>()));

    const auto split = get_or<std::string>(j, "split", "high");
    if (split == "high") c.split = SplitProtocol::high;
    else if (split == "low") c.split = SplitProtocol::low;
    else if (split == "fixed") c.split = SplitProtocol::fixed;
    else throw ConfigError("unknown split protocol '" + split + "'");
    if (j.contains("split_low")) {
      const auto& s = j.at("split_low");
      c.per_class = get_or(s, "per_class", c.per_class);
      c.n_val = get_or(s, "n_val", c.n_val);
      c.n_test = get_or(s, "n_test", c.n_test);
    }

    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.layers = get_or(m, "layers", c.model.layers);
      c.model.hidden = get_or(m, "hidden", c.model.hidden);
      c.model.heads = get_or(m, "heads", c.model.heads);
      c.model.dropout = get_or(m, "dropout", c.model.dropout);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.epochs = get_or(t, "epochs", c.train.epochs);
      c.train.patience = get_or(t, "patience", c.train.patience);
      c.train.lr = get_or(t, "lr", c.train.lr);
      c.train.weight_decay = get_or(t, "weight_decay", c.train.weight_decay);
      if (t.contains("seeds")) {
        c.train.seeds = t.at("seeds").get<std::vector<std::uint64_t>>();
      } else if (t.contains("num_seeds")) {
        c.train.seeds.clear();
        for (std::uint64_t s = 0; s < t.at("num_seeds").get<std::uint64_t>(); ++s) c.train.seeds.push_back(s);
      }
    }
    c.features_dir = detail::resolve(base_dir, get_or<std::string>(j, "features_dir", "features"));
    if (j.contains("output")) {
      const auto& o = j.at("output");
      c.format = parse_format(get_or<std::string>(o, "format", "md"));
      c.out = detail::resolve(base_dir, get_or<std::string>(o, "path", ""));
    }
    c.workers = get_or<std::size_t>(j, "workers", 1);
    const auto precision = get_or<std::string>(j, "precision", "double");
    if (precision == "double") c.precision = Precision::f64;
    else if (precision == "float") c.precision = Precision::f32;
    else throw ConfigError("precision must be 'double' or 'float'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (c.encoders.empty()) throw ConfigError("config: at least one encoder required");
  if (c.archs.empty()) throw ConfigError("config: at least one architecture required");
  if (c.workers == 0) c.workers = 1;
  validate(c.train);
  for (std::size_t a = 0; a < c.encoders.size(); ++a)
    for (std::size_t b = a + 1; b < c.encoders.size(); ++b)
      if (c.encoders[a].name == c.encoders[b].name) throw ConfigError("duplicate encoder name " + c.encoders[a].name);
  return c;
}

inline BenchConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// Checks that every referenced input exists.
inline void check_inputs(const BenchConfig& c) {
  if (!c.dataset.synthetic && !std::filesystem::exists(c.dataset.dir / (c.dataset.name + ".labels")))
    throw ConfigError("dataset not found: " + (c.dataset.dir / (c.dataset.name + ".labels")).string());
  for (const auto& e : c.encoders)
    if (e.kind == EncoderKind::file && !e.path.empty() && !std::filesystem::exists(e.path))
      throw ConfigError("encoder '" + e.name + "': file not found: " + e.path.string());
}

inline Dataset load_dataset(const BenchConfig& c) {
  if (c.dataset.synthetic) {
    Dataset ds = generate_synthetic(*c.dataset.synthetic, c.dataset.synthetic_seed);
    ds.name = c.dataset.name;
    return ds;
  }
  return load_planetoid(c.dataset.dir, c.dataset.name);
}

inline std::filesystem::path feature_path(const BenchConfig& c, const EncoderSpec& e) {
  if (e.kind == EncoderKind::file && !e.path.empty()) return e.path;
  return c.features_dir / (c.dataset.name + "." + detail::slug(e.name) + ".emb");
}

/// Cache directory for a remote encoder: its own setting, else $TAGFORGE_CACHE.
inline std::filesystem::path remote_cache_dir(const EncoderSpec& e) {
  if (!e.remote.cache_dir.empty()) return e.remote.cache_dir;
  if (const char* env = std::getenv("TAGFORGE_CACHE"); env && *env) return env;
  throw ConfigError("encoder '" + e.name + "': remote encoders need cache_dir or TAGFORGE_CACHE");
}

/// Computes the feature matrix of one encoder from scratch.
inline Tensor encode(const EncoderSpec& e, const Dataset& ds) {
  switch (e.kind) {
    case EncoderKind::tfidf:
      if (ds.texts.empty()) throw DataError("encoder '" + e.name + "': dataset " + ds.name + " has no raw texts");
      return e.binary ? word_binary(ds.texts, e.vocab_size) : tfidf(ds.texts, e.vocab_size).features;
    case EncoderKind::file:
      if (e.path.empty()) {
        if (ds.features.empty()) throw DataError("dataset " + ds.name + " ships no features");
        return ds.features;
      }
      return load_embedding_file(e.path).cast<double>();
    case EncoderKind::remote: {
      if (ds.texts.empty()) throw DataError("encoder '" + e.name + "': dataset " + ds.name + " has no raw texts");
      RemoteSpec spec = e.remote;
      spec.cache_dir = remote_cache_dir(e);
      return remote_embed(spec, ds.texts).cast<double>();
    }
  }
  return {};
}

struct PrepareAction {
  std::string encoder;
  std::filesystem::path path;
  enum class Kind { written, skipped, validated } kind;
};

/// Writes one EMB1 file per encoder. Existing files are kept unless `force`;
/// user-supplied files are only validated.
inline std::vector<PrepareAction> prepare(const BenchConfig& c, bool force) {
  check_inputs(c);
  const Dataset ds = load_dataset(c);
  std::filesystem::create_directories(c.features_dir);
  std::vector<PrepareAction> actions;
  for (const auto& e : c.encoders) {
    const auto path = feature_path(c, e);
    if (e.kind == EncoderKind::file && !e.path.empty()) {
      const auto m = load_embedding_file(path);
      if (m.rows() != ds.num_nodes())
        throw DataError(path.string() + ": " + std::to_string(m.rows()) + " rows, dataset has " +
                        std::to_string(ds.num_nodes()) + " nodes");
      actions.push_back({e.name, path, PrepareAction::Kind::validated});
      continue;
    }
    if (!force && std::filesystem::exists(path)) {
      actions.push_back({e.name, path, PrepareAction::Kind::skipped});
      continue;
    }
    save_embedding_file(path, encode(e, ds));
    actions.push_back({e.name, path, PrepareAction::Kind::written});
  }
  return actions;
}

/// Loads the prepared features of `e` and checks them against the dataset.
inline Tensor load_features(const BenchConfig& c, const EncoderSpec& e, const Dataset& ds) {
  const auto path = feature_path(c, e);
  if (!std::filesystem::exists(path))
    throw ConfigError("features for encoder '" + e.name + "' not prepared: " + path.string() + " (run prepare)");
  Tensor f = load_embedding_file(path).cast<double>();
  if (f.rows() != ds.num_nodes())
    throw DataError("dimension mismatch: " + path.string() + " has " + std::to_string(f.rows()) +
                    " rows, dataset " + ds.name + " has " + std::to_string(ds.num_nodes()) + " nodes");
  return f;
}

inline SplitMask make_split(const BenchConfig& c, const Dataset& ds, std::uint64_t seed) {
  switch (c.split) {
    case SplitProtocol::low: return split_low(ds.labels, c.per_class, c.n_val, c.n_test, derive_seed(seed, 1));
    case SplitProtocol::high: return split_high(ds.num_nodes(), {}, derive_seed(seed, 1));
    case SplitProtocol::fixed:
      if (!ds.split) throw ConfigError("split 'fixed' but dataset " + ds.name + " has no split file");
      return *ds.split;
  }
  return {};
}

/// One training run of `arch` on `ds` (whose features are already set).
/// The best-validation model is written to `checkpoint` when given.
inline RunResult run_single(const BenchConfig& c, const Dataset& ds, Arch arch, std::uint64_t seed,
                            const std::filesystem::path& checkpoint = {}) {
  ModelSpec spec = c.model;
  spec.arch = arch;
  spec.in_dim = ds.features.cols();
  spec.num_classes = ds.num_classes();
  const SplitMask split = make_split(c, ds, seed);
  const auto run = [&]<std::floating_point T>(Model<T> model) {
    RunResult r = train(model, ds, split, c.train, seed);
    if (!checkpoint.empty()) save_checkpoint(checkpoint, model);
    return r;
  };
  if (c.precision == Precision::f32) return run(init_parameters<float>(spec, derive_seed(seed, 2)));
  return run(init_parameters<double>(spec, derive_seed(seed, 2)));
}

struct BenchCell {
  std::string encoder;
  Arch arch = Arch::gcn;
  std::vector<std::uint64_t> seeds;
  std::vector<RunResult> runs;
  std::optional<Summary> summary;  // empty when the cell failed
  std::string error;

  bool ok() const noexcept { return summary.has_value(); }
};

struct BenchResult {
  std::string dataset;
  SplitProtocol split = SplitProtocol::high;
  std::vector<std::string> encoders;
  std::vector<Arch> archs;
  std::vector<BenchCell> cells;  // encoder-major, config order

  const BenchCell& cell(std::size_t e, std::size_t a) const { return cells[e * archs.size() + a]; }
  bool all_ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const BenchCell& c) { return c.ok(); });
  }
};

/// Runs every (encoder, arch, seed) triple on a pool of `c.workers`
/// threads. A failing run marks its cell failed; the grid always completes.
inline BenchResult run_bench(const BenchConfig& c) {
  check_inputs(c);
  const Dataset base = load_dataset(c);

  BenchResult result;
  result.dataset = c.dataset.name;
  result.split = c.split;
  result.archs = c.archs;
  std::vector<std::optional<Dataset>> per_encoder(c.encoders.size());
  std::vector<std::string> encoder_error(c.encoders.size());
  for (std::size_t e = 0; e < c.encoders.size(); ++e) {
    result.encoders.push_back(c.encoders[e].name);
    try {
      Dataset ds = base;
      ds.features = load_features(c, c.encoders[e], ds);
      per_encoder[e] = std::move(ds);
    } catch (const Error& ex) {
      encoder_error[e] = ex.what();
    }
    for (Arch a : c.archs) result.cells.push_back({c.encoders[e].name, a, c.train.seeds, {}, {}, {}});
  }

  struct Task {
    std::size_t cell, run;
  };
  std::vector<Task> tasks;
  for (std::size_t k = 0; k < result.cells.size(); ++k) {
    result.cells[k].runs.resize(c.train.seeds.size());
    if (!encoder_error[k / c.archs.size()].empty()) {
      result.cells[k].error = encoder_error[k / c.archs.size()];
      continue;
    }
    for (std::size_t s = 0; s < c.train.seeds.size(); ++s) tasks.push_back({k, s});
  }

  std::vector<std::string> run_errors(result.cells.size());
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
      auto& cell = result.cells[tasks[t].cell];
      try {
        const auto& ds = *per_encoder[tasks[t].cell / c.archs.size()];
        cell.runs[tasks[t].run] = run_single(c, ds, cell.arch, cell.seeds[tasks[t].run]);
      } catch (const std::exception& ex) {
        std::lock_guard lock(error_mutex);
        if (run_errors[tasks[t].cell].empty()) run_errors[tasks[t].cell] = ex.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < std::min(c.workers, tasks.size()); ++w) pool.emplace_back(worker);
    worker();
  }

  for (std::size_t k = 0; k < result.cells.size(); ++k) {
    auto& cell = result.cells[k];
    if (!cell.error.empty()) continue;
    if (!run_errors[k].empty()) {
      cell.error = run_errors[k];
      continue;
    }
    try {
      cell.summary = aggregate(cell.runs);
    } catch (const Error& ex) {
      cell.error = ex.what();
    }
  }
  return result;
}

// ---- output ---------------------------------------------------------------

inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

inline std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {
/// Columns holding the row's highest mean (all of them on ties).
inline std::vector<bool> row_best(const BenchResult& r, std::size_t e) {
  std::optional<double> best;
  for (std::size_t a = 0; a < r.archs.size(); ++a)
    if (const auto& c = r.cell(e, a); c.ok() && (!best || c.summary->mean > *best)) best = c.summary->mean;
  std::vector<bool> out(r.archs.size(), false);
  for (std::size_t a = 0; a < r.archs.size(); ++a)
    out[a] = best && r.cell(e, a).ok() && r.cell(e, a).summary->mean == *best;
  return out;
}
}  // namespace detail

/// Markdown table, cells "mean ± std" in percent; each row's best in bold.
inline std::string format_markdown(const BenchResult& r) {
  std::ostringstream os;
  os << "**" << r.dataset << " (" << to_string(r.split) << " label ratio)**, test accuracy (%)\n\n";
  os << "| Encoder |";
  for (Arch a : r.archs) os << ' ' << display_name(a) << " |";
  os << "\n|---|";
  for (std::size_t a = 0; a < r.archs.size(); ++a) os << "---:|";
  os << '\n';
  for (std::size_t e = 0; e < r.encoders.size(); ++e) {
    const auto best = detail::row_best(r, e);
    os << "| " << r.encoders[e] << " |";
    for (std::size_t a = 0; a < r.archs.size(); ++a) {
      const auto& c = r.cell(e, a);
      if (!c.ok()) {
        os << " failed |";
        continue;
      }
      const std::string body = percent(c.summary->mean) + " ± " + percent(c.summary->std);
      os << ' ' << (best[a] ? "**" + body + "**" : body) << " |";
    }
    os << '\n';
  }
  return os.str();
}

inline std::string format_latex(const BenchResult& r) {
  std::ostringstream os;
  os << "\\begin{tabular}{l|";
  for (std::size_t a = 0; a < r.archs.size(); ++a) os << 'r';
  os << "}\n\\hline\n\\textbf{Encoder}";
  for (Arch a : r.archs) os << " & \\textbf{" << display_name(a) << "}";
  os << " \\\\\n\\hline\n";
  for (std::size_t e = 0; e < r.encoders.size(); ++e) {
    const auto best = detail::row_best(r, e);
    os << r.encoders[e];
    for (std::size_t a = 0; a < r.archs.size(); ++a) {
      const auto& c = r.cell(e, a);
      if (!c.ok()) {
        os << " & failed";
        continue;
      }
      const std::string m = percent(c.summary->mean);
      os << " & " << (best[a] ? "\\textbf{" + m + "}" : m) << " $\\pm$ " << percent(c.summary->std);
    }
    os << " \\\\\n";
  }
  os << "\\hline\n\\end{tabular}\n";
  return os.str();
}

namespace detail {
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

template <typename T, typename F>
std::string joined(const std::vector<T>& v, F&& f) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ";" : "") + f(v[k]);
  return out;
}
}  // namespace detail

inline constexpr std::string_view kCsvHeader =
    "encoder,arch,status,mean_pct,std_pct,mean,std,seeds,test_acc,epochs_ran,error";

/// Machine-readable result: one line per cell, in table order.
inline std::string format_csv(const BenchResult& r) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& c : r.cells) {
    os << detail::csv_field(c.encoder) << ',' << to_string(c.arch) << ',' << (c.ok() ? "ok" : "failed") << ',';
    if (c.ok()) {
      os << percent(c.summary->mean) << ',' << percent(c.summary->std) << ',' << full_precision(c.summary->mean) << ','
         << full_precision(c.summary->std) << ',';
      os << detail::joined(c.seeds, [](std::uint64_t s) { return std::to_string(s); }) << ','
         << detail::joined(c.runs, [](const RunResult& x) { return full_precision(x.test_acc_at_best_val); }) << ','
         << detail::joined(c.runs, [](const RunResult& x) { return std::to_string(x.epochs_ran); }) << ',';
    } else {
      os << ",,,,,,,";
    }
    os << detail::csv_field(c.error) << '\n';
  }
  return os.str();
}

inline std::string format_result(const BenchResult& r, OutputFormat f) {
  switch (f) {
    case OutputFormat::markdown: return format_markdown(r);
    case OutputFormat::latex: return format_latex(r);
    case OutputFormat::csv: return format_csv(r);
  }
  return {};
}

/// Splits CSV text into records (RFC 4180 quoting).
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
      continue;
    }
    any = true;
    if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tagforge
