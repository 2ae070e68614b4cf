// tagforge command-line driver.
//
//   tagforge prepare   --config C [--force]
//   tagforge train     --config C --encoder NAME --arch A [--seed S] [--out LOG] [--checkpoint F]
//   tagforge bench     --config C [--seeds N] [--format md|tex|csv] [--out F] [--csv F]
//   tagforge gradcheck
//
// Exit codes: 0 success, 1 run failure, 2 configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tagforge/tagforge.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfig = 2;

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw tagforge::ConfigError("cannot write " + path.string());
  out << text;
}

const tagforge::EncoderSpec& find_encoder(const tagforge::BenchConfig& c, const std::string& name) {
  for (const auto& e : c.encoders)
    if (e.name == name) return e;
  throw tagforge::ConfigError("no encoder named '" + name + "' in config");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Node classification on text-attributed graphs"};
  app.require_subcommand(1);

  std::string config_path;
  bool force = false;
  std::uint64_t seed = 0;
  std::size_t num_seeds = 0;
  std::string format;
  std::string out_path;
  std::string csv_path;
  std::string encoder_name;
  std::string arch_name = "gcn";
  std::string checkpoint_path;

  auto* prepare = app.add_subcommand("prepare", "Write one EMB1 feature file per encoder");
  prepare->add_option("--config", config_path, "Benchmark config (JSON)")->required();
  prepare->add_flag("--force", force, "Recompute existing feature files");

  auto* train = app.add_subcommand("train", "Train one model and print its accuracy");
  train->add_option("--config", config_path, "Benchmark config (JSON)")->required();
  train->add_option("--encoder", encoder_name, "Encoder name from the config")->required();
  train->add_option("--arch", arch_name, "gcn | graph_transformer | mlp");
  train->add_option("--seed", seed, "Run seed");
  train->add_option("--out", out_path, "Per-epoch log (JSON lines)");
  train->add_option("--checkpoint", checkpoint_path, "Save the best model (TAGM)");

  auto* bench = app.add_subcommand("bench", "Run the encoder x architecture grid");
  bench->add_option("--config", config_path, "Benchmark config (JSON)")->required();
  bench->add_option("--seeds", num_seeds, "Use seeds 0..N-1 instead of the configured list");
  bench->add_option("--format", format, "md | tex | csv");
  bench->add_option("--out", out_path, "Table output file (default stdout)");
  bench->add_option("--csv", csv_path, "CSV output file (default: --out with .csv, else bench.csv)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gradcheck) {
      const auto report = tagforge::gradcheck::run(tagforge::gradcheck::default_checks());
      tagforge::gradcheck::print(std::cout, report);
      return report.all_passed() ? kExitOk : kExitRunFailure;
    }

    tagforge::BenchConfig config = tagforge::load_config(config_path);

    if (*prepare) {
      for (const auto& a : tagforge::prepare(config, force)) {
        const char* what = a.kind == tagforge::PrepareAction::Kind::written   ? "wrote"
                           : a.kind == tagforge::PrepareAction::Kind::skipped ? "exists"
                                                                              : "checked";
        std::cout << what << ' ' << a.encoder << ' ' << a.path.string() << '\n';
      }
      return kExitOk;
    }

    if (*train) {
      const auto& enc = find_encoder(config, encoder_name);
      const tagforge::Arch arch = tagforge::parse_arch(arch_name);
      tagforge::check_inputs(config);
      tagforge::Dataset ds = tagforge::load_dataset(config);
      ds.features = tagforge::load_features(config, enc, ds);
      const auto r = tagforge::run_single(config, ds, arch, seed, checkpoint_path);
      std::cout << "encoder=" << enc.name << " arch=" << tagforge::to_string(arch) << " seed=" << seed
                << " val_acc=" << tagforge::percent(r.best_val_acc) << " test_acc=" << tagforge::percent(r.test_acc_at_best_val)
                << " epochs_ran=" << r.epochs_ran << " best_epoch=" << r.best_epoch << '\n';
      if (!out_path.empty()) {
        std::ostringstream log;
        tagforge::write_run_log(log, r);
        write_text(out_path, log.str());
      }
      return kExitOk;
    }

    if (*bench) {
      if (num_seeds > 0) {
        config.train.seeds.clear();
        for (std::uint64_t s = 0; s < num_seeds; ++s) config.train.seeds.push_back(s);
      }
      if (!format.empty()) config.format = tagforge::parse_format(format);
      if (!out_path.empty()) config.out = out_path;
      const auto result = tagforge::run_bench(config);
      const std::string table = tagforge::format_result(result, config.format);
      if (config.out.empty()) std::cout << table;
      else write_text(config.out, table);

      std::filesystem::path csv = csv_path;
      if (csv.empty()) {
        if (config.format == tagforge::OutputFormat::csv && !config.out.empty()) csv = config.out;
        else if (!config.out.empty()) csv = std::filesystem::path(config.out).replace_extension(".csv");
        else csv = "bench.csv";
      }
      if (csv != config.out) write_text(csv, tagforge::format_csv(result));

      for (const auto& c : result.cells)
        if (!c.ok()) std::cerr << "cell " << c.encoder << " / " << tagforge::to_string(c.arch) << " failed: " << c.error << '\n';
      return result.all_ok() ? kExitOk : kExitRunFailure;
    }
  } catch (const tagforge::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
  return kExitOk;
}
