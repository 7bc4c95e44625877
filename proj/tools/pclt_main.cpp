#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pclt/config.hpp"
#include "pclt/error.hpp"
#include "pclt/harness.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> jobs;
  std::string preset;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config file (key = value, [tables])");
  cmd->add_option("--seed", f.seed, "Base run seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--jobs", f.jobs, "Worker threads for independent cells")->check(CLI::PositiveNumber);
  cmd->add_option("--preset", f.preset, "Paper optimizer preset")
      ->check(CLI::IsMember(pclt::preset_names()));
}

pclt::ExperimentConfig resolve(const CommonFlags& f) {
  pclt::ExperimentConfig c = f.config.empty() ? pclt::ExperimentConfig{} : pclt::load_config(f.config);
  if (!f.preset.empty()) pclt::apply_preset(c, f.preset);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.jobs) c.jobs = *f.jobs;
  c.prune.cycle = c.cycle;
  c.validate();
  return c;
}

void log_line(const std::string& line) { std::cerr << line << std::endl; }

double mean_baseline(const std::vector<pclt::BaselineRow>& rows) {
  double s = 0.0;
  for (const auto& r : rows) s += r.accuracy_pct;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud lottery tickets: training, pruning sweeps, transfer and sparse inference"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PCLT_VERSION);

  CommonFlags train_f, sweep_f, ablate_f, transfer_f, bench_f;
  std::string report_out = "runs";
  std::string target_config;
  bool dump = false;

  auto* train = app.add_subcommand("train", "Train dense baselines and write checkpoints");
  add_common(train, train_f);
  train->add_flag("--print-config", dump, "Print the resolved config and exit");
  auto* sweep = app.add_subcommand("sweep", "IMP-Global, IMP-Local and OneShot-Global across sweep points");
  add_common(sweep, sweep_f);
  auto* ablate = app.add_subcommand("ablate", "Conv-only / FC-only / both pruning at one rate");
  add_common(ablate, ablate_f);
  auto* transfer = app.add_subcommand("transfer", "Transfer source tickets to a target dataset");
  add_common(transfer, transfer_f);
  transfer->add_option("--target", target_config, "Target task config")->required();
  auto* bench = app.add_subcommand("bench", "Dense vs sparse inference timings over sweep checkpoints");
  add_common(bench, bench_f);
  auto* report = app.add_subcommand("report", "Summarize an existing sweep");
  report->add_option("--out", report_out, "Output directory of the sweep");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto c = resolve(train_f);
      if (dump) {
        std::cout << pclt::dump_config(c);
        return 0;
      }
      const auto rows = pclt::cmd_train(c, log_line);
      std::cout << "baseline accuracy " << pclt::format_number(mean_baseline(rows)) << "% over " << rows.size()
                << " seed(s); checkpoints under " << c.output_dir.string() << "/train\n";
    } else if (sweep->parsed()) {
      const auto c = resolve(sweep_f);
      const auto rep = pclt::cmd_sweep(c, log_line);
      pclt::write_summary_csv(std::cout, rep.summary);
    } else if (ablate->parsed()) {
      const auto c = resolve(ablate_f);
      pclt::write_ablation_csv(std::cout, pclt::cmd_ablate(c, log_line));
    } else if (transfer->parsed()) {
      const auto src = resolve(transfer_f);
      CommonFlags tf = transfer_f;
      tf.config = target_config;
      const auto tgt = resolve(tf);
      pclt::write_transfer_csv(std::cout, pclt::cmd_transfer(src, tgt, log_line));
    } else if (bench->parsed()) {
      const auto c = resolve(bench_f);
      pclt::write_bench_csv(std::cout, pclt::cmd_bench(c, log_line));
    } else if (report->parsed()) {
      pclt::cmd_report(report_out, [](const std::string& line) { std::cout << line << '\n'; });
    }
  } catch (const pclt::Error& e) {
    std::cerr << "pclt: " << e.what() << '\n';
    return e.kind() == pclt::ErrorKind::Config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "pclt: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
