#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pclt/config.hpp"
#include "pclt/sparse.hpp"

namespace pclt {

using LogSink = std::function<void(const std::string&)>;

/// Bumped whenever a CSV header below changes.
inline constexpr int kReportSchemaVersion = 1;

struct BaselineRow {
  std::uint64_t seed = 0;
  double accuracy_pct = 0.0;
  std::size_t params = 0;
  double train_loss = 0.0;
  double wall_seconds = 0.0;
  std::string checkpoint;
  std::uint64_t checkpoint_checksum = 0;
};

inline constexpr std::string_view kBaselineHeader =
    "method,sparsity_pct,accuracy_pct,params,train_loss,wall_seconds,seed,checkpoint,checkpoint_checksum";

/// Trains one dense model per run seed and exports each as a ticket with an
/// all-ones mask. Writes train/baseline.csv.
std::vector<BaselineRow> cmd_train(const ExperimentConfig& config, const LogSink& log = {});

struct SweepRow {
  std::string method;  ///< IMP-Global, IMP-Local or OneShot-Global
  double target_pct = 0.0;
  double sparsity_pct = 0.0;
  double accuracy_pct = 0.0;
  std::size_t params_surviving = 0;
  std::size_t rounds = 0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::string checkpoint;
  std::uint64_t checkpoint_checksum = 0;
};

struct SummaryRow {
  std::string method;
  double target_pct = 0.0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double mean_sparsity_pct = 0.0;
  double mean_accuracy_pct = 0.0;
  double min_accuracy_pct = 0.0;
  double max_accuracy_pct = 0.0;
};

struct ExperimentReport {
  std::vector<BaselineRow> baseline;
  std::vector<SweepRow> rows;
  std::vector<SummaryRow> summary;
};

inline constexpr std::string_view kSweepHeader =
    "method,target_pct,sparsity_pct,accuracy_pct,params_surviving,rounds,wall_seconds,seed,status,error,checkpoint,"
    "checkpoint_checksum";
inline constexpr std::string_view kSummaryHeader =
    "method,target_pct,runs,failed,mean_sparsity_pct,mean_accuracy_pct,min_accuracy_pct,max_accuracy_pct";
inline constexpr std::string_view kLongHeader = "method,seed,target_pct,metric,value";

/// IMP-Global, IMP-Local and OneShot-Global at every sweep point for every
/// run seed. IMP reuses one trajectory per seed and reads off round
/// rounds_for_target(rate, point). Failed cells become rows with ok = false.
/// Writes sweep/sweep.csv, sweep/summary.csv, sweep/sweep_long.csv and one
/// ticket per cell.
ExperimentReport cmd_sweep(const ExperimentConfig& config, const LogSink& log = {});

std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows);

struct AblationRow {
  std::string pruned;  ///< none, conv, fc, both
  double prune_pct = 0.0;
  double group_fraction = 0.0;
  double global_sparsity_pct = 0.0;
  std::size_t params_surviving = 0;
  double accuracy_pct = 0.0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
};

inline constexpr std::string_view kAblationHeader =
    "pruned,prune_pct,group_fraction,global_sparsity_pct,params_surviving,accuracy_pct,seed,status,error";

/// One-shot global magnitude pruning at ablate.rate restricted to each group.
/// Four rows per run seed. Writes ablate/ablation.csv.
std::vector<AblationRow> cmd_ablate(const ExperimentConfig& config, const LogSink& log = {});

struct TransferRow {
  std::string model;
  std::string dataset;
  std::uint64_t seed = 0;
  double pr = 0.0;
  /// Surviving prunable weights of the OneShot ticket, which sits exactly at pr.
  std::size_t param = 0;
  double base = 0.0;
  double imp = 0.0;
  double oneshot = 0.0;
  double imp_sparsity_pct = 0.0;
  std::size_t imp_param = 0;
  bool ok = true;
  std::string error;
};

inline constexpr std::string_view kTransferHeader =
    "model,dataset,seed,PR,Param,Base,IMP,OneShot,imp_sparsity_pct,imp_param,status,error";

/// Tickets from the source task at each transfer level, fine-tuned on the
/// target dataset, against a dense scratch baseline on the target. Throws
/// SpecMismatch when the target backbone differs from the source. Writes
/// transfer/transfer.csv under the target's output directory.
std::vector<TransferRow> cmd_transfer(const ExperimentConfig& source, const ExperimentConfig& target,
                                      const LogSink& log = {});

/// Benchmarks the OneShot-Global sweep tickets and the dense checkpoint of the
/// first run seed. Throws Path when a checkpoint is missing. Writes bench/bench.csv.
std::vector<BenchRow> cmd_bench(const ExperimentConfig& config, const LogSink& log = {});

/// Rebuilds summary.csv and sweep_long.csv from an existing sweep.csv and
/// returns the parsed report.
ExperimentReport cmd_report(const std::filesystem::path& output_dir, const LogSink& log = {});

void write_baseline_csv(std::ostream& out, const std::vector<BaselineRow>& rows);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_long_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);
void write_transfer_csv(std::ostream& out, const std::vector<TransferRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& in);

/// Checkpoint path of one sweep cell relative to the output directory.
std::filesystem::path sweep_checkpoint(std::uint64_t seed, std::string_view method, double target_pct);
std::filesystem::path dense_checkpoint(std::uint64_t seed);

/// FNV-1a 64 of a file's bytes.
std::uint64_t file_checksum(const std::filesystem::path& path);

/// Adds the files to output_dir/manifest.json with size and checksum, along
/// with the command, canonical config and library version.
void update_manifest(const ExperimentConfig& config, std::string_view command,
                     const std::vector<std::filesystem::path>& files);

/// Runs tasks on `jobs` worker threads; each task writes only its own slot.
void run_pool(std::size_t jobs, const std::vector<std::function<void()>>& tasks);

/// Decimal text of a percentage for file names and CSV cells.
std::string format_number(double v);

}  // namespace pclt
