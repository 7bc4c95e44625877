#include "pclt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "pclt/error.hpp"
#include "pclt/rng.hpp"

namespace pclt {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Serializes a caller's sink so worker threads can log.
class Logger {
 public:
  explicit Logger(const LogSink& sink) : sink_(sink) {}
  void operator()(const std::string& line) const {
    if (!sink_) return;
    std::lock_guard lock(mu_);
    sink_(line);
  }

 private:
  const LogSink& sink_;
  mutable std::mutex mu_;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) { return s.empty() ? 0 : std::stoull(s, nullptr, 16); }

// CSV cells never carry commas or line breaks.
std::string clean(std::string s) {
  for (auto& ch : s) {
    if (ch == ',') ch = ';';
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

std::string dataset_label(const data::DatasetSpec& spec) {
  std::string s;
  for (auto k : spec.classes) {
    if (!s.empty()) s += '+';
    s += data::to_string(k);
  }
  return s;
}

struct TicketFile {
  std::string relative;
  std::uint64_t checksum = 0;
};

TicketFile save_ticket(const Ticket& t, const fs::path& root, const fs::path& relative) {
  const fs::path full = root / relative;
  fs::create_directories(full.parent_path());
  export_ticket(t, full);
  return {relative.generic_string(), file_checksum(full)};
}

// Trained dense sessions, one per run seed.
std::vector<PruningSession> train_dense(const ExperimentConfig& config, const data::Dataset& dataset,
                                        std::vector<BaselineRow>& rows, const Logger& log) {
  const auto seeds = config.run_seeds();
  std::vector<std::optional<PruningSession>> slots(seeds.size());
  rows.assign(seeds.size(), {});
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    tasks.push_back([&, i] {
      const auto t0 = Clock::now();
      PruningSession s(config.model_for(seeds[i]), dataset, config.cycle, seeds[i]);
      const auto stats = s.train();
      BaselineRow& row = rows[i];
      row.seed = seeds[i];
      row.accuracy_pct = s.test_accuracy();
      row.params = s.mask().total();
      row.train_loss = stats.final_epoch_loss;
      row.wall_seconds = since(t0);
      const auto file = save_ticket(s.ticket("dense"), config.output_dir, dense_checkpoint(seeds[i]));
      row.checkpoint = file.relative;
      row.checkpoint_checksum = file.checksum;
      log("dense seed " + std::to_string(seeds[i]) + ": " + format_number(row.accuracy_pct) + "% in " +
          format_number(std::round(row.wall_seconds * 10) / 10) + " s");
      slots[i].emplace(std::move(s));
    });
  }
  run_pool(config.jobs, tasks);
  std::vector<PruningSession> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  auto out = open_out(path);
  body(out);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct ImpTargets {
  std::vector<double> points;
  std::vector<std::size_t> rounds;
  std::size_t max_rounds = 0;
};

ImpTargets imp_targets(const std::vector<double>& points, double rate) {
  ImpTargets t;
  t.points = points;
  for (double p : points) {
    t.rounds.push_back(rounds_for_target(rate, p / 100.0));
    t.max_rounds = std::max(t.max_rounds, t.rounds.back());
  }
  return t;
}

// Walks one IMP trajectory from a copy of the dense session and calls
// `at_target` whenever the round reaches a target's J.
void walk_imp(const PruningSession& dense, const ExperimentConfig& config, Scope scope, const ImpTargets& targets,
              const std::function<void(std::size_t target, const PruningSession&, const RoundRecord&)>& at_target) {
  PruningSession session = dense;
  PruneConfig pc = config.prune;
  pc.scope = scope;
  pc.filter = GroupFilter::All;
  pc.rounds = targets.max_rounds;
  pc.cycle = config.cycle;
  RunResult result;
  imp_continue(session, pc, result, [&](const PruningSession& s, const RoundRecord& r) {
    for (std::size_t i = 0; i < targets.points.size(); ++i) {
      if (targets.rounds[i] == r.round) at_target(i, s, r);
    }
  });
}

std::string method_slug(std::string_view method) {
  std::string s(method);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Path, "cannot read " + path.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.digest();
}

void run_pool(std::size_t jobs, const std::vector<std::function<void()>>& tasks) {
  const std::size_t width = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  if (width == 1) {
    for (const auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks.size());
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < width; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++) {
        try {
          tasks[i]();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

fs::path dense_checkpoint(std::uint64_t seed) {
  return fs::path("train") / ("seed-" + std::to_string(seed)) / "dense.pclt";
}

fs::path sweep_checkpoint(std::uint64_t seed, std::string_view method, double target_pct) {
  return fs::path("sweep") / ("seed-" + std::to_string(seed)) /
         (method_slug(method) + "-" + format_number(target_pct) + ".pclt");
}

void update_manifest(const ExperimentConfig& config, std::string_view command, const std::vector<fs::path>& files) {
  using nlohmann::json;
  const fs::path path = config.output_dir / "manifest.json";
  json doc = json::object();
  if (std::ifstream in(path); in) {
    try {
      doc = json::parse(in);
    } catch (const json::exception&) {
      doc = json::object();
    }
  }
  doc["library_version"] = PCLT_VERSION;
  doc["schema_version"] = kReportSchemaVersion;
  json& run = doc["runs"][std::string(command)];
  run["config"] = dump_config(config);
  run["seeds"] = config.run_seeds();
  for (const auto& f : files) {
    const fs::path full = config.output_dir / f;
    doc["files"][f.generic_string()] = {
        {"bytes", fs::file_size(full)}, {"fnv1a64", hex64(file_checksum(full))}, {"command", std::string(command)}};
  }
  fs::create_directories(config.output_dir);
  const fs::path tmp = path.string() + ".tmp";
  write_file(tmp, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
  fs::rename(tmp, path);
}

void write_baseline_csv(std::ostream& out, const std::vector<BaselineRow>& rows) {
  out << kBaselineHeader << '\n';
  for (const auto& r : rows) {
    out << "Dense,0," << format_number(r.accuracy_pct) << ',' << r.params << ',' << format_number(r.train_loss) << ','
        << format_number(r.wall_seconds) << ',' << r.seed << ',' << r.checkpoint << ',' << hex64(r.checkpoint_checksum)
        << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << format_number(r.target_pct) << ',' << format_number(r.sparsity_pct) << ','
        << format_number(r.accuracy_pct) << ',' << r.params_surviving << ',' << r.rounds << ','
        << format_number(r.wall_seconds) << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << clean(r.error)
        << ',' << r.checkpoint << ',' << (r.ok ? hex64(r.checkpoint_checksum) : "") << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader) {
    throw Error(ErrorKind::Parse, "sweep CSV header mismatch");
  }
  std::vector<SweepRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 12) throw Error(ErrorKind::Parse, "sweep CSV line " + std::to_string(line_no) + ": expected 12 cells");
    try {
      SweepRow r;
      r.method = c[0];
      r.target_pct = std::stod(c[1]);
      r.sparsity_pct = std::stod(c[2]);
      r.accuracy_pct = std::stod(c[3]);
      r.params_surviving = std::stoull(c[4]);
      r.rounds = std::stoull(c[5]);
      r.wall_seconds = std::stod(c[6]);
      r.seed = std::stoull(c[7]);
      r.ok = c[8] == "ok";
      r.error = c[9];
      r.checkpoint = c[10];
      r.checkpoint_checksum = parse_hex64(c[11]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Parse, "sweep CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::pair<std::string, double>, std::size_t> index;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.method, r.target_pct);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      SummaryRow s;
      s.method = r.method;
      s.target_pct = r.target_pct;
      out.push_back(s);
    }
    SummaryRow& s = out[it->second];
    ++s.runs;
    if (!r.ok) {
      ++s.failed;
      continue;
    }
    const std::size_t n = s.runs - s.failed;
    s.mean_sparsity_pct += (r.sparsity_pct - s.mean_sparsity_pct) / static_cast<double>(n);
    s.mean_accuracy_pct += (r.accuracy_pct - s.mean_accuracy_pct) / static_cast<double>(n);
    s.min_accuracy_pct = n == 1 ? r.accuracy_pct : std::min(s.min_accuracy_pct, r.accuracy_pct);
    s.max_accuracy_pct = n == 1 ? r.accuracy_pct : std::max(s.max_accuracy_pct, r.accuracy_pct);
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    out << s.method << ',' << format_number(s.target_pct) << ',' << s.runs << ',' << s.failed << ','
        << format_number(s.mean_sparsity_pct) << ',' << format_number(s.mean_accuracy_pct) << ','
        << format_number(s.min_accuracy_pct) << ',' << format_number(s.max_accuracy_pct) << '\n';
  }
}

void write_long_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kLongHeader << '\n';
  for (const auto& r : rows) {
    if (!r.ok) continue;
    const std::string head = r.method + ',' + std::to_string(r.seed) + ',' + format_number(r.target_pct) + ',';
    out << head << "sparsity_pct," << format_number(r.sparsity_pct) << '\n';
    out << head << "accuracy_pct," << format_number(r.accuracy_pct) << '\n';
    out << head << "params_surviving," << r.params_surviving << '\n';
    out << head << "wall_seconds," << format_number(r.wall_seconds) << '\n';
  }
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << kAblationHeader << '\n';
  for (const auto& r : rows) {
    out << r.pruned << ',' << format_number(r.prune_pct) << ',' << format_number(r.group_fraction) << ','
        << format_number(r.global_sparsity_pct) << ',' << r.params_surviving << ',' << format_number(r.accuracy_pct)
        << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << clean(r.error) << '\n';
  }
}

void write_transfer_csv(std::ostream& out, const std::vector<TransferRow>& rows) {
  out << kTransferHeader << '\n';
  for (const auto& r : rows) {
    out << r.model << ',' << r.dataset << ',' << r.seed << ',' << format_number(r.pr) << ',' << r.param << ','
        << format_number(r.base) << ',' << format_number(r.imp) << ',' << format_number(r.oneshot) << ','
        << format_number(r.imp_sparsity_pct) << ',' << r.imp_param << ',' << (r.ok ? "ok" : "failed") << ','
        << clean(r.error) << '\n';
  }
}

std::vector<BaselineRow> cmd_train(const ExperimentConfig& config, const LogSink& sink) {
  config.validate();
  Logger log(sink);
  const auto dataset = data::make_dataset(config.dataset);
  std::vector<BaselineRow> rows;
  train_dense(config, dataset, rows, log);
  const fs::path csv = fs::path("train") / "baseline.csv";
  write_file(config.output_dir / csv, [&](std::ostream& out) { write_baseline_csv(out, rows); });
  std::vector<fs::path> files{csv};
  for (const auto& r : rows) files.emplace_back(r.checkpoint);
  update_manifest(config, "train", files);
  return rows;
}

ExperimentReport cmd_sweep(const ExperimentConfig& config, const LogSink& sink) {
  config.validate();
  Logger log(sink);
  const auto dataset = data::make_dataset(config.dataset);
  ExperimentReport report;
  auto dense = train_dense(config, dataset, report.baseline, log);
  const auto seeds = config.run_seeds();
  const auto targets = imp_targets(config.sweep_points, config.prune.per_round_fraction);
  const fs::path& root = config.output_dir;

  // Slot layout per seed: IMP-Global points, IMP-Local points, OneShot points.
  const std::size_t n_points = config.sweep_points.size();
  const std::size_t per_seed = 3 * n_points;
  std::vector<SweepRow> slots(seeds.size() * per_seed);
  std::vector<std::function<void()>> tasks;

  for (std::size_t si = 0; si < seeds.size(); ++si) {
    const double dense_wall = report.baseline[si].wall_seconds;
    for (int m = 0; m < 2; ++m) {
      const Scope scope = m == 0 ? Scope::Global : Scope::Local;
      const std::string method = m == 0 ? "IMP-Global" : "IMP-Local";
      SweepRow* out = &slots[si * per_seed + static_cast<std::size_t>(m) * n_points];
      tasks.push_back([&, si, scope, method, out, dense_wall] {
        for (std::size_t i = 0; i < n_points; ++i) {
          out[i].method = method;
          out[i].target_pct = targets.points[i];
          out[i].seed = seeds[si];
          out[i].rounds = targets.rounds[i];
          out[i].ok = false;
          out[i].error = "not reached";
        }
        double wall = dense_wall;
        std::size_t last_round = 0;
        try {
          walk_imp(dense[si], config, scope, targets, [&](std::size_t i, const PruningSession& s, const RoundRecord& r) {
            if (r.round != last_round) {
              wall += r.wall_seconds;
              last_round = r.round;
            }
            SweepRow& row = out[i];
            const auto file = save_ticket(s.ticket(method_slug(method)), root, sweep_checkpoint(seeds[si], method, row.target_pct));
            row.sparsity_pct = r.sparsity.global_pct;
            row.accuracy_pct = r.test_accuracy_pct;
            row.params_surviving = r.sparsity.surviving;
            row.wall_seconds = wall;
            row.checkpoint = file.relative;
            row.checkpoint_checksum = file.checksum;
            row.ok = true;
            row.error.clear();
            log(method + " seed " + std::to_string(seeds[si]) + " target " + format_number(row.target_pct) + "%: " +
                format_number(row.accuracy_pct) + "% at " + format_number(row.sparsity_pct) + "% sparsity");
          });
        } catch (const std::exception& e) {
          for (std::size_t i = 0; i < n_points; ++i) {
            if (!out[i].ok) out[i].error = e.what();
          }
          log(method + " seed " + std::to_string(seeds[si]) + " failed: " + e.what());
        }
      });
    }
    for (std::size_t i = 0; i < n_points; ++i) {
      SweepRow* row = &slots[si * per_seed + 2 * n_points + i];
      tasks.push_back([&, si, i, row, dense_wall] {
        row->method = "OneShot-Global";
        row->target_pct = config.sweep_points[i];
        row->seed = seeds[si];
        row->rounds = 1;
        try {
          auto r = one_shot_from(dense[si], row->target_pct / 100.0, Scope::Global);
          const auto& rec = r.trajectory.back();
          const auto file = save_ticket(r.ticket, root, sweep_checkpoint(seeds[si], row->method, row->target_pct));
          row->sparsity_pct = rec.sparsity.global_pct;
          row->accuracy_pct = rec.test_accuracy_pct;
          row->params_surviving = rec.sparsity.surviving;
          row->wall_seconds = dense_wall + rec.wall_seconds;
          row->checkpoint = file.relative;
          row->checkpoint_checksum = file.checksum;
          log("OneShot-Global seed " + std::to_string(seeds[si]) + " target " + format_number(row->target_pct) +
              "%: " + format_number(row->accuracy_pct) + "%");
        } catch (const std::exception& e) {
          row->ok = false;
          row->error = e.what();
          log("OneShot-Global seed " + std::to_string(seeds[si]) + " failed: " + e.what());
        }
      });
    }
  }
  run_pool(config.jobs, tasks);

  report.rows = std::move(slots);
  report.summary = summarize(report.rows);
  const fs::path sweep_csv = fs::path("sweep") / "sweep.csv";
  const fs::path summary_csv = fs::path("sweep") / "summary.csv";
  const fs::path long_csv = fs::path("sweep") / "sweep_long.csv";
  const fs::path base_csv = fs::path("train") / "baseline.csv";
  write_file(root / sweep_csv, [&](std::ostream& out) { write_sweep_csv(out, report.rows); });
  write_file(root / summary_csv, [&](std::ostream& out) { write_summary_csv(out, report.summary); });
  write_file(root / long_csv, [&](std::ostream& out) { write_long_csv(out, report.rows); });
  write_file(root / base_csv, [&](std::ostream& out) { write_baseline_csv(out, report.baseline); });
  std::vector<fs::path> files{sweep_csv, summary_csv, long_csv, base_csv};
  for (const auto& b : report.baseline) files.emplace_back(b.checkpoint);
  for (const auto& r : report.rows) {
    if (r.ok) files.emplace_back(r.checkpoint);
  }
  update_manifest(config, "sweep", files);
  return report;
}

std::vector<AblationRow> cmd_ablate(const ExperimentConfig& config, const LogSink& sink) {
  config.validate();
  Logger log(sink);
  const auto dataset = data::make_dataset(config.dataset);
  std::vector<BaselineRow> baseline;
  auto dense = train_dense(config, dataset, baseline, log);
  const auto seeds = config.run_seeds();
  const auto groups = layer_groups(dense.front().model().params());
  const double conv_fraction = groups[0].fraction;
  const double fc_fraction = groups[1].fraction;

  std::vector<AblationRow> rows(seeds.size() * 4);
  std::vector<std::function<void()>> tasks;
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    AblationRow& none = rows[si * 4];
    none.pruned = "none";
    none.seed = seeds[si];
    none.accuracy_pct = baseline[si].accuracy_pct;
    none.params_surviving = baseline[si].params;
    const GroupFilter filters[] = {GroupFilter::ConvOnly, GroupFilter::FcOnly, GroupFilter::All};
    const double fractions[] = {conv_fraction, fc_fraction, 1.0};
    const char* names[] = {"conv", "fc", "both"};
    for (int f = 0; f < 3; ++f) {
      AblationRow* row = &rows[si * 4 + 1 + static_cast<std::size_t>(f)];
      row->pruned = names[f];
      row->prune_pct = config.ablate_rate;
      row->group_fraction = fractions[f];
      row->seed = seeds[si];
      const GroupFilter filter = filters[f];
      tasks.push_back([&, si, row, filter] {
        try {
          auto r = one_shot_from(dense[si], config.ablate_rate / 100.0, Scope::Global, filter);
          const auto& rec = r.trajectory.back();
          row->global_sparsity_pct = rec.sparsity.global_pct;
          row->params_surviving = rec.sparsity.surviving;
          row->accuracy_pct = rec.test_accuracy_pct;
          log("ablate " + row->pruned + " seed " + std::to_string(seeds[si]) + ": " +
              format_number(row->global_sparsity_pct) + "% global, " + format_number(row->accuracy_pct) + "%");
        } catch (const std::exception& e) {
          row->ok = false;
          row->error = e.what();
        }
      });
    }
  }
  run_pool(config.jobs, tasks);
  const fs::path csv = fs::path("ablate") / "ablation.csv";
  write_file(config.output_dir / csv, [&](std::ostream& out) { write_ablation_csv(out, rows); });
  update_manifest(config, "ablate", {csv});
  return rows;
}

std::vector<TransferRow> cmd_transfer(const ExperimentConfig& source, const ExperimentConfig& target,
                                      const LogSink& sink) {
  source.validate();
  target.validate();
  const ModelSpec& a = source.model;
  const ModelSpec& b = target.model;
  if (a.architecture != b.architecture || a.conv_widths != b.conv_widths || a.head_widths != b.head_widths ||
      (a.architecture == Architecture::DgcnnMini && a.k_neighbors != b.k_neighbors) ||
      source.dataset.points_per_sample != target.dataset.points_per_sample) {
    throw Error(ErrorKind::SpecMismatch, "source and target backbones differ");
  }
  Logger log(sink);
  const auto source_data = data::make_dataset(source.dataset);
  const auto target_data = data::make_dataset(target.dataset);

  ExperimentConfig src = source;
  src.repeats = target.repeats;
  src.seed = target.seed;
  src.output_dir = target.output_dir / "transfer" / "source";
  std::vector<BaselineRow> source_base;
  auto dense = train_dense(src, source_data, source_base, log);
  const auto seeds = target.run_seeds();

  std::vector<double> levels = target.transfer.levels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const auto targets = imp_targets(levels, src.prune.per_round_fraction);
  TrainCycle budget = target.cycle;
  if (target.transfer.epochs > 0) budget.epochs = target.transfer.epochs;

  std::vector<double> base(seeds.size());
  std::vector<TransferRow> rows(seeds.size() * levels.size());
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    for (std::size_t li = 0; li < levels.size(); ++li) {
      TransferRow& r = rows[si * levels.size() + li];
      r.model = std::string(to_string(b.architecture));
      r.dataset = dataset_label(target.dataset);
      r.seed = seeds[si];
      r.pr = levels[li];
    }
  }

  const fs::path root = target.output_dir / "transfer";
  auto transfer_one = [&](const Ticket& ticket, std::uint64_t seed, const std::string& name) {
    const fs::path rel = fs::path("seed-" + std::to_string(seed)) / (name + ".pclt");
    save_ticket(ticket, root, rel);
    const Ticket loaded = import_ticket(root / rel, target.model_for(seed));
    auto init = instantiate_transfer(loaded, target_data.num_classes(), target.transfer.weights, derive_seed(seed, 0x7e));
    return fine_tune(init.model, init.mask, target_data, budget, derive_seed(seed, 0x7f)).accuracy_pct;
  };

  std::vector<std::function<void()>> tasks;
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    TransferRow* row = &rows[si * levels.size()];
    tasks.push_back([&, si] {
      PruningSession scratch(target.model_for(seeds[si]), target_data, target.cycle, seeds[si]);
      scratch.train();
      base[si] = scratch.test_accuracy();
      log("target scratch seed " + std::to_string(seeds[si]) + ": " + format_number(base[si]) + "%");
    });
    tasks.push_back([&, si, row] {
      try {
        walk_imp(dense[si], src, Scope::Global, targets, [&](std::size_t li, const PruningSession& s, const RoundRecord& r) {
          row[li].imp_sparsity_pct = r.sparsity.global_pct;
          row[li].imp_param = r.sparsity.surviving;
          row[li].imp = transfer_one(s.ticket("imp-global"), seeds[si], "imp-" + format_number(levels[li]));
          log("transfer IMP seed " + std::to_string(seeds[si]) + " PR " + format_number(levels[li]) + ": " +
              format_number(row[li].imp) + "%");
        });
      } catch (const std::exception& e) {
        for (std::size_t li = 0; li < levels.size(); ++li) {
          row[li].ok = false;
          row[li].error = e.what();
        }
      }
    });
    for (std::size_t li = 0; li < levels.size(); ++li) {
      tasks.push_back([&, si, li, row] {
        try {
          auto r = one_shot_from(dense[si], levels[li] / 100.0, Scope::Global);
          row[li].param = r.trajectory.back().sparsity.surviving;
          row[li].oneshot = transfer_one(r.ticket, seeds[si], "oneshot-" + format_number(levels[li]));
          log("transfer OneShot seed " + std::to_string(seeds[si]) + " PR " + format_number(levels[li]) + ": " +
              format_number(row[li].oneshot) + "%");
        } catch (const std::exception& e) {
          row[li].ok = false;
          row[li].error = e.what();
        }
      });
    }
  }
  run_pool(target.jobs, tasks);
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    for (std::size_t li = 0; li < levels.size(); ++li) rows[si * levels.size() + li].base = base[si];
  }

  const fs::path csv = fs::path("transfer") / "transfer.csv";
  write_file(target.output_dir / csv, [&](std::ostream& out) { write_transfer_csv(out, rows); });
  update_manifest(target, "transfer", {csv});
  return rows;
}

std::vector<BenchRow> cmd_bench(const ExperimentConfig& config, const LogSink& sink) {
  config.validate();
  Logger log(sink);
  std::vector<fs::path> checkpoints{dense_checkpoint(config.seed)};
  for (double p : config.sweep_points) checkpoints.push_back(sweep_checkpoint(config.seed, "OneShot-Global", p));
  for (const auto& c : checkpoints) {
    if (!fs::exists(config.output_dir / c)) {
      throw Error(ErrorKind::Path, "missing checkpoint " + (config.output_dir / c).string() + " (run sweep first)");
    }
  }
  BenchOptions opts;
  opts.warmup = config.bench.warmup;
  opts.iterations = config.bench.iterations;
  opts.seed = config.seed;
  std::vector<BenchRow> rows;
  for (const auto& c : checkpoints) {
    const Ticket t = import_ticket(config.output_dir / c);
    const Model model(t.spec, t.trained);
    auto part = bench_masked(std::string(to_string(t.spec.architecture)), model, t.mask, config.bench.batches, opts);
    for (const auto& r : part) {
      log("bench " + format_number(r.sparsity_pct) + "% batch " + std::to_string(r.batch) + ": dense " +
          format_number(std::round(r.dense_us_median)) + " us, sparse " + format_number(std::round(r.sparse_us_median)) +
          " us");
    }
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const fs::path csv = fs::path("bench") / "bench.csv";
  write_file(config.output_dir / csv, [&](std::ostream& out) { write_bench_csv(out, rows); });
  update_manifest(config, "bench", {csv});
  return rows;
}

ExperimentReport cmd_report(const fs::path& output_dir, const LogSink& sink) {
  Logger log(sink);
  const fs::path sweep_path = output_dir / "sweep" / "sweep.csv";
  std::ifstream in(sweep_path);
  if (!in) throw Error(ErrorKind::Path, "missing " + sweep_path.string() + " (run sweep first)");
  ExperimentReport report;
  report.rows = read_sweep_csv(in);
  report.summary = summarize(report.rows);
  write_file(output_dir / "sweep" / "summary.csv", [&](std::ostream& out) { write_summary_csv(out, report.summary); });
  write_file(output_dir / "sweep" / "sweep_long.csv", [&](std::ostream& out) { write_long_csv(out, report.rows); });
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %8s %6s %10s %10s %10s", "method", "target", "runs", "sparsity", "mean_acc",
                "min_acc");
  log(line);
  for (const auto& s : report.summary) {
    std::snprintf(line, sizeof line, "%-16s %7.2f%% %6zu %9.2f%% %9.2f%% %9.2f%%", s.method.c_str(), s.target_pct,
                  s.runs - s.failed, s.mean_sparsity_pct, s.mean_accuracy_pct, s.min_accuracy_pct);
    log(line);
  }
  return report;
}

}  // namespace pclt
