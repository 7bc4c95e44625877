#include "pclt/config.hpp"
#include "support.hpp"

namespace pclt {
namespace {

std::string config_error(std::string_view text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    return e.what();
  }
  ADD_FAILURE() << "config accepted:\n" << text;
  return {};
}

bool mentions(const std::string& msg, std::string_view needle) { return msg.find(needle) != std::string::npos; }

TEST(Config, MinimalFileGivesDefaults) {
  const auto c = parse_config("[dataset]\n");
  const ExperimentConfig d;
  EXPECT_EQ(c.model, d.model);
  EXPECT_EQ(c.dataset, d.dataset);
  EXPECT_EQ(c.cycle, d.cycle);
  EXPECT_EQ(c.sweep_points, d.sweep_points);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.prune.cycle, c.cycle);
}

TEST(Config, FullFile) {
  const auto c = parse_config(R"(
seed = 7
repeats = 3
jobs = 2
output = "out/dir"

[dataset]
classes = ["sphere", "cube", "torus"]
samples_per_class = 30
points_per_sample = 128
seed = 4

[model]
architecture = "dgcnn"
conv_widths = [32, 64]
head_widths = [16]
k_neighbors = 6

[train]
epochs = 5
batch_size = 8
optimizer = "sgd"
learning_rate = 0.05
schedule = "constant"

[train.augment]
full_rotation_prob = 0.25

[prune]
scope = "local"
rate = 0.3

[sweep]
points = [50, 75]

[transfer]
levels = [60]
weights = "rewound"
epochs = 4

[bench]
batches = [1, 4]
iterations = 12
)");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.run_seeds(), (std::vector<std::uint64_t>{7, 8, 9}));
  EXPECT_EQ(c.output_dir, "out/dir");
  EXPECT_EQ(c.dataset.classes.size(), 3u);
  EXPECT_EQ(c.dataset.base_seed, 4u);
  EXPECT_EQ(c.model.architecture, Architecture::DgcnnMini);
  EXPECT_EQ(c.cycle.optimizer, OptimizerKind::SGD);
  EXPECT_EQ(c.cycle.schedule, LrSchedule::Constant);
  EXPECT_EQ(c.cycle.augment.full_rotation_prob, 0.25);
  EXPECT_EQ(c.prune.scope, Scope::Local);
  EXPECT_EQ(c.prune.per_round_fraction, 0.3);
  EXPECT_EQ(c.transfer.weights, WeightSource::Rewound);
  EXPECT_EQ(c.bench.batches, (std::vector<std::size_t>{1, 4}));

  const ModelSpec m = c.model_for(8);
  EXPECT_EQ(m.num_classes, 3u);
  EXPECT_EQ(m.input_points, 128u);
  EXPECT_EQ(m.init_seed, 8u);
}

TEST(Config, DumpParsesBackToTheSameConfig) {
  auto c = parse_config("seed = 3\n[dataset]\nclasses = [\"helix\", \"plane\"]\nnoise_sigma = 0.02\n[train]\nlearning_rate = 0.0007\n");
  const auto text = dump_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(dump_config(back), text);
  EXPECT_EQ(back.dataset, c.dataset);
  EXPECT_EQ(back.cycle, c.cycle);
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.sweep_points, c.sweep_points);
}

TEST(Config, MissingDatasetTable) {
  EXPECT_TRUE(mentions(config_error("seed = 1\n"), "dataset: missing required table"));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_TRUE(mentions(config_error("[dataset]\n[train]\nepochs = \"ten\"\n"), "train.epochs"));
  EXPECT_TRUE(mentions(config_error("[dataset]\n[train]\nepochs = 0\n"), "train.epochs"));
  EXPECT_TRUE(mentions(config_error("[dataset]\n[model]\nwidth = 3\n"), "model.width"));
  EXPECT_TRUE(mentions(config_error("[dataset]\nclasses = [\"sphere\", \"blob\"]\n"), "dataset.classes"));
  EXPECT_TRUE(mentions(config_error("[dataset]\n[prune]\nrate = 1.5\n"), "prune.rate"));
  EXPECT_TRUE(mentions(config_error("[dataset]\n[prune]\nrewind = \"late\"\n"), "prune.rewind"));
  EXPECT_TRUE(mentions(config_error("[dataset]\n[sweep]\npoints = [20, 10]\n"), "sweep.points"));
  EXPECT_TRUE(mentions(config_error("[dataset]\n[sweep]\npoints = [20, 100]\n"), "sweep.points"));
  EXPECT_TRUE(mentions(config_error("[dataset]\n[bench]\nwarmup = 2\n"), "bench.warmup"));
  EXPECT_TRUE(mentions(config_error("[dataset]\n[train.augment]\nfull_rotation_prob = 2\n"), "full_rotation_prob"));
  EXPECT_TRUE(mentions(config_error("[dataset\n"), "<config>"));
}

TEST(Config, Presets) {
  auto c = parse_config("preset = \"dgcnn-paper\"\n[dataset]\n");
  EXPECT_EQ(c.model.architecture, Architecture::DgcnnMini);
  EXPECT_EQ(c.cycle.optimizer, OptimizerKind::SGD);
  EXPECT_FLOAT_EQ(c.cycle.learning_rate, 0.1f);
  EXPECT_EQ(c.cycle.batch_size, 32u);
  EXPECT_EQ(c.prune.cycle, c.cycle);

  ExperimentConfig p;
  apply_preset(p, "pointnet-paper");
  EXPECT_EQ(p.cycle.optimizer, OptimizerKind::Adam);
  EXPECT_FLOAT_EQ(p.cycle.learning_rate, 1e-4f);
  EXPECT_EQ(p.cycle.batch_size, 256u);
  EXPECT_PCLT_ERROR(ErrorKind::Config, apply_preset(p, "resnet-paper"));
  EXPECT_EQ(preset_names().size(), 3u);
}

TEST(Config, LoadMissingFile) { EXPECT_PCLT_ERROR(ErrorKind::Path, load_config("/nonexistent/pclt.toml")); }

}  // namespace
}  // namespace pclt
