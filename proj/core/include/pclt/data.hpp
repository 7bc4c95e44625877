#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pclt/rng.hpp"
#include "pclt/tensor.hpp"

namespace pclt::data {

enum class ShapeKind { Sphere, Cube, Cylinder, Cone, Torus, Pyramid, NoisyPlane, Helix };

inline constexpr ShapeKind kAllShapes[] = {ShapeKind::Sphere,  ShapeKind::Cube,    ShapeKind::Cylinder,
                                           ShapeKind::Cone,    ShapeKind::Torus,   ShapeKind::Pyramid,
                                           ShapeKind::NoisyPlane, ShapeKind::Helix};

std::string_view to_string(ShapeKind k);
ShapeKind shape_from_string(std::string_view s);

/// Dimensions of a generated surface. Each kind reads the fields it needs:
/// sphere: radius; cube: size (edge); cylinder/cone: radius, height;
/// torus: radius (major), minor; pyramid: size (base edge), height;
/// plane: size (edge); helix: radius, height, minor (tube), turns.
struct ShapeParams {
  double radius = 1.0;
  double size = 2.0;
  double height = 2.0;
  double minor = 0.3;
  double turns = 3.0;
  double sigma = 0.0;  ///< Gaussian surface noise.
};

struct PointCloudSample {
  Tensor points;  ///< [N×3]
  int label = 0;
  std::string source;  ///< "synthetic:<kind>" or "file:<path>"
};

/// Area-correct uniform surface sample of n_points (≥ 8) plus Gaussian noise.
PointCloudSample generate_shape(ShapeKind kind, std::size_t n_points, const ShapeParams& params, Rng& rng);

/// Centroid to origin, max norm to 1. Throws DegenerateCloud when all points coincide.
PointCloudSample normalize_unit_sphere(PointCloudSample sample);

struct AugmentConfig {
  bool up_rotation = true;          ///< uniform rotation about +z
  double full_rotation_prob = 0.5;  ///< uniform SO(3) rotation on top
  double jitter_sigma = 0.01;
  double jitter_clip = 0.05;
  double scale_lo = 0.8;
  double scale_hi = 1.25;

  /// No-op configuration.
  static AugmentConfig none();
  /// Up-axis rotation, jitter and scale without the SO(3) step.
  static AugmentConfig upright();

  bool operator==(const AugmentConfig&) const = default;
};

PointCloudSample augment(const PointCloudSample& sample, Rng& rng, const AugmentConfig& cfg = {});

/// Random rotation matrix (row-major 3×3) with the rotation part of augment().
std::array<double, 9> random_rotation(Rng& rng, const AugmentConfig& cfg = {});
Tensor rotate(const Tensor& points, const std::array<double, 9>& r);

struct DatasetSpec {
  std::vector<ShapeKind> classes{std::begin(kAllShapes), std::end(kAllShapes)};
  std::size_t samples_per_class = 100;
  std::size_t points_per_sample = 256;
  double train_fraction = 0.8;
  std::uint64_t base_seed = 1;
  double noise_sigma = 0.01;

  void validate() const;
  std::size_t train_per_class() const;
  bool operator==(const DatasetSpec&) const = default;
};

class Dataset {
 public:
  const DatasetSpec& spec() const noexcept { return spec_; }
  std::size_t num_classes() const noexcept { return spec_.classes.size(); }
  /// Normalized, un-augmented. Augmentation is applied when batches are drawn.
  const std::vector<PointCloudSample>& train() const noexcept { return train_; }
  const std::vector<PointCloudSample>& test() const noexcept { return test_; }

  std::uint64_t test_checksum() const;
  std::uint64_t checksum() const;

 private:
  friend Dataset make_dataset(const DatasetSpec& spec);
  DatasetSpec spec_;
  std::vector<PointCloudSample> train_;
  std::vector<PointCloudSample> test_;
};

/// Deterministic: each sample draws from its own stream (base seed, class, index).
Dataset make_dataset(const DatasetSpec& spec);

/// Shape parameters drawn for one sample of a class.
ShapeParams sample_params(ShapeKind kind, double sigma, Rng& rng);

/// Structured text listing the spec fields and the content checksum.
std::string dataset_manifest(const Dataset& dataset);

/// Stack samples into [B×N×3]; all must share N.
Tensor stack_points(const std::vector<const PointCloudSample*>& samples);

void save_xyz(const PointCloudSample& sample, const std::filesystem::path& path);
PointCloudSample load_xyz(const std::filesystem::path& path, int label = 0);
/// OFF mesh, surface-sampled at n_points by area-weighted triangles (polygons fan-split).
PointCloudSample load_off(const std::filesystem::path& path, std::size_t n_points, Rng& rng, int label = 0);

}  // namespace pclt::data
