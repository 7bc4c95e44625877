#include "pclt/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pclt/error.hpp"

namespace pclt::data {

namespace {

constexpr double kPi = std::numbers::pi;

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

// Uniform point in triangle (a, b, c).
Vec3 triangle_point(Vec3 a, Vec3 b, Vec3 c, Rng& rng) {
  const double s = std::sqrt(rng.uniform());
  const double t = rng.uniform();
  return (1.0 - s) * a + (s * (1.0 - t)) * b + (s * t) * c;
}

double triangle_area(Vec3 a, Vec3 b, Vec3 c) { return 0.5 * norm(cross(b - a, c - a)); }

// Index drawn proportionally to weights.
std::size_t pick_weighted(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

Vec3 sample_triangles(const std::vector<std::array<Vec3, 3>>& tris, const std::vector<double>& cumulative, Rng& rng) {
  const auto& t = tris[pick_weighted(cumulative, rng)];
  return triangle_point(t[0], t[1], t[2], rng);
}

std::vector<double> cumulative_areas(const std::vector<std::array<Vec3, 3>>& tris) {
  std::vector<double> cum(tris.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < tris.size(); ++i) {
    acc += triangle_area(tris[i][0], tris[i][1], tris[i][2]);
    cum[i] = acc;
  }
  return cum;
}

Vec3 surface_point(ShapeKind kind, const ShapeParams& p, Rng& rng) {
  switch (kind) {
    case ShapeKind::Sphere: {
      Vec3 d{rng.normal(), rng.normal(), rng.normal()};
      double n = norm(d);
      while (n < 1e-12) {
        d = {rng.normal(), rng.normal(), rng.normal()};
        n = norm(d);
      }
      return (p.radius / n) * d;
    }
    case ShapeKind::Cube: {
      const double h = 0.5 * p.size;
      const auto face = rng.below(6);
      const double u = rng.uniform(-h, h), v = rng.uniform(-h, h);
      const double s = (face & 1U) ? h : -h;
      switch (face / 2) {
        case 0: return {s, u, v};
        case 1: return {u, s, v};
        default: return {u, v, s};
      }
    }
    case ShapeKind::Cylinder: {
      const double r = p.radius, h = p.height;
      const double lateral = 2.0 * kPi * r * h, cap = kPi * r * r;
      const double pick = rng.uniform() * (lateral + 2.0 * cap);
      const double theta = rng.uniform(0.0, 2.0 * kPi);
      if (pick < lateral) return {r * std::cos(theta), r * std::sin(theta), rng.uniform(-0.5 * h, 0.5 * h)};
      const double rr = r * std::sqrt(rng.uniform());
      return {rr * std::cos(theta), rr * std::sin(theta), pick < lateral + cap ? 0.5 * h : -0.5 * h};
    }
    case ShapeKind::Cone: {
      const double r = p.radius, h = p.height;
      const double lateral = kPi * r * std::sqrt(r * r + h * h), base = kPi * r * r;
      const bool on_side = rng.uniform() * (lateral + base) < lateral;
      const double theta = rng.uniform(0.0, 2.0 * kPi);
      const double t = std::sqrt(rng.uniform());
      if (on_side) return {r * t * std::cos(theta), r * t * std::sin(theta), 0.5 * h - t * h};
      return {r * t * std::cos(theta), r * t * std::sin(theta), -0.5 * h};
    }
    case ShapeKind::Torus: {
      const double big = p.radius, small = p.minor;
      double v = 0.0;
      for (;;) {
        v = rng.uniform(0.0, 2.0 * kPi);
        if (rng.uniform() * (big + small) <= big + small * std::cos(v)) break;
      }
      const double u = rng.uniform(0.0, 2.0 * kPi);
      const double ring = big + small * std::cos(v);
      return {ring * std::cos(u), ring * std::sin(u), small * std::sin(v)};
    }
    case ShapeKind::Pyramid: {
      const double h = 0.5 * p.size, z0 = -0.5 * p.height;
      const Vec3 apex{0, 0, 0.5 * p.height};
      const Vec3 c0{-h, -h, z0}, c1{h, -h, z0}, c2{h, h, z0}, c3{-h, h, z0};
      const std::vector<std::array<Vec3, 3>> tris{{c0, c1, apex}, {c1, c2, apex}, {c2, c3, apex},
                                                  {c3, c0, apex}, {c0, c1, c2},   {c0, c2, c3}};
      return sample_triangles(tris, cumulative_areas(tris), rng);
    }
    case ShapeKind::NoisyPlane: {
      const double h = 0.5 * p.size;
      return {rng.uniform(-h, h), rng.uniform(-h, h), 0.03 * p.size * rng.normal()};
    }
    case ShapeKind::Helix: {
      const double t = rng.uniform();
      const double a = 2.0 * kPi * p.turns * t;
      const Vec3 centre{p.radius * std::cos(a), p.radius * std::sin(a), -0.5 * p.height + p.height * t};
      Vec3 tangent{-p.radius * 2.0 * kPi * p.turns * std::sin(a), p.radius * 2.0 * kPi * p.turns * std::cos(a),
                   p.height};
      tangent = (1.0 / norm(tangent)) * tangent;
      const Vec3 normal{std::cos(a), std::sin(a), 0.0};
      const Vec3 binormal = cross(tangent, normal);
      const double phi = rng.uniform(0.0, 2.0 * kPi);
      return centre + (p.minor * std::cos(phi)) * normal + (p.minor * std::sin(phi)) * binormal;
    }
  }
  throw Error(ErrorKind::Spec, "unknown shape kind");
}

[[noreturn]] void parse_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::string_view to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Cube: return "cube";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::Cone: return "cone";
    case ShapeKind::Torus: return "torus";
    case ShapeKind::Pyramid: return "pyramid";
    case ShapeKind::NoisyPlane: return "plane";
    case ShapeKind::Helix: return "helix";
  }
  return "unknown";
}

ShapeKind shape_from_string(std::string_view s) {
  for (auto k : kAllShapes) {
    if (to_string(k) == s) return k;
  }
  if (s == "plane-with-noise" || s == "noisy_plane") return ShapeKind::NoisyPlane;
  throw Error(ErrorKind::Spec, "unknown shape kind '" + std::string(s) + "'");
}

PointCloudSample generate_shape(ShapeKind kind, std::size_t n_points, const ShapeParams& params, Rng& rng) {
  if (n_points < 8) throw Error(ErrorKind::Spec, "generate_shape needs at least 8 points");
  Tensor pts({n_points, 3});
  auto d = pts.data();
  for (std::size_t i = 0; i < n_points; ++i) {
    Vec3 p = surface_point(kind, params, rng);
    if (params.sigma > 0.0) p = p + Vec3{params.sigma * rng.normal(), params.sigma * rng.normal(), params.sigma * rng.normal()};
    d[3 * i] = static_cast<float>(p.x);
    d[3 * i + 1] = static_cast<float>(p.y);
    d[3 * i + 2] = static_cast<float>(p.z);
  }
  return PointCloudSample{std::move(pts), 0, "synthetic:" + std::string(to_string(kind))};
}

PointCloudSample normalize_unit_sphere(PointCloudSample sample) {
  auto& pts = sample.points;
  if (pts.rank() != 2 || pts.dim(1) != 3) throw Error(ErrorKind::Shape, "point cloud must be [N×3]");
  const std::size_t n = pts.dim(0);
  auto d = pts.data();
  double cx = 0, cy = 0, cz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cx += d[3 * i];
    cy += d[3 * i + 1];
    cz += d[3 * i + 2];
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);
  cz /= static_cast<double>(n);
  double max_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = d[3 * i] - cx, y = d[3 * i + 1] - cy, z = d[3 * i + 2] - cz;
    max_norm = std::max(max_norm, std::sqrt(x * x + y * y + z * z));
  }
  if (!(max_norm > 0.0)) throw Error(ErrorKind::DegenerateCloud, "all points coincide");
  for (std::size_t i = 0; i < n; ++i) {
    d[3 * i] = static_cast<float>((d[3 * i] - cx) / max_norm);
    d[3 * i + 1] = static_cast<float>((d[3 * i + 1] - cy) / max_norm);
    d[3 * i + 2] = static_cast<float>((d[3 * i + 2] - cz) / max_norm);
  }
  return sample;
}

AugmentConfig AugmentConfig::none() {
  AugmentConfig c;
  c.up_rotation = false;
  c.full_rotation_prob = 0.0;
  c.jitter_sigma = 0.0;
  c.scale_lo = 1.0;
  c.scale_hi = 1.0;
  return c;
}

AugmentConfig AugmentConfig::upright() {
  AugmentConfig c;
  c.full_rotation_prob = 0.0;
  return c;
}

std::array<double, 9> random_rotation(Rng& rng, const AugmentConfig& cfg) {
  std::array<double, 9> r{1, 0, 0, 0, 1, 0, 0, 0, 1};
  if (cfg.up_rotation) {
    const double a = rng.uniform(0.0, 2.0 * kPi);
    const double c = std::cos(a), s = std::sin(a);
    r = {c, -s, 0, s, c, 0, 0, 0, 1};
  }
  if (cfg.full_rotation_prob > 0.0 && rng.uniform() < cfg.full_rotation_prob) {
    // Uniform unit quaternion (Shoemake).
    const double u1 = rng.uniform(), u2 = rng.uniform(0.0, 2.0 * kPi), u3 = rng.uniform(0.0, 2.0 * kPi);
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double w = a * std::sin(u2), x = a * std::cos(u2), y = b * std::sin(u3), z = b * std::cos(u3);
    const std::array<double, 9> q{1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
                                  2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
                                  2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
    std::array<double, 9> m{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) m[3 * i + j] += q[3 * i + k] * r[3 * k + j];
      }
    }
    r = m;
  }
  return r;
}

Tensor rotate(const Tensor& points, const std::array<double, 9>& r) {
  Tensor out = points;
  auto s = points.data();
  auto d = out.data();
  for (std::size_t i = 0; i < points.dim(0); ++i) {
    const double x = s[3 * i], y = s[3 * i + 1], z = s[3 * i + 2];
    for (int row = 0; row < 3; ++row) {
      d[3 * i + row] = static_cast<float>(r[3 * row] * x + r[3 * row + 1] * y + r[3 * row + 2] * z);
    }
  }
  return out;
}

PointCloudSample augment(const PointCloudSample& sample, Rng& rng, const AugmentConfig& cfg) {
  PointCloudSample out = sample;
  out.points = rotate(sample.points, random_rotation(rng, cfg));
  const double scale = cfg.scale_lo == cfg.scale_hi ? cfg.scale_lo : rng.uniform(cfg.scale_lo, cfg.scale_hi);
  for (auto& v : out.points.data()) {
    double x = static_cast<double>(v) * scale;
    if (cfg.jitter_sigma > 0.0) x += std::clamp(cfg.jitter_sigma * rng.normal(), -cfg.jitter_clip, cfg.jitter_clip);
    v = static_cast<float>(x);
  }
  return out;
}

void DatasetSpec::validate() const {
  if (classes.size() < 2) throw Error(ErrorKind::Spec, "dataset needs at least 2 classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t j = i + 1; j < classes.size(); ++j) {
      if (classes[i] == classes[j]) throw Error(ErrorKind::Spec, "duplicate class " + std::string(to_string(classes[i])));
    }
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error(ErrorKind::Spec, "train_fraction must be in (0,1)");
  if (points_per_sample < 8) throw Error(ErrorKind::Spec, "points_per_sample must be at least 8");
  const std::size_t train = train_per_class();
  if (train < 1) throw Error(ErrorKind::Spec, "samples_per_class * train_fraction < 1: no training samples");
  if (train >= samples_per_class) throw Error(ErrorKind::Spec, "split leaves no test samples");
}

std::size_t DatasetSpec::train_per_class() const {
  return static_cast<std::size_t>(std::floor(static_cast<double>(samples_per_class) * train_fraction + 1e-9));
}

ShapeParams sample_params(ShapeKind kind, double sigma, Rng& rng) {
  ShapeParams p;
  p.sigma = sigma;
  switch (kind) {
    case ShapeKind::Sphere: p.radius = rng.uniform(0.7, 1.3); break;
    case ShapeKind::Cube: p.size = rng.uniform(1.4, 2.6); break;
    case ShapeKind::Cylinder:
      p.radius = rng.uniform(0.4, 0.6);
      p.height = rng.uniform(1.8, 2.6);
      break;
    case ShapeKind::Cone:
      p.radius = rng.uniform(0.5, 0.8);
      p.height = rng.uniform(1.8, 2.4);
      break;
    case ShapeKind::Torus:
      p.radius = rng.uniform(0.8, 1.2);
      p.minor = rng.uniform(0.2, 0.4);
      break;
    case ShapeKind::Pyramid:
      p.size = rng.uniform(1.8, 2.2);
      p.height = rng.uniform(0.8, 1.2);
      break;
    case ShapeKind::NoisyPlane: p.size = rng.uniform(1.5, 2.5); break;
    case ShapeKind::Helix:
      p.radius = rng.uniform(0.6, 1.0);
      p.height = rng.uniform(1.5, 2.5);
      p.minor = rng.uniform(0.08, 0.15);
      p.turns = rng.uniform(2.0, 4.0);
      break;
  }
  return p;
}

Dataset make_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.spec_ = spec;
  const std::size_t train = spec.train_per_class();
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto kind = spec.classes[c];
    for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
      Rng rng(derive_seed(spec.base_seed, static_cast<std::uint64_t>(kind), i));
      const ShapeParams params = sample_params(kind, spec.noise_sigma, rng);
      auto sample = normalize_unit_sphere(generate_shape(kind, spec.points_per_sample, params, rng));
      sample.label = static_cast<int>(c);
      (i < train ? ds.train_ : ds.test_).push_back(std::move(sample));
    }
  }
  return ds;
}

namespace {

void hash_samples(Fnv1a& h, const std::vector<PointCloudSample>& samples) {
  for (const auto& s : samples) {
    h.update_value(static_cast<std::int32_t>(s.label));
    h.update(s.points.data().data(), s.points.numel() * sizeof(float));
  }
}

}  // namespace

std::uint64_t Dataset::test_checksum() const {
  Fnv1a h;
  hash_samples(h, test_);
  return h.digest();
}

std::uint64_t Dataset::checksum() const {
  Fnv1a h;
  hash_samples(h, train_);
  hash_samples(h, test_);
  return h.digest();
}

std::string dataset_manifest(const Dataset& dataset) {
  const auto& s = dataset.spec();
  std::ostringstream os;
  os << "[dataset]\n";
  os << "classes = [";
  for (std::size_t i = 0; i < s.classes.size(); ++i) os << (i ? ", " : "") << '"' << to_string(s.classes[i]) << '"';
  os << "]\n";
  os << "samples_per_class = " << s.samples_per_class << "\n";
  os << "points_per_sample = " << s.points_per_sample << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", s.train_fraction);
  os << "train_fraction = " << buf << "\n";
  os << "base_seed = " << s.base_seed << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", s.noise_sigma);
  os << "noise_sigma = " << buf << "\n";
  os << "train_count = " << dataset.train().size() << "\n";
  os << "test_count = " << dataset.test().size() << "\n";
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(dataset.checksum()));
  os << "checksum = \"" << buf << "\"\n";
  return os.str();
}

Tensor stack_points(const std::vector<const PointCloudSample*>& samples) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "no samples to stack");
  const std::size_t n = samples.front()->points.dim(0);
  Tensor out({samples.size(), n, 3});
  auto d = out.data();
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const auto& p = samples[b]->points;
    if (p.rank() != 2 || p.dim(0) != n || p.dim(1) != 3) {
      throw Error(ErrorKind::Shape, "sample " + std::to_string(b) + " has shape " + shape_string(p.shape()) +
                                        ", expected [" + std::to_string(n) + "x3]");
    }
    std::copy(p.data().begin(), p.data().end(), d.begin() + static_cast<std::ptrdiff_t>(b * n * 3));
  }
  return out;
}

void save_xyz(const PointCloudSample& sample, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const auto& p = sample.points;
  char line[96];
  for (std::size_t i = 0; i < p.dim(0); ++i) {
    std::snprintf(line, sizeof line, "%.9g %.9g %.9g\n", static_cast<double>(p.at(i, 0)),
                  static_cast<double>(p.at(i, 1)), static_cast<double>(p.at(i, 2)));
    out << line;
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

PointCloudSample load_xyz(const std::filesystem::path& path, int label) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Path, "cannot open " + path.string());
  std::vector<float> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 3) parse_error(path, lineno, "expected 3 fields, got " + std::to_string(fields.size()));
    for (auto f : fields) {
      float v = 0;
      if (!parse_number(f, v)) parse_error(path, lineno, "not a number: '" + std::string(f) + "'");
      values.push_back(v);
    }
  }
  if (values.empty()) throw Error(ErrorKind::Parse, path.string() + ": no points");
  const std::size_t n = values.size() / 3;
  return PointCloudSample{Tensor({n, 3}, std::move(values)), label, "file:" + path.string()};
}

PointCloudSample load_off(const std::filesystem::path& path, std::size_t n_points, Rng& rng, int label) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Path, "cannot open " + path.string());
  if (n_points == 0) throw Error(ErrorKind::Parameter, "load_off needs n_points > 0");

  // Token stream that remembers line numbers and skips comments.
  std::vector<std::pair<std::string, std::size_t>> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    for (auto t : split_ws(line)) tokens.emplace_back(std::string(t), lineno);
  }
  std::size_t pos = 0;
  const auto next = [&](const char* what) -> const std::pair<std::string, std::size_t>& {
    if (pos >= tokens.size()) parse_error(path, lineno, std::string("unexpected end of file, expected ") + what);
    return tokens[pos++];
  };
  if (tokens.empty() || tokens[0].first.rfind("OFF", 0) != 0) parse_error(path, 1, "missing OFF header");
  std::string head = tokens[0].first.substr(3);
  ++pos;
  // Some exporters glue the counts to the header ("OFF8 6 0").
  if (!head.empty()) tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(pos), {head, tokens[0].second});

  const auto read_count = [&](const char* what) {
    const auto& [tok, ln] = next(what);
    std::size_t v = 0;
    if (!parse_number(tok, v)) parse_error(path, ln, std::string("bad ") + what + " '" + tok + "'");
    return v;
  };
  const std::size_t nv = read_count("vertex count");
  const std::size_t nf = read_count("face count");
  read_count("edge count");
  if (nv == 0 || nf == 0) parse_error(path, tokens[0].second, "mesh has no vertices or faces");

  std::vector<Vec3> verts(nv);
  for (auto& v : verts) {
    double c[3];
    for (double& x : c) {
      const auto& [tok, ln] = next("vertex coordinate");
      if (!parse_number(tok, x)) parse_error(path, ln, "bad vertex coordinate '" + tok + "'");
    }
    v = {c[0], c[1], c[2]};
  }
  std::vector<std::array<Vec3, 3>> tris;
  for (std::size_t f = 0; f < nf; ++f) {
    const std::size_t ln = pos < tokens.size() ? tokens[pos].second : lineno;
    const std::size_t k = read_count("face arity");
    if (k < 3) parse_error(path, ln, "face with fewer than 3 vertices");
    std::vector<std::size_t> idx(k);
    for (auto& i : idx) {
      i = read_count("face index");
      if (i >= nv) parse_error(path, ln, "face index " + std::to_string(i) + " out of range");
    }
    for (std::size_t t = 1; t + 1 < k; ++t) tris.push_back({verts[idx[0]], verts[idx[t]], verts[idx[t + 1]]});
    // Faces may carry trailing colour values on the same line.
    while (pos < tokens.size() && tokens[pos].second == ln) ++pos;
  }
  const auto cum = cumulative_areas(tris);
  if (!(cum.back() > 0.0)) parse_error(path, tokens[0].second, "mesh has zero surface area");

  Tensor pts({n_points, 3});
  auto d = pts.data();
  for (std::size_t i = 0; i < n_points; ++i) {
    const Vec3 p = sample_triangles(tris, cum, rng);
    d[3 * i] = static_cast<float>(p.x);
    d[3 * i + 1] = static_cast<float>(p.y);
    d[3 * i + 2] = static_cast<float>(p.z);
  }
  return PointCloudSample{std::move(pts), label, "file:" + path.string()};
}

}  // namespace pclt::data
