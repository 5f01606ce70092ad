// Copyright 2026 The LAD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lad/synthdata.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "lad/config.h"
#include "lad/error.h"
#include "lad/rng.h"

namespace lad {
namespace {

constexpr int kMaxSeedAttempts = 16;
constexpr double kMinClassShare = 0.01;
// Every RGB nuisance below is a multiple of color_noise_sigma, so sigma = 0
// renders flat, sharp, full-contrast shapes.
constexpr double kInstanceJitter = 0.5;
constexpr double kBackgroundJitter = 0.125;
constexpr double kPixelNoise = 0.3;
// Optical blur std in pixels per unit sigma, at 64 px.
constexpr double kBlurPerSigma = 8.0;
// A faded instance keeps this fraction of its contrast to the background.
constexpr double kFadeProbabilityPerSigma = 2.0;
constexpr double kFadeContrast = 0.15;
constexpr double kTriangleScale = 1.3;

// Palette for classes that are not part of the confusable pair.
constexpr std::array<Rgb, 6> kPalette = {{
    {0.30, 0.30, 0.30},  // background
    {0.90, 0.25, 0.20},
    {0.85, 0.80, 0.15},
    {0.80, 0.75, 0.20},
    {0.70, 0.35, 0.80},
    {0.95, 0.60, 0.10},
}};

// Confusable pair colors: start + u * direction, u in [0, 1] for the first
// class and in [1 - overlap, 2 - overlap] for the second.
constexpr Rgb kConfusableStart = {0.15, 0.20, 0.85};
constexpr Rgb kConfusableDirection = {0.0, 0.45, 0.0};

bool IsConfusable(const DatasetSpec& spec, int c) {
  return spec.num_classes >= 3 && c >= spec.num_classes - 2;
}

Rgb PaletteColor(int c) {
  if (c < static_cast<int>(kPalette.size())) return kPalette[c];
  // Beyond the palette: spread deterministic colors over the cube.
  double t = c * 0.61803398875;
  return {std::fmod(t, 1.0) * 0.7 + 0.15, std::fmod(t * 1.7, 1.0) * 0.7 + 0.15,
          std::fmod(t * 2.3, 1.0) * 0.7 + 0.15};
}

Rgb Along(double u) {
  return {kConfusableStart[0] + u * kConfusableDirection[0],
          kConfusableStart[1] + u * kConfusableDirection[1],
          kConfusableStart[2] + u * kConfusableDirection[2]};
}

// Offset of the confusable class c's color interval along the direction.
double ConfusableOffset(const DatasetSpec& spec, int c) {
  return c == spec.num_classes - 2 ? 0.0 : 1.0 - spec.class_color_overlap;
}

// Confusable classes vary along their shared direction; every class then
// gets a Gaussian per-instance perturbation.
Rgb InstanceColor(const DatasetSpec& spec, int c, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, spec.color_noise_sigma);
  Rgb color = IsConfusable(spec, c) ? Along(ConfusableOffset(spec, c) + unit(rng))
                                    : PaletteColor(c);
  const double scale = c == 0 ? kBackgroundJitter : kInstanceJitter;
  if (spec.color_noise_sigma > 0.0) {
    for (double& v : color) v += scale * gauss(rng);
  }
  return color;
}

struct Shape {
  ShapeKind kind;
  double cx, cy, radius, aux, angle;

  bool Contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    switch (kind) {
      case ShapeKind::kRectangle:
        return std::abs(dx) <= radius && std::abs(dy) <= aux;
      case ShapeKind::kDisc:
        return dx * dx + dy * dy <= radius * radius;
      case ShapeKind::kAnnulus: {
        const double d2 = dx * dx + dy * dy;
        return d2 <= radius * radius && d2 >= aux * aux;
      }
      case ShapeKind::kTriangle: {
        // Equilateral triangle: inside all three edge half-planes.
        for (int k = 0; k < 3; ++k) {
          const double a = angle + k * 2.0 * std::numbers::pi / 3.0;
          const double nx = std::cos(a), ny = std::sin(a);
          if (dx * nx + dy * ny > radius * 0.5) return false;
        }
        return true;
      }
    }
    return false;
  }
};

Shape RandomShape(ShapeKind kind, int size, Rng& rng) {
  const double scale = size / 64.0;
  std::uniform_real_distribution<double> radius_dist(4.5 * scale, 10.5 * scale);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Shape s{kind, 0, 0, radius_dist(rng), 0, 0};
  switch (kind) {
    case ShapeKind::kRectangle:
      s.aux = s.radius * (0.6 + 0.4 * unit(rng));
      s.radius *= 0.6 + 0.4 * unit(rng);
      break;
    case ShapeKind::kAnnulus:
      s.aux = 0.5 * s.radius;
      break;
    case ShapeKind::kTriangle:
      // `radius` is the circumradius; Contains() uses the inradius r / 2.
      s.radius *= kTriangleScale;
      s.angle = unit(rng) * 2.0 * std::numbers::pi;
      break;
    case ShapeKind::kDisc:
      break;
  }
  std::uniform_real_distribution<double> pos(s.radius, size - s.radius);
  s.cx = pos(rng);
  s.cy = pos(rng);
  return s;
}

// Separable Gaussian blur, edges clamped.
void Blur(std::vector<Rgb>& color, int size, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    total += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  }
  for (double& v : k) v /= total;
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<Rgb> out(color.size(), Rgb{0.0, 0.0, 0.0});
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        Rgb& dst = out[y * size + x];
        for (int i = -r; i <= r; ++i) {
          const int xx = axis == 0 ? std::clamp(x + i, 0, size - 1) : x;
          const int yy = axis == 1 ? std::clamp(y + i, 0, size - 1) : y;
          const Rgb& src = color[yy * size + xx];
          for (int ch = 0; ch < 3; ++ch) dst[ch] += k[i + r] * src[ch];
        }
      }
    }
    color = std::move(out);
  }
}

std::string Indexed(int i) {
  char name[32];
  std::snprintf(name, sizeof(name), "%05d.png", i);
  return name;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  Require(static_cast<bool>(out), ErrorCode::kIo,
          "failed to write " + path.string());
}

bool CoverageOk(const DatasetSpec& spec) {
  std::vector<double> counts(spec.num_classes, 0.0);
  double total = 0.0;
  for (int i = 0; i < spec.num_train; ++i) {
    RawSample s = GenerateSample(spec, i);
    for (std::uint8_t v : s.label.data()) {
      if (v == LabelMap::kIgnore) continue;
      counts[v] += 1.0;
      total += 1.0;
    }
  }
  return std::all_of(counts.begin(), counts.end(), [&](double c) {
    return total > 0.0 && c / total >= kMinClassShare;
  });
}

}  // namespace

void ValidateDatasetSpec(const DatasetSpec& spec) {
  Require(spec.num_classes >= 2 && spec.num_classes < LabelMap::kIgnore,
          ErrorCode::kInvalidArgument, "num_classes must be in [2, 254]");
  Require(spec.image_size >= 16, ErrorCode::kInvalidArgument,
          "image_size must be >= 16");
  Require(spec.num_train >= 1 && spec.num_val >= 1,
          ErrorCode::kInvalidArgument, "both splits need at least one sample");
  Require(spec.color_noise_sigma >= 0.0, ErrorCode::kInvalidArgument,
          "color_noise_sigma must be >= 0");
  Require(spec.class_color_overlap >= 0.0 && spec.class_color_overlap <= 1.0,
          ErrorCode::kInvalidArgument, "class_color_overlap must be in [0, 1]");
  Require(spec.ignore_border >= 0, ErrorCode::kInvalidArgument,
          "ignore_border must be >= 0");
}

ShapeKind ShapeForClass(int class_id) {
  return static_cast<ShapeKind>((class_id - 1) % 4);
}

std::vector<Rgb> ClassBaseColors(const DatasetSpec& spec) {
  std::vector<Rgb> colors(spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) {
    colors[c] = IsConfusable(spec, c) ? Along(ConfusableOffset(spec, c) + 0.5)
                                      : PaletteColor(c);
  }
  return colors;
}

RawSample GenerateSample(const DatasetSpec& spec, int index) {
  ValidateDatasetSpec(spec);
  Rng rng = MakeRng(spec.seed, "sample", static_cast<std::uint64_t>(index));
  const int size = spec.image_size;
  const std::size_t pixels = static_cast<std::size_t>(size) * size;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Rgb background = InstanceColor(spec, 0, rng);
  std::vector<Rgb> color(pixels, background);
  const double fade_probability =
      std::min(1.0, kFadeProbabilityPerSigma * spec.color_noise_sigma);
  std::vector<std::uint8_t> label(pixels, 0);
  std::uniform_int_distribution<int> count_dist(1, 4);
  std::uniform_int_distribution<int> class_dist(1, spec.num_classes - 1);
  const int shapes = count_dist(rng);
  const int b = spec.ignore_border;
  std::vector<char> mask(pixels);
  for (int k = 0; k < shapes; ++k) {
    const int cls = class_dist(rng);
    const Shape shape = RandomShape(ShapeForClass(cls), size, rng);
    Rgb fill = InstanceColor(spec, cls, rng);
    if (unit(rng) < fade_probability) {
      for (int ch = 0; ch < 3; ++ch) {
        fill[ch] = background[ch] + kFadeContrast * (fill[ch] - background[ch]);
      }
    }
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        mask[y * size + x] = shape.Contains(x + 0.5, y + 0.5);
      }
    }
    // Ring of width b just outside the shape.
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        if (mask[y * size + x]) continue;
        bool near = false;
        for (int dy = -b; dy <= b && !near; ++dy) {
          for (int dx = -b; dx <= b && !near; ++dx) {
            const int yy = y + dy, xx = x + dx;
            near = yy >= 0 && yy < size && xx >= 0 && xx < size &&
                   mask[yy * size + xx];
          }
        }
        if (near) label[y * size + x] = LabelMap::kIgnore;
      }
    }
    for (std::size_t i = 0; i < pixels; ++i) {
      if (!mask[i]) continue;
      label[i] = static_cast<std::uint8_t>(cls);
      color[i] = fill;
    }
  }

  const double blur = kBlurPerSigma * spec.color_noise_sigma * size / 64.0;
  if (blur > 0.0) Blur(color, size, blur);

  RawSample out;
  out.rgb.width = out.rgb.height = size;
  out.rgb.channels = 3;
  out.rgb.pixels.resize(pixels * 3);
  for (std::size_t i = 0; i < pixels; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      double v = color[i][ch] + kPixelNoise * spec.color_noise_sigma * gauss(rng);
      v = std::clamp(v, 0.0, 1.0);
      out.rgb.pixels[i * 3 + ch] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  out.label = LabelMap(size, size, spec.num_classes, std::move(label));
  return out;
}

ImageTensor NormalizeImage(const Image8& rgb) {
  Require(rgb.channels == 3, ErrorCode::kInvalidArgument,
          "expected an RGB image");
  ImageTensor out(3, rgb.height, rgb.width);
  const std::size_t plane = out.plane_size();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      out.channel(ch)[i] = (rgb.pixels[i * 3 + ch] / 255.0 - 0.5) / 0.25;
    }
  }
  return out;
}

DatasetManifest GenerateDataset(const DatasetSpec& spec,
                                const std::filesystem::path& out_dir) {
  ValidateDatasetSpec(spec);
  DatasetSpec effective = spec;
  int attempt = 0;
  while (!CoverageOk(effective)) {
    Require(++attempt < kMaxSeedAttempts, ErrorCode::kInvalidArgument,
            "could not reach 1% coverage for every class; increase num_train");
    effective.seed = spec.seed + attempt;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  Require(!ec, ErrorCode::kIo,
          "cannot create " + (out_dir / "images").string() + ": " + ec.message());
  std::filesystem::create_directories(out_dir / "labels", ec);
  Require(!ec, ErrorCode::kIo,
          "cannot create " + (out_dir / "labels").string() + ": " + ec.message());

  const int total = spec.num_train + spec.num_val;
  for (int i = 0; i < total; ++i) {
    RawSample s = GenerateSample(effective, i);
    WritePng(out_dir / "images" / Indexed(i), s.rgb);
    Image8 label{s.label.width(), s.label.height(), 1,
                 std::vector<std::uint8_t>(s.label.data().begin(),
                                           s.label.data().end())};
    WritePng(out_dir / "labels" / Indexed(i), label);
  }

  DatasetManifest manifest;
  manifest.spec = spec;
  manifest.effective_seed = effective.seed;
  WriteText(out_dir / "manifest.json", ToJson(manifest).dump(2) + "\n");
  return manifest;
}

Dataset LoadDataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  Require(std::filesystem::is_regular_file(manifest_path), ErrorCode::kIo,
          "missing dataset manifest " + manifest_path.string());
  Dataset dataset;
  dataset.manifest = DatasetManifestFromJson(ReadJsonFile(manifest_path));
  const DatasetSpec& spec = dataset.manifest.spec;
  Require(dataset.manifest.format_version == 1, ErrorCode::kIo,
          manifest_path.string() + ": unsupported format_version");

  std::vector<std::filesystem::path> images;
  if (std::filesystem::is_directory(dir / "images")) {
    for (const auto& entry : std::filesystem::directory_iterator(dir / "images")) {
      if (entry.path().extension() == ".png") images.push_back(entry.path());
    }
  }
  std::sort(images.begin(), images.end());
  const int total = spec.num_train + spec.num_val;
  Require(static_cast<int>(images.size()) == total, ErrorCode::kIo,
          (dir / "images").string() + " holds " + std::to_string(images.size()) +
              " PNG files, manifest expects " + std::to_string(total));

  for (int i = 0; i < total; ++i) {
    const auto& image_path = images[i];
    const auto label_path = dir / "labels" / image_path.filename();
    Image8 rgb = ReadPng(image_path);
    Require(rgb.channels == 3 && rgb.width == spec.image_size &&
                rgb.height == spec.image_size,
            ErrorCode::kIo, image_path.string() + " has unexpected dimensions");
    Require(std::filesystem::is_regular_file(label_path), ErrorCode::kIo,
            "missing label file " + label_path.string());
    Image8 raw_label = ReadPng(label_path);
    Require(raw_label.channels == 1 && raw_label.width == rgb.width &&
                raw_label.height == rgb.height,
            ErrorCode::kIo, label_path.string() + " has unexpected dimensions");
    Sample sample;
    sample.image = NormalizeImage(rgb);
    try {
      sample.label = LabelMap(raw_label.height, raw_label.width,
                              spec.num_classes, std::move(raw_label.pixels));
    } catch (const Error& e) {
      Fail(ErrorCode::kIo, label_path.string() + ": " + e.what());
    }
    (i < spec.num_train ? dataset.train : dataset.val).push_back(std::move(sample));
  }
  return dataset;
}

std::vector<int> ShuffledOrder(int n, std::uint64_t seed) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace lad
