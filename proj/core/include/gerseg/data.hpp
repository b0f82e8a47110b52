#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gerseg/tensor.hpp"

// Seeded synthetic segmentation data: blobby foreground shapes on a darker
// background, with optional noise. Blob orientations are confined to a
// narrow band and blob interiors carry a left-to-right shading ramp, so the
// image distribution is deliberately anisotropic; square-symmetry transforms
// of a test image land outside the training distribution.
namespace gerseg::data {

struct SynthSpec {
  uint64_t seed = 1;
  int count = 0;
  int size = 64;  // H = W, must be divisible by 8
  int blobs_min = 1;
  int blobs_max = 3;
  bool ellipses = true;
  bool rectangles = true;
  double fg_lo = 0.60, fg_hi = 0.90;
  double bg_lo = 0.10, bg_hi = 0.40;
  double noise_sigma = 0.05;
  double angle_max = 0.5;  // blob rotation spread, radians
  double shade = 0.15;     // interior shading amplitude along image x

  void validate() const;  // throws std::invalid_argument
};

struct Sample {
  Tensor<float> image;   // [1,H,W], values in [0,1]
  Tensor<uint8_t> mask;  // [H,W], 0/1
};

struct Dataset {
  std::vector<Sample> samples;
  int count() const { return static_cast<int>(samples.size()); }
};

Dataset generate(const SynthSpec& spec);

// Directory layout: dir/manifest.json, dir/img_00000.gten (f32 [1,H,W]),
// dir/msk_00000.gten (u8 [H,W]).
void save_dataset(const std::string& dir, const Dataset& ds, const SynthSpec& spec);
Dataset load_dataset(const std::string& dir);

// JSON <-> spec for config files and the dataset manifest. Parsing rejects
// unknown keys (ConfigError) so typos never silently fall back to defaults.
SynthSpec synth_spec_from_json_text(const std::string& text);
std::string synth_spec_to_json_text(const SynthSpec& spec, int indent = 2);

}  // namespace gerseg::data
