#include "gerseg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "gerseg/common.hpp"
#include "gerseg/io.hpp"

namespace gerseg::data {

namespace fs = std::filesystem;
using nlohmann::json;

void SynthSpec::validate() const {
  if (size <= 0 || size % 8 != 0) {
    throw std::invalid_argument("synth: size must be a positive multiple of 8, got " +
                                std::to_string(size));
  }
  GERSEG_CHECK(count >= 0, "synth: count must be >= 0");
  GERSEG_CHECK(blobs_min >= 1 && blobs_max >= blobs_min, "synth: need 1 <= blobs_min <= blobs_max");
  GERSEG_CHECK(ellipses || rectangles, "synth: at least one blob kind must be enabled");
  GERSEG_CHECK(0.0 <= fg_lo && fg_lo <= fg_hi && fg_hi <= 1.0, "synth: foreground range must be within [0,1]");
  GERSEG_CHECK(0.0 <= bg_lo && bg_lo <= bg_hi && bg_hi <= 1.0, "synth: background range must be within [0,1]");
  GERSEG_CHECK(noise_sigma >= 0.0, "synth: noise sigma must be >= 0");
  GERSEG_CHECK(angle_max >= 0.0 && angle_max <= 3.2, "synth: angle_max must be in [0, pi]");
  GERSEG_CHECK(shade >= 0.0 && shade <= 1.0, "synth: shade must be in [0,1]");
}

namespace {

struct Blob {
  bool rectangle = false;
  double cy = 0, cx = 0;  // center, pixel units
  double a = 0, b = 0;    // semi-axes, a along the blob axis
  double cos_t = 1, sin_t = 0;
  double base = 0;  // interior intensity before shading/noise
};

bool inside(const Blob& bl, int r, int c) {
  const double dy = r - bl.cy, dx = c - bl.cx;
  const double u = dx * bl.cos_t + dy * bl.sin_t;   // along the blob axis
  const double v = -dx * bl.sin_t + dy * bl.cos_t;  // across it
  if (bl.rectangle) return std::abs(u) <= bl.a && std::abs(v) <= bl.b;
  const double eu = u / bl.a, ev = v / bl.b;
  return eu * eu + ev * ev <= 1.0;
}

Sample make_sample(const SynthSpec& spec, std::mt19937& rng) {
  const int S = spec.size;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  for (int attempt = 0; attempt < 100; ++attempt) {
    Sample s{Tensor<float>({1, S, S}), Tensor<uint8_t>({S, S})};
    const double bg = uniform(spec.bg_lo, spec.bg_hi);
    std::fill(s.image.data(), s.image.data() + s.image.numel(), static_cast<float>(bg));

    std::uniform_int_distribution<int> blob_count(spec.blobs_min, spec.blobs_max);
    const int nblobs = blob_count(rng);
    for (int bi = 0; bi < nblobs; ++bi) {
      Blob bl;
      if (spec.ellipses && spec.rectangles) {
        bl.rectangle = std::uniform_int_distribution<int>(0, 1)(rng) != 0;
      } else {
        bl.rectangle = spec.rectangles;
      }
      bl.a = uniform(0.10, 0.20) * S;
      bl.b = uniform(0.05, 0.11) * S;
      if (bl.b > bl.a) std::swap(bl.a, bl.b);
      const double theta = uniform(-spec.angle_max, spec.angle_max);
      bl.cos_t = std::cos(theta);
      bl.sin_t = std::sin(theta);
      const double margin = std::hypot(bl.a, bl.b) + 1.5;
      bl.cy = uniform(margin, S - 1 - margin);
      bl.cx = uniform(margin, S - 1 - margin);
      bl.base = uniform(spec.fg_lo, spec.fg_hi);

      const int r0 = std::max(0, static_cast<int>(std::floor(bl.cy - margin)));
      const int r1 = std::min(S - 1, static_cast<int>(std::ceil(bl.cy + margin)));
      const int c0 = std::max(0, static_cast<int>(std::floor(bl.cx - margin)));
      const int c1 = std::min(S - 1, static_cast<int>(std::ceil(bl.cx + margin)));
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          if (!inside(bl, r, c)) continue;
          s.mask.at(r, c) = 1;
          const double ramp = spec.shade * (c - bl.cx) / bl.a;
          s.image.at(0, r, c) = static_cast<float>(std::clamp(bl.base + ramp, 0.0, 1.0));
        }
      }
    }

    if (spec.noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, spec.noise_sigma);
      for (int64_t i = 0; i < s.image.numel(); ++i) {
        s.image[i] = static_cast<float>(std::clamp(static_cast<double>(s.image[i]) + noise(rng), 0.0, 1.0));
      }
    }

    bool any = false;
    for (int64_t i = 0; i < s.mask.numel() && !any; ++i) any = s.mask[i] != 0;
    if (any) return s;
  }
  throw std::logic_error("synth: failed to place a non-empty mask after 100 attempts");
}

std::string index_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05d.gten", prefix, i);
  return buf;
}

json spec_to_json(const SynthSpec& s) {
  return json{{"seed", s.seed},
              {"count", s.count},
              {"size", s.size},
              {"blobs_min", s.blobs_min},
              {"blobs_max", s.blobs_max},
              {"ellipses", s.ellipses},
              {"rectangles", s.rectangles},
              {"fg_lo", s.fg_lo},
              {"fg_hi", s.fg_hi},
              {"bg_lo", s.bg_lo},
              {"bg_hi", s.bg_hi},
              {"noise_sigma", s.noise_sigma},
              {"angle_max", s.angle_max},
              {"shade", s.shade}};
}

SynthSpec spec_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": synth spec must be a JSON object");
  SynthSpec s;
  const json defaults = spec_to_json(s);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) {
      throw ConfigError(where + ": unknown synth spec key '" + key + "'");
    }
    try {
      if (key == "seed")
        s.seed = value.get<uint64_t>();
      else if (key == "count")
        s.count = value.get<int>();
      else if (key == "size")
        s.size = value.get<int>();
      else if (key == "blobs_min")
        s.blobs_min = value.get<int>();
      else if (key == "blobs_max")
        s.blobs_max = value.get<int>();
      else if (key == "ellipses")
        s.ellipses = value.get<bool>();
      else if (key == "rectangles")
        s.rectangles = value.get<bool>();
      else if (key == "fg_lo")
        s.fg_lo = value.get<double>();
      else if (key == "fg_hi")
        s.fg_hi = value.get<double>();
      else if (key == "bg_lo")
        s.bg_lo = value.get<double>();
      else if (key == "bg_hi")
        s.bg_hi = value.get<double>();
      else if (key == "noise_sigma")
        s.noise_sigma = value.get<double>();
      else if (key == "angle_max")
        s.angle_max = value.get<double>();
      else if (key == "shade")
        s.shade = value.get<double>();
    } catch (const json::exception&) {
      throw ConfigError(where + ": bad value type for synth spec key '" + key + "'");
    }
  }
  return s;
}

}  // namespace

Dataset generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937 rng(static_cast<uint32_t>(spec.seed ^ (spec.seed >> 32)));
  Dataset ds;
  ds.samples.reserve(static_cast<size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) ds.samples.push_back(make_sample(spec, rng));
  return ds;
}

void save_dataset(const std::string& dir, const Dataset& ds, const SynthSpec& spec) {
  fs::create_directories(dir);
  json manifest{{"format", "gerseg-dataset"},
                {"version", 1},
                {"generator", "mt19937"},
                {"count", ds.count()},
                {"spec", spec_to_json(spec)}};
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw FormatError("cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
  for (int i = 0; i < ds.count(); ++i) {
    const auto& s = ds.samples[static_cast<size_t>(i)];
    io::write_tensor((fs::path(dir) / index_name("img", i)).string(), s.image);
    io::write_tensor((fs::path(dir) / index_name("msk", i)).string(), s.mask);
  }
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw FormatError("cannot open manifest in " + dir);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw FormatError("bad manifest JSON in " + dir + ": " + e.what());
  }
  if (manifest.value("format", "") != "gerseg-dataset") {
    throw FormatError("not a dataset manifest: " + dir);
  }
  const int count = manifest.value("count", -1);
  if (count < 0) throw FormatError("manifest missing count: " + dir);
  Dataset ds;
  ds.samples.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.image = io::read_tensor<float>((fs::path(dir) / index_name("img", i)).string());
    s.mask = io::read_tensor<uint8_t>((fs::path(dir) / index_name("msk", i)).string());
    if (s.image.ndim() != 3 || s.image.dim(0) != 1 || s.mask.ndim() != 2 ||
        s.image.dim(1) != s.mask.dim(0) || s.image.dim(2) != s.mask.dim(1)) {
      throw FormatError("dataset sample " + std::to_string(i) + " has inconsistent shapes in " + dir);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

SynthSpec synth_spec_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad synth spec JSON: ") + e.what());
  }
  return spec_from_json(j, "synth spec");
}

std::string synth_spec_to_json_text(const SynthSpec& spec, int indent) {
  return spec_to_json(spec).dump(indent);
}

}  // namespace gerseg::data
