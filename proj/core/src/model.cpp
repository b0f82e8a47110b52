#include "gerseg/model.hpp"

#include <cmath>

#include <json.hpp>

#include "gerseg/common.hpp"

namespace gerseg::models {

using nlohmann::json;

int scale_width(int channels) {
  GERSEG_CHECK(channels >= 1, "scale_width: channels must be >= 1");
  const long w = std::lround(static_cast<double>(channels) / std::sqrt(8.0));
  return static_cast<int>(std::max(1L, w));
}

void ModelConfig::validate() const {
  if (arch != "ger-unet" && arch != "r-unet") {
    throw ConfigError("model: arch must be 'ger-unet' or 'r-unet', got '" + arch + "'");
  }
  if (in_channels < 1) throw ConfigError("model: in_channels must be >= 1");
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (base_channels < 4) throw ConfigError("model: base_channels must be >= 4");
  if (skip_mode != "add" && skip_mode != "concat") {
    throw ConfigError("model: skip_mode must be 'add' or 'concat', got '" + skip_mode + "'");
  }
  if (upsample_mode != "nearest" && upsample_mode != "bilinear") {
    throw ConfigError("model: upsample_mode must be 'nearest' or 'bilinear', got '" + upsample_mode + "'");
  }
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) throw ConfigError("model: bn_momentum must be in (0,1)");
  if (!(bn_eps > 0.0)) throw ConfigError("model: bn_eps must be > 0");
}

namespace {

json config_to_json(const ModelConfig& c) {
  return json{{"arch", c.arch},
              {"in_channels", c.in_channels},
              {"num_classes", c.num_classes},
              {"base_channels", c.base_channels},
              {"skip_mode", c.skip_mode},
              {"upsample_mode", c.upsample_mode},
              {"bn_momentum", c.bn_momentum},
              {"bn_eps", c.bn_eps}};
}

}  // namespace

ModelConfig model_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  const json defaults = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("unknown model config key '" + key + "'");
    try {
      if (key == "arch")
        c.arch = value.get<std::string>();
      else if (key == "in_channels")
        c.in_channels = value.get<int>();
      else if (key == "num_classes")
        c.num_classes = value.get<int>();
      else if (key == "base_channels")
        c.base_channels = value.get<int>();
      else if (key == "skip_mode")
        c.skip_mode = value.get<std::string>();
      else if (key == "upsample_mode")
        c.upsample_mode = value.get<std::string>();
      else if (key == "bn_momentum")
        c.bn_momentum = value.get<double>();
      else if (key == "bn_eps")
        c.bn_eps = value.get<double>();
    } catch (const json::exception&) {
      throw ConfigError("bad value type for model config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

std::string model_config_to_json_text(const ModelConfig& cfg, int indent) {
  return config_to_json(cfg).dump(indent);
}

}  // namespace gerseg::models
