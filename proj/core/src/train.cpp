#include "gerseg/train.hpp"

#include <json.hpp>

#include "gerseg/common.hpp"

namespace gerseg::train {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs_max < 0) throw ConfigError("train: epochs_max must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (!(lr > 0)) throw ConfigError("train: lr must be > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw ConfigError("train: adam betas must be in [0,1)");
  }
  if (!(eps > 0)) throw ConfigError("train: adam eps must be > 0");
  if (lr_schedule != "none" && lr_schedule != "step") {
    throw ConfigError("train: lr_schedule must be 'none' or 'step', got '" + lr_schedule + "'");
  }
  if (lr_step_every < 1) throw ConfigError("train: lr_step_every must be >= 1");
  if (!(lr_step_factor > 0 && lr_step_factor <= 1)) {
    throw ConfigError("train: lr_step_factor must be in (0,1]");
  }
  if (!(val_fraction > 0 && val_fraction < 1)) throw ConfigError("train: val_fraction must be in (0,1)");
}

namespace {

json config_to_json(const TrainConfig& c) {
  return json{{"epochs_max", c.epochs_max},
              {"batch_size", c.batch_size},
              {"patience", c.patience},
              {"lr", c.lr},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"eps", c.eps},
              {"lr_schedule", c.lr_schedule},
              {"lr_step_every", c.lr_step_every},
              {"lr_step_factor", c.lr_step_factor},
              {"val_fraction", c.val_fraction},
              {"seed", c.seed}};
}

}  // namespace

TrainConfig train_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad train config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  const json defaults = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("unknown train config key '" + key + "'");
    try {
      if (key == "epochs_max")
        c.epochs_max = value.get<int>();
      else if (key == "batch_size")
        c.batch_size = value.get<int>();
      else if (key == "patience")
        c.patience = value.get<int>();
      else if (key == "lr")
        c.lr = value.get<double>();
      else if (key == "beta1")
        c.beta1 = value.get<double>();
      else if (key == "beta2")
        c.beta2 = value.get<double>();
      else if (key == "eps")
        c.eps = value.get<double>();
      else if (key == "lr_schedule")
        c.lr_schedule = value.get<std::string>();
      else if (key == "lr_step_every")
        c.lr_step_every = value.get<int>();
      else if (key == "lr_step_factor")
        c.lr_step_factor = value.get<double>();
      else if (key == "val_fraction")
        c.val_fraction = value.get<double>();
      else if (key == "seed")
        c.seed = value.get<uint64_t>();
    } catch (const json::exception&) {
      throw ConfigError("bad value type for train config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

std::string train_config_to_json_text(const TrainConfig& cfg, int indent) {
  return config_to_json(cfg).dump(indent);
}

}  // namespace gerseg::train
