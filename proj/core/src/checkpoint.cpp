#include "gerseg/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "gerseg/common.hpp"

namespace gerseg::checkpoint {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'G', 'E', 'R', 'U'};
constexpr uint32_t kVersion = 1;

template <typename T>
const char* dtype_name();
template <>
const char* dtype_name<float>() {
  return "f32";
}
template <>
const char* dtype_name<double>() {
  return "f64";
}

size_t dtype_size(const std::string& d) {
  if (d == "f32") return 4;
  if (d == "f64") return 8;
  throw CheckpointError("checkpoint: unsupported dtype '" + d + "'");
}

struct ArrayEntry {
  std::string name;
  std::vector<int> shape;
  uint64_t offset = 0;
};

struct Header {
  std::string dtype;
  models::ModelConfig config;
  TrainMeta meta;
  std::vector<ArrayEntry> arrays;
};

void read_exact(std::ifstream& in, void* p, size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) throw CheckpointError("checkpoint truncated: " + path);
}

Header read_header(std::ifstream& in, const std::string& path) {
  char magic[4];
  read_exact(in, magic, 4, path);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("not a checkpoint (bad magic): " + path);
  uint32_t version = 0;
  read_exact(in, &version, 4, path);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  }
  uint64_t len = 0;
  read_exact(in, &len, 8, path);
  if (len == 0 || len > (uint64_t(1) << 30)) throw CheckpointError("bad checkpoint header length: " + path);
  std::string text(len, '\0');
  read_exact(in, text.data(), len, path);

  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header JSON: ") + e.what());
  }
  Header h;
  try {
    h.dtype = j.at("dtype").get<std::string>();
    h.config = models::model_config_from_json_text(j.at("config").dump());
    h.meta.epoch = j.value("epoch", 0);
    h.meta.best_val_dice = j.value("best_val_dice", 0.0);
    if (j.contains("adam")) {
      h.meta.has_adam = true;
      h.meta.adam_t = j.at("adam").value("t", int64_t(0));
    }
    for (const auto& a : j.at("arrays")) {
      ArrayEntry e;
      e.name = a.at("name").get<std::string>();
      e.shape = a.at("shape").get<std::vector<int>>();
      e.offset = a.at("offset").get<uint64_t>();
      h.arrays.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("incomplete checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("bad config in checkpoint: ") + e.what());
  }
  dtype_size(h.dtype);
  return h;
}

template <typename T, typename S>
void read_array_as(std::ifstream& in, Tensor<T>& dst, const std::string& path) {
  std::vector<S> buf(static_cast<size_t>(dst.numel()));
  read_exact(in, buf.data(), sizeof(S) * buf.size(), path);
  for (int64_t i = 0; i < dst.numel(); ++i) dst[i] = static_cast<T>(buf[static_cast<size_t>(i)]);
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (size_t i = 0; i < names.size() && i < 8; ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  if (names.size() > 8) out += ", ... (" + std::to_string(names.size()) + " total)";
  return out;
}

}  // namespace

CheckpointInfo peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  const Header h = read_header(in, path);
  return CheckpointInfo{h.config, h.dtype, h.meta};
}

template <typename T>
void save_model(const std::string& path, models::SegNet<T>& model, const TrainMeta& meta,
                const std::vector<Tensor<T>>* adam_m, const std::vector<Tensor<T>>* adam_v) {
  auto state = model.state();
  std::vector<std::pair<std::string, const Tensor<T>*>> arrays;
  for (const auto& [name, t] : state) arrays.emplace_back(name, t);
  if (adam_m && adam_v) {
    auto params = model.parameters();
    GERSEG_CHECK(adam_m->size() == params.size() && adam_v->size() == params.size(),
                 "save_model: optimizer state size mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
      arrays.emplace_back("adam.m." + params[i]->name, &(*adam_m)[i]);
      arrays.emplace_back("adam.v." + params[i]->name, &(*adam_v)[i]);
    }
  }

  json jarrays = json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : arrays) {
    jarrays.push_back({{"name", name}, {"shape", t->shape()}, {"offset", offset}});
    offset += sizeof(T) * static_cast<uint64_t>(t->numel());
  }
  json header{{"dtype", dtype_name<T>()},
              {"config", json::parse(models::model_config_to_json_text(model.config(), -1))},
              {"epoch", meta.epoch},
              {"best_val_dice", meta.best_val_dice},
              {"arrays", std::move(jarrays)}};
  if (adam_m && adam_v) header["adam"] = json{{"t", meta.adam_t}};

  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), 4);
  const uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : arrays) {
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(sizeof(T) * static_cast<size_t>(t->numel())));
  }
  if (!out) throw CheckpointError("checkpoint write failed: " + path);
}

template <typename T>
TrainMeta load_model(const std::string& path, models::SegNet<T>& model, std::vector<Tensor<T>>* adam_m,
                     std::vector<Tensor<T>>* adam_v) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  const Header h = read_header(in, path);

  std::map<std::string, const ArrayEntry*> by_name;
  for (const auto& e : h.arrays) {
    if (!by_name.emplace(e.name, &e).second) {
      throw CheckpointError("duplicate array '" + e.name + "' in checkpoint: " + path);
    }
  }

  auto state = model.state();
  std::vector<std::string> missing;
  for (const auto& [name, t] : state) {
    if (by_name.find(name) == by_name.end()) missing.push_back(name);
  }
  if (!missing.empty()) {
    throw CheckpointError("checkpoint " + path + " is missing arrays: " + join_names(missing));
  }
  std::vector<std::string> unexpected;
  for (const auto& e : h.arrays) {
    if (e.name.rfind("adam.", 0) == 0) continue;
    bool known = false;
    for (const auto& [name, t] : state) {
      if (name == e.name) {
        known = true;
        break;
      }
    }
    if (!known) unexpected.push_back(e.name);
  }
  if (!unexpected.empty()) {
    throw CheckpointError("checkpoint " + path + " has arrays the model does not: " +
                          join_names(unexpected));
  }

  // Arrays are stored back to back in header order; restore sequentially.
  const std::streampos payload_start = in.tellg();
  auto load_into = [&](const ArrayEntry& e, Tensor<T>& dst) {
    if (e.shape != dst.shape()) {
      throw CheckpointError("checkpoint array '" + e.name + "' shape mismatch: " + path);
    }
    in.seekg(payload_start + static_cast<std::streamoff>(e.offset));
    if (h.dtype == "f32") {
      read_array_as<T, float>(in, dst, path);
    } else {
      read_array_as<T, double>(in, dst, path);
    }
  };

  for (auto& [name, t] : state) load_into(*by_name.at(name), *t);

  TrainMeta meta = h.meta;
  if (adam_m && adam_v) {
    auto params = model.parameters();
    adam_m->clear();
    adam_v->clear();
    bool all_present = h.meta.has_adam;
    for (const auto* p : params) {
      if (by_name.find("adam.m." + p->name) == by_name.end() ||
          by_name.find("adam.v." + p->name) == by_name.end()) {
        all_present = false;
        break;
      }
    }
    if (all_present) {
      for (const auto* p : params) {
        Tensor<T> m(p->value.shape()), v(p->value.shape());
        load_into(*by_name.at("adam.m." + p->name), m);
        load_into(*by_name.at("adam.v." + p->name), v);
        adam_m->push_back(std::move(m));
        adam_v->push_back(std::move(v));
      }
      meta.has_adam = true;
    } else {
      meta.has_adam = false;
    }
  }
  return meta;
}

template void save_model<float>(const std::string&, models::SegNet<float>&, const TrainMeta&,
                                const std::vector<Tensor<float>>*, const std::vector<Tensor<float>>*);
template void save_model<double>(const std::string&, models::SegNet<double>&, const TrainMeta&,
                                 const std::vector<Tensor<double>>*, const std::vector<Tensor<double>>*);
template TrainMeta load_model<float>(const std::string&, models::SegNet<float>&,
                                     std::vector<Tensor<float>>*, std::vector<Tensor<float>>*);
template TrainMeta load_model<double>(const std::string&, models::SegNet<double>&,
                                      std::vector<Tensor<double>>*, std::vector<Tensor<double>>*);

}  // namespace gerseg::checkpoint
