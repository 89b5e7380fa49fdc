#pragma once

#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfdeblur/model/network.hpp"

// Checkpoint container: "LFDC" magic, u32 format version, u64 header length,
// a JSON header (config, tensor directory, scalar extras), then raw
// little-endian tensor payloads. Writing is fully deterministic: no
// timestamps, tensor order fixed by the parameter enumeration, JSON keys
// sorted. Identical state produces identical bytes.

namespace lfdeblur {

namespace ckpt {

constexpr uint32_t kVersion = 1;

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"views_u", c.views_u},
                        {"views_v", c.views_v},
                        {"channels", c.channels},
                        {"kernel", c.kernel},
                        {"gen_hidden", c.gen_hidden},
                        {"num_blocks", c.num_blocks},
                        {"angular_kernel", c.angular_kernel},
                        {"attention_hidden", c.attention_hidden},
                        {"use_vasc", c.use_vasc},
                        {"use_dpva", c.use_dpva},
                        {"use_ape", c.use_ape},
                        {"global_residual", c.global_residual}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.views_u = j.at("views_u").get<int>();
  c.views_v = j.at("views_v").get<int>();
  c.channels = j.at("channels").get<int>();
  c.kernel = j.at("kernel").get<int>();
  c.gen_hidden = j.at("gen_hidden").get<int>();
  c.num_blocks = j.at("num_blocks").get<int>();
  c.angular_kernel = j.at("angular_kernel").get<int>();
  c.attention_hidden = j.at("attention_hidden").get<int>();
  c.use_vasc = j.at("use_vasc").get<bool>();
  c.use_dpva = j.at("use_dpva").get<bool>();
  c.use_ape = j.at("use_ape").get<bool>();
  c.global_residual = j.at("global_residual").get<bool>();
  return c;
}

template <class T>
const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

struct File {
  nlohmann::json header;
  std::vector<char> payload;
};

inline void write_file(const std::string& path, const nlohmann::json& header,
                       const std::vector<char>& payload) {
  const std::string htext = header.dump();
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), std::fclose);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const char magic[4] = {'L', 'F', 'D', 'C'};
  uint32_t ver = kVersion;
  uint64_t hlen = htext.size();
  bool ok = std::fwrite(magic, 1, 4, f.get()) == 4 &&
            std::fwrite(&ver, sizeof(ver), 1, f.get()) == 1 &&
            std::fwrite(&hlen, sizeof(hlen), 1, f.get()) == 1 &&
            std::fwrite(htext.data(), 1, htext.size(), f.get()) == htext.size() &&
            (payload.empty() ||
             std::fwrite(payload.data(), 1, payload.size(), f.get()) == payload.size());
  if (!ok) throw IoError("short write to " + path);
}

inline File read_file(const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "rb"), std::fclose);
  if (!f) throw IoError("cannot open checkpoint " + path);
  char magic[4];
  uint32_t ver = 0;
  uint64_t hlen = 0;
  if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, "LFDC", 4) != 0)
    throw IoError(path + " is not a checkpoint file");
  if (std::fread(&ver, sizeof(ver), 1, f.get()) != 1 || ver != kVersion)
    throw IoError(path + ": unsupported checkpoint version");
  if (std::fread(&hlen, sizeof(hlen), 1, f.get()) != 1 || hlen > (1ull << 30))
    throw IoError(path + ": corrupt checkpoint header");
  std::string htext(hlen, '\0');
  if (std::fread(htext.data(), 1, hlen, f.get()) != hlen)
    throw IoError(path + ": truncated checkpoint header");
  File out;
  try {
    out.header = nlohmann::json::parse(htext);
  } catch (const std::exception& e) {
    throw IoError(path + ": bad checkpoint header: " + e.what());
  }
  std::fseek(f.get(), 0, SEEK_END);
  long end = std::ftell(f.get());
  long data_start = long(4 + sizeof(ver) + sizeof(hlen) + hlen);
  std::fseek(f.get(), data_start, SEEK_SET);
  out.payload.resize(size_t(end - data_start));
  if (!out.payload.empty() &&
      std::fread(out.payload.data(), 1, out.payload.size(), f.get()) != out.payload.size())
    throw IoError(path + ": truncated checkpoint payload");
  return out;
}

// Convert one directory entry out of the payload into a typed tensor.
template <class T>
Tensor<T> extract_tensor(const File& file, const nlohmann::json& entry, const std::string& path) {
  std::vector<int64_t> shape = entry.at("shape").get<std::vector<int64_t>>();
  const std::string dtype = entry.at("dtype").get<std::string>();
  const uint64_t offset = entry.at("offset").get<uint64_t>();
  const uint64_t bytes = entry.at("bytes").get<uint64_t>();
  if (offset + bytes > file.payload.size())
    throw IoError(path + ": tensor entry points past the payload");
  Tensor<T> t(shape);
  const size_t elem = dtype == "f32" ? 4 : 8;
  if (bytes != size_t(t.size()) * elem) throw IoError(path + ": tensor size mismatch");
  const char* src = file.payload.data() + offset;
  if (dtype == dtype_name<T>()) {
    std::memcpy(t.data(), src, bytes);
  } else if (dtype == "f32") {
    const float* s = reinterpret_cast<const float*>(src);
    for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = T(s[i]);
  } else if (dtype == "f64") {
    const double* s = reinterpret_cast<const double*>(src);
    for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = T(s[i]);
  } else {
    throw IoError(path + ": unknown dtype " + dtype);
  }
  return t;
}

template <class T>
void append_tensor(nlohmann::json& dir, std::vector<char>& payload, const std::string& name,
                   const Tensor<T>& t) {
  const uint64_t offset = payload.size();
  const uint64_t bytes = uint64_t(t.size()) * sizeof(T);
  payload.resize(payload.size() + bytes);
  std::memcpy(payload.data() + offset, t.data(), bytes);
  dir.push_back(nlohmann::json{{"name", name},
                               {"shape", t.shape()},
                               {"dtype", dtype_name<T>()},
                               {"offset", offset},
                               {"bytes", bytes}});
}

}  // namespace ckpt

template <class T>
void save_model_checkpoint(const std::string& path, const ModelParams<T>& p) {
  nlohmann::json dir = nlohmann::json::array();
  std::vector<char> payload;
  for_each_tensor(p, [&](const std::string& name, const Tensor<T>& t) {
    ckpt::append_tensor(dir, payload, name, t);
  });
  nlohmann::json header{{"kind", "model"},
                        {"precision", ckpt::dtype_name<T>()},
                        {"config", ckpt::config_to_json(p.cfg)},
                        {"tensors", dir}};
  ckpt::write_file(path, header, payload);
}

inline ModelConfig peek_checkpoint_config(const std::string& path) {
  ckpt::File file = ckpt::read_file(path);
  return ckpt::config_from_json(file.header.at("config"));
}

// Loads a model checkpoint, converting precision when necessary. When
// `expected` is given, its architecture must match the stored config exactly.
template <class T>
ModelParams<T> load_model_checkpoint(const std::string& path,
                                     const ModelConfig* expected = nullptr) {
  ckpt::File file = ckpt::read_file(path);
  if (file.header.value("kind", "") != "model")
    throw IoError(path + ": not a model checkpoint");
  ModelConfig cfg = ckpt::config_from_json(file.header.at("config"));
  if (expected && !(cfg == *expected)) {
    std::string diff;
    const nlohmann::json a = ckpt::config_to_json(cfg), b = ckpt::config_to_json(*expected);
    for (auto it = a.begin(); it != a.end(); ++it)
      if (b.at(it.key()) != it.value())
        diff += (diff.empty() ? "" : ", ") + it.key() + "=" + it.value().dump() + " (expected " +
                b.at(it.key()).dump() + ")";
    throw ConfigError(path + ": checkpoint architecture mismatch: " + diff);
  }
  ModelParams<T> p = make_params<T>(cfg);
  std::map<std::string, const nlohmann::json*> entries;
  for (const auto& e : file.header.at("tensors")) entries[e.at("name").get<std::string>()] = &e;
  for_each_tensor(p, [&](const std::string& name, Tensor<T>& t) {
    auto it = entries.find(name);
    if (it == entries.end()) throw IoError(path + ": checkpoint is missing tensor " + name);
    Tensor<T> loaded = ckpt::extract_tensor<T>(file, *it->second, path);
    if (!(loaded.shape() == t.shape()))
      throw IoError(path + ": tensor " + name + " has shape " + loaded.shape_str() +
                    ", expected " + t.shape_str());
    t = std::move(loaded);
    entries.erase(it);
  });
  if (!entries.empty()) throw IoError(path + ": checkpoint has unexpected extra tensors");
  return p;
}

}  // namespace lfdeblur
