/* Copyright 2026 The Retina Report Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "retina/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "retina/error.hpp"

namespace retina {
namespace {

constexpr char kMagic[4] = {'R', 'S', 'C', 'K'};
constexpr std::size_t kPrefixBytes = 4 + 2 + 4;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  return v;
}

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  for (char ch : name) {
    if (ch == ' ' || ch == '\n' || ch == '\t' || ch == '\r') return false;
  }
  return true;
}

nn::Shape parse_shape(const std::string& text) {
  nn::Shape shape;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != part.size() || v == 0) throw DataError("checkpoint: bad shape '" + text + "'");
    shape.push_back(static_cast<std::size_t>(v));
  }
  if (shape.empty()) throw DataError("checkpoint: empty shape");
  return shape;
}

}  // namespace

nn::Tensor& ModelCheckpoint::param(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw DataError("checkpoint has no parameter '" + name + "'");
  return it->second;
}

const nn::Tensor& ModelCheckpoint::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw DataError("checkpoint has no parameter '" + name + "'");
  return it->second;
}

const std::string& ModelCheckpoint::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError("checkpoint has no metadata '" + key + "'");
  return it->second;
}

std::vector<std::pair<std::string, nn::Tensor*>> ModelCheckpoint::with_prefix(std::string_view prefix) {
  std::vector<std::pair<std::string, nn::Tensor*>> out;
  for (auto& [name, tensor] : params) {
    if (std::string_view(name).substr(0, prefix.size()) == prefix) out.emplace_back(name, &tensor);
  }
  return out;
}

void ModelCheckpoint::merge(const ModelCheckpoint& other) {
  for (const auto& [name, tensor] : other.params) {
    if (!params.emplace(name, tensor).second) throw DataError("checkpoint merge: duplicate parameter '" + name + "'");
  }
  for (const auto& [key, value] : other.meta) {
    auto [it, inserted] = meta.emplace(key, value);
    if (!inserted && it->second != value) throw DataError("checkpoint merge: conflicting metadata '" + key + "'");
  }
}

void ModelCheckpoint::quantize() {
  for (auto& [name, tensor] : params) {
    for (double& v : tensor.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

std::string ModelCheckpoint::serialize() const {
  std::string header;
  std::size_t offset = 0;
  for (const auto& [name, tensor] : params) {
    if (!valid_name(name)) throw DataError("checkpoint: invalid parameter name '" + name + "'");
    header += "param " + name + " ";
    for (std::size_t i = 0; i < tensor.rank(); ++i) {
      if (i) header += ",";
      header += std::to_string(tensor.dim(i));
    }
    header += " " + std::to_string(offset) + "\n";
    offset += tensor.size();
  }
  for (const auto& [key, value] : meta) {
    if (!valid_name(key)) throw DataError("checkpoint: invalid metadata key '" + key + "'");
    header += "meta " + key + " " + nlohmann::json(value).dump() + "\n";
  }

  std::string out(kMagic, 4);
  put_u16(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  out.reserve(out.size() + offset * 4);
  for (const auto& [name, tensor] : params) {
    for (double v : tensor.data()) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      put_u32(out, bits);
    }
  }
  return out;
}

ModelCheckpoint ModelCheckpoint::deserialize(std::string_view bytes) {
  if (bytes.size() < kPrefixBytes) throw DataError("checkpoint: file too short for header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("checkpoint: bad magic, expected RSCK");
  const std::uint16_t version = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[4]) |
                                                           (static_cast<unsigned char>(bytes[5]) << 8));
  if (version != kVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const std::size_t header_len = get_u32(bytes, 6);
  if (bytes.size() < kPrefixBytes + header_len) throw DataError("checkpoint: truncated header");

  ModelCheckpoint ckpt;
  struct Entry {
    std::string name;
    nn::Shape shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  std::istringstream lines(std::string(bytes.substr(kPrefixBytes, header_len)));
  std::string line;
  std::size_t expected_offset = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind, name;
    fields >> kind >> name;
    if (kind == "param") {
      std::string shape_text;
      std::size_t offset = 0;
      if (!(fields >> shape_text >> offset)) throw DataError("checkpoint: malformed line '" + line + "'");
      nn::Shape shape = parse_shape(shape_text);
      if (offset != expected_offset) throw DataError("checkpoint: parameter '" + name + "' has offset " +
                                                     std::to_string(offset) + ", expected " +
                                                     std::to_string(expected_offset));
      expected_offset += nn::shape_size(shape);
      entries.push_back({name, std::move(shape), offset});
    } else if (kind == "meta") {
      std::string rest;
      std::getline(fields, rest);
      try {
        ckpt.meta[name] = nlohmann::json::parse(rest).get<std::string>();
      } catch (const nlohmann::json::exception&) {
        throw DataError("checkpoint: malformed metadata '" + name + "'");
      }
    } else {
      throw DataError("checkpoint: unknown header entry '" + kind + "'");
    }
  }
  const std::size_t payload_at = kPrefixBytes + header_len;
  if (bytes.size() != payload_at + expected_offset * 4) {
    throw DataError("checkpoint: payload is " + std::to_string(bytes.size() - payload_at) + " bytes, header declares " +
                    std::to_string(expected_offset * 4));
  }
  for (const auto& e : entries) {
    std::vector<double> values(nn::shape_size(e.shape));
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, payload_at + 4 * (e.offset + i))));
    }
    if (!ckpt.params.emplace(e.name, nn::Tensor(e.shape, std::move(values))).second) {
      throw DataError("checkpoint: duplicate parameter '" + e.name + "'");
    }
  }
  return ckpt;
}

void ModelCheckpoint::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

ModelCheckpoint ModelCheckpoint::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace retina
