// Copyright 2026 The semrank Authors.
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

// Checkpoint container, format version 1:
//
//   8 bytes   magic "SRKCKPT\0"
//   u32 LE    format version
//   u64 LE    header length N
//   N bytes   UTF-8 JSON header:
//               {"format": 1, "seed": S,
//                "shape": {"vocab", "context", "embed", "hidden"},
//                "lora": null | {"rank", "alpha", "targets": ["W1", "W2"]},
//                "tensors": [{"name", "rows", "cols"}, ...]}
//   payload   for each header tensor in order, rows * cols IEEE-754
//             binary64 values, little endian, row-major
//
// Writing the same parameters always yields the same bytes.

#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "semrank/policy.hpp"

namespace semrank {

inline constexpr char kCheckpointMagic[8] = {'S', 'R', 'K', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("checkpoint truncated");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace detail

inline std::string serialize_checkpoint(const PolicyParams& params) {
  validate_params(params);
  PolicyParams& p = const_cast<PolicyParams&>(params);  // all_tensors takes non-const refs
  nlohmann::json header;
  header["format"] = kCheckpointVersion;
  header["seed"] = p.seed;
  header["shape"] = {{"vocab", p.shape.vocab},
                     {"context", p.shape.context},
                     {"embed", p.shape.embed},
                     {"hidden", p.shape.hidden}};
  if (p.lora) {
    nlohmann::json targets = nlohmann::json::array();
    if (p.lora->target_w1) targets.push_back("W1");
    if (p.lora->target_w2) targets.push_back("W2");
    header["lora"] = {{"rank", p.lora->rank}, {"alpha", p.lora->alpha}, {"targets", targets}};
  } else {
    header["lora"] = nullptr;
  }
  auto tensors = all_tensors(p);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& t : tensors) {
    list.push_back({{"name", t.name}, {"rows", t.value->rows()}, {"cols", t.value->cols()}});
  }
  header["tensors"] = list;
  const std::string h = header.dump();

  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint64_t>(out, h.size());
  out += h;
  for (const auto& t : tensors) {
    for (double x : t.value->data()) detail::put_le<double>(out, x);
  }
  return out;
}

inline PolicyParams deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw ValidationError("not a semrank checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kCheckpointMagic);
  const auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint format version " + std::to_string(version));
  }
  const auto hlen = detail::get_le<std::uint64_t>(bytes, pos);
  if (pos + hlen > bytes.size()) throw ValidationError("checkpoint header truncated");
  const auto header = nlohmann::json::parse(bytes.substr(pos, hlen));
  pos += hlen;

  PolicyParams p;
  p.seed = header.at("seed").get<std::uint64_t>();
  const auto& sh = header.at("shape");
  p.shape = PolicyShape{sh.at("vocab").get<std::size_t>(), sh.at("context").get<std::size_t>(),
                        sh.at("embed").get<std::size_t>(), sh.at("hidden").get<std::size_t>()};
  if (!header.at("lora").is_null()) {
    const auto& l = header.at("lora");
    LoraConfig cfg;
    cfg.rank = l.at("rank").get<std::size_t>();
    cfg.alpha = l.at("alpha").get<double>();
    cfg.target_w1 = cfg.target_w2 = false;
    for (const auto& t : l.at("targets")) {
      if (t == "W1") cfg.target_w1 = true;
      if (t == "W2") cfg.target_w2 = true;
    }
    p.lora = cfg;
    if (cfg.target_w1) p.lora_w1 = LoraFactors{};
    if (cfg.target_w2) p.lora_w2 = LoraFactors{};
  }
  auto tensors = all_tensors(p);
  const auto& list = header.at("tensors");
  if (list.size() != tensors.size()) throw ValidationError("checkpoint tensor list mismatch");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (list[i].at("name").get<std::string>() != tensors[i].name) {
      throw ValidationError("checkpoint tensor order mismatch at " + tensors[i].name);
    }
    Matrix m(list[i].at("rows").get<std::size_t>(), list[i].at("cols").get<std::size_t>());
    for (auto& x : m.data()) x = detail::get_le<double>(bytes, pos);
    *tensors[i].value = std::move(m);
  }
  if (pos != bytes.size()) throw ValidationError("trailing bytes after checkpoint payload");
  validate_params(p);
  return p;
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed for " + path.string());
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void save_checkpoint(const std::filesystem::path& path, const PolicyParams& p) {
  write_file_bytes(path, serialize_checkpoint(p));
}

inline PolicyParams load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

}  // namespace semrank
