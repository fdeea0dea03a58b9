#pragma once

// Checkpoint container, bit-reproducible for identical models:
//
//   bytes 0..3   magic "SINC"
//   bytes 4..7   format version, u32 little-endian
//   bytes 8..11  JSON header length, u32 little-endian
//   ...          UTF-8 JSON header: config, metadata, ordered param manifest
//   ...          raw little-endian float64 blobs, manifest order
//   last 4       CRC-32 of everything before it, u32 little-endian
//
// No timestamps anywhere: two saves of the same model are byte-identical.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sinet/crc32.hpp"
#include "sinet/model.hpp"

namespace sinet {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'S', 'I', 'N', 'C'};

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f64le(std::string& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

inline double get_f64le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

// Stable content hash over the architecture and parameter bytes; used as the
// checkpoint identity and in fine-tuning provenance strings.
inline std::string compute_checkpoint_id(const SinetModel& model) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const void* bytes, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const std::string variant = to_string(model.config().variant);
  feed(variant.data(), variant.size());
  for (const Param& p : model.parameters()) {
    feed(p.name.data(), p.name.size());
    for (const double v : p.value.data()) {
      const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
      feed(b, 8);
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

inline std::string serialize_checkpoint(SinetModel& model) {
  model.metadata().checkpoint_id = compute_checkpoint_id(model);
  nlohmann::json manifest = nlohmann::json::array();
  for (const Param& p : model.parameters()) {
    nlohmann::json shape = nlohmann::json::array();
    for (const Dim d : p.value.shape()) shape.push_back(d);
    manifest.push_back({{"name", p.name}, {"shape", shape}});
  }
  const nlohmann::json header = {{"format", "sinet-checkpoint"},
                                 {"config", config_to_json(model.config())},
                                 {"metadata", metadata_to_json(model.metadata())},
                                 {"params", manifest}};
  const std::string header_json = header.dump();

  std::string out;
  out.append(kCheckpointMagic, 4);
  detail::put_u32le(out, kCheckpointVersion);
  detail::put_u32le(out, static_cast<std::uint32_t>(header_json.size()));
  out += header_json;
  for (const Param& p : model.parameters())
    for (const double v : p.value.data()) detail::put_f64le(out, v);
  const std::uint32_t crc = crc32(out.data(), out.size());
  detail::put_u32le(out, crc);
  return out;
}

inline void save_checkpoint(SinetModel& model, const std::string& path) {
  const std::string bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

inline SinetModel deserialize_checkpoint(const std::string& bytes, const std::string& origin) {
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 16)
    throw FormatError(origin + ": truncated checkpoint, " + std::to_string(n) +
                      " bytes (need at least 16)");
  if (std::memcmp(p, kCheckpointMagic, 4) != 0)
    throw FormatError(origin + ": bad magic at offset 0 (not a checkpoint file)");
  const std::uint32_t version = detail::get_u32le(p + 4);
  if (version != kCheckpointVersion)
    throw FormatError(origin + ": unsupported checkpoint version " + std::to_string(version) +
                      " at offset 4 (expected " + std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t header_len = detail::get_u32le(p + 8);
  if (12 + static_cast<std::size_t>(header_len) + 4 > n)
    throw FormatError(origin + ": header length " + std::to_string(header_len) +
                      " at offset 8 overruns the file (" + std::to_string(n) + " bytes)");

  const std::uint32_t stored_crc = detail::get_u32le(p + n - 4);
  const std::uint32_t computed_crc = crc32(p, n - 4);
  if (stored_crc != computed_crc) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "stored %08x, computed %08x", stored_crc, computed_crc);
    throw FormatError(origin + ": CRC mismatch at offset " + std::to_string(n - 4) + " (" + buf +
                      ")");
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(origin + ": malformed header JSON at offset 12: " + e.what());
  }

  SinetConfig config;
  ModelMetadata meta;
  std::vector<std::pair<std::string, Shape>> manifest;
  try {
    config = config_from_json(header.at("config"));
    meta = metadata_from_json(header.at("metadata"));
    for (const auto& entry : header.at("params")) {
      Shape shape;
      for (const auto& d : entry.at("shape")) shape.push_back(d.get<Dim>());
      manifest.emplace_back(entry.at("name").get<std::string>(), std::move(shape));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(origin + ": incomplete header at offset 12: " + e.what());
  }

  SinetModel model = build_model(config, meta.init_seed);
  model.metadata() = meta;
  ParamSet& params = model.parameters();
  if (manifest.size() != params.size())
    throw FormatError(origin + ": header lists " + std::to_string(manifest.size()) +
                      " parameters, architecture has " + std::to_string(params.size()));
  std::size_t offset = 12 + header_len;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (manifest[i].first != params[i].name)
      throw FormatError(origin + ": parameter " + std::to_string(i) + " is '" +
                        manifest[i].first + "' in the header but '" + params[i].name +
                        "' in the architecture");
    if (manifest[i].second != params[i].value.shape())
      throw FormatError(origin + ": parameter '" + params[i].name + "' has shape " +
                        shape_str(manifest[i].second) + " in the header but " +
                        shape_str(params[i].value.shape()) + " in the architecture");
    std::vector<double>& dst = params[i].value.data();
    const std::size_t bytes_needed = dst.size() * 8;
    if (offset + bytes_needed > n - 4)
      throw FormatError(origin + ": parameter blob for '" + params[i].name +
                        "' overruns the file at offset " + std::to_string(offset));
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = detail::get_f64le(p + offset + j * 8);
    offset += bytes_needed;
  }
  if (offset != n - 4)
    throw FormatError(origin + ": " + std::to_string(n - 4 - offset) +
                      " unexpected trailing blob bytes at offset " + std::to_string(offset));
  return model;
}

inline SinetModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("load_checkpoint: read failed for " + path);
  return deserialize_checkpoint(bytes, path);
}

}  // namespace sinet
