#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "iaknn/errors.hpp"
#include "iaknn/nn/params.hpp"

namespace iaknn::nn {

inline constexpr int kCheckpointFormatVersion = 1;

namespace detail {

inline constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += kBase64Alphabet[(n >> 6) & 63];
    out += kBase64Alphabet[n & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t n = bytes[i] << 16;
    if (rest == 2) n |= bytes[i + 1] << 8;
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += rest == 2 ? kBase64Alphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lut{};
  lut.fill(-1);
  for (std::size_t k = 0; k < kBase64Alphabet.size(); ++k) lut[static_cast<unsigned char>(kBase64Alphabet[k])] = static_cast<int>(k);
  if (text.size() % 4 != 0) throw SchemaError("base64 payload length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t n = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      int v = 0;
      if (c == '=') {
        ++pad;
      } else {
        v = lut[static_cast<unsigned char>(c)];
        if (v < 0 || pad > 0) throw SchemaError("invalid base64 payload");
      }
      n = (n << 6) | static_cast<std::uint32_t>(v);
    }
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
  }
  return out;
}

inline std::string encode_doubles(std::span<const double> values) {
  std::vector<std::uint8_t> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

inline std::vector<double> decode_doubles(std::string_view text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw SchemaError("float64 payload length is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

inline nlohmann::json tensor_to_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", encode_doubles(t.data())}};
}

inline Tensor tensor_from_json(const nlohmann::json& j, const std::string& what) {
  try {
    Shape shape = j.at("shape").get<Shape>();
    return Tensor(std::move(shape), decode_doubles(j.at("data").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("malformed tensor '" + what + "': " + e.what());
  } catch (const DimensionError& e) {
    throw SchemaError("malformed tensor '" + what + "': " + e.what());
  }
}

}  // namespace detail

/// Parameters plus Adam state as a JSON document.
inline nlohmann::json params_to_json(const ParamStore& store) {
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json m = nlohmann::json::object();
  nlohmann::json v = nlohmann::json::object();
  for (const auto& [name, p] : store) {
    auto entry = detail::tensor_to_json(p.value);
    entry["kind"] = to_string(p.kind);
    params[name] = std::move(entry);
    m[name] = detail::tensor_to_json(p.m);
    v[name] = detail::tensor_to_json(p.v);
  }
  return {{"parameters", std::move(params)},
          {"optimizer", {{"type", "adam"}, {"step", store.step()}, {"m", std::move(m)}, {"v", std::move(v)}}}};
}

inline ParamStore params_from_json(const nlohmann::json& j) {
  ParamStore store;
  try {
    const auto& opt = j.at("optimizer");
    for (const auto& [name, entry] : j.at("parameters").items()) {
      Parameter& p = store.add(name, detail::tensor_from_json(entry, name),
                               param_kind_from_string(entry.at("kind").get<std::string>()));
      p.m = detail::tensor_from_json(opt.at("m").at(name), name + ".m");
      p.v = detail::tensor_from_json(opt.at("v").at(name), name + ".v");
      if (p.m.shape() != p.value.shape() || p.v.shape() != p.value.shape()) {
        throw SchemaError("optimizer moments for '" + name + "' do not match the parameter shape");
      }
    }
    store.set_step(opt.at("step").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
  return store;
}

/// Writes `text` to `path` through a sibling temporary file and a rename, so
/// readers never observe a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw DataError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
  }
}

/// Reads a checkpoint document and checks its format version.
inline nlohmann::json read_checkpoint_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
  }
  const int version = j.value("format_version", -1);
  if (version != kCheckpointFormatVersion) {
    throw VersionError("checkpoint '" + path.string() + "' has format version " + std::to_string(version) +
                       " but this build reads version " + std::to_string(kCheckpointFormatVersion) +
                       "; re-run `iaknn train` with this build to produce an upgraded checkpoint");
  }
  return j;
}

}  // namespace iaknn::nn
