#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pawn/nn/layers.hpp"

namespace pawn::nn {

// Layout: 8-byte magic, u64 LE header length, JSON header, then every tensor
// listed in header["tensors"] as little-endian float32, in that order.
inline constexpr char kModelMagic[8] = {'P', 'A', 'W', 'N', 'M', 'D', 'L', '1'};

class ModelFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ModelFileError("truncated model file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

inline void put_f32(std::ostream& out, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

/// Writes `header` plus the tensors of `state`. header["tensors"] is filled
/// with the name and shape of each block.
template <class T>
void write_model(std::ostream& out, nlohmann::json header, const std::vector<Param<T>*>& state) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto* p : state) tensors.push_back({{"name", p->name}, {"shape", p->value.shape}});
  header["tensors"] = tensors;
  const std::string text = header.dump();
  out.write(kModelMagic, 8);
  detail::put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* p : state)
    for (T v : p->value.data) detail::put_f32(out, static_cast<float>(v));
  if (!out) throw ModelFileError("failed writing model");
}

struct ModelBlob {
  nlohmann::json header;
  std::vector<Tensor<float>> tensors;
};

inline ModelBlob read_model(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kModelMagic, 8) != 0) throw ModelFileError("not a model file");
  const std::uint64_t len = detail::get_u64(in);
  if (len > (64u << 20)) throw ModelFileError("model header too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw ModelFileError("truncated model header");
  ModelBlob blob;
  try {
    blob.header = nlohmann::json::parse(text);
    for (const auto& t : blob.header.at("tensors")) {
      Tensor<float> x(t.at("shape").get<Shape>());
      for (auto& v : x.data) {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4)) throw ModelFileError("truncated tensor data");
        std::uint32_t u = 0;
        for (int i = 0; i < 4; ++i) u |= std::uint32_t(b[i]) << (8 * i);
        v = std::bit_cast<float>(u);
      }
      blob.tensors.push_back(std::move(x));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelFileError(std::string("bad model header: ") + e.what());
  }
  return blob;
}

/// Copies blob tensors into `state`, checking names and shapes.
template <class T>
void load_state(const ModelBlob& blob, const std::vector<Param<T>*>& state) {
  const auto& names = blob.header.at("tensors");
  if (names.size() != state.size())
    throw ModelFileError("model file has " + std::to_string(names.size()) + " tensors, expected " +
                         std::to_string(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (names[i].at("name").get<std::string>() != state[i]->name || blob.tensors[i].shape != state[i]->value.shape)
      throw ModelFileError("tensor " + std::to_string(i) + " does not match the architecture (" + state[i]->name +
                           " " + shape_str(state[i]->value.shape) + ")");
    for (std::size_t k = 0; k < blob.tensors[i].size(); ++k)
      state[i]->value[k] = static_cast<T>(blob.tensors[i][k]);
  }
}

}  // namespace pawn::nn
