// Checkpoint container. Binary, little-endian, layout:
//
//   magic   8 bytes  "SILTCKP1"
//   u64     config hash
//   u64     vocab size, then per token: u32 byte length + bytes
//   u32     tensor count, then per tensor:
//             u32 name length + name bytes
//             u32 ndim, u64 dims..., f64 raw values
//   u8      optimizer-state flag; when 1:
//             u64 adam step, u64 completed epochs,
//             per tensor: f64 first moments, f64 second moments
//
// Values round-trip bit-exactly (doubles are written raw).
#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "silt/common.hpp"
#include "silt/corpus.hpp"
#include "silt/optimizer.hpp"
#include "silt/tensor.hpp"

namespace silt {

constexpr char kCheckpointMagic[8] = {'S', 'I', 'L', 'T', 'C', 'K', 'P', '1'};

struct Checkpoint {
  ModelParams params;
  Vocab vocab;
  std::uint64_t config_hash = 0;
  bool has_optimizer = false;
  Adam adam;
  std::uint64_t completed_epochs = 0;
};

namespace detail {

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

inline void put_string(std::ofstream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::ifstream& in) {
  auto len = get<std::uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw DataError("checkpoint truncated");
  return s;
}

inline void put_doubles(std::ofstream& out, const std::vector<double>& xs) {
  out.write(reinterpret_cast<const char*>(xs.data()),
            static_cast<std::streamsize>(xs.size() * sizeof(double)));
}

inline void get_doubles(std::ifstream& in, std::vector<double>& xs) {
  in.read(reinterpret_cast<char*>(xs.data()),
          static_cast<std::streamsize>(xs.size() * sizeof(double)));
  if (!in) throw DataError("checkpoint truncated");
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const ModelParams& params,
                            const Vocab& vocab, std::uint64_t config_hash,
                            const Adam* adam = nullptr, std::uint64_t completed_epochs = 0) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 8);
  detail::put<std::uint64_t>(out, config_hash);
  detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(vocab.tokens.size()));
  for (const auto& t : vocab.tokens) detail::put_string(out, t);

  auto tensors = params.all();
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor* t : tensors) {
    detail::put_string(out, t->name);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t->shape.size()));
    for (auto d : t->shape) detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    detail::put_doubles(out, t->v);
  }

  detail::put<std::uint8_t>(out, adam ? 1 : 0);
  if (adam) {
    detail::put<std::uint64_t>(out, adam->t);
    detail::put<std::uint64_t>(out, completed_epochs);
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      detail::put_doubles(out, adam->m[i]);
      detail::put_doubles(out, adam->v[i]);
    }
  }
  if (!out) throw DataError("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw DataError("not a checkpoint file: " + path);

  Checkpoint ck;
  ck.config_hash = detail::get<std::uint64_t>(in);
  auto vocab_size = detail::get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < vocab_size; ++i) ck.vocab.tokens.push_back(detail::get_string(in));
  for (int i = 0; i < static_cast<int>(ck.vocab.tokens.size()); ++i)
    ck.vocab.index[ck.vocab.tokens[i]] = i;

  auto n_tensors = detail::get<std::uint32_t>(in);
  std::vector<Tensor> loaded;
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = detail::get_string(in);
    auto ndim = detail::get<std::uint32_t>(in);
    std::vector<std::size_t> shape;
    for (std::uint32_t d = 0; d < ndim; ++d)
      shape.push_back(static_cast<std::size_t>(detail::get<std::uint64_t>(in)));
    Tensor t(name, shape);
    detail::get_doubles(in, t.v);
    loaded.push_back(std::move(t));
  }

  // reconstruct ModelParams from the named tensors
  auto find = [&](const std::string& name) -> Tensor& {
    for (auto& t : loaded)
      if (t.name == name) return t;
    throw DataError("checkpoint missing tensor " + name + ": " + path);
  };
  Tensor& emb = find("embedding");
  if (emb.shape.size() != 2) throw DataError("bad embedding shape in checkpoint");
  ck.params = ModelParams(static_cast<int>(emb.shape[0]), static_cast<int>(emb.shape[1]));
  for (Tensor* t : ck.params.all()) {
    Tensor& src = find(t->name);
    if (src.shape != t->shape) throw DataError("tensor shape mismatch in checkpoint: " + t->name);
    t->v = src.v;
  }

  auto flag = detail::get<std::uint8_t>(in);
  if (flag) {
    ck.has_optimizer = true;
    ck.adam.init(ck.params);
    ck.adam.t = detail::get<std::uint64_t>(in);
    ck.completed_epochs = detail::get<std::uint64_t>(in);
    for (std::size_t i = 0; i < ck.adam.m.size(); ++i) {
      detail::get_doubles(in, ck.adam.m[i]);
      detail::get_doubles(in, ck.adam.v[i]);
    }
  }
  return ck;
}

}  // namespace silt
