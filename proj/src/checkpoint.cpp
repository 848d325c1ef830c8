// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dualfield/errors.hpp"

namespace dualfield {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class T>
  void scalar(T v) {
    bytes(&v, sizeof(T));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > in_.size()) {
      throw LoadError(LoadErrorKind::kBadCheckpoint, "checkpoint is truncated");
    }
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T scalar() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const DualFieldModel& model) {
  model.validate();
  Writer w;
  w.bytes("DFN1", 4);
  const auto& res = model.static_field.resolution();
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(res.nx));
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(res.ny));
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(res.nz));
  w.scalar<std::uint8_t>(kCheckpointStatic | kCheckpointDynamic);
  w.scalar<double>(model.blend.w_max_sigma);
  w.scalar<double>(model.blend.w_max_color);
  w.scalar<double>(model.blend.lambda);
  w.scalar<double>(static_cast<double>(model.blend.t));
  w.scalar<double>(model.blend.gamma);
  for (const FeatureGrid* g : {&model.static_field, &model.dynamic_field}) {
    w.bytes(g->parameters().data(), g->parameters().size_bytes());
  }
  return w.take();
}

DualFieldModel deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "DFN1", 4) != 0) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, "not a DFN1 checkpoint");
  }
  GridResolution res;
  res.nx = static_cast<int>(r.scalar<std::uint32_t>());
  res.ny = static_cast<int>(r.scalar<std::uint32_t>());
  res.nz = static_cast<int>(r.scalar<std::uint32_t>());
  const auto flags = r.scalar<std::uint8_t>();
  if (!(flags & kCheckpointStatic)) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, "checkpoint has no static grid");
  }
  DualFieldModel model;
  try {
    model = DualFieldModel(res);
  } catch (const PreconditionError& e) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, std::string("bad grid resolution: ") + e.what());
  }
  model.blend.w_max_sigma = r.scalar<double>();
  model.blend.w_max_color = r.scalar<double>();
  model.blend.lambda = r.scalar<double>();
  model.blend.t = static_cast<std::int64_t>(r.scalar<double>());
  model.blend.gamma = r.scalar<double>();
  auto s = model.static_field.parameters();
  r.bytes(s.data(), s.size_bytes());
  if (flags & kCheckpointDynamic) {
    auto d = model.dynamic_field.parameters();
    r.bytes(d.data(), d.size_bytes());
  }
  if (!r.done()) throw LoadError(LoadErrorKind::kBadCheckpoint, "trailing bytes in checkpoint");
  try {
    model.validate();
  } catch (const PreconditionError& e) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, e.what());
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const DualFieldModel& model) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

DualFieldModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::kBadCheckpoint, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(bytes);
}

}  // namespace dualfield
