// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include <Eigen/LU>
#include "json.hpp"

#include "dualfield/errors.hpp"
#include "dualfield/image_io.hpp"

namespace dualfield {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPoseTolerance = 1e-6;

fs::path resolve_image(const fs::path& dir, const std::string& file_path) {
  fs::path p = dir / file_path;
  if (!p.has_extension()) {
    fs::path with_png = p;
    with_png += ".png";
    if (fs::exists(with_png)) return with_png;
  }
  return p;
}

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw LoadError(LoadErrorKind::kMalformedManifest,
                    std::string("manifest field '") + key + "' missing or not a number");
  }
  return j.at(key).get<double>();
}

}  // namespace

void EditDataset::validate() const {
  if (views.empty()) throw PreconditionError("dataset has no views");
  if (cursor >= views.size()) throw PreconditionError("dataset cursor out of range");
  for (const auto& v : views) {
    if (!v.original.same_shape(views.front().original) || !v.current.same_shape(v.original)) {
      throw PreconditionError("dataset views do not share one resolution");
    }
    if (v.score && *v.score < 0.0) throw PreconditionError("negative consistency score");
  }
}

std::vector<std::optional<double>> EditDataset::scores() const {
  std::vector<std::optional<double>> out;
  out.reserve(views.size());
  for (const auto& v : views) out.push_back(v.score);
  return out;
}

EditDataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "transforms.json";
  std::ifstream in(manifest_path);
  if (!in) {
    throw LoadError(LoadErrorKind::kMissingManifest,
                    "missing manifest: " + manifest_path.string());
  }
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw LoadError(LoadErrorKind::kMalformedManifest,
                    "malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  Intrinsics k;
  k.fx = number(manifest, "fl_x");
  k.fy = number(manifest, "fl_y");
  k.cx = number(manifest, "cx");
  k.cy = number(manifest, "cy");
  k.width = static_cast<int>(number(manifest, "w"));
  k.height = static_cast<int>(number(manifest, "h"));
  if (!manifest.contains("frames") || !manifest["frames"].is_array() ||
      manifest["frames"].empty()) {
    throw LoadError(LoadErrorKind::kMalformedManifest, "manifest has no frames");
  }

  EditDataset dataset;
  for (const auto& frame : manifest["frames"]) {
    if (!frame.contains("file_path") || !frame.contains("transform_matrix")) {
      throw LoadError(LoadErrorKind::kMalformedManifest,
                      "frame missing file_path or transform_matrix");
    }
    const auto file = frame["file_path"].get<std::string>();
    const auto& m = frame["transform_matrix"];
    if (!m.is_array() || m.size() < 3) {
      throw LoadError(LoadErrorKind::kMalformedManifest, "transform_matrix must be 4x4");
    }
    CameraPose pose;
    pose.intrinsics = k;
    for (int r = 0; r < 3; ++r) {
      if (!m[r].is_array() || m[r].size() != 4) {
        throw LoadError(LoadErrorKind::kMalformedManifest, "transform_matrix must be 4x4");
      }
      for (int c = 0; c < 3; ++c) pose.rotation(r, c) = m[r][c].get<double>();
      pose.translation[r] = m[r][3].get<double>();
    }
    const Mat3 gram = pose.rotation.transpose() * pose.rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kPoseTolerance ||
        std::abs(pose.rotation.determinant() - 1.0) > kPoseTolerance) {
      throw LoadError(LoadErrorKind::kInvalidPose,
                      "invalid pose for " + file + ": rotation is not a proper rotation");
    }
    if (k.width < 1 || k.height < 1 || !(k.fx > 0) || !(k.fy > 0)) {
      throw LoadError(LoadErrorKind::kMalformedManifest, "invalid intrinsics in manifest");
    }

    const fs::path image_path = resolve_image(dir, file);
    if (!fs::exists(image_path)) {
      throw LoadError(LoadErrorKind::kMissingImage, "missing image: " + image_path.string());
    }
    View view;
    view.name = image_path.stem().string();
    view.original = read_png(image_path);
    if (view.original.height() != k.height || view.original.width() != k.width) {
      throw LoadError(LoadErrorKind::kMixedResolution,
                      "image " + image_path.string() + " does not match manifest resolution " +
                          std::to_string(k.width) + "x" + std::to_string(k.height));
    }
    view.current = view.original;
    view.pose = pose;
    dataset.views.push_back(std::move(view));
  }
  return dataset;
}

void save_dataset(const EditDataset& dataset, const fs::path& dir) {
  dataset.validate();
  fs::create_directories(dir / "images");
  const Intrinsics& k = dataset.views.front().pose.intrinsics;
  json manifest;
  manifest["fl_x"] = k.fx;
  manifest["fl_y"] = k.fy;
  manifest["cx"] = k.cx;
  manifest["cy"] = k.cy;
  manifest["w"] = k.width;
  manifest["h"] = k.height;
  manifest["frames"] = json::array();
  for (const auto& v : dataset.views) {
    json m = json::array();
    for (int r = 0; r < 4; ++r) {
      json row = json::array();
      for (int c = 0; c < 4; ++c) {
        if (r == 3) {
          row.push_back(c == 3 ? 1.0 : 0.0);
        } else {
          row.push_back(c == 3 ? v.pose.translation[r] : v.pose.rotation(r, c));
        }
      }
      m.push_back(row);
    }
    manifest["frames"].push_back(
        {{"file_path", "images/" + v.name + ".png"}, {"transform_matrix", m}});
    write_png(dir / "images" / (v.name + ".png"), v.original);
  }
  std::ofstream out(dir / "transforms.json");
  if (!out) throw IoError("cannot write " + (dir / "transforms.json").string());
  out << manifest.dump(2) << '\n';
}

void save_edits(const EditDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir / "edited");
  json scores = json::object();
  for (const auto& v : dataset.views) {
    write_png(dir / "edited" / (v.name + ".png"), v.current);
    scores[v.name] = v.score ? json(*v.score) : json(nullptr);
  }
  std::ofstream out(dir / "scores.json");
  if (!out) throw IoError("cannot write " + (dir / "scores.json").string());
  out << scores.dump(2) << '\n';
}

}  // namespace dualfield
