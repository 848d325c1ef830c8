// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "dualfield/backends.hpp"

namespace dualfield {

// Client side of the model-service wire protocol (JSON over HTTP, images as
// base64 PNG):
//   POST /edit        {original, render, prompt, s_image, s_text, steps, seed} -> {image}
//   POST /embed_image {image} -> {dim, values}
//   POST /embed_text  {text}  -> {dim, values}
//   GET  /health      -> {status, models: {editor, embedder}}
// Every failure is a BackendError whose message names the endpoint URL.

struct ServiceHealth {
  std::string status;
  bool editor = false;
  bool embedder = false;
};

ServiceHealth query_health(const std::string& endpoint, double timeout_seconds = 5.0);

class HttpEditor final : public EditorBackend {
 public:
  explicit HttpEditor(std::string endpoint, double timeout_seconds = 120.0);
  BackendInfo info() const override { return {"http", false}; }
  Image edit(const Image& original, const Image& render,
             const EditorConfig& config) const override;
  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string endpoint_;
  double timeout_seconds_;
};

class HttpEmbedder final : public EmbeddingBackend {
 public:
  explicit HttpEmbedder(std::string endpoint, double timeout_seconds = 120.0);
  BackendInfo info() const override { return {"http", true}; }
  Embedding embed_image(const Image& image) const override;
  Embedding embed_text(std::string_view text) const override;
  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string endpoint_;
  double timeout_seconds_;
};

}  // namespace dualfield
