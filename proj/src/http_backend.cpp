// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/http_backend.hpp"

#include <chrono>
#include <cmath>

#include "httplib.h"
#include "json.hpp"

#include "dualfield/base64.hpp"
#include "dualfield/errors.hpp"
#include "dualfield/image_io.hpp"

namespace dualfield {
namespace {

using nlohmann::json;

std::unique_ptr<httplib::Client> make_client(const std::string& endpoint, double timeout) {
  std::unique_ptr<httplib::Client> client;
  try {
    client = std::make_unique<httplib::Client>(endpoint);
  } catch (const std::exception& e) {
    throw BackendError("invalid endpoint " + endpoint + ": " + e.what(), endpoint);
  }
  if (!client->is_valid()) throw BackendError("invalid endpoint " + endpoint, endpoint);
  const auto usec = std::chrono::microseconds(static_cast<std::int64_t>(timeout * 1e6));
  client->set_connection_timeout(std::min<std::chrono::microseconds>(usec, std::chrono::seconds(5)));
  client->set_read_timeout(usec);
  client->set_write_timeout(usec);
  return client;
}

json post_json(const std::string& endpoint, const std::string& route, const json& body,
               double timeout) {
  auto client = make_client(endpoint, timeout);
  const std::string url = endpoint + route;
  auto res = client->Post(route, body.dump(), "application/json");
  if (!res) {
    throw BackendError("cannot reach model service at " + url + " (" +
                           httplib::to_string(res.error()) + ")",
                       endpoint);
  }
  if (res->status != 200) {
    std::string detail = res->body;
    try {
      const json err = json::parse(res->body);
      if (err.contains("error")) detail = err["error"].dump();
    } catch (const json::exception&) {
    }
    throw BackendError("model service " + url + " returned HTTP " +
                           std::to_string(res->status) + ": " + detail,
                       endpoint);
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw BackendError("model service " + url + " sent malformed JSON: " + e.what(), endpoint);
  }
}

Embedding parse_embedding(const json& body, const std::string& url, const std::string& endpoint) {
  if (!body.contains("dim") || !body.contains("values") || !body["values"].is_array()) {
    throw BackendError("model service " + url + " response lacks dim/values", endpoint);
  }
  const auto dim = body["dim"].get<std::size_t>();
  Embedding e = body["values"].get<Embedding>();
  if (e.size() != dim) {
    throw BackendError("model service " + url + " returned " + std::to_string(e.size()) +
                           " values for dim " + std::to_string(dim),
                       endpoint);
  }
  for (double v : e) {
    if (!std::isfinite(v)) throw BackendError("model service " + url + " returned non-finite values", endpoint);
  }
  return e;
}

std::string png_base64(const Image& image) { return base64_encode(encode_png(image)); }

}  // namespace

ServiceHealth query_health(const std::string& endpoint, double timeout_seconds) {
  auto client = make_client(endpoint, timeout_seconds);
  auto res = client->Get("/health");
  if (!res) {
    throw BackendError("cannot reach model service at " + endpoint + "/health (" +
                           httplib::to_string(res.error()) + ")",
                       endpoint);
  }
  if (res->status != 200) {
    throw BackendError("model service " + endpoint + "/health returned HTTP " +
                           std::to_string(res->status),
                       endpoint);
  }
  try {
    const json body = json::parse(res->body);
    ServiceHealth h;
    h.status = body.value("status", "");
    if (body.contains("models")) {
      h.editor = body["models"].value("editor", false);
      h.embedder = body["models"].value("embedder", false);
    }
    return h;
  } catch (const json::exception& e) {
    throw BackendError("model service " + endpoint + "/health sent malformed JSON: " + e.what(),
                       endpoint);
  }
}

HttpEditor::HttpEditor(std::string endpoint, double timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}

Image HttpEditor::edit(const Image& original, const Image& render,
                       const EditorConfig& config) const {
  if (!original.same_shape(render)) {
    throw PreconditionError("editor: original and render resolutions differ");
  }
  const json request = {{"original", png_base64(original)},
                        {"render", png_base64(render)},
                        {"prompt", config.prompt},
                        {"s_image", config.s_image},
                        {"s_text", config.s_text},
                        {"steps", config.steps},
                        {"seed", config.seed}};
  const json body = post_json(endpoint_, "/edit", request, timeout_seconds_);
  if (!body.contains("image") || !body["image"].is_string()) {
    throw BackendError("model service " + endpoint_ + "/edit response lacks image", endpoint_);
  }
  Image edited;
  try {
    edited = decode_png(base64_decode(body["image"].get<std::string>()));
  } catch (const Error& e) {
    throw BackendError("model service " + endpoint_ + "/edit sent an undecodable image: " +
                           e.what(),
                       endpoint_);
  }
  if (!edited.same_shape(original)) {
    throw BackendError("model service " + endpoint_ + "/edit changed the image resolution",
                       endpoint_);
  }
  return edited;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, double timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}

Embedding HttpEmbedder::embed_image(const Image& image) const {
  if (image.empty()) throw PreconditionError("embed_image: empty image");
  const json body =
      post_json(endpoint_, "/embed_image", {{"image", png_base64(image)}}, timeout_seconds_);
  return parse_embedding(body, endpoint_ + "/embed_image", endpoint_);
}

Embedding HttpEmbedder::embed_text(std::string_view text) const {
  if (text.empty()) throw PreconditionError("embed_text: empty text");
  const json body =
      post_json(endpoint_, "/embed_text", {{"text", std::string(text)}}, timeout_seconds_);
  return parse_embedding(body, endpoint_ + "/embed_text", endpoint_);
}

}  // namespace dualfield
