// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP backend against an in-process stub of the model service: identity
// editor, toy embedder.

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "dualfield/base64.hpp"
#include "dualfield/errors.hpp"
#include "dualfield/http_backend.hpp"
#include "dualfield/idu.hpp"
#include "dualfield/image_io.hpp"
#include "test_util.hpp"

// After the project headers: httplib pulls in <resolv.h>, whose `_res`
// macro collides with Eigen parameter names.
#include "httplib.h"
#include "json.hpp"

namespace dualfield {
namespace {

using nlohmann::json;

class StubService {
 public:
  StubService() {
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok","models":{"editor":true,"embedder":true}})",
                      "application/json");
    });
    server_.Post("/edit", [this](const httplib::Request& req, httplib::Response& res) {
      ++edit_calls;
      json body;
      try {
        body = json::parse(req.body);
        const Image original = decode_png(base64_decode(body.at("original").get<std::string>()));
        const Image render = decode_png(base64_decode(body.at("render").get<std::string>()));
        if (!original.same_shape(render)) return reject(res, "render");
        if (body.at("steps").get<int>() < 1) return reject(res, "steps");
        last_prompt = body.at("prompt").get<std::string>();
        if (mode == Mode::kShrink) {
          res.set_content(json{{"image", base64_encode(encode_png(Image(2, 2)))}}.dump(),
                          "application/json");
          return;
        }
        res.set_content(json{{"image", base64_encode(encode_png(original))}}.dump(),
                        "application/json");
      } catch (const std::exception&) {
        reject(res, "original");
      }
    });
    server_.Post("/embed_image", [](const httplib::Request& req, httplib::Response& res) {
      try {
        const json body = json::parse(req.body);
        const Image img = decode_png(base64_decode(body.at("image").get<std::string>()));
        const Embedding e = ToyEmbedder().embed_image(img);
        res.set_content(json{{"dim", e.size()}, {"values", e}}.dump(), "application/json");
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content(R"({"error":"image"})", "application/json");
      }
    });
    server_.Post("/embed_text", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.contains("text") || body["text"].get<std::string>().empty()) {
        res.status = 400;
        res.set_content(R"({"error":"text"})", "application/json");
        return;
      }
      if (mode == Mode::kBadDim) {
        res.set_content(R"({"dim":5,"values":[1.0]})", "application/json");
        return;
      }
      const Embedding e = ToyEmbedder().embed_text(body["text"].get<std::string>());
      res.set_content(json{{"dim", e.size()}, {"values", e}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubService() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  enum class Mode { kNormal, kShrink, kBadDim };
  Mode mode = Mode::kNormal;
  int edit_calls = 0;
  std::string last_prompt;

 private:
  static void reject(httplib::Response& res, const std::string& field) {
    res.status = 400;
    res.set_content(json{{"error", "invalid field: " + field}}.dump(), "application/json");
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// A port that was just free; nothing listens on it.
std::string dead_endpoint() {
  httplib::Server s;
  const int port = s.bind_to_any_port("127.0.0.1");
  return "http://127.0.0.1:" + std::to_string(port);
}

TEST(HttpBackend, HealthReportsModels) {
  StubService stub;
  const ServiceHealth h = query_health(stub.endpoint());
  EXPECT_EQ(h.status, "ok");
  EXPECT_TRUE(h.editor);
  EXPECT_TRUE(h.embedder);
}

TEST(HttpBackend, EditRoundTripsThroughPng) {
  StubService stub;
  Rng rng(1);
  const Image original = quantize_8bit(testing::random_image(12, 10, rng));
  const Image render = testing::random_image(12, 10, rng);
  const HttpEditor editor(stub.endpoint());
  EditorConfig c;
  c.prompt = "make it blue";
  EXPECT_TRUE(editor.edit(original, render, c) == original);
  EXPECT_EQ(stub.last_prompt, "make it blue");
  EXPECT_EQ(stub.edit_calls, 1);
}

TEST(HttpBackend, EmbeddingsMatchLocalToyEmbedder) {
  StubService stub;
  Rng rng(2);
  const Image img = quantize_8bit(testing::random_image(8, 8, rng));
  const HttpEmbedder remote(stub.endpoint());
  const ToyEmbedder local;
  EXPECT_EQ(remote.embed_image(img), local.embed_image(img));
  EXPECT_EQ(remote.embed_text("A photograph of a ball"), local.embed_text("A photograph of a ball"));
}

TEST(HttpBackend, ErrorStatusesBecomeBackendErrors) {
  StubService stub;
  EditorConfig c;
  c.prompt = "x";
  c.steps = 0;
  try {
    HttpEditor(stub.endpoint()).edit(Image(4, 4), Image(4, 4), c);
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("HTTP 400"), std::string::npos) << msg;
    EXPECT_NE(msg.find("steps"), std::string::npos) << msg;
    EXPECT_NE(msg.find(stub.endpoint() + "/edit"), std::string::npos) << msg;
  }
  stub.mode = StubService::Mode::kShrink;
  c.steps = 20;
  EXPECT_THROW(HttpEditor(stub.endpoint()).edit(Image(4, 4), Image(4, 4), c), BackendError);
  stub.mode = StubService::Mode::kBadDim;
  EXPECT_THROW(HttpEmbedder(stub.endpoint()).embed_text("hello"), BackendError);
}

TEST(HttpBackend, UnreachableServiceNamesTheUrl) {
  const std::string url = dead_endpoint();
  try {
    HttpEditor(url, 2.0).edit(Image(4, 4), Image(4, 4), EditorConfig{"blue"});
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find(url), std::string::npos) << e.what();
    EXPECT_EQ(e.endpoint(), url);
  }
  EXPECT_THROW(query_health(url, 2.0), BackendError);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Ten rounds through the wire protocol leave the same trace as the in-process identity backend.
TEST(HttpBackend, IduTraceMatchesInProcessIdentity) {
  StubService stub;
  IDUConfig c;
  c.n = 3;
  c.total_iterations = 30;
  c.editor.prompt = "identity";
  c.batch_size = 64;
  c.n_samples = 16;
  c.render_samples = 16;
  c.seed = 11;

  auto run = [&](const EditorBackend& editor, const EmbeddingBackend& embedder,
                 const std::string& tag) {
    EditSession s = EditSession::start(testing::random_model(GridResolution{8, 8, 8}, 4),
                                       testing::tiny_dataset(4, 12), c);
    const auto dir = testing::scratch_dir("http_trace_" + tag);
    TrainLog log(dir / "train.csv");
    RoundLog rounds(dir / "rounds.csv");
    RunEditOptions opts;
    opts.log = &log;
    opts.on_round = [&](const RoundTrace& t) { rounds.append(t); };
    run_edit(s, c, {&editor, &embedder}, opts);
    return std::make_pair(slurp(dir / "rounds.csv"), slurp(dir / "train.csv"));
  };
  const auto local = run(IdentityEditor(), ToyEmbedder(), "local");
  const auto remote = run(HttpEditor(stub.endpoint()), HttpEmbedder(stub.endpoint()), "remote");
  EXPECT_EQ(stub.edit_calls, 10);
  EXPECT_EQ(local.first, remote.first);
  EXPECT_EQ(local.second, remote.second);
}

}  // namespace
}  // namespace dualfield
