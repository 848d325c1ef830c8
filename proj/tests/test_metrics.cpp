// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "dualfield/errors.hpp"
#include "dualfield/metrics.hpp"
#include "test_util.hpp"

namespace dualfield {
namespace {

using testing::random_image;

// Direct sliding-window SSIM with a full 2D Gaussian window.
double reference_ssim(const Image& a, const Image& b) {
  double k[11][11];
  double ksum = 0.0;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      k[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0 * 1.5 * 1.5));
      ksum += k[i][j];
    }
  }
  auto lum = [](const Image& im, int r, int c) {
    const Vec3 p = im.rgb(r, c);
    return 0.299 * p.x() + 0.587 * p.y() + 0.114 * p.z();
  };
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  int count = 0;
  for (int r = 0; r + 11 <= a.height(); ++r) {
    for (int c = 0; c + 11 <= a.width(); ++c) {
      double mx = 0, my = 0;
      for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) {
          const double w = k[i][j] / ksum;
          mx += w * lum(a, r + i, c + j);
          my += w * lum(b, r + i, c + j);
        }
      }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) {
          const double w = k[i][j] / ksum;
          const double dx = lum(a, r + i, c + j) - mx;
          const double dy = lum(b, r + i, c + j) - my;
          vx += w * dx * dx;
          vy += w * dy * dy;
          cxy += w * dx * dy;
        }
      }
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

TEST(Ssim, MatchesSlidingWindowReference) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = 11 + static_cast<int>(rng.uniform() * 14);
    const int w = 11 + static_cast<int>(rng.uniform() * 14);
    const Image a = random_image(h, w, rng);
    Image b = a;
    // Correlated pairs exercise the whole range, not just SSIM near 0.
    const double mix = rng.uniform();
    for (auto& v : b.data()) v = static_cast<float>((1 - mix) * v + mix * rng.uniform());
    EXPECT_NEAR(ssim(a, b), reference_ssim(a, b), 1e-4) << "trial " << trial;
  }
}

TEST(Ssim, IdenticalImagesScoreExactlyOne) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Image a = random_image(16, 20, rng);
    EXPECT_EQ(ssim(a, a), 1.0);
  }
  const Image flat(12, 12, Vec3(0.3, 0.3, 0.3));
  EXPECT_EQ(ssim(flat, flat), 1.0);
}

TEST(Ssim, IsSymmetric) {
  Rng rng(3);
  const Image a = random_image(15, 17, rng);
  const Image b = random_image(15, 17, rng);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
}

TEST(Ssim, ConstantImagesFollowLuminanceTerm) {
  const Image a(16, 16, Vec3(0.25, 0.25, 0.25));
  const Image b(16, 16, Vec3(0.75, 0.75, 0.75));
  const double c1 = 1e-4;
  // Zero variance leaves only (2 mu1 mu2 + C1) / (mu1^2 + mu2^2 + C1) = 0.600064...
  EXPECT_NEAR(ssim(a, b), (0.375 + c1) / (0.625 + c1), 1e-9);
}

TEST(Ssim, RejectsSmallOrMismatchedImages) {
  EXPECT_THROW(ssim(Image(10, 20), Image(10, 20)), PreconditionError);
  EXPECT_THROW(ssim(Image(12, 12), Image(12, 13)), PreconditionError);
}

TEST(Psnr, ClosedForms) {
  const Image zero(8, 8, 0.0f);
  EXPECT_EQ(psnr(zero, zero), 99.0);
  EXPECT_NEAR(psnr(zero, Image(8, 8, 0.1f)), 20.0, 1e-6);
  EXPECT_NEAR(psnr(zero, Image(8, 8, 1.0f)), 0.0, 1e-12);
  EXPECT_THROW(psnr(zero, Image(8, 9)), PreconditionError);
}

std::vector<double> random_vec(Rng& rng, int n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2 * rng.uniform() - 1;
  return v;
}

double oracle_cos(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

TEST(ClipT2i, MatchesDifferenceCosineOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto io = random_vec(rng, 12), ie = random_vec(rng, 12);
    const auto to = random_vec(rng, 12), te = random_vec(rng, 12);
    std::vector<double> vi(12), vt(12);
    for (int i = 0; i < 12; ++i) {
      vi[i] = ie[i] - io[i];
      vt[i] = te[i] - to[i];
    }
    EXPECT_NEAR(clip_t2i(io, ie, to, te), oracle_cos(vi, vt), 1e-12);
  }
}

TEST(ClipT2i, ParallelAntiParallelAndScaling) {
  const std::vector<double> o = {0.1, 0.2, 0.3}, dir = {1.0, -2.0, 0.5};
  std::vector<double> e(3), e_scaled(3), t_anti(3);
  for (int i = 0; i < 3; ++i) {
    e[i] = o[i] + dir[i];
    e_scaled[i] = o[i] + 7.5 * dir[i];
    t_anti[i] = o[i] - dir[i];
  }
  EXPECT_NEAR(clip_t2i(o, e, o, e), 1.0, 1e-12);
  EXPECT_NEAR(clip_t2i(o, e, o, t_anti), -1.0, 1e-12);
  Rng rng(5);
  const auto to = random_vec(rng, 3), te = random_vec(rng, 3);
  EXPECT_NEAR(clip_t2i(o, e, to, te), clip_t2i(o, e_scaled, to, te), 1e-12);
  EXPECT_THROW(clip_t2i(o, o, to, te), MetricError);
}

// Returns preset embeddings keyed by the first pixel's red value.
class TableEmbedder final : public EmbeddingBackend {
 public:
  explicit TableEmbedder(std::vector<Embedding> table) : table_(std::move(table)) {}
  BackendInfo info() const override { return {"table", true}; }
  Embedding embed_image(const Image& image) const override {
    return table_.at(static_cast<std::size_t>(image.at(0, 0, 0)));
  }
  Embedding embed_text(std::string_view) const override { return table_.front(); }

 private:
  std::vector<Embedding> table_;
};

TEST(ClipDir, MatchesPairwiseCosineOracle) {
  Rng rng(6);
  const std::vector<Image> renders = {random_image(8, 8, rng), random_image(8, 8, rng),
                                      random_image(8, 8, rng)};
  const ToyEmbedder emb;
  const auto e0 = emb.embed_image(renders[0]);
  const auto e1 = emb.embed_image(renders[1]);
  const auto e2 = emb.embed_image(renders[2]);
  const double expect = (oracle_cos(e0, e1) + oracle_cos(e1, e2)) / 2.0;
  EXPECT_NEAR(clip_dir_consistency(renders, emb), expect, 1e-12);
}

TEST(ClipDir, ConstantSequenceAndOrthogonalPair) {
  Rng rng(7);
  const Image img = random_image(8, 8, rng);
  const std::vector<Image> same(5, img);
  EXPECT_EQ(clip_dir_consistency(same, ToyEmbedder()), 1.0);

  const TableEmbedder table({{1.0, 0.0}, {0.0, 1.0}});
  const std::vector<Image> pair = {Image(2, 2, 0.0f), Image(2, 2, 1.0f)};
  EXPECT_EQ(clip_dir_consistency(pair, table), 0.0);
  EXPECT_THROW(clip_dir_consistency(std::vector<Image>{img}, table), PreconditionError);
}

TEST(Evaluate, IdenticalSetsGivePerfectScores) {
  Rng rng(8);
  const std::vector<Image> imgs = {random_image(16, 16, rng), random_image(16, 16, rng)};
  const MetricReport r = evaluate(imgs, imgs, {"A photograph of a ball", "A photograph of a blue ball"},
                                  ToyEmbedder());
  EXPECT_EQ(r.ssim, 1.0);
  EXPECT_EQ(r.psnr, 99.0);
  EXPECT_FALSE(r.c_t2i.has_value());
  ASSERT_TRUE(r.c_dir.has_value());
  const auto j = r.to_json();
  EXPECT_TRUE(j["c_t2i"].is_null());
  EXPECT_EQ(j["per_view"].size(), 2u);
  EXPECT_NE(r.to_csv().find("index,psnr,ssim,c_t2i"), std::string::npos);
}

TEST(Evaluate, EditedSetHasFiniteFields) {
  Rng rng(9);
  std::vector<Image> orig, edit;
  for (int i = 0; i < 3; ++i) {
    orig.push_back(random_image(16, 16, rng));
    edit.push_back(OracleEditor().edit(orig.back(), orig.back(), EditorConfig{"make it blue"}));
  }
  const MetricReport r =
      evaluate(orig, edit, {"A photograph of a ball", "A photograph of a blue ball"}, ToyEmbedder());
  ASSERT_TRUE(r.c_t2i.has_value());
  EXPECT_TRUE(std::isfinite(*r.c_t2i));
  EXPECT_GE(*r.c_t2i, -1.0);
  EXPECT_LE(*r.c_t2i, 1.0);
  EXPECT_LT(r.psnr, 99.0);
  EXPECT_THROW(evaluate(orig, std::vector<Image>{}, {"a", "b"}, ToyEmbedder()), PreconditionError);
}

}  // namespace
}  // namespace dualfield
