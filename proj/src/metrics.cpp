// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/metrics.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "dualfield/errors.hpp"

namespace dualfield {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw PreconditionError(std::string(what) + ": images differ in resolution");
  }
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_kernel() {
  std::array<double, kWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    k[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Valid-region separable filter of a row-major h x w plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::array<double, kWindow>& k) {
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> horiz(static_cast<std::size_t>(h) * ow);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += k[i] * src[static_cast<std::size_t>(r) * w + c + i];
      horiz[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += k[i] * horiz[static_cast<std::size_t>(r + i) * ow + c];
      out[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  return out;
}

double raw_cosine(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw ContractError(std::string(what) + ": dimension mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw MetricError(std::string(what) + ": zero-length vector");
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  if (a.data().empty()) throw PreconditionError("psnr: empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.data().size());
  if (mse < 1e-10) return 99.0;
  return -10.0 * std::log10(mse);
}

std::vector<double> luminance(const Image& image) {
  std::vector<double> y(static_cast<std::size_t>(image.height()) * image.width());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const Vec3 p = image.rgb(r, c);
      y[static_cast<std::size_t>(r) * image.width() + c] = 0.299 * p.x() + 0.587 * p.y() + 0.114 * p.z();
    }
  }
  return y;
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  const int h = a.height();
  const int w = a.width();
  if (h < kWindow || w < kWindow) {
    throw PreconditionError("ssim: images must be at least 11x11");
  }
  static const auto kernel = gaussian_kernel();
  const auto x = luminance(a);
  const auto y = luminance(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, h, w, kernel);
  const auto my = filter_valid(y, h, w, kernel);
  const auto mxx = filter_valid(xx, h, w, kernel);
  const auto myy = filter_valid(yy, h, w, kernel);
  const auto mxy = filter_valid(xy, h, w, kernel);
  // Written so that x == y gives numerator == denominator bit-for-bit.
  double sum = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double m1 = mx[i];
    const double m2 = my[i];
    const double s1 = mxx[i] - m1 * m1;
    const double s2 = myy[i] - m2 * m2;
    const double s12 = mxy[i] - m1 * m2;
    const double num = (m1 * m2 + m1 * m2 + kC1) * (s12 + s12 + kC2);
    const double den = (m1 * m1 + m2 * m2 + kC1) * (s1 + s2 + kC2);
    sum += num / den;
  }
  return sum / static_cast<double>(mx.size());
}

double clip_t2i(std::span<const double> image_original, std::span<const double> image_edited,
                std::span<const double> text_original, std::span<const double> text_edited) {
  if (image_original.size() != image_edited.size() ||
      text_original.size() != text_edited.size()) {
    throw ContractError("clip_t2i: embedding dimension mismatch");
  }
  std::vector<double> v_img(image_original.size());
  std::vector<double> v_text(text_original.size());
  for (std::size_t i = 0; i < v_img.size(); ++i) v_img[i] = image_edited[i] - image_original[i];
  for (std::size_t i = 0; i < v_text.size(); ++i) v_text[i] = text_edited[i] - text_original[i];
  return raw_cosine(v_img, v_text, "clip_t2i");
}

double clip_t2i(const Image& original, const Image& edited, const CaptionPair& captions,
                const EmbeddingBackend& embedder) {
  if (captions.original_caption.empty() || captions.edited_caption.empty()) {
    throw PreconditionError("clip_t2i: captions must be non-empty");
  }
  const Embedding io = embedder.embed_image(original);
  const Embedding ie = embedder.embed_image(edited);
  const Embedding to = embedder.embed_text(captions.original_caption);
  const Embedding te = embedder.embed_text(captions.edited_caption);
  return clip_t2i(io, ie, to, te);
}

double clip_dir_consistency(std::span<const Image> renders, const EmbeddingBackend& embedder) {
  if (renders.size() < 2) throw PreconditionError("clip_dir_consistency needs at least 2 renders");
  std::vector<Embedding> e;
  e.reserve(renders.size());
  for (const auto& r : renders) e.push_back(embedder.embed_image(r));
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    // A constant sequence must give exactly 1, so identical pairs short-circuit.
    sum += e[k] == e[k + 1] ? 1.0 : raw_cosine(e[k], e[k + 1], "clip_dir_consistency");
  }
  return sum / static_cast<double>(e.size() - 1);
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["c_t2i"] = c_t2i ? nlohmann::json(*c_t2i) : nlohmann::json(nullptr);
  j["c_dir"] = c_dir ? nlohmann::json(*c_dir) : nlohmann::json(nullptr);
  j["ssim"] = ssim;
  j["psnr"] = psnr;
  j["per_view"] = nlohmann::json::array();
  for (const auto& v : per_view) {
    j["per_view"].push_back({{"index", v.index},
                             {"psnr", v.psnr},
                             {"ssim", v.ssim},
                             {"c_t2i", v.c_t2i ? nlohmann::json(*v.c_t2i) : nlohmann::json(nullptr)}});
  }
  return j;
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "index,psnr,ssim,c_t2i\n";
  for (const auto& v : per_view) {
    out << v.index << ',' << v.psnr << ',' << v.ssim << ',';
    if (v.c_t2i) out << *v.c_t2i;
    out << '\n';
  }
  return out.str();
}

MetricReport evaluate(std::span<const Image> originals, std::span<const Image> edited,
                      const CaptionPair& captions, const EmbeddingBackend& embedder) {
  if (originals.size() != edited.size()) {
    throw PreconditionError("evaluate: original and edited sets differ in size");
  }
  if (originals.empty()) throw PreconditionError("evaluate: no images");
  MetricReport report;
  double t2i_sum = 0.0;
  std::size_t t2i_count = 0;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    ViewMetrics v;
    v.index = i;
    v.psnr = psnr(originals[i], edited[i]);
    v.ssim = ssim(originals[i], edited[i]);
    try {
      v.c_t2i = clip_t2i(originals[i], edited[i], captions, embedder);
      t2i_sum += *v.c_t2i;
      ++t2i_count;
    } catch (const MetricError&) {
      // Unchanged image or identical captions: no edit direction to compare.
    }
    report.psnr += v.psnr;
    report.ssim += v.ssim;
    report.per_view.push_back(v);
  }
  report.psnr /= static_cast<double>(originals.size());
  report.ssim /= static_cast<double>(originals.size());
  if (t2i_count > 0) report.c_t2i = t2i_sum / static_cast<double>(t2i_count);
  if (edited.size() >= 2) report.c_dir = clip_dir_consistency(edited, embedder);
  return report;
}

}  // namespace dualfield
