// Image encoder: feature extraction shapes, mutual attention, pair encoding.

#include <cmath>
#include <vector>

#include <doctest.h>

#include "nor/encoder.hpp"
#include "nor/params.hpp"
#include "nor/rng.hpp"
#include "nor/tensor.hpp"

using namespace nor;

namespace {

EncoderParams make_params(int channels, int visual_dim, std::uint64_t seed) {
  const int d = 2 * channels;
  ParameterStore store(seed);
  EncoderParams p;
  p.conv1_kernels = store.xavier("c1.k", {channels, 3, 3, 3});
  p.conv1_bias = store.zeros("c1.b", {channels});
  p.conv2_kernels = store.xavier("c2.k", {channels, channels, 3, 3});
  p.conv2_bias = store.zeros("c2.b", {channels});
  p.att_feature = store.xavier("a.f", {d, d});
  p.att_context = store.xavier("a.c", {d, d});
  p.att_score = store.xavier("a.s", {d});
  p.projection = store.xavier("proj", {visual_dim, d});
  return p;
}

Tensor rand_image(int size, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(3) * size * size);
  for (auto& x : v) x = rng.uniform(0.0, 1.0);
  return Tensor::from({3, size, size}, std::move(v));
}

}  // namespace

TEST_CASE("extract_features yields one row per pooled cell, dim twice the channels") {
  Rng rng(31);
  auto p = make_params(2, 4, 100);
  Tensor f = extract_features(rand_image(32, rng), p, 4);
  CHECK(f.shape() == Shape{64, 4});  // (32/4)^2 rows, 2*2 channels

  Tensor f2 = extract_features(rand_image(24, rng), p, 8);
  CHECK(f2.shape() == Shape{9, 4});
}

TEST_CASE("extract_features at full-scale defaults gives 196 regions of width 64") {
  Rng rng(32);
  auto p = make_params(32, 300, 200);
  Tensor f = extract_features(rand_image(224, rng), p, 16);
  CHECK(f.shape() == Shape{196, 64});
}

TEST_CASE("zero image with zero biases maps to all-zero features") {
  auto p = make_params(2, 4, 300);
  Tensor f = extract_features(Tensor::zeros({3, 16, 16}), p, 4);
  for (double x : f.values()) CHECK(x == 0.0);
}

TEST_CASE("mutual attention reproduces the scalar worked example") {
  // L=2, D=1, all attention weights 1. Regions [1,-1], other item [0,1]
  // so its mean is 0.5 and scores are tanh(1.5), tanh(-0.5).
  EncoderParams p;
  p.att_feature = Tensor::from({1, 1}, {1.0});
  p.att_context = Tensor::from({1, 1}, {1.0});
  p.att_score = Tensor::from({1}, {1.0});
  Tensor f_self = Tensor::from({2, 1}, {1.0, -1.0});
  Tensor f_other = Tensor::from({2, 1}, {0.0, 1.0});

  auto att = mutual_attend(f_self, f_other, p);
  CHECK(att.weights.values()[0] == doctest::Approx(0.796937980255).epsilon(1e-10));
  CHECK(att.weights.values()[1] == doctest::Approx(0.203062019745).epsilon(1e-10));
  CHECK(att.attended.values()[0] == doctest::Approx(0.593875960511).epsilon(1e-10));
}

TEST_CASE("mutual attention weights form a strict distribution") {
  Rng rng(33);
  auto p = make_params(3, 4, 400);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = extract_features(rand_image(16, rng), p, 4);
    Tensor b = extract_features(rand_image(16, rng), p, 4);
    auto att = mutual_attend(a, b, p);
    double total = 0.0;
    for (double w : att.weights.values()) {
      CHECK(w > 0.0);
      total += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("identical regions average to that region under any attention") {
  Rng rng(34);
  auto p = make_params(2, 4, 500);
  const int d = 4;
  std::vector<double> row(d);
  for (auto& x : row) x = rng.uniform(-1.0, 1.0);
  std::vector<double> tiled;
  for (int i = 0; i < 6; ++i) tiled.insert(tiled.end(), row.begin(), row.end());
  Tensor f_self = Tensor::from({6, d}, tiled);
  std::vector<double> other(6 * static_cast<std::size_t>(d));
  for (auto& x : other) x = rng.uniform(-1.0, 1.0);
  Tensor f_other = Tensor::from({6, d}, other);  // same region count as f_self

  auto att = mutual_attend(f_self, f_other, p);
  for (int j = 0; j < d; ++j)
    CHECK(att.attended.values()[static_cast<std::size_t>(j)] ==
          doctest::Approx(row[static_cast<std::size_t>(j)]).epsilon(1e-12));
}

TEST_CASE("encode_pair concatenates projected visual and latent halves") {
  Rng rng(35);
  const int visual_dim = 5;
  auto p = make_params(2, visual_dim, 600);
  Tensor top_img = rand_image(16, rng);
  Tensor bottom_img = rand_image(16, rng);
  Tensor top_lat = Tensor::from({visual_dim}, {0.1, 0.2, 0.3, 0.4, 0.5});
  Tensor bottom_lat = Tensor::from({visual_dim}, {-0.1, -0.2, -0.3, -0.4, -0.5});

  auto enc = encode_pair(top_img, bottom_img, top_lat, bottom_lat, p, 4);
  CHECK(enc.v_top.shape() == Shape{2 * visual_dim});
  CHECK(enc.v_bottom.shape() == Shape{2 * visual_dim});
  CHECK(enc.f_top.shape() == Shape{16, 4});
  CHECK(enc.att_top.shape() == Shape{16});
  CHECK(enc.att_bottom.shape() == Shape{16});

  // Second half of each item vector is the latent row verbatim.
  for (int j = 0; j < visual_dim; ++j) {
    CHECK(enc.v_top.values()[static_cast<std::size_t>(visual_dim + j)] ==
          top_lat.values()[static_cast<std::size_t>(j)]);
    CHECK(enc.v_bottom.values()[static_cast<std::size_t>(visual_dim + j)] ==
          bottom_lat.values()[static_cast<std::size_t>(j)]);
  }
}

TEST_CASE("zero projection zeroes the visual half only") {
  Rng rng(36);
  const int visual_dim = 3;
  auto p = make_params(2, visual_dim, 700);
  p.projection = Tensor::zeros({visual_dim, 4});
  Tensor lat = Tensor::from({visual_dim}, {0.7, -0.8, 0.9});

  auto enc = encode_pair(rand_image(16, rng), rand_image(16, rng), lat, lat, p, 4);
  for (int j = 0; j < visual_dim; ++j) {
    CHECK(enc.v_top.values()[static_cast<std::size_t>(j)] == 0.0);
    CHECK(enc.v_top.values()[static_cast<std::size_t>(visual_dim + j)] ==
          lat.values()[static_cast<std::size_t>(j)]);
  }
}

TEST_CASE("encode_pair_from_features matches encode_pair on shared inputs") {
  Rng rng(37);
  const int visual_dim = 4;
  auto p = make_params(2, visual_dim, 800);
  Tensor top_img = rand_image(16, rng);
  Tensor bottom_img = rand_image(16, rng);
  Tensor tl = Tensor::from({visual_dim}, {0.1, -0.2, 0.3, -0.4});
  Tensor bl = Tensor::from({visual_dim}, {0.5, 0.6, -0.7, 0.8});

  auto full = encode_pair(top_img, bottom_img, tl, bl, p, 4);
  Tensor f_top = extract_features(top_img, p, 4);
  Tensor f_bottom = extract_features(bottom_img, p, 4);
  auto reused = encode_pair_from_features(f_top, f_bottom, tl, bl, p);

  REQUIRE(full.v_top.shape() == reused.v_top.shape());
  for (std::size_t i = 0; i < full.v_top.values().size(); ++i)
    CHECK(full.v_top.values()[i] == doctest::Approx(reused.v_top.values()[i]).epsilon(1e-14));
  for (std::size_t i = 0; i < full.att_bottom.values().size(); ++i)
    CHECK(full.att_bottom.values()[i] ==
          doctest::Approx(reused.att_bottom.values()[i]).epsilon(1e-14));
}
