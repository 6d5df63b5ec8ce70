#include "nor/encoder.hpp"

#include "nor/common.hpp"

namespace nor {

Tensor extract_features(const Tensor& image, const EncoderParams& p, int pool_window) {
  Tensor a1 = relu(conv2d(image, p.conv1_kernels, p.conv1_bias));
  Tensor a2 = relu(conv2d(a1, p.conv2_kernels, p.conv2_bias));
  Tensor stacked = concat({a1, a2});  // channel axis is axis 0 of [C,H,W]
  Tensor pooled = max_pool2d(stacked, pool_window);
  return chw_to_regions(pooled);
}

MutualAttention mutual_attend(const Tensor& f_self, const Tensor& f_other,
                              const EncoderParams& p) {
  NOR_SHAPE_CHECK(f_self.rank() == 2 && f_other.rank() == 2, "mutual_attend: region maps ",
                  shape_str(f_self.shape()), " and ", shape_str(f_other.shape()));
  NOR_SHAPE_CHECK(f_self.shape() == f_other.shape(),
                  "mutual_attend: region maps disagree: ", shape_str(f_self.shape()), " vs ",
                  shape_str(f_other.shape()));
  Tensor g_other = mean_rows(f_other);                       // [D]
  Tensor projected = matmul_abt(f_self, p.att_feature);      // [L,D] rows = att_feature f_i
  Tensor shifted = add_rowvec(projected, matvec(p.att_context, g_other));
  Tensor scores = matvec(tanh_op(shifted), p.att_score);     // [L]
  Tensor weights = softmax(scores);
  Tensor attended = matvec_t(f_self, weights);               // weighted sum of regions
  return {attended, weights};
}

namespace {

Tensor item_vector(const Tensor& attended, const Tensor& latent, const EncoderParams& p) {
  Tensor visual = relu(matvec(p.projection, attended));
  return concat({visual, latent});
}

}  // namespace

PairEncoding encode_pair_from_features(const Tensor& f_top, const Tensor& f_bottom,
                                       const Tensor& top_latent, const Tensor& bottom_latent,
                                       const EncoderParams& p) {
  MutualAttention top_att = mutual_attend(f_top, f_bottom, p);
  MutualAttention bottom_att = mutual_attend(f_bottom, f_top, p);
  PairEncoding out;
  out.f_top = f_top;
  out.f_bottom = f_bottom;
  out.att_top = top_att.weights;
  out.att_bottom = bottom_att.weights;
  out.v_top = item_vector(top_att.attended, top_latent, p);
  out.v_bottom = item_vector(bottom_att.attended, bottom_latent, p);
  return out;
}

PairEncoding encode_pair(const Tensor& top_image, const Tensor& bottom_image,
                         const Tensor& top_latent, const Tensor& bottom_latent,
                         const EncoderParams& p, int pool_window) {
  Tensor f_top = extract_features(top_image, p, pool_window);
  Tensor f_bottom = extract_features(bottom_image, p, pool_window);
  return encode_pair_from_features(f_top, f_bottom, top_latent, bottom_latent, p);
}

}  // namespace nor
