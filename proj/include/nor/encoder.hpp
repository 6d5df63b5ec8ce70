#ifndef NOR_ENCODER_HPP_
#define NOR_ENCODER_HPP_

#include "nor/tensor.hpp"

namespace nor {

// Weights of the shared image encoder. Both items run through the same
// instance: the architecture ties every encoder weight across top and bottom.
struct EncoderParams {
  Tensor conv1_kernels, conv1_bias;  // [D1,3,3,3], [D1]
  Tensor conv2_kernels, conv2_bias;  // [D2,D1,3,3], [D2]
  Tensor att_feature;                // [D,D], applied to the attended item's regions
  Tensor att_context;                // [D,D], applied to the other item's pooled vector
  Tensor att_score;                  // [D]
  Tensor projection;                 // [m_v,D]
};

// conv -> ReLU -> conv -> ReLU, channel concat of both activations, window
// max-pool, then one row per surviving spatial cell: [L, D] with
// L=(H/window)^2 and D twice the conv channel count.
Tensor extract_features(const Tensor& image, const EncoderParams& p, int pool_window);

struct MutualAttention {
  Tensor attended;  // [D] weighted sum of self regions
  Tensor weights;   // [L]
};

// Scores each region of `self` against the global average of `other`:
// e_i = score . tanh(att_feature f_i + att_context mean(other)).
MutualAttention mutual_attend(const Tensor& f_self, const Tensor& f_other,
                              const EncoderParams& p);

struct PairEncoding {
  Tensor v_top, v_bottom;            // [m] = [projected visual ; latent factors]
  Tensor f_top, f_bottom;            // [L,D] region features
  Tensor att_top, att_bottom;        // [L] mutual-attention weights over own regions
};

// Full pair encoding. The latent arguments are the item rows already looked
// up from the factor tables; callers resolve ids to rows.
PairEncoding encode_pair(const Tensor& top_image, const Tensor& bottom_image,
                         const Tensor& top_latent, const Tensor& bottom_latent,
                         const EncoderParams& p, int pool_window);

// Variant reusing precomputed region features (frozen-parameter evaluation).
PairEncoding encode_pair_from_features(const Tensor& f_top, const Tensor& f_bottom,
                                       const Tensor& top_latent, const Tensor& bottom_latent,
                                       const EncoderParams& p);

}  // namespace nor

#endif  // NOR_ENCODER_HPP_
