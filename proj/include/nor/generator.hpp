#ifndef NOR_GENERATOR_HPP_
#define NOR_GENERATOR_HPP_

#include <vector>

#include "nor/tensor.hpp"

namespace nor {

struct GeneratorParams {
  Tensor init_top, init_bottom;  // [q,m]
  Tensor embedding;              // [|V|,e]
  GruWeights gru;                // input size e+D, hidden size q
  Tensor attention;              // [q,D] bilinear scoring over joint regions
  Tensor out_state, out_ctx;     // [|V|,q], [|V|,D]
};

// Stacks the two region maps into one [2L,D] joint map (top rows first).
Tensor joint_regions(const Tensor& f_top, const Tensor& f_bottom);

struct CrossAttention {
  Tensor context;  // [D]
  Tensor weights;  // [2L]
};

// e_k = s . (attention f_k); weights = softmax(e); context = sum_k w_k f_k.
CrossAttention cross_attend(const Tensor& state, const Tensor& joint, const Tensor& attention);

struct DecoderState {
  Tensor s;    // [q]
  Tensor ctx;  // [D]
};

// s_0 = tanh(init_top v_t + init_bottom v_b); ctx_0 attends from s_0.
DecoderState init_state(const Tensor& v_top, const Tensor& v_bottom, const Tensor& joint,
                        const GeneratorParams& p);

struct StepResult {
  Tensor log_probs;  // [|V|]
  DecoderState state;
  Tensor weights;  // [2L] attention of the fresh context
};

// One decoding step: GRU input is [embedding(prev) ; ctx_prev]; the word
// distribution reads the new hidden state and the new context.
StepResult decode_step(int prev_token, const DecoderState& state, const Tensor& joint,
                       const GeneratorParams& p);

// Negative log-likelihood of a BOS-prefixed, EOS-terminated token sequence,
// summed over its predicted positions (every token after BOS).
Tensor teacher_forced_nll(const Tensor& v_top, const Tensor& v_bottom, const Tensor& joint,
                          const std::vector<int>& comment_ids, const GeneratorParams& p);

struct Hypothesis {
  std::vector<int> tokens;  // no BOS; includes the final EOS when finished
  double cum_log_prob = 0.0;
  bool finished = false;
  double normalized() const {
    return tokens.empty() ? 0.0 : cum_log_prob / static_cast<double>(tokens.size());
  }
};

// Beam search from BOS. Per step: every live hypothesis expands over the full
// vocabulary, the beam_size best continuations by cumulative log-probability
// survive (ties: lexicographically smaller token sequence), EOS continuations
// freeze. The winner among frozen and max-length hypotheses is the one with
// the best length-normalized score.
Hypothesis beam_search(const Tensor& v_top, const Tensor& v_bottom, const Tensor& joint,
                       const GeneratorParams& p, int beam_size, int max_len);

}  // namespace nor

#endif  // NOR_GENERATOR_HPP_
