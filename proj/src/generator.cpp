#include "nor/generator.hpp"

#include <algorithm>

#include "nor/common.hpp"
#include "nor/data.hpp"

namespace nor {

Tensor joint_regions(const Tensor& f_top, const Tensor& f_bottom) {
  NOR_SHAPE_CHECK(f_top.rank() == 2 && f_top.shape() == f_bottom.shape(),
                  "joint_regions: maps disagree: ", shape_str(f_top.shape()), " vs ",
                  shape_str(f_bottom.shape()));
  return concat({f_top, f_bottom});
}

CrossAttention cross_attend(const Tensor& state, const Tensor& joint, const Tensor& attention) {
  Tensor scores = matvec(joint, matvec_t(attention, state));  // e_k = s . (attention f_k)
  Tensor weights = softmax(scores);
  return {matvec_t(joint, weights), weights};
}

DecoderState init_state(const Tensor& v_top, const Tensor& v_bottom, const Tensor& joint,
                        const GeneratorParams& p) {
  Tensor s0 = tanh_op(add(matvec(p.init_top, v_top), matvec(p.init_bottom, v_bottom)));
  CrossAttention att = cross_attend(s0, joint, p.attention);
  return {s0, att.context};
}

StepResult decode_step(int prev_token, const DecoderState& state, const Tensor& joint,
                       const GeneratorParams& p) {
  NOR_REQUIRE(prev_token >= 0 && prev_token < p.embedding.dim(0), "token id ", prev_token,
              " outside vocabulary of size ", p.embedding.dim(0));
  Tensor x = concat({select_row(p.embedding, prev_token), state.ctx});
  Tensor s_new = gru_cell(x, state.s, p.gru);
  CrossAttention att = cross_attend(s_new, joint, p.attention);
  Tensor logits = add(matvec(p.out_state, s_new), matvec(p.out_ctx, att.context));
  return {log_softmax(logits), {s_new, att.context}, att.weights};
}

Tensor teacher_forced_nll(const Tensor& v_top, const Tensor& v_bottom, const Tensor& joint,
                          const std::vector<int>& comment_ids, const GeneratorParams& p) {
  NOR_REQUIRE(comment_ids.size() >= 2, "comment sequence must hold BOS and EOS at least");
  NOR_REQUIRE(comment_ids.front() == Vocabulary::kBos, "comment sequence must start with BOS");
  NOR_REQUIRE(comment_ids.back() == Vocabulary::kEos, "comment sequence must end with EOS");
  DecoderState state = init_state(v_top, v_bottom, joint, p);
  std::vector<Tensor> losses;
  losses.reserve(comment_ids.size() - 1);
  for (std::size_t t = 1; t < comment_ids.size(); ++t) {
    StepResult step = decode_step(comment_ids[t - 1], state, joint, p);
    losses.push_back(pick(step.log_probs, comment_ids[t]));
    state = step.state;
  }
  return scale(add_n(losses), -1.0);
}

namespace {

struct LiveHypothesis {
  std::vector<int> tokens;
  double cum_log_prob = 0.0;
  DecoderState state;  // state after consuming tokens (input to the next step)
};

}  // namespace

Hypothesis beam_search(const Tensor& v_top, const Tensor& v_bottom, const Tensor& joint,
                       const GeneratorParams& p, int beam_size, int max_len) {
  NOR_REQUIRE(beam_size >= 1, "beam_size must be at least 1");
  NOR_REQUIRE(max_len >= 1, "max_len must be at least 1");
  NoGrad guard;
  const int vocab = p.embedding.dim(0);

  std::vector<LiveHypothesis> live;
  live.push_back({{}, 0.0, init_state(v_top, v_bottom, joint, p)});
  std::vector<Hypothesis> finished;

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    struct Expansion {
      double cum;
      std::vector<int> tokens;
      std::size_t parent;
    };
    std::vector<Expansion> expansions;
    expansions.reserve(live.size() * static_cast<std::size_t>(vocab));
    std::vector<DecoderState> next_state(live.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      const int prev = live[h].tokens.empty() ? Vocabulary::kBos : live[h].tokens.back();
      StepResult r = decode_step(prev, live[h].state, joint, p);
      next_state[h] = r.state;
      for (int w = 0; w < vocab; ++w) {
        std::vector<int> tokens = live[h].tokens;
        tokens.push_back(w);
        expansions.push_back({live[h].cum_log_prob + r.log_probs.at(w), std::move(tokens), h});
      }
    }
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(beam_size),
                                                   expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + static_cast<std::ptrdiff_t>(keep),
                      expansions.end(), [](const Expansion& a, const Expansion& b) {
                        if (a.cum != b.cum) return a.cum > b.cum;
                        return a.tokens < b.tokens;
                      });
    expansions.resize(keep);

    std::vector<LiveHypothesis> next_live;
    for (auto& e : expansions) {
      if (e.tokens.back() == Vocabulary::kEos) {
        finished.push_back({std::move(e.tokens), e.cum, true});
      } else {
        next_live.push_back({std::move(e.tokens), e.cum, next_state[e.parent]});
      }
    }
    live = std::move(next_live);
  }

  // Max-length survivors compete with the frozen hypotheses.
  for (auto& h : live) finished.push_back({std::move(h.tokens), h.cum_log_prob, false});
  NOR_REQUIRE(!finished.empty(), "beam search retained no hypothesis");
  const Hypothesis* best = &finished[0];
  for (const Hypothesis& h : finished) {
    if (h.normalized() > best->normalized() ||
        (h.normalized() == best->normalized() && h.tokens < best->tokens)) {
      best = &h;
    }
  }
  return *best;
}

}  // namespace nor
