#ifndef NOR_SYNTHETIC_HPP_
#define NOR_SYNTHETIC_HPP_

#include <cstdint>
#include <string>

namespace nor {

// Writes a self-contained toy dataset under dir: n color-keyed top/bottom
// image pairs (shape on speckled background), outfits.jsonl with templated
// comments mentioning each item's color and garment. extra_pairs adds a
// second bottom to every fourth top so some queries have several positives.
// comments_per_outfit 0 means a 2-or-3 mix; any positive value is exact.
void make_synthetic(const std::string& dir, int n_outfits, int image_size, std::uint64_t seed,
                    bool extra_pairs = false, int comments_per_outfit = 0);

}  // namespace nor

#endif  // NOR_SYNTHETIC_HPP_
