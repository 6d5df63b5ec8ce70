#ifndef NOR_IMAGE_HPP_
#define NOR_IMAGE_HPP_

#include <string>
#include <vector>

#include "nor/tensor.hpp"

namespace nor {

// 8-bit RGB image, row-major, interleaved channels.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;  // 3 * width * height

  unsigned char& at(int y, int x, int c) {
    return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
  unsigned char at(int y, int x, int c) const {
    return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
};

// PNG decode to RGB8 (palette/gray/alpha inputs are expanded; alpha dropped).
ImageU8 read_png(const std::string& path);
void write_png(const ImageU8& img, const std::string& path);

ImageU8 bilinear_resize(const ImageU8& img, int out_w, int out_h);

// Decode, resize to size x size, scale channels to [0,1] -> Tensor [3,size,size].
Tensor load_image_tensor(const std::string& path, int size);

}  // namespace nor

#endif  // NOR_IMAGE_HPP_
