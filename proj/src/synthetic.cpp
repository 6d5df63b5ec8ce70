#include "nor/synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "nor/common.hpp"
#include "nor/image.hpp"
#include "nor/rng.hpp"

namespace nor {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Palette {
  const char* name;
  int r, g, b;
};

constexpr Palette kPalette[] = {
    {"red", 220, 40, 40},    {"blue", 40, 60, 220},   {"green", 40, 170, 70},
    {"yellow", 230, 205, 50}, {"purple", 150, 60, 200}, {"orange", 240, 140, 40},
    {"pink", 240, 120, 180}, {"teal", 40, 180, 180},  {"brown", 150, 100, 60},
    {"olive", 130, 150, 40}, {"navy", 30, 40, 110},   {"coral", 250, 110, 90},
};
constexpr int kPaletteSize = static_cast<int>(std::size(kPalette));

struct Rgb {
  int r, g, b;
};

Rgb item_color(int index) {
  const Palette& base = kPalette[index % kPaletteSize];
  // Later cycles reuse a name at a darker shade; comments stay truthful.
  const double fade = 1.0 / (1.0 + index / kPaletteSize * 0.35);
  return {static_cast<int>(base.r * fade), static_cast<int>(base.g * fade),
          static_cast<int>(base.b * fade)};
}

ImageU8 blank(int size, Rng& rng) {
  ImageU8 img;
  img.width = img.height = size;
  img.rgb.assign(static_cast<std::size_t>(3) * size * size, 0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int shade = 225 + static_cast<int>(rng.uniform_int(20));
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<unsigned char>(shade);
    }
  return img;
}

void fill_rect(ImageU8& img, int x0, int y0, int x1, int y1, Rgb color) {
  x0 = std::clamp(x0, 0, img.width - 1);
  x1 = std::clamp(x1, 0, img.width - 1);
  y0 = std::clamp(y0, 0, img.height - 1);
  y1 = std::clamp(y1, 0, img.height - 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      img.at(y, x, 0) = static_cast<unsigned char>(color.r);
      img.at(y, x, 1) = static_cast<unsigned char>(color.g);
      img.at(y, x, 2) = static_cast<unsigned char>(color.b);
    }
}

void fill_circle(ImageU8& img, int cx, int cy, int radius, Rgb color) {
  for (int y = std::max(0, cy - radius); y <= std::min(img.height - 1, cy + radius); ++y)
    for (int x = std::max(0, cx - radius); x <= std::min(img.width - 1, cx + radius); ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) {
        img.at(y, x, 0) = static_cast<unsigned char>(color.r);
        img.at(y, x, 1) = static_cast<unsigned char>(color.g);
        img.at(y, x, 2) = static_cast<unsigned char>(color.b);
      }
}

void speckle(ImageU8& img, Rgb color, Rng& rng) {
  for (int i = 0; i < 5; ++i) {
    const int w = 1 + static_cast<int>(rng.uniform_int(std::max(1, img.width / 8)));
    const int h = 1 + static_cast<int>(rng.uniform_int(std::max(1, img.height / 8)));
    const int x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.width)));
    const int y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.height)));
    auto jitter = [&rng](int v) {
      return std::clamp(v - 20 + static_cast<int>(rng.uniform_int(41)), 0, 255);
    };
    fill_rect(img, x, y, x + w, y + h, {jitter(color.r), jitter(color.g), jitter(color.b)});
  }
}

ImageU8 top_image(int size, Rgb color, Rng& rng) {
  ImageU8 img = blank(size, rng);
  fill_circle(img, size / 2, size / 2, static_cast<int>(size * 0.32), color);
  speckle(img, color, rng);
  return img;
}

ImageU8 bottom_image(int size, Rgb color, bool skirt, Rng& rng) {
  ImageU8 img = blank(size, rng);
  if (skirt) {
    fill_rect(img, static_cast<int>(size * 0.25), static_cast<int>(size * 0.3),
              static_cast<int>(size * 0.75), static_cast<int>(size * 0.8), color);
  } else {
    fill_rect(img, static_cast<int>(size * 0.3), static_cast<int>(size * 0.2),
              static_cast<int>(size * 0.45), static_cast<int>(size * 0.85), color);
    fill_rect(img, static_cast<int>(size * 0.55), static_cast<int>(size * 0.2),
              static_cast<int>(size * 0.7), static_cast<int>(size * 0.85), color);
  }
  speckle(img, color, rng);
  return img;
}

std::string pad3(int i) {
  std::ostringstream os;
  os << std::setw(3) << std::setfill('0') << i;
  return os.str();
}

std::vector<std::string> make_comments(const std::string& color, const std::string& garment,
                                       int how_many, Rng& rng) {
  const std::vector<std::string> templates = {
      cat("love the ", color, " ", garment, " !"),
      cat("wow ! this ", color, " outfit is so cute !"),
      cat("the ", garment, " looks great with this top !"),
      "so beautiful ! love it !",
      cat("this ", color, " ", garment, " matches perfectly !"),
      cat("such a pretty ", garment, " , great match !"),
  };
  // The color+garment template always leads so every outfit names both cues;
  // the rest are drawn in a seeded order for corpus variety.
  std::vector<std::size_t> order(templates.size() - 1);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i + 1;
  rng.shuffle(order);
  std::vector<std::string> out = {templates[0]};
  for (int i = 1; i < how_many; ++i) out.push_back(templates[order[static_cast<std::size_t>(i - 1)]]);
  return out;
}

}  // namespace

void make_synthetic(const std::string& dir, int n_outfits, int image_size, std::uint64_t seed,
                    bool extra_pairs, int comments_per_outfit) {
  NOR_REQUIRE(n_outfits >= 1, "need at least one outfit");
  NOR_REQUIRE(image_size >= 8, "image_size too small to draw anything");
  NOR_REQUIRE(comments_per_outfit >= 0 && comments_per_outfit <= 6,
              "comments_per_outfit must be in [0, 6]");
  const fs::path root(dir);
  fs::create_directories(root / "images" / "tops");
  fs::create_directories(root / "images" / "bottoms");

  std::ofstream outfits(root / "outfits.jsonl", std::ios::trunc);
  NOR_REQUIRE(outfits.good(), "cannot write ", (root / "outfits.jsonl").string());

  for (int i = 0; i < n_outfits; ++i) {
    const std::string top_id = cat("top_", pad3(i));
    const std::string bottom_id = cat("bottom_", pad3(i));
    const Rgb color = item_color(i);
    const std::string color_name = kPalette[i % kPaletteSize].name;
    const bool skirt = i % 2 == 0;
    const std::string garment = skirt ? "skirt" : "pants";

    {
      Rng rng(derive_seed(seed, cat("image/", top_id)));
      write_png(top_image(image_size, color, rng),
                (root / "images" / "tops" / (top_id + ".png")).string());
    }
    {
      Rng rng(derive_seed(seed, cat("image/", bottom_id)));
      write_png(bottom_image(image_size, color, skirt, rng),
                (root / "images" / "bottoms" / (bottom_id + ".png")).string());
    }

    Rng rng(derive_seed(seed, cat("comments/", pad3(i))));
    json j;
    j["outfit_id"] = cat("outfit_", pad3(i));
    j["top"] = top_id;
    j["bottom"] = bottom_id;
    const int how_many = comments_per_outfit > 0 ? comments_per_outfit : 2 + i % 2;
    j["comments"] = make_comments(color_name, garment, how_many, rng);
    outfits << j.dump() << '\n';

    if (extra_pairs && i % 4 == 0 && n_outfits > 1) {
      const int partner = (i + 1) % n_outfits;
      Rng extra_rng(derive_seed(seed, cat("extra/", pad3(i))));
      json e;
      e["outfit_id"] = cat("outfit_extra_", pad3(i));
      e["top"] = top_id;
      e["bottom"] = cat("bottom_", pad3(partner));
      e["comments"] = make_comments(kPalette[partner % kPaletteSize].name,
                                    partner % 2 == 0 ? "skirt" : "pants", 1, extra_rng);
      outfits << e.dump() << '\n';
    }
  }
  NOR_REQUIRE(outfits.good(), "short write to ", (root / "outfits.jsonl").string());
}

}  // namespace nor
