#include "nor/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nor/common.hpp"

namespace nor {

namespace {

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  NOR_REQUIRE(ec == std::errc() && p == value.data() + value.size(), "config key ", key,
              ": not an integer: '", value, "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  NOR_REQUIRE(ec == std::errc() && p == value.data() + value.size(), "config key ", key,
              ": not an unsigned integer: '", value, "'");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    NOR_REQUIRE(used == value.size(), "config key ", key, ": not a number: '", value, "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(cat("config key ", key, ": not a number: '", value, "'"));
  }
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void Config::validate() const {
  NOR_REQUIRE(image_size > 0 && pool_window > 0 && image_size % pool_window == 0,
              "image_size ", image_size, " must be a positive multiple of pool_window ",
              pool_window);
  NOR_REQUIRE(conv_channels > 0, "conv_channels must be positive");
  NOR_REQUIRE(visual_dim > 0, "visual_dim must be positive");
  NOR_REQUIRE(shared_dim > 0, "shared_dim must be positive");
  NOR_REQUIRE(embed_dim > 0 && hidden_dim > 0, "generator dims must be positive");
  NOR_REQUIRE(beam_size >= 1, "beam_size must be at least 1");
  NOR_REQUIRE(max_len >= 1, "max_len must be at least 1");
  NOR_REQUIRE(min_freq >= 1, "min_freq must be at least 1");
  NOR_REQUIRE(min_comment_tokens >= 0, "min_comment_tokens must be non-negative");
  NOR_REQUIRE(val_items >= 0 && test_items >= 0, "split sizes must be non-negative");
  NOR_REQUIRE(candidates_k >= 1, "candidates_k must be at least 1");
  NOR_REQUIRE(lambda_reg >= 0.0, "lambda_reg must be non-negative");
  NOR_REQUIRE(batch_size >= 1, "batch_size must be at least 1");
  NOR_REQUIRE(max_epochs >= 1, "max_epochs must be at least 1");
}

std::string Config::to_text() const {
  std::ostringstream os;
  os << "image_size=" << image_size << '\n'
     << "conv_channels=" << conv_channels << '\n'
     << "pool_window=" << pool_window << '\n'
     << "visual_dim=" << visual_dim << '\n'
     << "shared_dim=" << shared_dim << '\n'
     << "embed_dim=" << embed_dim << '\n'
     << "hidden_dim=" << hidden_dim << '\n'
     << "beam_size=" << beam_size << '\n'
     << "max_len=" << max_len << '\n'
     << "min_freq=" << min_freq << '\n'
     << "min_comment_tokens=" << min_comment_tokens << '\n'
     << "val_items=" << val_items << '\n'
     << "test_items=" << test_items << '\n'
     << "candidates_k=" << candidates_k << '\n'
     << "lambda_reg=" << std::setprecision(17) << lambda_reg << '\n'
     << "batch_size=" << batch_size << '\n'
     << "max_epochs=" << max_epochs << '\n'
     << "seed=" << seed << '\n';
  return os.str();
}

void Config::set(const std::string& key, const std::string& value) {
  if (key == "image_size") image_size = static_cast<int>(parse_int(key, value));
  else if (key == "conv_channels") conv_channels = static_cast<int>(parse_int(key, value));
  else if (key == "pool_window") pool_window = static_cast<int>(parse_int(key, value));
  else if (key == "visual_dim") visual_dim = static_cast<int>(parse_int(key, value));
  else if (key == "shared_dim") shared_dim = static_cast<int>(parse_int(key, value));
  else if (key == "embed_dim") embed_dim = static_cast<int>(parse_int(key, value));
  else if (key == "hidden_dim") hidden_dim = static_cast<int>(parse_int(key, value));
  else if (key == "beam_size") beam_size = static_cast<int>(parse_int(key, value));
  else if (key == "max_len") max_len = static_cast<int>(parse_int(key, value));
  else if (key == "min_freq") min_freq = static_cast<int>(parse_int(key, value));
  else if (key == "min_comment_tokens") min_comment_tokens = static_cast<int>(parse_int(key, value));
  else if (key == "val_items") val_items = static_cast<int>(parse_int(key, value));
  else if (key == "test_items") test_items = static_cast<int>(parse_int(key, value));
  else if (key == "candidates_k") candidates_k = static_cast<int>(parse_int(key, value));
  else if (key == "lambda_reg") lambda_reg = parse_double(key, value);
  else if (key == "batch_size") batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "max_epochs") max_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "seed") seed = parse_u64(key, value);
  else fail(cat("unknown config key '", key, "'"));
}

Config Config::from_text(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    NOR_REQUIRE(eq != std::string::npos, origin, ":", line_no, ": expected key=value, got '", t,
                "'");
    try {
      cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const std::exception& e) {
      fail(cat(origin, ":", line_no, ": ", e.what()));
    }
  }
  return cfg;
}

Config Config::from_file(const std::string& path) {
  std::ifstream f(path);
  NOR_REQUIRE(f.good(), "cannot read config file ", path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_text(text, path);
}

void Config::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  NOR_REQUIRE(f.good(), "cannot write config file ", path);
  f << to_text();
  NOR_REQUIRE(f.good(), "short write to config file ", path);
}

}  // namespace nor
