#include "fdt/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace fdt {

namespace {

/// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = header_token(in);
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw ImageError("malformed PNM header in " + path.string());
  }
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image " + path.string());
  const std::string magic = header_token(in);
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
    throw ImageError("unsupported image format in " + path.string() + " (need PGM/PPM)");
  const int channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  const int w = header_int(in, path), h = header_int(in, path), maxval = header_int(in, path);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) throw ImageError("unsupported PNM dimensions in " + path.string());
  Image img(w, h, channels);
  if (magic == "P5" || magic == "P6") {
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
      throw ImageError("truncated pixel data in " + path.string());
  } else {
    for (auto& p : img.pixels) {
      int v;
      if (!(in >> v)) throw ImageError("truncated pixel data in " + path.string());
      p = static_cast<std::uint8_t>(std::clamp(v, 0, maxval));
    }
  }
  if (maxval != 255)
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::lround(p * 255.0 / maxval));
  return img;
}

void write_pnm(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3) throw ImageError("PNM output needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError("cannot write image " + path.string());
  out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw ImageError("failed writing image " + path.string());
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (width == img.width && height == img.height) return img;
  Image out(width, height, img.channels);
  const double sx = static_cast<double>(img.width) / width, sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double v = (1 - wy) * ((1 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c)) +
                         wy * ((1 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c));
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

PreparedFrame prepare_frame(const Image& img, const PreprocessConfig& cfg) {
  if (img.width < 1 || img.height < 1) throw ImageError("empty image");
  PreparedFrame f;
  Image work = img;
  if (cfg.working_resolution > 0) {
    f.scale = static_cast<double>(cfg.working_resolution) / std::min(img.width, img.height);
    const int w = std::max(1, static_cast<int>(std::lround(img.width * f.scale)));
    const int h = std::max(1, static_cast<int>(std::lround(img.height * f.scale)));
    work = resize_bilinear(img, w, h);
  }
  f.width = work.width;
  f.height = work.height;
  f.tensor = Tensor<float>({1, 3, work.height, work.width});
  const std::size_t plane = static_cast<std::size_t>(work.width) * work.height;
  for (int c = 0; c < 3; ++c) {
    const int src_c = work.channels == 3 ? c : 0;
    float* dst = f.tensor.data() + c * plane;
    for (int y = 0; y < work.height; ++y)
      for (int x = 0; x < work.width; ++x)
        dst[static_cast<std::size_t>(y) * work.width + x] =
            static_cast<float>(work.at(x, y, src_c) - cfg.mean[static_cast<std::size_t>(c)]);
  }
  return f;
}

Tensor<float> crop_to_tensor(const Image& img, const BoundingBox& region, int size,
                             const std::array<double, 3>& mean) {
  Tensor<float> t({1, 3, size, size});
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  const double sx = region.w / size, sy = region.h / size;
  for (int y = 0; y < size; ++y) {
    const double fy = region.y + (y + 0.5) * sy - 0.5;
    for (int x = 0; x < size; ++x) {
      const double fx = region.x + (x + 0.5) * sx - 0.5;
      const int ix = static_cast<int>(std::lround(fx)), iy = static_cast<int>(std::lround(fy));
      const bool inside = ix >= 0 && iy >= 0 && ix < img.width && iy < img.height;
      for (int c = 0; c < 3; ++c) {
        const double v = inside ? img.at(ix, iy, img.channels == 3 ? c : 0) : mean[static_cast<std::size_t>(c)];
        t[c * plane + static_cast<std::size_t>(y) * size + x] = static_cast<float>(v - mean[static_cast<std::size_t>(c)]);
      }
    }
  }
  return t;
}

BoundingBox scale_box(const BoundingBox& b, double s) { return {b.x * s, b.y * s, b.w * s, b.h * s}; }

}  // namespace fdt
