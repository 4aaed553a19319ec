#include "puzzlemeasure/png_writer.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "puzzlemeasure/kernels/kernels.hpp"

namespace puzzlemeasure {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::kInvalidArgument, "image size must be positive");
  rgb_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < rgb_.size(); i += 3) {
    rgb_[i] = fill.r;
    rgb_[i + 1] = fill.g;
    rgb_[i + 2] = fill.b;
  }
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  const std::size_t p = (static_cast<std::size_t>(y) * width_ + x) * 3;
  rgb_[p] = c.r;
  rgb_[p + 1] = c.g;
  rgb_[p + 2] = c.b;
}

Rgb Image::get(int x, int y) const {
  const std::size_t p = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {rgb_[p], rgb_[p + 1], rgb_[p + 2]};
}

bool View::pixel(Cx z, int& x, int& y) const {
  const double scale = width / (2 * half_width);
  const double fx = (z.real() - center.real()) * scale + width / 2.0;
  const double fy = height / 2.0 - (z.imag() - center.imag()) * scale;
  if (!(fx >= -1e6 && fx <= 1e6 && fy >= -1e6 && fy <= 1e6)) return false;
  x = static_cast<int>(std::floor(fx));
  y = static_cast<int>(std::floor(fy));
  return x >= 0 && y >= 0 && x < width && y < height;
}

Cx View::point(int x, int y) const {
  const double scale = 2 * half_width / width;
  return center + Cx((x + 0.5 - width / 2.0) * scale, (height / 2.0 - y - 0.5) * scale);
}

void draw_line(Image& img, const View& view, Cx a, Cx b, Rgb c) {
  const double scale = view.width / (2 * view.half_width);
  const int n = std::clamp(static_cast<int>(std::abs(b - a) * scale * 2) + 1, 1, 1 << 16);
  for (int i = 0; i <= n; ++i) {
    int x, y;
    if (view.pixel(a + (b - a) * (static_cast<double>(i) / n), x, y)) img.set(x, y, c);
  }
}

void draw_polyline(Image& img, const View& view, const std::vector<Cx>& pts, Rgb c, bool closed) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) draw_line(img, view, pts[i], pts[i + 1], c);
  if (closed && pts.size() > 2) draw_line(img, view, pts.back(), pts.front(), c);
}

void render_julia(Image& img, const View& view, const UnicriticalMap& f, int max_iter) {
  const auto& k = kernels::active();
  const std::size_t w = static_cast<std::size_t>(view.width);
  std::vector<double> re(w), im(w), zr(w), zi(w);
  std::vector<int> it(w);
  const double r = std::max(2.0, std::pow(1 + std::abs(f.c()), 1.0 / (f.degree() - 1)) + 1);
  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      const Cx z = view.point(x, y);
      re[static_cast<std::size_t>(x)] = z.real();
      im[static_cast<std::size_t>(x)] = z.imag();
    }
    k.escape(re.data(), im.data(), w, f.degree(), f.c().real(), f.c().imag(), r * r, max_iter, it.data(), zr.data(),
             zi.data());
    for (int x = 0; x < view.width; ++x) {
      const int n = it[static_cast<std::size_t>(x)];
      if (n >= max_iter) {
        img.set(x, y, {40, 40, 60});
      } else {
        const auto v = static_cast<std::uint8_t>(200 + 55 * (n % 2));
        img.set(x, y, {v, v, static_cast<std::uint8_t>(std::min(255, v + 10))});
      }
    }
  }
}

Image plot_series(const std::vector<std::vector<double>>& series, double y_lo, double y_hi, int width, int height) {
  Image img(width, height);
  const Rgb palette[] = {{200, 40, 40}, {40, 90, 200}, {30, 150, 60}, {160, 90, 20}, {120, 40, 160}};
  std::size_t n = 2;
  for (const auto& s : series) n = std::max(n, s.size());
  const View view{Cx((n - 1) / 2.0, (y_lo + y_hi) / 2), (n - 1) / 2.0 * 1.1, width, height};
  const double span_y = (y_hi - y_lo) * 1.05;
  auto place = [&](double x, double y) {
    // squash y so that [y_lo, y_hi] fills the height
    const double sy = (y - (y_lo + y_hi) / 2) / span_y * (2 * view.half_width * height / width);
    return Cx(x, (y_lo + y_hi) / 2 + sy);
  };
  draw_line(img, view, place(0, y_lo), place(static_cast<double>(n - 1), y_lo), {0, 0, 0});
  draw_line(img, view, place(0, y_lo), place(0, y_hi), {0, 0, 0});
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<Cx> pts;
    for (std::size_t x = 0; x < series[i].size(); ++x) pts.push_back(place(static_cast<double>(x), series[i][x]));
    draw_polyline(img, view, pts, palette[i % 5]);
  }
  return img;
}

void write_png(const std::string& path, const Image& img) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(ErrorKind::kInvalidArgument, "cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kInvalidArgument, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kInvalidArgument, "libpng failed writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = const_cast<png_bytep>(img.data().data() + static_cast<std::size_t>(y) * img.width() * 3);
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace puzzlemeasure
