#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "puzzlemeasure/dynamics.hpp"

namespace puzzlemeasure {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

class Image {
 public:
  Image(int width, int height, Rgb fill = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  void set(int x, int y, Rgb c);
  Rgb get(int x, int y) const;
  const std::vector<std::uint8_t>& data() const { return rgb_; }

 private:
  int width_, height_;
  std::vector<std::uint8_t> rgb_;
};

/// Maps a rectangle of the plane onto the pixel grid, y up.
struct View {
  Cx center;
  double half_width;
  int width, height;

  bool pixel(Cx z, int& x, int& y) const;
  Cx point(int x, int y) const;
};

void draw_line(Image& img, const View& view, Cx a, Cx b, Rgb c);
void draw_polyline(Image& img, const View& view, const std::vector<Cx>& pts, Rgb c, bool closed = false);

/// Escape-time shading of the filled Julia set (dark) and its exterior (light bands).
void render_julia(Image& img, const View& view, const UnicriticalMap& f, int max_iter = 256);

/// Line plot of series over x = 0..n-1 in the unit box [0, n-1] x [y_lo, y_hi].
Image plot_series(const std::vector<std::vector<double>>& series, double y_lo, double y_hi, int width = 480,
                  int height = 320);

/// RGB8 PNG without time chunks.
void write_png(const std::string& path, const Image& img);

}  // namespace puzzlemeasure
