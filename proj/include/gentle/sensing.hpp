#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "gentle/config.hpp"
#include "gentle/rng.hpp"
#include "gentle/world.hpp"

namespace gentle {

using PlaneArray = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Grayscale-or-more image, pixel values in [0,1]. Channels are stored as
/// consecutive row-major planes.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  Eigen::ArrayXf pixels;

  Image() = default;
  Image(int w, int h, int c = 1, float fill = 0.0f)
      : width(w), height(h), channels(c), pixels(Eigen::ArrayXf::Constant(Eigen::Index(w) * h * c, fill)) {}

  Eigen::Index plane_size() const { return Eigen::Index(width) * height; }
  float& at(int x, int y, int c = 0) { return pixels(c * plane_size() + Eigen::Index(y) * width + x); }
  float at(int x, int y, int c = 0) const { return pixels(c * plane_size() + Eigen::Index(y) * width + x); }

  Eigen::Map<PlaneArray> plane(int c = 0) { return {pixels.data() + c * plane_size(), height, width}; }
  Eigen::Map<const PlaneArray> plane(int c = 0) const {
    return {pixels.data() + c * plane_size(), height, width};
  }

  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  /// Bitwise equality of shape and pixels.
  bool operator==(const Image& o) const;
};

/// Visual image, two tactile images, and their pre-contact references.
struct SensoryState {
  Image visual;
  Image tactile_left;
  Image tactile_right;
  Image tactile_left_ref;
  Image tactile_right_ref;

  const Image& tactile(Side s) const { return s == Side::left ? tactile_left : tactile_right; }
  const Image& reference(Side s) const { return s == Side::left ? tactile_left_ref : tactile_right_ref; }
  /// All five images share one shape.
  bool consistent() const;
  bool operator==(const SensoryState& o) const = default;
};

/// Integer pixel offset of a crop window.
struct CropOffset {
  int x = 0;
  int y = 0;
  bool operator==(const CropOffset&) const = default;
};

/// Top-down orthographic view of the workspace. The object is filled with an
/// intensity that encodes its height; fingers are drawn as capsules when the
/// hand is present.
Image render_visual(const WorldState& world, const Hand& hand, const WorldConfig& wc,
                    const SensingConfig& sc, Rng& rng);

/// Tactile image of one fingertip: a Gaussian contact blob whose peak is the
/// force over saturation, shifted by the contact offset and widened by
/// penetration.
Image render_tactile(const ContactResult& contact, Side side, const SensingConfig& sc, Rng& rng);

/// Pre-contact tactile reference: the blank texture plus sensor noise.
Image render_tactile_reference(const SensingConfig& sc, Rng& rng);

/// Pixelwise (post - pre) mapped affinely from [-1,1] to [0,1].
Image background_subtract(const Image& post, const Image& pre);

/// Sum over pixels of |post - pre|.
double tactile_differential(const Image& post, const Image& pre);

/// Bilinear resampling with corner pixels aligned.
Image resize(const Image& img, int width, int height);

/// Throws DomainError if the window leaves the source.
Image crop(const Image& img, CropOffset at, int width, int height);

CropOffset random_crop_offset(Rng& rng, const Image& img, int width, int height);
Image random_crop(const Image& img, Rng& rng, int width, int height);

/// Applies the same window to all five images.
SensoryState crop(const SensoryState& s, CropOffset at, int width, int height);

/// Intensity-weighted centroid (x, y) in pixel-center coordinates of the
/// values above `floor`.
Eigen::Vector2d centroid(const Image& img, float floor = 0.0f);

}  // namespace gentle
