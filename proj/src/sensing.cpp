#include "gentle/sensing.hpp"

#include <algorithm>
#include <bit>
#include <string>
#include <vector>
#include <cmath>

#include "gentle/errors.hpp"

namespace gentle {

namespace {

float truncated_noise(Rng& rng, const SensingConfig& sc) {
  if (sc.noise_sigma <= 0.0) return 0.0f;
  const double limit = sc.noise_truncation;
  double z;
  do {
    z = rng.normal();
  } while (std::abs(z) > limit);
  return static_cast<float>(z * sc.noise_sigma);
}

void add_noise_and_clamp(Image& img, const SensingConfig& sc, Rng& rng) {
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) img.pixels(i) += truncated_noise(rng, sc);
  img.pixels = img.pixels.cwiseMax(0.0f).cwiseMin(1.0f);
}

// Replicates plane 0 into the remaining channels.
void broadcast_channels(Image& img) {
  for (int c = 1; c < img.channels; ++c) img.plane(c) = img.plane(0);
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

// Link joint positions of a chain in the hand frame, base first.
std::vector<Eigen::Vector2d> chain_points(const FingerChain& chain, const JointVector& q) {
  std::vector<Eigen::Vector2d> pts{chain.base_position};
  const double sign = chain.mirrored ? -1.0 : 1.0;
  double cumulative = 0.0;
  Eigen::Vector2d p = chain.base_position;
  for (std::size_t i = 0; i < chain.link_lengths.size(); ++i) {
    cumulative += q(chain.joint_indices[i]);
    const double angle = chain.base_heading + sign * cumulative;
    p += chain.link_lengths[i] * Eigen::Vector2d(std::cos(angle), std::sin(angle));
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

bool Image::operator==(const Image& o) const {
  if (!same_shape(o)) return false;
  return std::equal(pixels.data(), pixels.data() + pixels.size(), o.pixels.data(),
                    [](float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); });
}

bool SensoryState::consistent() const {
  return visual.same_shape(tactile_left) && visual.same_shape(tactile_right) &&
         visual.same_shape(tactile_left_ref) && visual.same_shape(tactile_right_ref);
}

Image render_visual(const WorldState& world, const Hand& hand, const WorldConfig& wc,
                    const SensingConfig& sc, Rng& rng) {
  const int n = sc.render_size;
  Image img(n, n, sc.channels, static_cast<float>(sc.visual_background));
  const double mm_per_px_x = wc.x_range_mm.width() / n;
  const double mm_per_px_y = wc.y_range_mm.width() / n;
  const int ss = sc.supersample;
  const double weight = 1.0 / (ss * ss);

  const double obj_intensity =
      0.3 + 0.6 * std::min(1.0, object_height(world.object, wc) / wc.upright_height_mm);
  const double finger_intensity =
      std::clamp(sc.visual_finger_intensity + 0.2 * world.hand.z / wc.upright_height_mm, 0.0, 1.0);

  // Finger capsules in world coordinates.
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> segments;
  if (world.hand_present) {
    for (Side s : kSides) {
      const auto pts = chain_points(hand.finger(s), world.observed);
      for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        segments.emplace_back(hand_to_world(world.hand, pts[i]), hand_to_world(world.hand, pts[i + 1]));
    }
  }
  const double half_width = 0.5 * sc.finger_width_mm;

  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      double object_cover = 0.0, finger_cover = 0.0;
      for (int a = 0; a < ss; ++a) {
        for (int b = 0; b < ss; ++b) {
          const Eigen::Vector2d p(wc.x_range_mm.lo + (col + (b + 0.5) / ss) * mm_per_px_x,
                                  wc.y_range_mm.lo + (row + (a + 0.5) / ss) * mm_per_px_y);
          if (object_contains(world.object, wc, p)) object_cover += weight;
          for (const auto& [s0, s1] : segments) {
            if (segment_distance(p, s0, s1) <= half_width) {
              finger_cover += weight;
              break;
            }
          }
        }
      }
      double v = sc.visual_background;
      v += (obj_intensity - v) * object_cover;
      v += (finger_intensity - v) * finger_cover;
      img.at(col, row) = static_cast<float>(v);
    }
  }
  add_noise_and_clamp(img, sc, rng);
  broadcast_channels(img);
  return img;
}

Image render_tactile(const ContactResult& contact, Side side, const SensingConfig& sc, Rng& rng) {
  const int n = sc.render_size;
  Image img(n, n, sc.channels, 0.0f);
  const FingerContact& f = contact[side];
  if (f.force > 0.0) {
    const double peak = std::min(1.0, f.force / sc.force_saturation_n);
    const double sigma = sc.blob_sigma_px + sc.blob_sigma_px_per_mm * f.penetration_mm;
    const double cu = 0.5 * n + f.offset_mm * sc.tactile_px_per_mm;
    const double cv = 0.5 * n;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int row = 0; row < n; ++row) {
      for (int col = 0; col < n; ++col) {
        const double du = col + 0.5 - cu, dv = row + 0.5 - cv;
        img.at(col, row) = static_cast<float>(peak * std::exp(-(du * du + dv * dv) * inv));
      }
    }
  }
  add_noise_and_clamp(img, sc, rng);
  broadcast_channels(img);
  return img;
}

Image render_tactile_reference(const SensingConfig& sc, Rng& rng) {
  Image img(sc.render_size, sc.render_size, sc.channels, 0.0f);
  add_noise_and_clamp(img, sc, rng);
  broadcast_channels(img);
  return img;
}

Image background_subtract(const Image& post, const Image& pre) {
  if (!post.same_shape(pre)) throw DomainError("background_subtract: image shapes differ");
  Image out(post.width, post.height, post.channels);
  out.pixels = 0.5f * ((post.pixels - pre.pixels) + 1.0f);
  return out;
}

double tactile_differential(const Image& post, const Image& pre) {
  if (!post.same_shape(pre)) throw DomainError("tactile_differential: image shapes differ");
  return (post.pixels - pre.pixels).abs().cast<double>().sum();
}

Image resize(const Image& img, int width, int height) {
  if (width <= 0 || height <= 0) throw DomainError("resize: target size must be positive");
  if (width == img.width && height == img.height) return img;
  Image out(width, height, img.channels);
  const double sx = width > 1 ? double(img.width - 1) / (width - 1) : 0.0;
  const double sy = height > 1 ? double(img.height - 1) / (height - 1) : 0.0;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < height; ++y) {
      const double fy = y * sy;
      const int y0 = std::min(static_cast<int>(fy), img.height - 1);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const double ty = fy - y0;
      for (int x = 0; x < width; ++x) {
        const double fx = x * sx;
        const int x0 = std::min(static_cast<int>(fx), img.width - 1);
        const int x1 = std::min(x0 + 1, img.width - 1);
        const double tx = fx - x0;
        const double top = (1 - tx) * img.at(x0, y0, c) + tx * img.at(x1, y0, c);
        const double bottom = (1 - tx) * img.at(x0, y1, c) + tx * img.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1 - ty) * top + ty * bottom);
      }
    }
  }
  return out;
}

Image crop(const Image& img, CropOffset at, int width, int height) {
  if (width <= 0 || height <= 0 || width > img.width || height > img.height)
    throw DomainError("crop " + std::to_string(width) + "x" + std::to_string(height) + " larger than source " +
                      std::to_string(img.width) + "x" + std::to_string(img.height));
  if (at.x < 0 || at.y < 0 || at.x + width > img.width || at.y + height > img.height)
    throw DomainError("crop window leaves the source image");
  Image out(width, height, img.channels);
  for (int c = 0; c < img.channels; ++c) out.plane(c) = img.plane(c).block(at.y, at.x, height, width);
  return out;
}

CropOffset random_crop_offset(Rng& rng, const Image& img, int width, int height) {
  if (width <= 0 || height <= 0 || width > img.width || height > img.height)
    throw DomainError("crop " + std::to_string(width) + "x" + std::to_string(height) + " larger than source " +
                      std::to_string(img.width) + "x" + std::to_string(img.height));
  CropOffset at;
  at.x = static_cast<int>(rng.index(static_cast<std::size_t>(img.width - width + 1)));
  at.y = static_cast<int>(rng.index(static_cast<std::size_t>(img.height - height + 1)));
  return at;
}

Image random_crop(const Image& img, Rng& rng, int width, int height) {
  return crop(img, random_crop_offset(rng, img, width, height), width, height);
}

SensoryState crop(const SensoryState& s, CropOffset at, int width, int height) {
  return {crop(s.visual, at, width, height), crop(s.tactile_left, at, width, height),
          crop(s.tactile_right, at, width, height), crop(s.tactile_left_ref, at, width, height),
          crop(s.tactile_right_ref, at, width, height)};
}

Eigen::Vector2d centroid(const Image& img, float floor) {
  double total = 0.0, sx = 0.0, sy = 0.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double w = std::max(0.0f, img.at(x, y) - floor);
      total += w;
      sx += w * (x + 0.5);
      sy += w * (y + 0.5);
    }
  }
  if (total <= 0.0) return {0.5 * img.width, 0.5 * img.height};
  return {sx / total, sy / total};
}

}  // namespace gentle
