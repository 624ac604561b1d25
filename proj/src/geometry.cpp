// Copyright 2026 The ShadowTrack Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shadowtrack/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace shadowtrack {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument(
        "mask dimension mismatch: " + std::to_string(a.width()) + "x" +
        std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
        "x" + std::to_string(b.height()));
  }
}

void require_same_shape(const MaskTrackVolume& a, const MaskTrackVolume& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("volume dimension mismatch");
  }
}

}  // namespace

double Box::area() const {
  return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0);
}

double box_iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

BinaryMask::BinaryMask(int width, int height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("mask dimensions must be positive");
  }
  bits_ = Bits::Zero(height, width);
}

BinaryMask::BinaryMask(int width, int height,
                       std::span<const std::uint8_t> bits)
    : BinaryMask(width, height) {
  if (bits.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("mask bit count does not match dimensions");
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      bits_(y, x) = bits[static_cast<std::size_t>(y) * width + x] ? 1 : 0;
    }
  }
}

void BinaryMask::fill_rect(int x0, int y0, int x1, int y1) {
  x0 = std::clamp(x0, 0, width());
  x1 = std::clamp(x1, 0, width());
  y0 = std::clamp(y0, 0, height());
  y1 = std::clamp(y1, 0, height());
  if (x1 <= x0 || y1 <= y0) return;
  bits_.block(y0, x0, y1 - y0, x1 - x0).setOnes();
}

std::int64_t BinaryMask::count() const {
  return bits_.cast<std::int64_t>().sum();
}

std::optional<Box> BinaryMask::bounds() const {
  int xmin = width(), ymin = height(), xmax = -1, ymax = -1;
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      if (!bits_(y, x)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax < 0) return std::nullopt;
  return Box{static_cast<double>(xmin), static_cast<double>(ymin),
             static_cast<double>(xmax + 1), static_cast<double>(ymax + 1)};
}

bool BinaryMask::operator==(const BinaryMask& other) const {
  return width() == other.width() && height() == other.height() &&
         (bits_ == other.bits_).all();
}

std::int64_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  return (a.bits() * b.bits()).cast<std::int64_t>().sum();
}

std::int64_t union_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  return a.bits().max(b.bits()).cast<std::int64_t>().sum();
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  const auto uni = union_count(a, b);
  if (uni == 0) return 0.0;
  return static_cast<double>(intersection_count(a, b)) /
         static_cast<double>(uni);
}

BinaryMask association_mask(const BinaryMask& shadow,
                            const BinaryMask& object) {
  require_same_shape(shadow, object);
  BinaryMask out(shadow.width(), shadow.height());
  for (int y = 0; y < shadow.height(); ++y) {
    for (int x = 0; x < shadow.width(); ++x) {
      if (shadow.get(x, y) || object.get(x, y)) out.set(x, y);
    }
  }
  return out;
}

std::vector<std::int64_t> rle_encode(const BinaryMask& mask) {
  std::vector<std::int64_t> runs;
  std::uint8_t current = 0;
  std::int64_t length = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const std::uint8_t bit = mask.get(x, y) ? 1 : 0;
      if (bit != current) {
        runs.push_back(length);
        current = bit;
        length = 0;
      }
      ++length;
    }
  }
  runs.push_back(length);
  return runs;
}

BinaryMask rle_decode(std::span<const std::int64_t> runs, int width,
                      int height) {
  const std::int64_t total = static_cast<std::int64_t>(width) * height;
  std::int64_t sum = 0;
  for (const std::int64_t run : runs) {
    if (run < 0) throw std::invalid_argument("negative RLE run length");
    sum += run;
  }
  if (sum != total) {
    throw std::invalid_argument("RLE run sum " + std::to_string(sum) +
                                " does not equal " + std::to_string(width) +
                                "x" + std::to_string(height));
  }
  BinaryMask mask(width, height);
  std::int64_t pos = 0;
  bool on = false;
  for (const std::int64_t run : runs) {
    if (on) {
      for (std::int64_t i = pos; i < pos + run; ++i) {
        mask.set(static_cast<int>(i % width), static_cast<int>(i / width));
      }
    }
    pos += run;
    on = !on;
  }
  return mask;
}

MaskTrackVolume::MaskTrackVolume(int width, int height)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("volume dimensions must be positive");
  }
}

void MaskTrackVolume::set(int frame, BinaryMask mask) {
  if (frame < 0) throw std::invalid_argument("negative frame index");
  if (mask.width() != width_ || mask.height() != height_) {
    throw std::invalid_argument("mask does not match volume dimensions");
  }
  frames_.insert_or_assign(frame, std::move(mask));
}

const BinaryMask* MaskTrackVolume::find(int frame) const {
  const auto it = frames_.find(frame);
  return it == frames_.end() ? nullptr : &it->second;
}

std::int64_t MaskTrackVolume::voxel_count() const {
  std::int64_t total = 0;
  for (const auto& [frame, mask] : frames_) total += mask.count();
  return total;
}

double st_iou(const MaskTrackVolume& a, const MaskTrackVolume& b) {
  require_same_shape(a, b);
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  for (const auto& [frame, mask] : a.frames()) {
    if (const BinaryMask* other = b.find(frame)) {
      inter += intersection_count(mask, *other);
      uni += union_count(mask, *other);
    } else {
      uni += mask.count();
    }
  }
  for (const auto& [frame, mask] : b.frames()) {
    if (a.find(frame) == nullptr) uni += mask.count();
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MaskTrackVolume association_volume(const MaskTrackVolume& shadow,
                                   const MaskTrackVolume& object) {
  require_same_shape(shadow, object);
  MaskTrackVolume out(shadow.width(), shadow.height());
  for (const auto& [frame, mask] : shadow.frames()) {
    const BinaryMask* other = object.find(frame);
    out.set(frame, other ? association_mask(mask, *other) : mask);
  }
  for (const auto& [frame, mask] : object.frames()) {
    if (shadow.find(frame) == nullptr) out.set(frame, mask);
  }
  return out;
}

}  // namespace shadowtrack
