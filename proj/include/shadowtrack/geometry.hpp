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

#ifndef SHADOWTRACK_GEOMETRY_HPP_
#define SHADOWTRACK_GEOMETRY_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace shadowtrack {

// Axis-aligned box in pixel coordinates, half-open [x0,x1) x [y0,y1).
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double area() const;
  bool operator==(const Box&) const = default;
};

double box_iou(const Box& a, const Box& b);

// Row-major occupancy bitmap. Width and height are at least 1.
class BinaryMask {
 public:
  using Bits = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic,
                            Eigen::RowMajor>;

  BinaryMask(int width, int height);
  // `bits` must hold exactly width * height entries, row-major.
  BinaryMask(int width, int height, std::span<const std::uint8_t> bits);

  int width() const { return static_cast<int>(bits_.cols()); }
  int height() const { return static_cast<int>(bits_.rows()); }

  bool get(int x, int y) const { return bits_(y, x) != 0; }
  void set(int x, int y, bool on = true) { bits_(y, x) = on ? 1 : 0; }

  // Fills [x0,x1) x [y0,y1), clipped to the image.
  void fill_rect(int x0, int y0, int x1, int y1);

  std::int64_t count() const;
  bool empty() const { return count() == 0; }

  // Tight bounds of the set pixels; nullopt for an empty mask.
  std::optional<Box> bounds() const;

  const Bits& bits() const { return bits_; }

  bool operator==(const BinaryMask& other) const;

 private:
  Bits bits_;
};

std::int64_t intersection_count(const BinaryMask& a, const BinaryMask& b);
std::int64_t union_count(const BinaryMask& a, const BinaryMask& b);

double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Region covered by a shadow-object pair.
BinaryMask association_mask(const BinaryMask& shadow, const BinaryMask& object);

// Row-major run lengths, alternating background/foreground, starting with a
// (possibly empty) background run.
std::vector<std::int64_t> rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(std::span<const std::int64_t> runs, int width,
                      int height);

// Temporal stack of equally sized masks keyed by frame index.
class MaskTrackVolume {
 public:
  MaskTrackVolume(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  // Replaces any mask already stored at `frame`.
  void set(int frame, BinaryMask mask);
  const BinaryMask* find(int frame) const;

  const std::map<int, BinaryMask>& frames() const { return frames_; }
  bool empty() const { return frames_.empty(); }
  std::int64_t voxel_count() const;

  bool operator==(const MaskTrackVolume&) const = default;

 private:
  int width_;
  int height_;
  std::map<int, BinaryMask> frames_;
};

// Spatio-temporal IoU over the union of frame indices; a frame missing from
// one volume counts as an empty mask there.
double st_iou(const MaskTrackVolume& a, const MaskTrackVolume& b);

// Per-frame union of two volumes.
MaskTrackVolume association_volume(const MaskTrackVolume& shadow,
                                   const MaskTrackVolume& object);

}  // namespace shadowtrack

#endif  // SHADOWTRACK_GEOMETRY_HPP_
