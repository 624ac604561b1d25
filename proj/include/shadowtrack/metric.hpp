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

#ifndef SHADOWTRACK_METRIC_HPP_
#define SHADOWTRACK_METRIC_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "shadowtrack/geometry.hpp"
#include "shadowtrack/tracker.hpp"

namespace shadowtrack {

// Shadow, object and association volumes of one track. The association
// volume is the per-frame union of the other two.
struct TrackVolumeTriple {
  MaskTrackVolume shadow;
  MaskTrackVolume object;
  MaskTrackVolume association;
  double confidence = 0.0;
};

TrackVolumeTriple make_track_triple(MaskTrackVolume shadow,
                                    MaskTrackVolume object, double confidence);

// Builds the volumes from a track's detections; the confidence is the mean
// of the per-frame detection confidences.
TrackVolumeTriple make_track_triple(
    std::span<const InstanceDetection> observations, int width, int height);

// tau = 0.50, 0.55, ..., 0.95
struct TauGrid {
  static constexpr int kSize = 10;
  static constexpr double at(int i) { return (50 + 5 * i) / 100.0; }
  static std::array<double, kSize> values();
};

// True when the shadow, object and association spatio-temporal IoUs all
// reach tau.
bool is_tp(const TrackVolumeTriple& pred, const TrackVolumeTriple& gt,
           double tau);

enum class ApMode {
  // Shadow, object and association IoUs must all reach tau.
  kSoap,
  // Association volume only.
  kAssociation,
  kShadowInstance,
  kObjectInstance,
  // Shadow and object volumes pooled as one class; a prediction can only
  // match a ground truth of the same kind.
  kInstance,
};

struct ApResult {
  double ap = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct VideoTracks {
  std::string video_id;
  std::vector<TrackVolumeTriple> tracks;
};

// Greedy matching in descending confidence, each ground truth matched at
// most once, within a video. AP is the area under the precision envelope
// (all-point interpolation). With no ground truth, AP is 1 if there are also
// no predictions and 0 otherwise.
ApResult average_precision(std::span<const VideoTracks> preds,
                           std::span<const VideoTracks> gts, double tau,
                           ApMode mode);
ApResult average_precision(std::span<const TrackVolumeTriple> preds,
                           std::span<const TrackVolumeTriple> gts, double tau,
                           ApMode mode);

struct TauBreakdown {
  double tau = 0.0;
  ApResult soap;
  ApResult association;
  ApResult instance;
};

struct EvalReport {
  double soap_vid = 0.0;
  double association_ap = 0.0;
  double instance_ap = 0.0;
  std::vector<TauBreakdown> per_tau;
};

EvalReport soap_vid(std::span<const VideoTracks> preds,
                    std::span<const VideoTracks> gts);

}  // namespace shadowtrack

#endif  // SHADOWTRACK_METRIC_HPP_
