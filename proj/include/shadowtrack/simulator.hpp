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

#ifndef SHADOWTRACK_SIMULATOR_HPP_
#define SHADOWTRACK_SIMULATOR_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "shadowtrack/losses.hpp"
#include "shadowtrack/metric.hpp"
#include "shadowtrack/tracker.hpp"

namespace shadowtrack {

// Part `part` of pair `track` is hidden from the detector, and absent from
// the ground truth, for frames [begin, end).
struct OcclusionWindow {
  int track = 0;
  PartKind part = PartKind::kObject;
  int begin = 0;
  int end = 0;
};

enum class Motion {
  // Random start and velocity, reflected at the image border.
  kRandom,
  // Pairs sweep horizontally in alternating directions, crossing mid-video.
  kCrossing,
};

struct ScenarioConfig {
  std::string name = "custom";
  int frames = 20;
  int pairs = 2;
  int width = 64;
  int height = 64;
  int embedding_dim = kDefaultEmbeddingDim;
  // Standard deviation of the isotropic noise added to latent embeddings
  // before renormalization.
  double embedding_noise = 0.0;
  // Per-part probability that the detector misses a visible part.
  double dropout = 0.0;
  double confidence_noise = 0.05;
  std::vector<OcclusionWindow> occlusions;
  int object_width = 10;
  int object_height = 10;
  // Shadows are the object rectangle cast downward for `shadow_length` rows,
  // each row sheared sideways by `shadow_shear` pixels per row.
  int shadow_length = 6;
  double shadow_shear = 0.5;
  double max_speed = 2.5;
  Motion motion = Motion::kRandom;
  std::uint64_t seed = 0;
};

struct SimulatedVideo {
  std::string video_id;
  int width = 0;
  int height = 0;
  // One record per visible pair per frame; gt_track holds the identity and
  // embeddings are the noiseless latents.
  std::vector<InstanceDetection> ground_truth;
  // Noisy detector output; single-part records are the unpaired detections.
  std::vector<InstanceDetection> detections;
};

// Deterministic in (config, seed).
SimulatedVideo generate(const ScenarioConfig& config);

// occluded-object, late-pair, two-pairs-crossing, crowd.
ScenarioConfig preset(std::string_view name);
const std::vector<std::string>& preset_names();

// Ground truth of a simulated video grouped into per-identity volumes.
VideoTracks ground_truth_tracks(const SimulatedVideo& video);

struct ToyScenarioConfig {
  int instances = 4;
  int samples = 20;
  int dim = kDefaultEmbeddingDim;
  // Per-sample scatter around the instance latent.
  double spread = 1.0;
  // Drift of each instance latent between the two frames.
  double frame_shift = 0.3;
  bool shadows = true;
  bool objects = true;
  std::uint64_t seed = 0;
};

// Two frames of instance groups with latents ~ N(0, I), shared across
// frames up to `frame_shift`.
TwoFrameScenario<double> toy_scenario(const ToyScenarioConfig& config);

}  // namespace shadowtrack

#endif  // SHADOWTRACK_SIMULATOR_HPP_
