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

#ifndef SHADOWTRACK_RETRIEVAL_HPP_
#define SHADOWTRACK_RETRIEVAL_HPP_

#include <span>
#include <vector>

#include "shadowtrack/tracker.hpp"

namespace shadowtrack {

// A detection with exactly one part present.
struct UnpairedDetection {
  InstanceDetection detection;

  PartKind kind() const;
  const PartDetection& part() const;
  int frame() const { return detection.frame; }
};

// Splits out the single-part detections of a video.
std::vector<UnpairedDetection> unpaired_detections(
    std::span<const InstanceDetection> detections);

enum class RetrievalMode { kOff, kForward, kBidirectional };
enum class Direction { kForward, kReverse };

struct RetrievalParams {
  double match_threshold = MatchParams{}.match_threshold;
  RetrievalMode mode = RetrievalMode::kBidirectional;
};

struct RetrievalReport {
  int attached_forward = 0;
  int attached_reverse = 0;
  // Unpaired detections left unattached after all passes that ran.
  int dropped = 0;

  bool operator==(const RetrievalReport&) const = default;
};

// One sweep over the frames in `direction`. At frame f a track is a
// candidate when it has no observation at f and it already holds the
// detection's part kind at an earlier frame (forward) or a later frame
// (reverse); the candidate's part embedding is taken from its nearest such
// observation. Detections already present in the queue are skipped.
// Returns the number of detections attached.
int retrieve_pass(std::span<const UnpairedDetection> unpaired,
                  TrackingQueue& queue, double match_threshold,
                  Direction direction);

struct RetrievalResult {
  TrackingQueue queue;
  RetrievalReport report;
};

// Forward pass in ascending frame order, then (for kBidirectional) a reverse
// pass in descending order over the detections the forward pass left behind.
RetrievalResult retrieve_bidirectional(
    TrackingQueue queue, std::span<const UnpairedDetection> unpaired,
    const RetrievalParams& params);

}  // namespace shadowtrack

#endif  // SHADOWTRACK_RETRIEVAL_HPP_
