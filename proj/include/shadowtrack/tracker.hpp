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

#ifndef SHADOWTRACK_TRACKER_HPP_
#define SHADOWTRACK_TRACKER_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "shadowtrack/geometry.hpp"
#include "shadowtrack/losses.hpp"

namespace shadowtrack {

// One detected shadow or object instance.
struct PartDetection {
  Box box;
  BinaryMask mask;
  Eigen::VectorXd embedding;

  bool operator==(const PartDetection& other) const;
};

// A detected shadow-object pair in one frame. Either part may be absent,
// but not both.
struct InstanceDetection {
  int frame = 0;
  int det_id = 0;
  std::optional<PartDetection> shadow;
  std::optional<PartDetection> object;
  double confidence = 0.0;
  // Ground-truth identity, for evaluation only.
  std::optional<int> gt_track;

  bool paired() const { return shadow.has_value() && object.has_value(); }
  const std::optional<PartDetection>& part(PartKind kind) const {
    return kind == PartKind::kShadow ? shadow : object;
  }
  std::optional<PartDetection>& part(PartKind kind) {
    return kind == PartKind::kShadow ? shadow : object;
  }

  bool operator==(const InstanceDetection& other) const = default;
};

// [shadow | object]
Eigen::VectorXd paired_embedding(const Eigen::VectorXd& shadow,
                                 const Eigen::VectorXd& object);
Eigen::VectorXd paired_embedding(const InstanceDetection& detection);

enum class Provenance { kTracked, kRetrievedForward, kRetrievedReverse };

struct Observation {
  InstanceDetection detection;
  Provenance provenance = Provenance::kTracked;

  int frame() const { return detection.frame; }
  bool operator==(const Observation&) const = default;
};

struct TrackEntry {
  int track_id = 0;
  Eigen::VectorXd paired_embedding;
  Eigen::VectorXd shadow_embedding;
  Eigen::VectorXd object_embedding;
  Box last_box_shadow;
  Box last_box_object;
  int last_seen_frame = -1;
  // Sorted by strictly increasing frame.
  std::vector<Observation> history;

  int first_frame() const;
  const Observation* observation_at(int frame) const;

  // Inserts in frame order and refreshes the latest-state fields from the
  // most recent observation carrying each part.
  void record(Observation observation);

  bool operator==(const TrackEntry& other) const;
};

struct TrackingQueue {
  std::vector<TrackEntry> entries;
  int next_id = 0;

  TrackEntry* find(int track_id);
  const TrackEntry* find(int track_id) const;
  bool operator==(const TrackingQueue&) const = default;
};

struct MatchParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double match_threshold = 0.2;
};

// Score-weighted mean of the embeddings of locations whose classification
// score exceeds the location threshold.
Eigen::VectorXd aggregate_instance_embedding(
    std::span<const LocationSample<double>> samples);

// Bidirectional softmax over cosine similarities between the frame's
// instances (rows of `frame_embs`) and the queue's (rows of `queue_embs`).
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> match_score(
    const Eigen::MatrixBase<DerivedA>& frame_embs,
    const Eigen::MatrixBase<DerivedB>& queue_embs) {
  using Scalar = typename DerivedA::Scalar;
  if (frame_embs.rows() < 1 || queue_embs.rows() < 1) {
    throw std::invalid_argument("match score needs instances on both sides");
  }
  const MatrixX<Scalar> cos = cosine_matrix(frame_embs, queue_embs);
  // Over frame instances per queue column, and over queue entries per row.
  const MatrixX<Scalar> by_column = row_softmax(cos.transpose()).transpose();
  const MatrixX<Scalar> by_row = row_softmax(cos);
  return (by_column + by_row) / Scalar(2);
}

double final_score(double score, double box_iou, double confidence,
                   const MatchParams& params);

// Box cue between a detection and a queue entry: mean of the shadow and
// object box IoUs when both parts are present, else the present part's.
double pair_box_iou(const InstanceDetection& detection,
                    const TrackEntry& entry);

struct Assignment {
  std::size_t detection = 0;
  int track_id = 0;
  bool is_new = false;

  bool operator==(const Assignment&) const = default;
};

// Greedy matching of one frame's paired detections against the queue, in
// descending detection confidence. New identities are numbered from
// queue.next_id in processing order.
std::vector<Assignment> assign(std::span<const InstanceDetection> detections,
                               const TrackingQueue& queue,
                               const MatchParams& params);

TrackingQueue update_queue(TrackingQueue queue,
                           std::span<const Assignment> assignments,
                           std::span<const InstanceDetection> detections);

// Folds assign + update_queue over the frames of one video. Unpaired
// detections are skipped. The returned queue's entries are the tracks.
TrackingQueue track_video(
    std::span<const std::vector<InstanceDetection>> frames,
    const MatchParams& params);

// Groups detections by frame index, ascending, keeping input order within a
// frame.
std::vector<std::vector<InstanceDetection>> group_by_frame(
    std::span<const InstanceDetection> detections);

}  // namespace shadowtrack

#endif  // SHADOWTRACK_TRACKER_HPP_
