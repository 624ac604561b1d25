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

#include "shadowtrack/tracker.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace shadowtrack {

namespace {

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.size() == 0 || a == b);
}

}  // namespace

bool PartDetection::operator==(const PartDetection& other) const {
  return box == other.box && mask == other.mask &&
         same_vector(embedding, other.embedding);
}

Eigen::VectorXd paired_embedding(const Eigen::VectorXd& shadow,
                                 const Eigen::VectorXd& object) {
  Eigen::VectorXd out(shadow.size() + object.size());
  out << shadow, object;
  return out;
}

Eigen::VectorXd paired_embedding(const InstanceDetection& detection) {
  if (!detection.paired()) {
    throw std::invalid_argument("detection " +
                                std::to_string(detection.det_id) +
                                " is not a shadow-object pair");
  }
  return paired_embedding(detection.shadow->embedding,
                          detection.object->embedding);
}

int TrackEntry::first_frame() const {
  return history.empty() ? -1 : history.front().frame();
}

const Observation* TrackEntry::observation_at(int frame) const {
  const auto it = std::lower_bound(
      history.begin(), history.end(), frame,
      [](const Observation& o, int f) { return o.frame() < f; });
  if (it == history.end() || it->frame() != frame) return nullptr;
  return &*it;
}

void TrackEntry::record(Observation observation) {
  const int frame = observation.frame();
  const auto it = std::lower_bound(
      history.begin(), history.end(), frame,
      [](const Observation& o, int f) { return o.frame() < f; });
  if (it != history.end() && it->frame() == frame) {
    throw std::invalid_argument("track " + std::to_string(track_id) +
                                " already has an observation at frame " +
                                std::to_string(frame));
  }
  history.insert(it, std::move(observation));

  const PartDetection* latest_shadow = nullptr;
  const PartDetection* latest_object = nullptr;
  for (auto h = history.rbegin(); h != history.rend(); ++h) {
    if (!latest_shadow && h->detection.shadow) {
      latest_shadow = &*h->detection.shadow;
    }
    if (!latest_object && h->detection.object) {
      latest_object = &*h->detection.object;
    }
    if (latest_shadow && latest_object) break;
  }
  if (latest_shadow) {
    shadow_embedding = latest_shadow->embedding;
    last_box_shadow = latest_shadow->box;
  }
  if (latest_object) {
    object_embedding = latest_object->embedding;
    last_box_object = latest_object->box;
  }
  paired_embedding = shadowtrack::paired_embedding(shadow_embedding,
                                                   object_embedding);
  last_seen_frame = history.back().frame();
}

bool TrackEntry::operator==(const TrackEntry& other) const {
  return track_id == other.track_id &&
         same_vector(paired_embedding, other.paired_embedding) &&
         same_vector(shadow_embedding, other.shadow_embedding) &&
         same_vector(object_embedding, other.object_embedding) &&
         last_box_shadow == other.last_box_shadow &&
         last_box_object == other.last_box_object &&
         last_seen_frame == other.last_seen_frame && history == other.history;
}

TrackEntry* TrackingQueue::find(int track_id) {
  for (auto& e : entries) {
    if (e.track_id == track_id) return &e;
  }
  return nullptr;
}

const TrackEntry* TrackingQueue::find(int track_id) const {
  for (const auto& e : entries) {
    if (e.track_id == track_id) return &e;
  }
  return nullptr;
}

Eigen::VectorXd aggregate_instance_embedding(
    std::span<const LocationSample<double>> samples) {
  Eigen::VectorXd sum;
  double weight = 0.0;
  for (const auto& s : samples) {
    if (!(s.class_score > kLocationScoreThreshold)) continue;
    if (sum.size() == 0) {
      sum = Eigen::VectorXd::Zero(s.embedding.size());
    } else if (s.embedding.size() != sum.size()) {
      throw std::invalid_argument("embedding dimension mismatch");
    }
    sum += s.class_score * s.embedding;
    weight += s.class_score;
  }
  if (weight == 0.0) {
    throw std::invalid_argument("no location above the score threshold");
  }
  return sum / weight;
}

double final_score(double score, double box_iou, double confidence,
                   const MatchParams& params) {
  return params.alpha * score + params.beta * box_iou +
         params.gamma * confidence;
}

double pair_box_iou(const InstanceDetection& detection,
                    const TrackEntry& entry) {
  if (detection.shadow && detection.object) {
    return 0.5 * (box_iou(detection.shadow->box, entry.last_box_shadow) +
                  box_iou(detection.object->box, entry.last_box_object));
  }
  if (detection.shadow) return box_iou(detection.shadow->box, entry.last_box_shadow);
  if (detection.object) return box_iou(detection.object->box, entry.last_box_object);
  return 0.0;
}

std::vector<Assignment> assign(std::span<const InstanceDetection> detections,
                               const TrackingQueue& queue,
                               const MatchParams& params) {
  std::vector<Assignment> out;
  if (detections.empty()) return out;
  for (const auto& d : detections) {
    if (!d.paired()) {
      throw std::invalid_argument("assign expects paired detections");
    }
    if (d.frame != detections.front().frame) {
      throw std::invalid_argument("assign expects detections of one frame");
    }
  }

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return detections[a].confidence > detections[b].confidence;
                   });

  const auto num_entries = static_cast<Eigen::Index>(queue.entries.size());
  Eigen::MatrixXd score;
  if (num_entries > 0) {
    const Eigen::VectorXd first = paired_embedding(detections.front());
    Eigen::MatrixXd frame_embs(static_cast<Eigen::Index>(detections.size()),
                               first.size());
    for (std::size_t i = 0; i < detections.size(); ++i) {
      frame_embs.row(static_cast<Eigen::Index>(i)) =
          paired_embedding(detections[i]).transpose();
    }
    Eigen::MatrixXd queue_embs(num_entries, first.size());
    for (Eigen::Index j = 0; j < num_entries; ++j) {
      queue_embs.row(j) = queue.entries[j].paired_embedding.transpose();
    }
    score = match_score(frame_embs, queue_embs);
  }

  std::vector<bool> claimed(queue.entries.size(), false);
  int next_id = queue.next_id;
  for (const std::size_t i : order) {
    const auto& det = detections[i];
    Eigen::Index best = -1;
    double best_final = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < num_entries; ++j) {
      if (claimed[j]) continue;
      const double fused =
          final_score(score(static_cast<Eigen::Index>(i), j),
                      pair_box_iou(det, queue.entries[j]), det.confidence,
                      params);
      if (fused > best_final) {
        best_final = fused;
        best = j;
      }
    }
    if (best < 0 ||
        score(static_cast<Eigen::Index>(i), best) < params.match_threshold) {
      out.push_back({i, next_id++, true});
    } else {
      claimed[best] = true;
      out.push_back({i, queue.entries[best].track_id, false});
    }
  }
  return out;
}

TrackingQueue update_queue(TrackingQueue queue,
                           std::span<const Assignment> assignments,
                           std::span<const InstanceDetection> detections) {
  for (const auto& a : assignments) {
    if (a.detection >= detections.size()) {
      throw std::invalid_argument("assignment references a missing detection");
    }
    const auto& det = detections[a.detection];
    if (a.is_new) {
      if (a.track_id < queue.next_id || queue.find(a.track_id)) {
        throw std::invalid_argument("new track id " +
                                    std::to_string(a.track_id) +
                                    " was already issued");
      }
      TrackEntry entry;
      entry.track_id = a.track_id;
      entry.record({det, Provenance::kTracked});
      queue.entries.push_back(std::move(entry));
      queue.next_id = a.track_id + 1;
    } else {
      TrackEntry* entry = queue.find(a.track_id);
      if (!entry) {
        throw std::invalid_argument("unknown track id " +
                                    std::to_string(a.track_id));
      }
      entry->record({det, Provenance::kTracked});
    }
  }
  return queue;
}

TrackingQueue track_video(
    std::span<const std::vector<InstanceDetection>> frames,
    const MatchParams& params) {
  TrackingQueue queue;
  int previous = -1;
  for (const auto& frame : frames) {
    std::vector<InstanceDetection> paired;
    for (const auto& d : frame) {
      if (d.frame <= previous) {
        throw std::invalid_argument("frames are not in increasing order");
      }
      if (d.paired()) paired.push_back(d);
    }
    if (!frame.empty()) previous = frame.front().frame;
    if (paired.empty()) continue;
    const auto assignments = assign(paired, queue, params);
    queue = update_queue(std::move(queue), assignments, paired);
  }
  return queue;
}

std::vector<std::vector<InstanceDetection>> group_by_frame(
    std::span<const InstanceDetection> detections) {
  std::vector<InstanceDetection> sorted(detections.begin(), detections.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.frame < b.frame; });
  std::vector<std::vector<InstanceDetection>> out;
  for (auto& d : sorted) {
    if (out.empty() || out.back().front().frame != d.frame) out.emplace_back();
    out.back().push_back(std::move(d));
  }
  return out;
}

}  // namespace shadowtrack
