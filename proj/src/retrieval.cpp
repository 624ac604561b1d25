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

#include "shadowtrack/retrieval.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace shadowtrack {

namespace {

std::set<int> queued_detection_ids(const TrackingQueue& queue) {
  std::set<int> ids;
  for (const auto& e : queue.entries) {
    for (const auto& o : e.history) ids.insert(o.detection.det_id);
  }
  return ids;
}

// Embedding of `kind` from the entry's observation nearest to `frame`,
// strictly before it (forward) or strictly after it (reverse).
const Eigen::VectorXd* reference_embedding(const TrackEntry& entry,
                                           PartKind kind, int frame,
                                           Direction direction) {
  if (direction == Direction::kForward) {
    for (auto h = entry.history.rbegin(); h != entry.history.rend(); ++h) {
      if (h->frame() >= frame) continue;
      if (const auto& p = h->detection.part(kind)) return &p->embedding;
    }
  } else {
    for (const auto& h : entry.history) {
      if (h.frame() <= frame) continue;
      if (const auto& p = h.detection.part(kind)) return &p->embedding;
    }
  }
  return nullptr;
}

}  // namespace

PartKind UnpairedDetection::kind() const {
  return detection.shadow ? PartKind::kShadow : PartKind::kObject;
}

const PartDetection& UnpairedDetection::part() const {
  return detection.shadow ? *detection.shadow : *detection.object;
}

std::vector<UnpairedDetection> unpaired_detections(
    std::span<const InstanceDetection> detections) {
  std::vector<UnpairedDetection> out;
  for (const auto& d : detections) {
    if (d.shadow.has_value() != d.object.has_value()) out.push_back({d});
  }
  return out;
}

int retrieve_pass(std::span<const UnpairedDetection> unpaired,
                  TrackingQueue& queue, double match_threshold,
                  Direction direction) {
  const std::set<int> queued = queued_detection_ids(queue);
  std::map<int, std::vector<const UnpairedDetection*>> by_frame;
  for (const auto& u : unpaired) {
    if (u.detection.shadow.has_value() == u.detection.object.has_value()) {
      throw std::invalid_argument("unpaired detection must have one part");
    }
    if (!queued.contains(u.detection.det_id)) by_frame[u.frame()].push_back(&u);
  }

  std::vector<int> frames;
  for (const auto& [frame, dets] : by_frame) frames.push_back(frame);
  if (direction == Direction::kReverse) std::reverse(frames.begin(), frames.end());

  const Provenance provenance = direction == Direction::kForward
                                    ? Provenance::kRetrievedForward
                                    : Provenance::kRetrievedReverse;
  int attached = 0;
  for (const int frame : frames) {
    auto dets = by_frame[frame];
    std::stable_sort(dets.begin(), dets.end(), [](const auto* a, const auto* b) {
      return a->detection.confidence > b->detection.confidence;
    });

    // Scores are computed once per kind against the tracks eligible at the
    // start of the frame.
    struct KindScores {
      std::vector<const UnpairedDetection*> rows;
      std::vector<std::size_t> entries;
      Eigen::MatrixXd score;
    };
    std::array<KindScores, 2> scores;
    for (int k = 0; k < 2; ++k) {
      const PartKind kind = k == 0 ? PartKind::kShadow : PartKind::kObject;
      auto& ks = scores[k];
      for (const auto* d : dets) {
        if (d->kind() == kind) ks.rows.push_back(d);
      }
      if (ks.rows.empty()) continue;
      std::vector<const Eigen::VectorXd*> refs;
      for (std::size_t j = 0; j < queue.entries.size(); ++j) {
        const auto& entry = queue.entries[j];
        if (entry.observation_at(frame)) continue;
        if (const auto* ref = reference_embedding(entry, kind, frame, direction)) {
          ks.entries.push_back(j);
          refs.push_back(ref);
        }
      }
      if (refs.empty()) continue;
      const Eigen::Index dim = ks.rows.front()->part().embedding.size();
      Eigen::MatrixXd frame_embs(static_cast<Eigen::Index>(ks.rows.size()), dim);
      for (std::size_t i = 0; i < ks.rows.size(); ++i) {
        frame_embs.row(static_cast<Eigen::Index>(i)) =
            ks.rows[i]->part().embedding.transpose();
      }
      Eigen::MatrixXd queue_embs(static_cast<Eigen::Index>(refs.size()), dim);
      for (std::size_t j = 0; j < refs.size(); ++j) {
        queue_embs.row(static_cast<Eigen::Index>(j)) = refs[j]->transpose();
      }
      ks.score = match_score(frame_embs, queue_embs);
    }

    std::set<std::size_t> claimed;
    for (const auto* d : dets) {
      const auto& ks = scores[d->kind() == PartKind::kShadow ? 0 : 1];
      if (ks.entries.empty()) continue;
      const auto row = static_cast<Eigen::Index>(
          std::find(ks.rows.begin(), ks.rows.end(), d) - ks.rows.begin());
      Eigen::Index best = -1;
      for (std::size_t j = 0; j < ks.entries.size(); ++j) {
        if (claimed.contains(ks.entries[j])) continue;
        const auto col = static_cast<Eigen::Index>(j);
        if (best < 0 || ks.score(row, col) > ks.score(row, best)) best = col;
      }
      if (best < 0 || ks.score(row, best) < match_threshold) continue;
      const std::size_t entry = ks.entries[static_cast<std::size_t>(best)];
      claimed.insert(entry);
      queue.entries[entry].record({d->detection, provenance});
      ++attached;
    }
  }
  return attached;
}

RetrievalResult retrieve_bidirectional(
    TrackingQueue queue, std::span<const UnpairedDetection> unpaired,
    const RetrievalParams& params) {
  RetrievalResult result;
  if (params.mode != RetrievalMode::kOff) {
    result.report.attached_forward = retrieve_pass(
        unpaired, queue, params.match_threshold, Direction::kForward);
  }
  if (params.mode == RetrievalMode::kBidirectional) {
    result.report.attached_reverse = retrieve_pass(
        unpaired, queue, params.match_threshold, Direction::kReverse);
  }
  const std::set<int> queued = queued_detection_ids(queue);
  for (const auto& u : unpaired) {
    if (!queued.contains(u.detection.det_id)) ++result.report.dropped;
  }
  result.queue = std::move(queue);
  return result;
}

}  // namespace shadowtrack
