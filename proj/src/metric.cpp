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

#include "shadowtrack/metric.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace shadowtrack {

namespace {

constexpr int kShadowKind = 0;
constexpr int kObjectKind = 1;
constexpr int kWholeTrack = 2;

// A rankable unit: a whole track, or one of its part volumes.
struct Item {
  std::size_t video = 0;
  std::size_t track = 0;
  int kind = kWholeTrack;
  double confidence = 0.0;
};

struct PairIou {
  double shadow = 0.0;
  double object = 0.0;
  double association = 0.0;
};

// IoUs between every prediction and ground truth of one video; they do not
// depend on tau, so they are computed once.
struct VideoTables {
  const VideoTracks* pred = nullptr;
  const VideoTracks* gt = nullptr;
  std::vector<std::vector<PairIou>> iou;  // [pred][gt]
};

std::vector<VideoTables> build_tables(std::span<const VideoTracks> preds,
                                      std::span<const VideoTracks> gts) {
  static const VideoTracks kEmpty;
  std::map<std::string, const VideoTracks*> gt_by_id;
  for (const auto& v : gts) {
    if (!gt_by_id.emplace(v.video_id, &v).second) {
      throw std::invalid_argument("duplicate ground-truth video " + v.video_id);
    }
  }
  std::map<std::string, const VideoTracks*> pred_by_id;
  for (const auto& v : preds) {
    if (!pred_by_id.emplace(v.video_id, &v).second) {
      throw std::invalid_argument("duplicate prediction video " + v.video_id);
    }
  }
  std::vector<VideoTables> out;
  auto add = [&](const VideoTracks* p, const VideoTracks* g) {
    VideoTables t;
    t.pred = p ? p : &kEmpty;
    t.gt = g ? g : &kEmpty;
    t.iou.resize(t.pred->tracks.size());
    for (std::size_t i = 0; i < t.pred->tracks.size(); ++i) {
      const auto& pt = t.pred->tracks[i];
      for (const auto& gtrack : t.gt->tracks) {
        t.iou[i].push_back({st_iou(pt.shadow, gtrack.shadow),
                            st_iou(pt.object, gtrack.object),
                            st_iou(pt.association, gtrack.association)});
      }
    }
    out.push_back(std::move(t));
  };
  for (const auto& v : preds) {
    const auto it = gt_by_id.find(v.video_id);
    add(&v, it == gt_by_id.end() ? nullptr : it->second);
  }
  for (const auto& v : gts) {
    if (!pred_by_id.contains(v.video_id)) add(nullptr, &v);
  }
  return out;
}

std::vector<Item> collect_items(const std::vector<VideoTables>& tables,
                                bool predictions, ApMode mode) {
  std::vector<Item> items;
  for (std::size_t v = 0; v < tables.size(); ++v) {
    const auto& tracks = predictions ? tables[v].pred->tracks
                                     : tables[v].gt->tracks;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      const auto& track = tracks[t];
      switch (mode) {
        case ApMode::kSoap:
        case ApMode::kAssociation:
          items.push_back({v, t, kWholeTrack, track.confidence});
          break;
        case ApMode::kShadowInstance:
          if (!track.shadow.empty()) {
            items.push_back({v, t, kShadowKind, track.confidence});
          }
          break;
        case ApMode::kObjectInstance:
          if (!track.object.empty()) {
            items.push_back({v, t, kObjectKind, track.confidence});
          }
          break;
        case ApMode::kInstance:
          if (!track.shadow.empty()) {
            items.push_back({v, t, kShadowKind, track.confidence});
          }
          if (!track.object.empty()) {
            items.push_back({v, t, kObjectKind, track.confidence});
          }
          break;
      }
    }
  }
  return items;
}

// Overlap used to rank candidate ground truths, or a negative value when the
// pair cannot be a true positive at tau.
double match_quality(const PairIou& iou, int kind, double tau, ApMode mode) {
  switch (mode) {
    case ApMode::kSoap:
      if (iou.shadow >= tau && iou.object >= tau && iou.association >= tau) {
        return iou.association;
      }
      return -1.0;
    case ApMode::kAssociation:
      return iou.association >= tau ? iou.association : -1.0;
    default: {
      const double v = kind == kShadowKind ? iou.shadow : iou.object;
      return v >= tau ? v : -1.0;
    }
  }
}

ApResult evaluate(const std::vector<VideoTables>& tables, double tau,
                  ApMode mode) {
  std::vector<Item> preds = collect_items(tables, true, mode);
  const std::vector<Item> gts = collect_items(tables, false, mode);

  ApResult result;
  if (gts.empty()) {
    result.fp = static_cast<int>(preds.size());
    result.ap = preds.empty() ? 1.0 : 0.0;
    return result;
  }

  std::stable_sort(preds.begin(), preds.end(),
                   [](const Item& a, const Item& b) {
                     return a.confidence > b.confidence;
                   });

  std::vector<bool> taken(gts.size(), false);
  std::vector<bool> hit(preds.size(), false);
  for (std::size_t p = 0; p < preds.size(); ++p) {
    const Item& pred = preds[p];
    std::ptrdiff_t best = -1;
    double best_quality = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const Item& gt = gts[g];
      if (taken[g] || gt.video != pred.video || gt.kind != pred.kind) continue;
      const double q = match_quality(tables[pred.video].iou[pred.track][gt.track],
                                     pred.kind, tau, mode);
      if (q >= 0.0 && q > best_quality) {
        best_quality = q;
        best = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = true;
      hit[p] = true;
    }
  }

  // Recall rises by 1/|gts| exactly at each true positive, so the area under
  // the envelope is the mean envelope precision over the true positives.
  const auto n = preds.size();
  std::vector<double> precision(n);
  int tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (hit[k]) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  for (std::size_t k = n; k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double ap = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (hit[k]) ap += precision[k];
  }
  ap /= static_cast<double>(gts.size());
  result.ap = ap;
  result.tp = tp;
  result.fp = static_cast<int>(n) - tp;
  result.fn = static_cast<int>(gts.size()) - tp;
  return result;
}

}  // namespace

TrackVolumeTriple make_track_triple(MaskTrackVolume shadow,
                                    MaskTrackVolume object, double confidence) {
  MaskTrackVolume association = association_volume(shadow, object);
  return {std::move(shadow), std::move(object), std::move(association),
          confidence};
}

TrackVolumeTriple make_track_triple(
    std::span<const InstanceDetection> observations, int width, int height) {
  MaskTrackVolume shadow(width, height);
  MaskTrackVolume object(width, height);
  double confidence = 0.0;
  for (const auto& d : observations) {
    if (d.shadow) shadow.set(d.frame, d.shadow->mask);
    if (d.object) object.set(d.frame, d.object->mask);
    confidence += d.confidence;
  }
  if (!observations.empty()) {
    confidence /= static_cast<double>(observations.size());
  }
  return make_track_triple(std::move(shadow), std::move(object), confidence);
}

std::array<double, TauGrid::kSize> TauGrid::values() {
  std::array<double, kSize> out{};
  for (int i = 0; i < kSize; ++i) out[static_cast<std::size_t>(i)] = at(i);
  return out;
}

bool is_tp(const TrackVolumeTriple& pred, const TrackVolumeTriple& gt,
           double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("tau must lie in (0, 1]");
  }
  return st_iou(pred.shadow, gt.shadow) >= tau &&
         st_iou(pred.object, gt.object) >= tau &&
         st_iou(pred.association, gt.association) >= tau;
}

ApResult average_precision(std::span<const VideoTracks> preds,
                           std::span<const VideoTracks> gts, double tau,
                           ApMode mode) {
  return evaluate(build_tables(preds, gts), tau, mode);
}

ApResult average_precision(std::span<const TrackVolumeTriple> preds,
                           std::span<const TrackVolumeTriple> gts, double tau,
                           ApMode mode) {
  const std::array<VideoTracks, 1> p{
      VideoTracks{"", {preds.begin(), preds.end()}}};
  const std::array<VideoTracks, 1> g{VideoTracks{"", {gts.begin(), gts.end()}}};
  return average_precision(p, g, tau, mode);
}

EvalReport soap_vid(std::span<const VideoTracks> preds,
                    std::span<const VideoTracks> gts) {
  const auto tables = build_tables(preds, gts);
  EvalReport report;
  for (const double tau : TauGrid::values()) {
    TauBreakdown row;
    row.tau = tau;
    row.soap = evaluate(tables, tau, ApMode::kSoap);
    row.association = evaluate(tables, tau, ApMode::kAssociation);
    row.instance = evaluate(tables, tau, ApMode::kInstance);
    report.soap_vid += row.soap.ap;
    report.association_ap += row.association.ap;
    report.instance_ap += row.instance.ap;
    report.per_tau.push_back(row);
  }
  report.soap_vid /= TauGrid::kSize;
  report.association_ap /= TauGrid::kSize;
  report.instance_ap /= TauGrid::kSize;
  return report;
}

}  // namespace shadowtrack
