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

#include "shadowtrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "shadowtrack/random.hpp"

namespace shadowtrack {

namespace {

struct LatentTrack {
  Eigen::VectorXd shadow_latent;
  Eigen::VectorXd object_latent;
  // Object top-left corner per frame.
  std::vector<std::pair<int, int>> corners;
};

struct Footprint {
  int min_x = 0;
  int max_x = 0;
  int min_y = 0;
  int max_y = 0;
};

int shear_offset(const ScenarioConfig& c, int row) {
  return static_cast<int>(std::lround(c.shadow_shear * (row + 1)));
}

// Range of object corners that keeps object and shadow inside the image.
Footprint footprint(const ScenarioConfig& c) {
  int left = 0, right = 0;
  for (int r = 0; r < c.shadow_length; ++r) {
    left = std::min(left, shear_offset(c, r));
    right = std::max(right, shear_offset(c, r));
  }
  Footprint f;
  f.min_x = -left;
  f.max_x = c.width - c.object_width - right;
  f.min_y = 0;
  f.max_y = c.height - c.object_height - c.shadow_length;
  if (f.max_x < f.min_x || f.max_y < f.min_y) {
    throw std::invalid_argument("object and shadow do not fit in the image");
  }
  return f;
}

void validate(const ScenarioConfig& c) {
  if (c.frames < 1) throw std::invalid_argument("frames must be at least 1");
  if (c.pairs < 0) throw std::invalid_argument("pairs must be non-negative");
  if (c.width < 1 || c.height < 1) {
    throw std::invalid_argument("image size must be positive");
  }
  if (c.embedding_dim < 1) {
    throw std::invalid_argument("embedding dimension must be positive");
  }
  if (!(c.embedding_noise >= 0.0)) {
    throw std::invalid_argument("embedding noise must be non-negative");
  }
  if (!(c.dropout >= 0.0 && c.dropout <= 1.0)) {
    throw std::invalid_argument("dropout must lie in [0, 1]");
  }
  if (!(c.confidence_noise >= 0.0)) {
    throw std::invalid_argument("confidence noise must be non-negative");
  }
  if (c.object_width < 1 || c.object_height < 1 || c.shadow_length < 1) {
    throw std::invalid_argument("shape sizes must be positive");
  }
  for (const auto& o : c.occlusions) {
    if (o.track < 0 || o.track >= c.pairs || o.begin > o.end) {
      throw std::invalid_argument("invalid occlusion window");
    }
  }
}

std::vector<std::pair<int, int>> random_trajectory(const ScenarioConfig& c,
                                                   const Footprint& f,
                                                   Rng& rng) {
  double x = rng.uniform(f.min_x, f.max_x);
  double y = rng.uniform(f.min_y, f.max_y);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double speed = rng.uniform(0.5, 1.0) * c.max_speed;
  double vx = speed * std::cos(angle);
  double vy = speed * std::sin(angle);
  auto reflect = [](double& p, double& v, double lo, double hi) {
    if (hi <= lo) {
      p = lo;
      return;
    }
    while (p < lo || p > hi) {
      if (p < lo) p = 2 * lo - p;
      if (p > hi) p = 2 * hi - p;
      v = -v;
    }
  };
  std::vector<std::pair<int, int>> out;
  for (int t = 0; t < c.frames; ++t) {
    out.emplace_back(static_cast<int>(std::lround(x)),
                     static_cast<int>(std::lround(y)));
    x += vx;
    y += vy;
    reflect(x, vx, f.min_x, f.max_x);
    reflect(y, vy, f.min_y, f.max_y);
  }
  return out;
}

std::vector<std::pair<int, int>> crossing_trajectory(const ScenarioConfig& c,
                                                     const Footprint& f,
                                                     int pair) {
  const int lanes = std::max(c.pairs, 1);
  const int mid = (f.min_y + f.max_y) / 2;
  // Lanes are a third of an object apart so crossing boxes overlap.
  const int lane_step = std::max(1, c.object_height / 3);
  const int y = std::clamp(mid + (2 * pair - (lanes - 1)) * lane_step / 2,
                           f.min_y, f.max_y);
  std::vector<std::pair<int, int>> out;
  for (int t = 0; t < c.frames; ++t) {
    const double s = c.frames > 1 ? static_cast<double>(t) / (c.frames - 1) : 0;
    const double u = pair % 2 == 0 ? s : 1.0 - s;
    out.emplace_back(
        static_cast<int>(std::lround(f.min_x + u * (f.max_x - f.min_x))), y);
  }
  return out;
}

BinaryMask render_object(const ScenarioConfig& c, int x, int y) {
  BinaryMask m(c.width, c.height);
  m.fill_rect(x, y, x + c.object_width, y + c.object_height);
  return m;
}

BinaryMask render_shadow(const ScenarioConfig& c, int x, int y) {
  BinaryMask m(c.width, c.height);
  for (int r = 0; r < c.shadow_length; ++r) {
    const int row = y + c.object_height + r;
    const int dx = shear_offset(c, r);
    m.fill_rect(x + dx, row, x + dx + c.object_width, row + 1);
  }
  return m;
}

bool occluded(const ScenarioConfig& c, int track, PartKind part, int frame) {
  for (const auto& o : c.occlusions) {
    if (o.track == track && o.part == part && frame >= o.begin &&
        frame < o.end) {
      return true;
    }
  }
  return false;
}

PartDetection make_part(BinaryMask mask, Eigen::VectorXd embedding) {
  const Box box = mask.bounds().value_or(Box{});
  return {box, std::move(mask), std::move(embedding)};
}

}  // namespace

SimulatedVideo generate(const ScenarioConfig& config) {
  validate(config);
  const Footprint f = footprint(config);
  Rng rng(config.seed);

  // Draw order: all latents and trajectories first, pair by pair; then per
  // frame and pair the confidence noise followed by dropout and embedding
  // noise for the shadow and then the object. Every draw happens whether or
  // not the part ends up visible.
  std::vector<LatentTrack> tracks(static_cast<std::size_t>(config.pairs));
  for (int p = 0; p < config.pairs; ++p) {
    auto& t = tracks[static_cast<std::size_t>(p)];
    t.shadow_latent = rng.unit_vector(config.embedding_dim);
    t.object_latent = rng.unit_vector(config.embedding_dim);
    t.corners = config.motion == Motion::kCrossing
                    ? crossing_trajectory(config, f, p)
                    : random_trajectory(config, f, rng);
  }

  SimulatedVideo video;
  video.video_id = config.name + "-" + std::to_string(config.seed);
  video.width = config.width;
  video.height = config.height;
  int gt_id = 0;
  int det_id = 0;
  for (int frame = 0; frame < config.frames; ++frame) {
    for (int p = 0; p < config.pairs; ++p) {
      const auto& t = tracks[static_cast<std::size_t>(p)];
      const auto [x, y] = t.corners[static_cast<std::size_t>(frame)];
      const double confidence =
          std::clamp(1.0 - std::abs(rng.normal()) * config.confidence_noise,
                     0.0, 1.0);

      InstanceDetection gt;
      gt.frame = frame;
      gt.det_id = gt_id;
      gt.confidence = 1.0;
      gt.gt_track = p;
      InstanceDetection det;
      det.frame = frame;
      det.det_id = det_id;
      det.confidence = confidence;
      det.gt_track = p;

      for (PartKind kind : {PartKind::kShadow, PartKind::kObject}) {
        const bool dropped = rng.bernoulli(config.dropout);
        const Eigen::VectorXd noise = rng.normal_vector(config.embedding_dim);
        if (occluded(config, p, kind, frame)) continue;
        const bool is_shadow = kind == PartKind::kShadow;
        BinaryMask mask = is_shadow ? render_shadow(config, x, y)
                                    : render_object(config, x, y);
        const Eigen::VectorXd& latent =
            is_shadow ? t.shadow_latent : t.object_latent;
        gt.part(kind) = make_part(mask, latent);
        if (dropped) continue;
        Eigen::VectorXd embedding = latent;
        if (config.embedding_noise > 0.0) {
          embedding += config.embedding_noise * noise;
          embedding = embedding.norm() == 0.0 ? latent : embedding.normalized();
        }
        det.part(kind) = make_part(std::move(mask), std::move(embedding));
      }
      if (gt.shadow || gt.object) {
        video.ground_truth.push_back(std::move(gt));
        ++gt_id;
      }
      if (det.shadow || det.object) {
        video.detections.push_back(std::move(det));
        ++det_id;
      }
    }
  }
  return video;
}

ScenarioConfig preset(std::string_view name) {
  ScenarioConfig c;
  c.name = std::string(name);
  if (name == "occluded-object") {
    // The object of pair 0 is hidden while its shadow stays visible.
    c.pairs = 2;
    c.embedding_noise = 0.05;
    c.occlusions = {{0, PartKind::kObject, 8, 10}};
  } else if (name == "late-pair") {
    // Pair 1 shows only its shadow until its object appears at frame 6.
    c.pairs = 2;
    c.embedding_noise = 0.05;
    c.occlusions = {{1, PartKind::kObject, 0, 6}};
  } else if (name == "two-pairs-crossing") {
    c.pairs = 2;
    c.motion = Motion::kCrossing;
  } else if (name == "crowd") {
    c.pairs = 5;
    c.dropout = 0.05;
    c.embedding_noise = 0.1;
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "occluded-object", "late-pair", "two-pairs-crossing", "crowd"};
  return names;
}

VideoTracks ground_truth_tracks(const SimulatedVideo& video) {
  std::map<int, std::vector<InstanceDetection>> by_track;
  for (const auto& d : video.ground_truth) {
    by_track[d.gt_track.value_or(-1)].push_back(d);
  }
  VideoTracks out;
  out.video_id = video.video_id;
  for (const auto& [id, observations] : by_track) {
    out.tracks.push_back(
        make_track_triple(observations, video.width, video.height));
  }
  return out;
}

TwoFrameScenario<double> toy_scenario(const ToyScenarioConfig& config) {
  if (config.instances < 1 || config.samples < 1 || config.dim < 1) {
    throw std::invalid_argument("toy scenario sizes must be positive");
  }
  if (!config.shadows && !config.objects) {
    throw std::invalid_argument("toy scenario needs at least one part kind");
  }
  Rng rng(config.seed);
  std::vector<PartKind> kinds;
  if (config.shadows) kinds.push_back(PartKind::kShadow);
  if (config.objects) kinds.push_back(PartKind::kObject);

  TwoFrameScenario<double> scenario;
  for (int i = 0; i < config.instances; ++i) {
    for (const PartKind kind : kinds) {
      const Eigen::VectorXd latent = rng.normal_vector(config.dim);
      for (int f = 0; f < 2; ++f) {
        const Eigen::VectorXd center =
            f == 0 ? latent
                   : Eigen::VectorXd(latent + config.frame_shift *
                                                  rng.normal_vector(config.dim));
        InstanceGroup<double> g;
        g.instance_id = i;
        g.kind = kind;
        g.samples.resize(config.samples, config.dim);
        for (int s = 0; s < config.samples; ++s) {
          g.samples.row(s) =
              (center + config.spread * rng.normal_vector(config.dim))
                  .transpose();
        }
        scenario.frames[static_cast<std::size_t>(f)].push_back(std::move(g));
      }
    }
  }
  return scenario;
}

}  // namespace shadowtrack
