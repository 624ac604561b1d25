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

#include "shadowtrack/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#ifndef SHADOWTRACK_VERSION
#define SHADOWTRACK_VERSION "0.0.0"
#endif

namespace shadowtrack {

namespace {

using nlohmann::json;

// Validates shared per-file invariants while records are read.
class RecordReader {
 public:
  json parse_line(const std::string& text, std::size_t line) {
    line_ = line;
    try {
      json j = json::parse(text);
      if (!j.is_object()) fail("record is not a JSON object");
      return j;
    } catch (const json::exception& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(line_, what);
  }

  template <typename T>
  T get(const json& j, const char* key) const {
    const auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing field '") + key + "'");
    try {
      return it->get<T>();
    } catch (const json::exception&) {
      fail(std::string("field '") + key + "' has the wrong type");
    }
  }

  PartDetection part(const json& j, const std::string& video_id) {
    if (!j.is_object()) fail("part is not an object");
    const auto box = get<std::vector<double>>(j, "box");
    if (box.size() != 4) fail("box must have four coordinates");
    if (box[0] > box[2] || box[1] > box[3]) fail("box corners out of order");
    const int width = get<int>(j, "width");
    const int height = get<int>(j, "height");
    if (width < 1 || height < 1) fail("mask dimensions must be positive");
    const auto [it, inserted] =
        video_size_.try_emplace(video_id, std::pair{width, height});
    if (it->second != std::pair{width, height}) {
      fail("mask dimensions differ within video '" + video_id + "'");
    }
    const auto runs = get<std::vector<std::int64_t>>(j, "rle");
    BinaryMask mask(1, 1);
    try {
      mask = rle_decode(runs, width, height);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    const auto emb = get<std::vector<double>>(j, "embedding");
    if (embedding_dim_ && *embedding_dim_ != emb.size()) {
      fail("embedding length " + std::to_string(emb.size()) +
           " differs from " + std::to_string(*embedding_dim_));
    }
    embedding_dim_ = emb.size();
    Eigen::VectorXd embedding =
        Eigen::Map<const Eigen::VectorXd>(emb.data(),
                                          static_cast<Eigen::Index>(emb.size()));
    return {Box{box[0], box[1], box[2], box[3]}, std::move(mask),
            std::move(embedding)};
  }

  InstanceDetection detection(const json& j, const std::string& video_id) {
    InstanceDetection d;
    d.frame = get<int>(j, "frame");
    if (d.frame < 0) fail("negative frame index");
    d.det_id = get<int>(j, "det_id");
    d.confidence = get<double>(j, "confidence");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      fail("confidence outside [0, 1]");
    }
    if (j.contains("shadow") && !j["shadow"].is_null()) {
      d.shadow = part(j["shadow"], video_id);
    }
    if (j.contains("object") && !j["object"].is_null()) {
      d.object = part(j["object"], video_id);
    }
    if (!d.shadow && !d.object) fail("record has neither shadow nor object");
    if (j.contains("gt_track") && !j["gt_track"].is_null()) {
      d.gt_track = get<int>(j, "gt_track");
    }
    return d;
  }

 private:
  std::size_t line_ = 0;
  std::optional<std::size_t> embedding_dim_;
  std::map<std::string, std::pair<int, int>> video_size_;
};

json part_json(const PartDetection& p) {
  const auto rle = rle_encode(p.mask);
  return json{{"box", {p.box.x0, p.box.y0, p.box.x1, p.box.y1}},
              {"rle", rle},
              {"width", p.mask.width()},
              {"height", p.mask.height()},
              {"embedding", std::vector<double>(p.embedding.data(),
                                                p.embedding.data() +
                                                    p.embedding.size())}};
}

void put_detection(json& j, const InstanceDetection& d) {
  j["frame"] = d.frame;
  j["det_id"] = d.det_id;
  j["confidence"] = d.confidence;
  if (d.shadow) j["shadow"] = part_json(*d.shadow);
  if (d.object) j["object"] = part_json(*d.object);
  if (d.gt_track) j["gt_track"] = *d.gt_track;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(text, line);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::kTracked:
      return "tracked";
    case Provenance::kRetrievedForward:
      return "retrieved-forward";
    case Provenance::kRetrievedReverse:
      return "retrieved-reverse";
  }
  return "tracked";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "tracked") return Provenance::kTracked;
  if (text == "retrieved-forward") return Provenance::kRetrievedForward;
  if (text == "retrieved-reverse") return Provenance::kRetrievedReverse;
  throw std::invalid_argument("unknown provenance '" + std::string(text) + "'");
}

DetectionDataset parse_detections(std::istream& in) {
  RecordReader reader;
  std::map<std::string, VideoDetections> videos;
  std::map<std::string, std::set<int>> ids;
  for_each_line(in, [&](const std::string& text, std::size_t line) {
    const json j = reader.parse_line(text, line);
    const auto video_id = reader.get<std::string>(j, "video_id");
    InstanceDetection d = reader.detection(j, video_id);
    if (!ids[video_id].insert(d.det_id).second) {
      reader.fail("duplicate det_id " + std::to_string(d.det_id));
    }
    auto& v = videos[video_id];
    v.video_id = video_id;
    v.detections.push_back(std::move(d));
  });
  DetectionDataset out;
  for (auto& [id, v] : videos) {
    std::stable_sort(v.detections.begin(), v.detections.end(),
                     [](const auto& a, const auto& b) { return a.frame < b.frame; });
    out.push_back(std::move(v));
  }
  return out;
}

DetectionDataset load_detections(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_detections(in);
}

void write_detections(std::ostream& out, const DetectionDataset& data) {
  for (const auto& v : data) {
    for (const auto& d : v.detections) {
      json j;
      j["video_id"] = v.video_id;
      put_detection(j, d);
      out << j.dump() << '\n';
    }
  }
}

void save_detections(const std::filesystem::path& path,
                     const DetectionDataset& data) {
  std::ostringstream out;
  write_detections(out, data);
  write_file_atomic(path, out.str());
}

TrackDataset parse_tracks(std::istream& in) {
  RecordReader reader;
  TrackDataset out;
  std::set<std::tuple<std::string, int, int>> seen;
  for_each_line(in, [&](const std::string& text, std::size_t line) {
    const json j = reader.parse_line(text, line);
    TrackRecord r;
    r.video_id = reader.get<std::string>(j, "video_id");
    r.track_id = reader.get<int>(j, "track_id");
    r.detection = reader.detection(j, r.video_id);
    if (j.contains("provenance") && !j["provenance"].is_null()) {
      try {
        r.provenance = parse_provenance(reader.get<std::string>(j, "provenance"));
      } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
      }
    }
    if (!seen.emplace(r.video_id, r.track_id, r.detection.frame).second) {
      reader.fail("duplicate (video_id, track_id, frame)");
    }
    out.push_back(std::move(r));
  });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.video_id, a.track_id, a.detection.frame) <
           std::tie(b.video_id, b.track_id, b.detection.frame);
  });
  return out;
}

TrackDataset load_tracks(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_tracks(in);
}

void write_tracks(std::ostream& out, const TrackDataset& data) {
  for (const auto& r : data) {
    json j;
    j["video_id"] = r.video_id;
    j["track_id"] = r.track_id;
    put_detection(j, r.detection);
    if (r.provenance) j["provenance"] = to_string(*r.provenance);
    out << j.dump() << '\n';
  }
}

void save_tracks(const std::filesystem::path& path, const TrackDataset& data) {
  std::ostringstream out;
  write_tracks(out, data);
  write_file_atomic(path, out.str());
}

TrackDataset to_track_records(const std::string& video_id,
                              const TrackingQueue& queue) {
  std::vector<const TrackEntry*> entries;
  for (const auto& e : queue.entries) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(),
            [](const auto* a, const auto* b) { return a->track_id < b->track_id; });
  TrackDataset out;
  for (const auto* e : entries) {
    for (const auto& o : e->history) {
      out.push_back({video_id, e->track_id, o.detection, o.provenance});
    }
  }
  return out;
}

std::vector<VideoTracks> to_video_tracks(const TrackDataset& data) {
  std::map<std::string, std::map<int, std::vector<InstanceDetection>>> grouped;
  std::map<std::string, std::pair<int, int>> sizes;
  for (const auto& r : data) {
    grouped[r.video_id][r.track_id].push_back(r.detection);
    const auto& part = r.detection.shadow ? r.detection.shadow : r.detection.object;
    sizes[r.video_id] = {part->mask.width(), part->mask.height()};
  }
  std::vector<VideoTracks> out;
  for (const auto& [video_id, tracks] : grouped) {
    VideoTracks v;
    v.video_id = video_id;
    const auto [width, height] = sizes[video_id];
    for (const auto& [track_id, observations] : tracks) {
      v.tracks.push_back(make_track_triple(observations, width, height));
    }
    out.push_back(std::move(v));
  }
  return out;
}

TwoFrameScenario<double> parse_scenario(std::istream& in) {
  RecordReader reader;
  // Groups keyed by (frame, kind, instance), kept in order of first appearance.
  std::map<std::tuple<int, int, int>, std::size_t> index;
  std::vector<std::pair<std::tuple<int, int, int>,
                        std::vector<LocationSample<double>>>>
      raw;
  std::optional<Eigen::Index> dim;
  for_each_line(in, [&](const std::string& text, std::size_t line) {
    const json j = reader.parse_line(text, line);
    const int frame = reader.get<int>(j, "frame");
    if (frame != 0 && frame != 1) reader.fail("frame must be 0 or 1");
    const auto kind = reader.get<std::string>(j, "kind");
    if (kind != "shadow" && kind != "object") {
      reader.fail("kind must be 'shadow' or 'object'");
    }
    LocationSample<double> s;
    s.instance_id = reader.get<int>(j, "instance_id");
    s.class_score = reader.get<double>(j, "class_score");
    const auto emb = reader.get<std::vector<double>>(j, "embedding");
    s.embedding = Eigen::Map<const Eigen::VectorXd>(
        emb.data(), static_cast<Eigen::Index>(emb.size()));
    if (dim && *dim != s.embedding.size()) reader.fail("embedding length differs");
    dim = s.embedding.size();
    const std::tuple key{frame, kind == "shadow" ? 0 : 1, s.instance_id};
    const auto [it, inserted] = index.try_emplace(key, raw.size());
    if (inserted) raw.emplace_back(key, std::vector<LocationSample<double>>{});
    raw[it->second].second.push_back(std::move(s));
  });
  TwoFrameScenario<double> scenario;
  for (const auto& [key, samples] : raw) {
    const auto [frame, kind, id] = key;
    try {
      scenario.frames[static_cast<std::size_t>(frame)].push_back(
          make_instance_group<double>(
              id, kind == 0 ? PartKind::kShadow : PartKind::kObject, samples));
    } catch (const std::invalid_argument& e) {
      throw FormatError(0, e.what());
    }
  }
  return scenario;
}

TwoFrameScenario<double> load_scenario(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_scenario(in);
}

void write_scenario(std::ostream& out,
                    const TwoFrameScenario<double>& scenario) {
  for (std::size_t f = 0; f < 2; ++f) {
    for (const auto& g : scenario.frames[f]) {
      for (Eigen::Index r = 0; r < g.size(); ++r) {
        const Eigen::VectorXd row = g.samples.row(r).transpose();
        json j{{"frame", f},
               {"kind", g.kind == PartKind::kShadow ? "shadow" : "object"},
               {"instance_id", g.instance_id},
               {"class_score", 1.0},
               {"embedding",
                std::vector<double>(row.data(), row.data() + row.size())}};
        out << j.dump() << '\n';
      }
    }
  }
}

std::string report_json(const EvalReport& report,
                        const std::vector<InputDigest>& inputs,
                        const std::string& generated_at) {
  auto ap_json = [](const ApResult& r) {
    return json{{"ap", r.ap}, {"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}};
  };
  json j;
  j["tool"] = "shadowtrack";
  j["version"] = SHADOWTRACK_VERSION;
  j["generated_at"] = generated_at;
  j["soap_vid"] = report.soap_vid;
  j["association_ap"] = report.association_ap;
  j["instance_ap"] = report.instance_ap;
  const auto grid = TauGrid::values();
  j["parameters"] = {{"tau_grid", std::vector<double>(grid.begin(), grid.end())},
                     {"instance_ap", "pooled shadow+object"},
                     {"interpolation", "all-point"}};
  json per_tau = json::array();
  for (const auto& row : report.per_tau) {
    per_tau.push_back({{"tau", row.tau},
                       {"soap", ap_json(row.soap)},
                       {"association", ap_json(row.association)},
                       {"instance", ap_json(row.instance)}});
  }
  j["per_tau"] = per_tau;
  json in = json::object();
  for (const auto& d : inputs) in[d.name] = {{"sha256", d.sha256}};
  j["inputs"] = in;
  return j.dump(2) + "\n";
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length,
                 EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < length; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace shadowtrack
