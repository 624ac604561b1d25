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

#ifndef SHADOWTRACK_IO_HPP_
#define SHADOWTRACK_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shadowtrack/losses.hpp"
#include "shadowtrack/metric.hpp"
#include "shadowtrack/tracker.hpp"

namespace shadowtrack {

// Malformed or invalid input data. `line` is 1-based, 0 when not tied to a
// line.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct VideoDetections {
  std::string video_id;
  // Frame-sorted; file order within a frame.
  std::vector<InstanceDetection> detections;
};

// Sorted by video id.
using DetectionDataset = std::vector<VideoDetections>;

struct TrackRecord {
  std::string video_id;
  int track_id = 0;
  InstanceDetection detection;
  // Absent for ground-truth files.
  std::optional<Provenance> provenance;

  bool operator==(const TrackRecord&) const = default;
};

// Sorted by (video id, track id, frame).
using TrackDataset = std::vector<TrackRecord>;

std::string_view to_string(Provenance provenance);
Provenance parse_provenance(std::string_view text);

DetectionDataset parse_detections(std::istream& in);
DetectionDataset load_detections(const std::filesystem::path& path);
void write_detections(std::ostream& out, const DetectionDataset& data);
void save_detections(const std::filesystem::path& path,
                     const DetectionDataset& data);

TrackDataset parse_tracks(std::istream& in);
TrackDataset load_tracks(const std::filesystem::path& path);
void write_tracks(std::ostream& out, const TrackDataset& data);
void save_tracks(const std::filesystem::path& path, const TrackDataset& data);

// Flattens tracker output into records, ordered by track id then frame.
TrackDataset to_track_records(const std::string& video_id,
                              const TrackingQueue& queue);

// Groups records into per-track volumes for evaluation.
std::vector<VideoTracks> to_video_tracks(const TrackDataset& data);

// Two-frame loss scenario, one location sample per line:
// {"frame":0|1,"kind":"shadow"|"object","instance_id":i,"class_score":s,
//  "embedding":[...]}. Locations at or below the score threshold are dropped.
TwoFrameScenario<double> parse_scenario(std::istream& in);
TwoFrameScenario<double> load_scenario(const std::filesystem::path& path);
void write_scenario(std::ostream& out, const TwoFrameScenario<double>& scenario);

struct InputDigest {
  std::string name;
  std::string sha256;
};

// Report document; `generated_at` is the only field that changes between
// identical runs.
std::string report_json(const EvalReport& report,
                        const std::vector<InputDigest>& inputs,
                        const std::string& generated_at);

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

}  // namespace shadowtrack

#endif  // SHADOWTRACK_IO_HPP_
