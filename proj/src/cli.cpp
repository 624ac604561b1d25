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

#include "shadowtrack/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "shadowtrack/io.hpp"
#include "shadowtrack/losses.hpp"
#include "shadowtrack/metric.hpp"
#include "shadowtrack/retrieval.hpp"
#include "shadowtrack/simulator.hpp"
#include "shadowtrack/tracker.hpp"

namespace shadowtrack {

namespace {

struct SimOptions {
  std::string preset;
  std::uint64_t seed = 0;
  std::string out_gt;
  std::string out_det;
  std::optional<int> frames;
  std::optional<int> pairs;
  std::optional<double> noise;
  std::optional<double> dropout;
  bool list = false;
};

struct TrackOptions {
  std::string detections;
  std::string out;
  MatchParams match;
  std::string retrieval = "bidirectional";
  std::optional<double> retrieval_threshold;
};

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::string report;
};

struct LossOptions {
  std::string scenario;
  std::string save_scenario;
  std::string trace;
  std::uint64_t seed = 0;
  ToyScenarioConfig toy;
  FitOptions fit;
  bool check_grad = false;
};

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

int run_sim(const SimOptions& o, std::ostream& out) {
  if (o.list) {
    for (const auto& name : preset_names()) out << name << '\n';
    return kExitOk;
  }
  if (o.preset.empty() || o.out_gt.empty() || o.out_det.empty()) {
    throw CLI::RequiredError("sim needs --preset, --out-gt and --out-det");
  }
  ScenarioConfig config = preset(o.preset);
  config.seed = o.seed;
  if (o.frames) config.frames = *o.frames;
  if (o.pairs) config.pairs = *o.pairs;
  if (o.noise) config.embedding_noise = *o.noise;
  if (o.dropout) config.dropout = *o.dropout;
  const SimulatedVideo video = generate(config);

  TrackDataset gt;
  for (const auto& d : video.ground_truth) {
    gt.push_back({video.video_id, d.gt_track.value_or(-1), d, std::nullopt});
  }
  std::stable_sort(gt.begin(), gt.end(), [](const auto& a, const auto& b) {
    return std::tie(a.track_id, a.detection.frame) <
           std::tie(b.track_id, b.detection.frame);
  });
  save_tracks(o.out_gt, gt);
  save_detections(o.out_det, {{video.video_id, video.detections}});

  const auto unpaired = unpaired_detections(video.detections).size();
  out << "video " << video.video_id << ": " << config.frames << " frames, "
      << config.pairs << " pairs, " << video.detections.size()
      << " detections (" << unpaired << " unpaired)\n";
  return kExitOk;
}

struct VideoOutcome {
  TrackDataset records;
  std::size_t tracks = 0;
  RetrievalReport report;
};

int run_track(const TrackOptions& o, std::ostream& out) {
  RetrievalParams retrieval;
  if (o.retrieval == "off") {
    retrieval.mode = RetrievalMode::kOff;
  } else if (o.retrieval == "forward") {
    retrieval.mode = RetrievalMode::kForward;
  } else {
    retrieval.mode = RetrievalMode::kBidirectional;
  }
  retrieval.match_threshold =
      o.retrieval_threshold.value_or(o.match.match_threshold);

  const DetectionDataset data = load_detections(o.detections);
  std::vector<std::future<VideoOutcome>> jobs;
  for (const auto& video : data) {
    jobs.push_back(std::async(std::launch::async, [&video, &o, retrieval] {
      const auto frames = group_by_frame(video.detections);
      TrackingQueue queue = track_video(frames, o.match);
      const auto unpaired = unpaired_detections(video.detections);
      RetrievalResult result =
          retrieve_bidirectional(std::move(queue), unpaired, retrieval);
      VideoOutcome outcome;
      outcome.records = to_track_records(video.video_id, result.queue);
      outcome.tracks = result.queue.entries.size();
      outcome.report = result.report;
      return outcome;
    }));
  }
  TrackDataset records;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    VideoOutcome v = jobs[i].get();
    out << "video " << data[i].video_id << ": " << v.tracks << " tracks, "
        << v.report.attached_forward << " retrieved forward, "
        << v.report.attached_reverse << " retrieved reverse, "
        << v.report.dropped << " unpaired dropped\n";
    records.insert(records.end(), v.records.begin(), v.records.end());
  }
  save_tracks(o.out, records);
  return kExitOk;
}

int run_eval(const EvalOptions& o, std::ostream& out) {
  const std::string pred_bytes = read_file(o.pred);
  const std::string gt_bytes = read_file(o.gt);
  std::istringstream pred_in(pred_bytes);
  std::istringstream gt_in(gt_bytes);
  const auto preds = to_video_tracks(parse_tracks(pred_in));
  const auto gts = to_video_tracks(parse_tracks(gt_in));
  const EvalReport report = soap_vid(preds, gts);
  const std::vector<InputDigest> digests{{"pred", sha256_hex(pred_bytes)},
                                         {"gt", sha256_hex(gt_bytes)}};
  write_file_atomic(o.report, report_json(report, digests, utc_timestamp()));
  out << std::fixed << std::setprecision(4) << "SOAP-VID " << report.soap_vid
      << "  Association AP " << report.association_ap << "  Instance AP "
      << report.instance_ap << '\n';
  return kExitOk;
}

int run_losses(LossOptions o, std::ostream& out) {
  TwoFrameScenario<double> scenario;
  if (!o.scenario.empty()) {
    scenario = load_scenario(o.scenario);
  } else {
    o.toy.seed = o.seed;
    scenario = toy_scenario(o.toy);
  }
  if (!o.save_scenario.empty()) {
    std::ostringstream s;
    write_scenario(s, scenario);
    write_file_atomic(o.save_scenario, s.str());
  }

  const double temperature = o.fit.temperature;
  if (o.check_grad) {
    const auto loss = [&](const VectorX<double>& params) {
      TwoFrameScenario<double> probe = scenario;
      probe.assign(params);
      return scenario_loss(probe, o.fit.weights, temperature).total;
    };
    const double error = grad_check<double>(loss, scenario.flatten(), 1e-6);
    out << "max relative gradient error " << std::scientific
        << std::setprecision(3) << error << '\n';
    return error <= 1e-4 ? kExitOk : kExitDataError;
  }

  const FitResult<double> fit = fit_toy(scenario, o.fit);
  std::ostringstream trace;
  trace << std::setprecision(17);
  for (std::size_t k = 0; k < fit.loss_trace.size(); ++k) {
    trace << k << ' ' << fit.loss_trace[k] << '\n';
  }
  if (o.trace.empty()) {
    out << trace.str();
  } else {
    write_file_atomic(o.trace, trace.str());
  }
  const auto sep = embedding_separation(fit.scenario);
  out << std::setprecision(6) << "initial loss " << fit.loss_trace.front()
      << ", final loss " << fit.loss_trace.back() << ", cosine margin "
      << sep.margin() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Paired shadow/object instance tracking toolkit", "shadowtrack"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  SimOptions sim;
  auto* sim_cmd = app.add_subcommand("sim", "Generate a synthetic scenario");
  sim_cmd->add_option("--preset", sim.preset, "Scenario preset")
      ->check(CLI::IsMember(preset_names()));
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--out-gt", sim.out_gt, "Ground-truth track JSONL");
  sim_cmd->add_option("--out-det", sim.out_det, "Detection JSONL");
  sim_cmd->add_option("--frames", sim.frames, "Override frame count")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--pairs", sim.pairs, "Override pair count")
      ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--noise", sim.noise, "Override embedding noise")
      ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--dropout", sim.dropout, "Override dropout")
      ->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_flag("--list-presets", sim.list, "Print the preset names");

  TrackOptions track;
  auto* track_cmd = app.add_subcommand("track", "Track detections");
  track_cmd->add_option("--detections", track.detections, "Detection JSONL")
      ->required();
  track_cmd->add_option("--out", track.out, "Output track JSONL")->required();
  track_cmd->add_option("--alpha", track.match.alpha, "Embedding score weight");
  track_cmd->add_option("--beta", track.match.beta, "Box IoU weight");
  track_cmd->add_option("--gamma", track.match.gamma, "Confidence weight");
  track_cmd->add_option("--match-threshold", track.match.match_threshold,
                        "Minimum score to continue a track")
      ->check(CLI::Range(0.0, 1.0));
  track_cmd->add_option("--retrieval", track.retrieval,
                        "Unpaired instance retrieval")
      ->check(CLI::IsMember({"off", "forward", "bidirectional"}));
  track_cmd->add_option("--retrieval-threshold", track.retrieval_threshold,
                        "Retrieval score threshold (default: match threshold)")
      ->check(CLI::Range(0.0, 1.0));

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score tracks against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Predicted track JSONL")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth track JSONL")->required();
  eval_cmd->add_option("--report", eval.report, "Report JSON")->required();

  LossOptions losses;
  auto* loss_cmd = app.add_subcommand("losses", "Fit toy embeddings");
  loss_cmd->add_option("--scenario", losses.scenario, "Scenario JSONL");
  loss_cmd->add_option("--seed", losses.seed, "Seed for a generated scenario");
  loss_cmd->add_option("--instances", losses.toy.instances, "Generated instances")
      ->check(CLI::PositiveNumber);
  loss_cmd->add_option("--samples", losses.toy.samples,
                       "Generated samples per instance")
      ->check(CLI::PositiveNumber);
  loss_cmd->add_option("--dim", losses.toy.dim, "Embedding dimension")
      ->check(CLI::PositiveNumber);
  loss_cmd->add_option("--save-scenario", losses.save_scenario,
                       "Write the scenario used");
  loss_cmd->add_option("--steps", losses.fit.steps, "Gradient steps")
      ->check(CLI::NonNegativeNumber);
  loss_cmd->add_option("--lr", losses.fit.learning_rate, "Learning rate")
      ->check(CLI::PositiveNumber);
  loss_cmd->add_option("--w-center", losses.fit.weights.center, "Center weight");
  loss_cmd->add_option("--w-contra", losses.fit.weights.contrast,
                       "Contrast weight");
  loss_cmd->add_option("--w-cyc", losses.fit.weights.cycle, "Cycle weight");
  loss_cmd->add_option("--temperature", losses.fit.temperature,
                       "Transition softmax temperature")
      ->check(CLI::PositiveNumber);
  loss_cmd->add_option("--trace", losses.trace, "Write the loss trace here");
  loss_cmd->add_flag("--check-grad", losses.check_grad,
                     "Verify gradients by central differences");

  std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1),
                                    args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
    if (sim_cmd->parsed()) return run_sim(sim, out);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }

  try {
    if (track_cmd->parsed()) return run_track(track, out);
    if (eval_cmd->parsed()) return run_eval(eval, out);
    if (loss_cmd->parsed()) return run_losses(losses, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace shadowtrack
