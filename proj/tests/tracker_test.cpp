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

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "shadowtrack/random.hpp"
#include "shadowtrack/simulator.hpp"

namespace shadowtrack {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const double kDiag = std::exp(1.0) / (std::exp(1.0) + 1.0);

PartDetection part(const VectorXd& embedding, Box box = {0, 0, 2, 2}) {
  BinaryMask mask(8, 8);
  mask.fill_rect(static_cast<int>(box.x0), static_cast<int>(box.y0),
                 static_cast<int>(box.x1), static_cast<int>(box.y1));
  return {box, mask, embedding};
}

InstanceDetection paired(int frame, int det_id, const VectorXd& s,
                         const VectorXd& o, double confidence = 0.9) {
  InstanceDetection d;
  d.frame = frame;
  d.det_id = det_id;
  d.shadow = part(s);
  d.object = part(o);
  d.confidence = confidence;
  return d;
}

TrackingQueue queue_of(const std::vector<InstanceDetection>& dets) {
  TrackingQueue q;
  for (const auto& d : dets) {
    TrackEntry e;
    e.track_id = q.next_id++;
    e.record({d, Provenance::kTracked});
    q.entries.push_back(e);
  }
  return q;
}

TEST(AggregateEmbeddingTest, ScoreWeightedMean) {
  const VectorXd f1 = VectorXd::Unit(3, 0), f2 = VectorXd::Unit(3, 1),
                 f3 = VectorXd::Unit(3, 2);
  const std::vector<LocationSample<double>> samples{
      {f1, 0.04, 0}, {f2, 0.5, 0}, {f3, 0.9, 0}};
  const VectorXd expected = (0.5 * f2 + 0.9 * f3) / 1.4;
  EXPECT_TRUE(aggregate_instance_embedding(samples).isApprox(expected, 1e-15));

  const std::vector<LocationSample<double>> single{{f2, 0.3, 0}};
  EXPECT_EQ(aggregate_instance_embedding(single), f2);
  const std::vector<LocationSample<double>> none{{f2, 0.05, 0}};
  EXPECT_THROW(aggregate_instance_embedding(none), std::invalid_argument);
}

TEST(MatchScoreTest, SingleInstanceIsOne) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const MatrixXd s = match_score(rng.normal_vector(5).transpose(),
                                   rng.normal_vector(5).transpose());
    EXPECT_NEAR(s(0, 0), 1.0, 1e-12);
  }
}

TEST(MatchScoreTest, OrthogonalExample) {
  const MatrixXd s = match_score(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
  EXPECT_NEAR(s(0, 0), kDiag, 1e-12);
  EXPECT_NEAR(s(1, 1), kDiag, 1e-12);
  EXPECT_NEAR(s(0, 1), 1 - kDiag, 1e-12);
  EXPECT_NEAR(s(1, 0), 1 - kDiag, 1e-12);
}

TEST(MatchScoreTest, BoundsSoftmaxSumsAndScaleInvariance) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = rng.uniform_int(1, 5), n = rng.uniform_int(1, 5);
    MatrixXd a(m, 6), b(n, 6);
    for (int i = 0; i < m; ++i) a.row(i) = rng.normal_vector(6).transpose();
    for (int j = 0; j < n; ++j) b.row(j) = rng.normal_vector(6).transpose();
    const MatrixXd s = match_score(a, b);
    EXPECT_GT(s.minCoeff(), 0.0);
    EXPECT_LE(s.maxCoeff(), 1.0);
    // 2s = column-softmax + row-softmax, each summing to one along its axis.
    EXPECT_NEAR((2 * s).sum(), n + m, 1e-9);

    MatrixXd as = a, bs = b;
    as.row(rng.uniform_int(0, m - 1)) *= 3.0;
    bs.row(rng.uniform_int(0, n - 1)) *= rng.uniform(0.01, 100);
    EXPECT_LE((match_score(as, bs) - s).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MatchScoreTest, ZeroNormThrows) {
  EXPECT_THROW(match_score(MatrixXd::Zero(1, 3), MatrixXd::Ones(1, 3)),
               std::invalid_argument);
}

TEST(FinalScoreTest, Examples) {
  EXPECT_EQ(final_score(0.7, 0.5, 0.9, {1, 0, 0, 0.2}), 0.7);
  EXPECT_EQ(final_score(0.7, 0.5, 0.9, {0, 0, 1, 0.2}), 0.9);
  EXPECT_NEAR(final_score(0.7, 0.5, 0.9, {}), 2.1, 1e-15);
}

TEST(PairBoxIouTest, MeanOfParts) {
  TrackEntry e;
  e.record({paired(0, 0, VectorXd::Ones(2), VectorXd::Ones(2)),
            Provenance::kTracked});
  InstanceDetection d = paired(1, 1, VectorXd::Ones(2), VectorXd::Ones(2));
  d.object->box = {1, 1, 3, 3};
  EXPECT_NEAR(pair_box_iou(d, e), 0.5 * (1.0 + 1.0 / 7.0), 1e-15);
  d.shadow.reset();
  EXPECT_NEAR(pair_box_iou(d, e), 1.0 / 7.0, 1e-15);
}

TEST(AssignTest, EmptyQueueGivesNewIdZero) {
  const std::vector<InstanceDetection> dets{
      paired(0, 0, VectorXd::Unit(2, 0), VectorXd::Unit(2, 1))};
  const auto a = assign(dets, TrackingQueue{}, {});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_TRUE(a[0].is_new);
  EXPECT_EQ(a[0].track_id, 0);
}

TEST(AssignTest, IdenticalEmbeddingMatches) {
  const auto d0 = paired(0, 0, VectorXd::Unit(2, 0), VectorXd::Unit(2, 1));
  const auto q = queue_of({d0});
  const std::vector<InstanceDetection> dets{
      paired(1, 1, VectorXd::Unit(2, 0), VectorXd::Unit(2, 1))};
  const auto a = assign(dets, q, {});
  EXPECT_EQ(a, (std::vector<Assignment>{{0, 0, false}}));
}

TEST(AssignTest, OrthogonalPairsKeepIdentity) {
  const VectorXd e0 = VectorXd::Unit(4, 0), e1 = VectorXd::Unit(4, 1),
                 e2 = VectorXd::Unit(4, 2), e3 = VectorXd::Unit(4, 3);
  const auto q = queue_of({paired(0, 0, e0, e1), paired(0, 1, e2, e3)});
  // Listed in swapped order, and the second is more confident.
  const std::vector<InstanceDetection> dets{paired(1, 2, e2, e3, 0.5),
                                            paired(1, 3, e0, e1, 0.8)};
  const auto a = assign(dets, q, {});
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0], (Assignment{1, 0, false}));
  EXPECT_EQ(a[1], (Assignment{0, 1, false}));
}

TEST(AssignTest, LowScoreOpensNewTrack) {
  std::vector<InstanceDetection> seeds;
  for (int k = 0; k < 3; ++k) {
    seeds.push_back(paired(0, k, VectorXd::Unit(8, k), VectorXd::Unit(8, 4 + k)));
  }
  const auto q = queue_of(seeds);
  std::vector<InstanceDetection> dets{
      paired(1, 10, VectorXd::Unit(8, 0), VectorXd::Unit(8, 4), 0.9),
      paired(1, 11, VectorXd::Unit(8, 1), VectorXd::Unit(8, 5), 0.8),
      paired(1, 12, VectorXd::Unit(8, 3), VectorXd::Unit(8, 7), 0.7)};
  // The stranger is orthogonal to every entry, so its score against the one
  // left unclaimed is 1/3 in both softmax directions.
  MatchParams params;
  params.match_threshold = 0.35;
  const auto a = assign(dets, q, params);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[2], (Assignment{2, 3, true}));
  params.match_threshold = 0.2;
  EXPECT_EQ(assign(dets, q, params)[2], (Assignment{2, 2, false}));
}

TEST(AssignTest, RejectsUnpairedOrMixedFrames) {
  auto d = paired(0, 0, VectorXd::Ones(2), VectorXd::Ones(2));
  auto lone = d;
  lone.object.reset();
  EXPECT_THROW(assign(std::vector{lone}, TrackingQueue{}, {}),
               std::invalid_argument);
  auto later = d;
  later.frame = 1;
  EXPECT_THROW(assign(std::vector{d, later}, TrackingQueue{}, {}),
               std::invalid_argument);
}

TEST(AssignTest, IsPartialInjection) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<InstanceDetection> seeds, dets;
    const int n = rng.uniform_int(1, 5), m = rng.uniform_int(1, 6);
    for (int k = 0; k < n; ++k) {
      seeds.push_back(paired(0, k, rng.normal_vector(3), rng.normal_vector(3)));
    }
    for (int k = 0; k < m; ++k) {
      dets.push_back(paired(1, 10 + k, rng.normal_vector(3),
                            rng.normal_vector(3), rng.uniform()));
    }
    const auto q = queue_of(seeds);
    const auto a = assign(dets, q, {});
    ASSERT_EQ(a.size(), dets.size());
    std::set<int> ids;
    for (const auto& x : a) EXPECT_TRUE(ids.insert(x.track_id).second);
    EXPECT_NO_THROW(update_queue(q, a, dets));
  }
}

TEST(UpdateQueueTest, NewAndMatched) {
  const auto d0 = paired(0, 0, VectorXd::Unit(2, 0), VectorXd::Unit(2, 1));
  TrackingQueue q = update_queue({}, std::vector<Assignment>{{0, 0, true}},
                                 std::vector{d0});
  ASSERT_EQ(q.entries.size(), 1u);
  EXPECT_EQ(q.next_id, 1);

  auto d1 = paired(3, 1, VectorXd::Unit(2, 1), VectorXd::Unit(2, 0));
  d1.shadow->box = {4, 4, 6, 6};
  q = update_queue(q, std::vector<Assignment>{{0, 0, false}}, std::vector{d1});
  ASSERT_EQ(q.entries.size(), 1u);
  const TrackEntry& e = q.entries[0];
  EXPECT_EQ(e.shadow_embedding, VectorXd::Unit(2, 1));
  EXPECT_EQ(e.paired_embedding, paired_embedding(d1));
  EXPECT_EQ(e.last_box_shadow, (Box{4, 4, 6, 6}));
  EXPECT_EQ(e.last_seen_frame, 3);
  ASSERT_EQ(e.history.size(), 2u);
  EXPECT_LT(e.history[0].frame(), e.history[1].frame());
}

TEST(UpdateQueueTest, UnknownOrReusedIdThrows) {
  const auto d = paired(0, 0, VectorXd::Ones(2), VectorXd::Ones(2));
  EXPECT_THROW(update_queue({}, std::vector<Assignment>{{0, 4, false}},
                            std::vector{d}),
               std::invalid_argument);
  const auto q = queue_of({d});
  auto later = d;
  later.frame = 1;
  EXPECT_THROW(update_queue(q, std::vector<Assignment>{{0, 0, true}},
                            std::vector{later}),
               std::invalid_argument);
}

TEST(TrackVideoTest, EmptyVideo) {
  EXPECT_TRUE(track_video({}, {}).entries.empty());
}

std::vector<int> identities(const TrackEntry& e) {
  std::vector<int> out;
  for (const auto& o : e.history) out.push_back(o.detection.gt_track.value());
  return out;
}

TEST(TrackVideoTest, SinglePairGivesOneTrack) {
  ScenarioConfig c;
  c.pairs = 1;
  c.seed = 3;
  const auto video = generate(c);
  const auto q = track_video(group_by_frame(video.detections), {});
  ASSERT_EQ(q.entries.size(), 1u);
  EXPECT_EQ(q.entries[0].history.size(), static_cast<std::size_t>(c.frames));
}

TEST(TrackVideoTest, TwoPairsNoSwapAndPartition) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ScenarioConfig c;
    c.pairs = 2;
    c.seed = seed;
    const auto video = generate(c);
    const auto frames = group_by_frame(video.detections);
    const auto q = track_video(frames, {});
    ASSERT_EQ(q.entries.size(), 2u);
    std::set<int> seen;
    std::size_t total = 0;
    for (const auto& e : q.entries) {
      const auto ids = identities(e);
      EXPECT_EQ(std::set<int>(ids.begin(), ids.end()).size(), 1u);
      for (const auto& o : e.history) {
        EXPECT_TRUE(seen.insert(o.detection.det_id).second);
      }
      total += e.history.size();
    }
    EXPECT_EQ(total, video.detections.size());
    EXPECT_EQ(track_video(frames, {}), q);
  }
}

TEST(TrackVideoTest, SkipsUnpairedAndRejectsUnorderedFrames) {
  auto a = paired(0, 0, VectorXd::Ones(2), VectorXd::Ones(2));
  auto lone = paired(1, 1, VectorXd::Ones(2), VectorXd::Ones(2));
  lone.shadow.reset();
  const std::vector<std::vector<InstanceDetection>> frames{{a}, {lone}};
  const auto q = track_video(frames, {});
  ASSERT_EQ(q.entries.size(), 1u);
  EXPECT_EQ(q.entries[0].history.size(), 1u);
  const std::vector<std::vector<InstanceDetection>> backwards{{lone}, {a}};
  EXPECT_THROW(track_video(backwards, {}), std::invalid_argument);
}

TEST(GroupByFrameTest, SortsFramesKeepsOrderWithin) {
  const VectorXd v = VectorXd::Ones(2);
  const std::vector<InstanceDetection> dets{paired(2, 0, v, v), paired(0, 1, v, v),
                                            paired(2, 2, v, v)};
  const auto frames = group_by_frame(dets);
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[0][0].det_id, 1);
  EXPECT_EQ(frames[1][0].det_id, 0);
  EXPECT_EQ(frames[1][1].det_id, 2);
}

}  // namespace
}  // namespace shadowtrack
