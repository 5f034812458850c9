#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "prob/error.hpp"
#include "prob/metrics.hpp"

using namespace prob;

namespace {

const Box kA{0.3, 0.3, 0.2, 0.2};
const Box kB{0.7, 0.7, 0.2, 0.2};

// Shifted right by `frac` of the width; IoU = (1-frac)/(1+frac).
Box shifted(const Box& b, double frac) { return {b.cx + frac * b.w, b.cy, b.w, b.h}; }

}  // namespace

TEST(AveragePrecision, Examples) {
  const std::vector<GroundTruth> gt{{0, 0, kA}};
  EXPECT_DOUBLE_EQ(*average_precision(std::vector<Detection>{{0, 0, 0.9, kA}}, gt), 1.0);
  EXPECT_DOUBLE_EQ(*average_precision(std::vector<Detection>{{0, 0, 0.9, kB}, {0, 0, 0.8, kA}}, gt), 0.5);
  EXPECT_DOUBLE_EQ(*average_precision(std::vector<Detection>{{0, 0, 0.9, kA}, {0, 0, 0.8, kA}}, gt), 1.0);
  EXPECT_FALSE(average_precision(std::vector<Detection>{{0, 0, 0.9, kA}}, {}).has_value());
  EXPECT_DOUBLE_EQ(*average_precision({}, gt), 0.0);
}

TEST(AveragePrecision, MatchesThresholdOracle) {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_gt = uniform_int(rng, 1, 3), n_det = uniform_int(rng, 0, 5);
    std::vector<GroundTruth> gts;
    for (int g = 0; g < n_gt; ++g) gts.push_back({static_cast<std::uint64_t>(uniform_int(rng, 0, 1)), 0,
                                                  oracle::random_box(rng)});
    std::vector<Detection> dets;
    for (int d = 0; d < n_det; ++d) {
      const GroundTruth& near = gts[static_cast<std::size_t>(uniform_int(rng, 0, n_gt - 1))];
      const Box b = uniform_int(rng, 0, 2) > 0 ? shifted(near.box, uniform(rng, 0.0, 0.6)) : oracle::random_box(rng);
      dets.push_back({near.scene_id, 0, uniform(rng, 0.0, 1.0), b});
    }
    ASSERT_NEAR(*average_precision(dets, gts), oracle::ap_by_thresholds(dets, gts), 1e-12) << "trial " << trial;
  }
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreMaps) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GroundTruth> gts{{0, 0, kA}, {0, 0, kB}, {1, 0, kA}};
    std::vector<Detection> dets;
    for (int d = 0; d < 6; ++d) {
      dets.push_back({static_cast<std::uint64_t>(uniform_int(rng, 0, 1)), 0, uniform(rng, 0.01, 1),
                      shifted(uniform_int(rng, 0, 1) ? kA : kB, uniform(rng, 0, 0.5))});
    }
    std::vector<Detection> mapped = dets;
    for (auto& d : mapped) d.score = std::exp(3 * d.score) - 7;
    ASSERT_DOUBLE_EQ(*average_precision(dets, gts), *average_precision(mapped, gts));
  }
}

TEST(AveragePrecision, GreedyPrefersHighestIou) {
  // One detection overlapping two GTs: it takes the better one, leaving the
  // other for the second detection.
  const Box g1 = kA, g2 = shifted(kA, 0.1);
  const std::vector<GroundTruth> gts{{0, 0, g1}, {0, 0, g2}};
  const std::vector<Detection> dets{{0, 0, 0.9, shifted(kA, 0.09)}, {0, 0, 0.8, kA}};
  const auto m = greedy_match(dets, gts, 0.5);
  EXPECT_EQ(m[0], 1);
  EXPECT_EQ(m[1], 0);
}

TEST(RankingOrder, TiesBrokenBySceneThenPosition) {
  const std::vector<Detection> dets{{2, 0, 0.5, kA}, {1, 0, 0.5, kA}, {1, 0, 0.5, kB}, {0, 0, 0.9, kA}};
  EXPECT_EQ(ranking_order(dets), (std::vector<std::size_t>{3, 1, 2, 0}));
}

TEST(OwodMap, Partitions) {
  const std::map<int, std::optional<double>> ap{{0, 1.0}, {1, 0.5}, {2, 0.25}, {3, std::nullopt}};
  const std::vector<int> none, prev{0}, cur{1, 2, 3};
  const PartitionedMap first = owod_map(ap, none, std::vector<int>{0, 1});
  EXPECT_FALSE(first.prev.has_value());
  EXPECT_DOUBLE_EQ(*first.current, 0.75);
  EXPECT_DOUBLE_EQ(*first.both, *first.current);
  const PartitionedMap second = owod_map(ap, prev, cur);
  EXPECT_DOUBLE_EQ(*second.prev, 1.0);
  EXPECT_DOUBLE_EQ(*second.current, 0.375);
  EXPECT_DOUBLE_EQ(*second.both, (1.0 + 0.5 + 0.25) / 3.0);
}

TEST(URecall, Fixtures) {
  const std::vector<GroundTruth> unk{{0, kUnknownLabel, kA}, {0, kUnknownLabel, kB}};
  // Shift of 0.25 width gives IoU 0.6.
  const std::vector<Detection> one{{0, kUnknownLabel, 0.7, shifted(kA, 0.25)}};
  EXPECT_NEAR(box_iou(one[0].box, kA), 0.6, 1e-12);
  EXPECT_DOUBLE_EQ(*u_recall(one, unk), 0.5);
  const std::vector<Detection> both{{0, kUnknownLabel, 0.7, kA}, {0, kUnknownLabel, 0.6, kB}};
  EXPECT_DOUBLE_EQ(*u_recall(both, unk), 1.0);
  EXPECT_FALSE(u_recall(both, {}).has_value());
  // Known-labeled detections never count towards unknown recall.
  const std::vector<Detection> known{{0, 2, 0.9, kA}};
  EXPECT_DOUBLE_EQ(*u_recall(known, unk), 0.0);
}

TEST(AOse, Fixtures) {
  const std::vector<GroundTruth> unk{{0, kUnknownLabel, kA}};
  // Shift of 3/17 width gives IoU 0.7.
  const std::vector<Detection> one{{0, 1, 0.9, shifted(kA, 3.0 / 17.0)}};
  EXPECT_NEAR(box_iou(one[0].box, kA), 0.7, 1e-12);
  EXPECT_EQ(a_ose(one, unk, 0.5), 1);
  EXPECT_EQ(a_ose(std::vector<Detection>{{0, kUnknownLabel, 0.9, kA}}, unk, 0.5), 0);
  EXPECT_EQ(a_ose({}, unk, 0.5), 0);
  // Each unknown GT counts once; scenes add up.
  const std::vector<GroundTruth> two_scenes{{0, kUnknownLabel, kA}, {1, kUnknownLabel, kA}};
  const std::vector<Detection> dets{{0, 1, 0.9, kA}, {0, 2, 0.8, kA}, {1, 0, 0.7, kA}};
  EXPECT_EQ(a_ose(dets, two_scenes, 0.5), 2);
  EXPECT_EQ(a_ose(dets, two_scenes, 0.75), 1);
}

TEST(AOse, NonIncreasingInThreshold) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GroundTruth> unk;
    std::vector<Detection> dets;
    for (int i = 0; i < 4; ++i) unk.push_back({0, kUnknownLabel, oracle::random_box(rng)});
    for (int i = 0; i < 8; ++i) {
      dets.push_back({0, uniform_int(rng, -1, 2), uniform(rng, 0, 1),
                      shifted(unk[static_cast<std::size_t>(i % 4)].box, uniform(rng, 0, 0.4))});
    }
    long previous = a_ose(dets, unk, 0.0);
    for (double th = 0.05; th <= 1.0; th += 0.05) {
      const long v = a_ose(dets, unk, th);
      ASSERT_LE(v, previous);
      previous = v;
    }
  }
}

TEST(WildernessImpact, Fixtures) {
  EXPECT_DOUBLE_EQ(*wilderness_impact_from_counts({8, 0, 2}), 0.25);
  EXPECT_DOUBLE_EQ(*wilderness_impact_from_counts({8, 3, 0}), 0.0);
  EXPECT_FALSE(wilderness_impact_from_counts({0, 0, 3}).has_value());
}

TEST(WildernessImpact, FromDetections) {
  // 10 known GTs in separate scenes; 8 TPs reach recall 0.8. Two known-labeled
  // detections land on unknown objects before the cutoff.
  std::vector<GroundTruth> known, unknown;
  std::vector<Detection> dets;
  for (std::uint64_t s = 0; s < 10; ++s) known.push_back({s, 0, kA});
  for (std::uint64_t s = 0; s < 2; ++s) unknown.push_back({s, kUnknownLabel, kB});
  for (std::uint64_t s = 0; s < 8; ++s) dets.push_back({s, 0, 0.9 - 0.01 * static_cast<double>(s), kA});
  dets.push_back({0, 0, 0.95, kB});
  dets.push_back({1, 0, 0.85, kB});
  dets.push_back({9, 0, 0.01, kA});  // beyond the cutoff
  EXPECT_DOUBLE_EQ(*wilderness_impact(dets, known, unknown, 0.8), 0.25);
  EXPECT_FALSE(wilderness_impact(dets, known, unknown, 1.01).has_value());

  std::vector<Detection> clean(dets.begin(), dets.begin() + 8);
  EXPECT_DOUBLE_EQ(*wilderness_impact(clean, known, unknown, 0.8), 0.0);
  EXPECT_FALSE(wilderness_impact(std::vector<Detection>(dets.begin(), dets.begin() + 3), known, unknown, 0.8));
}

TEST(EvalSettings, ValidationAndJson) {
  EvalSettings s;
  EXPECT_NO_THROW(s.validate());
  const nlohmann::json j = s;
  EXPECT_EQ(j.get<EvalSettings>(), s);
  s.tau = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = EvalSettings{};
  s.top_k = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  nlohmann::json bad = j;
  bad["extra"] = 1;
  EXPECT_THROW(bad.get<EvalSettings>(), ConfigError);
}

TEST(EvalReport, JsonRoundTripKeepsNulls) {
  EvalReport r;
  r.task = 1;
  r.seed = 4;
  r.map_current = 0.5;
  r.map_both = 0.25;
  r.u_recall = std::nullopt;
  r.a_ose = 3;
  r.per_class_ap = {{0, 0.1}, {4, std::nullopt}};
  r.pr_curves = {{0, {{0.5, 1.0}, {1.0, 0.5}}}};
  const nlohmann::json j = r;
  EXPECT_TRUE(j.at("map_prev").is_null());
  EXPECT_TRUE(j.at("u_recall").is_null());
  EXPECT_EQ(j.get<EvalReport>(), r);
  nlohmann::json wrong = j;
  wrong["schema_version"] = 7;
  EXPECT_THROW(wrong.get<EvalReport>(), LoadError);
}

TEST(Evaluate, EndToEndOnHandBuiltInputs) {
  DatasetSpec spec;
  EvalInputs in;
  in.gts = {{0, 0, kA}, {0, kUnknownLabel, kB}, {1, 1, kA}};
  in.detections = {{0, 0, 0.9, kA}, {0, kUnknownLabel, 0.8, kB}, {1, 2, 0.7, kA}};
  in.aose_candidates = in.detections;
  const EvalReport r = evaluate(in, spec, 0, EvalSettings{});
  EXPECT_DOUBLE_EQ(*r.per_class_ap.at(0), 1.0);
  EXPECT_DOUBLE_EQ(*r.per_class_ap.at(1), 0.0);
  EXPECT_FALSE(r.map_prev.has_value());
  EXPECT_DOUBLE_EQ(*r.map_current, 0.5);
  EXPECT_DOUBLE_EQ(*r.u_recall, 1.0);
  EXPECT_EQ(r.a_ose, 0);
  EXPECT_EQ(r.num_known_gts, 2);
  EXPECT_EQ(r.num_unknown_gts, 1);
  EXPECT_EQ(r.num_detections, 3);
}
