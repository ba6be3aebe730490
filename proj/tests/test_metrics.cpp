// Copyright (c) 2026, The poseunion Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "poseunion/errors.hpp"
#include "poseunion/metrics.hpp"
#include "poseunion/rng.hpp"
#include "poseunion/schema.hpp"

using namespace poseunion;

namespace {

const UnionSchema& standard_union() {
  static const auto u = [] {
    const auto reg = SchemaRegistry::builtin();
    return build_union({reg.get("coco17"), reg.get("mpii16")});
  }();
  return u;
}

std::vector<std::size_t> all_slots() {
  return subset_slots(standard_union(), "all");
}

/// A fully labeled instance with every keypoint at `at`.
UnifiedInstance uniform_instance(Point2 at, double area, std::int64_t image,
                                 double score = 1.0) {
  const auto& u = standard_union();
  auto inst = make_unified(u.size());
  inst.image_id = image;
  inst.area = area;
  inst.bbox = {at.x - 1.0, at.y - 1.0, 2.0, 2.0};
  inst.score = score;
  for (std::size_t k = 0; k < u.size(); ++k) {
    inst.mask[k] = true;
    inst.vis[k] = 2;
    inst.coords[k] = at;
  }
  return inst;
}

UnifiedInstance random_scene_instance(Rng& rng, std::int64_t image,
                                      double score) {
  const auto& u = standard_union();
  auto inst = make_unified(u.size());
  inst.image_id = image;
  inst.score = score;
  inst.area = rng.uniform(500.0, 20000.0);
  inst.bbox = {rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(20, 120),
               rng.uniform(20, 120)};
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (rng.uniform01() < 0.8) {
      inst.mask[k] = true;
      inst.vis[k] = 2;
      inst.coords[k] = {rng.uniform(0, 200), rng.uniform(0, 200)};
    }
  }
  return inst;
}

}  // namespace

TEST_CASE("default sigma table spot checks") {
  const auto& table = default_sigma_table();
  CHECK(table.at("nose") == doctest::Approx(0.026));
  CHECK(table.at("left_shoulder") == doctest::Approx(0.079));
  CHECK(table.at("right_ankle") == doctest::Approx(0.089));
  CHECK(table.at("left_hip") == doctest::Approx(0.107));
  // Conventions for the MPII-only points.
  CHECK(table.at("pelvis") == doctest::Approx(0.107));
  CHECK(table.at("thorax") == doctest::Approx(0.079));
  CHECK(table.at("upper_neck") == doctest::Approx(0.079));
  CHECK(table.at("head_top") == doctest::Approx(0.035));
}

TEST_CASE("default sigmas line up with the union slots") {
  const auto& u = standard_union();
  const auto params = default_sigmas(u);
  REQUIRE(params.sigmas.size() == u.size());
  CHECK(params.sigmas[*u.index_of("nose")] == doctest::Approx(0.026));
  CHECK(params.sigmas[*u.index_of("head_top")] == doctest::Approx(0.035));
}

TEST_CASE("default sigmas reject unknown keypoints") {
  SkeletonSchema odd("odd", {KeypointName("tail_tip"),
                             KeypointName("left_shoulder")});
  const auto u = build_union({odd});
  CHECK_THROWS_WITH_AS(default_sigmas(u), doctest::Contains("tail_tip"),
                       ConfigError);
}

TEST_CASE("sigma overrides") {
  const auto& u = standard_union();
  const auto params = parse_sigmas(u, R"({"nose": 0.5})");
  CHECK(params.sigmas[*u.index_of("nose")] == doctest::Approx(0.5));
  CHECK(params.sigmas[*u.index_of("left_shoulder")] == doctest::Approx(0.079));
  CHECK_THROWS_AS(parse_sigmas(u, R"({"snout": 0.5})"), ConfigError);
  CHECK_THROWS_AS(parse_sigmas(u, R"({"nose": -0.1})"), ConfigError);
  CHECK_THROWS_AS(parse_sigmas(u, "nope"), FormatError);
}

TEST_CASE("subset slots") {
  const auto& u = standard_union();
  CHECK(subset_slots(u, "all").size() == 21);
  CHECK(subset_slots(u, "coco").size() == 17);
  CHECK(subset_slots(u, "mpii").size() == 16);
  CHECK(subset_slots(u, "shared").size() == 12);
  CHECK_THROWS_AS(subset_slots(u, "nonsense"), ConfigError);
}

TEST_CASE("oks hits exp(-1) at the pinned displacement") {
  const auto& u = standard_union();
  const auto params = default_sigmas(u);
  const double area = 400.0;
  const std::size_t nose = *u.index_of("nose");

  auto gt = make_unified(u.size());
  gt.area = area;
  gt.mask[nose] = true;
  gt.vis[nose] = 2;
  gt.coords[nose] = {10.0, 10.0};

  auto pred = make_unified(u.size());
  const double d = params.sigmas[nose] * std::sqrt(2.0 * area);
  for (std::size_t k = 0; k < u.size(); ++k) {
    pred.mask[k] = true;
    pred.vis[k] = 2;
  }
  pred.coords[nose] = {10.0 + d, 10.0};

  const auto score = oks(pred, gt, params, all_slots());
  REQUIRE(score.has_value());
  CHECK(*score == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("oks agrees with the reference on random instances") {
  Rng rng(202);
  const auto& u = standard_union();
  const auto params = default_sigmas(u);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gt = random_scene_instance(rng, 0, 1.0);
    const auto pred = random_scene_instance(rng, 0, 1.0);
    const auto subset =
        trial % 2 == 0 ? all_slots() : subset_slots(u, "mpii");
    const auto got = oks(pred, gt, params, subset);
    const auto want = oracles::naive_oks(pred, gt, params.sigmas, subset);
    REQUIRE(got.has_value() == want.has_value());
    if (got) CHECK(*got == doctest::Approx(*want).epsilon(1e-12));
  }
}

TEST_CASE("oks is nullopt with no labeled subset slot and rejects bad area") {
  const auto& u = standard_union();
  const auto params = default_sigmas(u);
  auto gt = make_unified(u.size());
  gt.area = 100.0;
  const auto pred = uniform_instance({0, 0}, 100.0, 0);
  CHECK_FALSE(oks(pred, gt, params, all_slots()).has_value());

  auto bad = uniform_instance({0, 0}, 0.0, 0);
  bad.area = 0.0;
  CHECK_THROWS_AS(oks(pred, bad, params, all_slots()), ContractError);
}

TEST_CASE("pck boundary is the closed inequality") {
  const auto& u = standard_union();
  const std::size_t nose = *u.index_of("nose");

  auto gt = make_unified(u.size());
  gt.bbox = {0.0, 0.0, 3.0, 4.0};  // diag exactly 5
  gt.mask[nose] = true;
  gt.vis[nose] = 2;
  gt.coords[nose] = {0.0, 0.0};

  PckConfig cfg;
  cfg.threshold = 0.5;
  cfg.normalizer = PckNormalizer::bbox_diag;  // radius = 2.5 exactly

  auto pred = make_unified(u.size());
  pred.mask[nose] = true;
  pred.vis[nose] = 2;

  pred.coords[nose] = {2.5, 0.0};
  auto report = pck({pred}, {gt}, u, cfg, all_slots());
  CHECK(report.means.at("pck") == 1.0);

  pred.coords[nose] = {std::nextafter(2.5, 3.0), 0.0};
  report = pck({pred}, {gt}, u, cfg, all_slots());
  CHECK(report.means.at("pck") == 0.0);
}

TEST_CASE("pck matches the reference on random scenes") {
  Rng rng(303);
  const auto& u = standard_union();
  PckConfig cfg;
  cfg.threshold = 0.4;
  cfg.normalizer = PckNormalizer::bbox_diag;
  const auto subset = all_slots();

  std::vector<UnifiedInstance> preds;
  std::vector<UnifiedInstance> gts;
  oracles::RefPck ref;
  for (int i = 0; i < 60; ++i) {
    auto gt = random_scene_instance(rng, i, 1.0);
    auto pred = random_scene_instance(rng, i, 1.0);
    // Pull half the predictions close so hits actually occur.
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (i % 2 == 0 && gt.mask[k]) {
        pred.coords[k] = {gt.coords[k].x + rng.uniform(-20, 20),
                          gt.coords[k].y + rng.uniform(-20, 20)};
      }
    }
    ref.add(pred, gt, cfg.threshold, gt.bbox.diag(), subset);
    preds.push_back(std::move(pred));
    gts.push_back(std::move(gt));
  }
  const auto report = pck(preds, gts, u, cfg, subset);
  CHECK(report.means.at("pck") == doctest::Approx(ref.macro_mean()).epsilon(1e-12));
  CHECK(report.instances == 60);
  for (const auto& [slot, counts] : ref.per_slot) {
    const auto& name = u.keypoints[slot].str();
    CHECK(report.per_keypoint.at(name) ==
          doctest::Approx(static_cast<double>(counts.first) /
                          static_cast<double>(counts.second)));
  }
}

TEST_CASE("pckh skips instances without a head segment") {
  const auto& u = standard_union();
  const std::size_t ht = *u.index_of("head_top");
  const std::size_t un = *u.index_of("upper_neck");
  const std::size_t nose = *u.index_of("nose");

  auto with_head = make_unified(u.size());
  with_head.mask[ht] = with_head.mask[un] = with_head.mask[nose] = true;
  with_head.vis[ht] = with_head.vis[un] = with_head.vis[nose] = 2;
  with_head.coords[ht] = {0.0, 0.0};
  with_head.coords[un] = {0.0, 10.0};
  with_head.coords[nose] = {0.0, 5.0};

  auto without_head = with_head;
  without_head.mask[ht] = false;
  without_head.coords[ht] = {0.0, 0.0};
  without_head.vis[ht] = 0;

  PckConfig cfg;
  cfg.threshold = 0.5;
  cfg.normalizer = PckNormalizer::head_segment;
  cfg.head_scale = 0.6;

  // Radius = 0.5 * 0.6 * 10 = 3; prediction off by 2 hits, off by 4 misses.
  auto pred = with_head;
  pred.coords[nose] = {2.0, 5.0};
  auto report = pck({pred, pred}, {with_head, without_head}, u, cfg,
                    {nose});
  CHECK(report.instances == 1);
  CHECK(report.skipped == 1);
  CHECK(report.means.at("pck") == 1.0);

  pred.coords[nose] = {4.0, 5.0};
  report = pck({pred}, {with_head}, u, cfg, {nose});
  CHECK(report.means.at("pck") == 0.0);
}

TEST_CASE("torso normalizer uses shoulder to opposite hip") {
  const auto& u = standard_union();
  const std::size_t ls = *u.index_of("left_shoulder");
  const std::size_t rh = *u.index_of("right_hip");
  const std::size_t nose = *u.index_of("nose");

  auto gt = make_unified(u.size());
  for (const auto k : {ls, rh, nose}) {
    gt.mask[k] = true;
    gt.vis[k] = 2;
  }
  gt.coords[ls] = {0.0, 0.0};
  gt.coords[rh] = {0.0, 8.0};
  gt.coords[nose] = {0.0, 0.0};

  PckConfig cfg;
  cfg.threshold = 0.5;
  cfg.normalizer = PckNormalizer::torso;  // radius = 4

  auto pred = gt;
  pred.coords[nose] = {3.9, 0.0};
  CHECK(pck({pred}, {gt}, u, cfg, {nose}).means.at("pck") == 1.0);
  pred.coords[nose] = {4.1, 0.0};
  CHECK(pck({pred}, {gt}, u, cfg, {nose}).means.at("pck") == 0.0);
}

TEST_CASE("pck contract and config errors") {
  const auto& u = standard_union();
  const auto inst = make_unified(u.size());
  PckConfig cfg;
  CHECK_THROWS_AS(pck({inst, inst}, {inst}, u, cfg, all_slots()),
                  ContractError);
  cfg.threshold = 0.0;
  CHECK_THROWS_AS(pck({inst}, {inst}, u, cfg, all_slots()), ConfigError);
}

TEST_CASE("average precision on a clean single-image scene") {
  const auto params = default_sigmas(standard_union());
  const auto gt = uniform_instance({50, 50}, 5000.0, 1);
  const auto pred = uniform_instance({50, 50}, 5000.0, 1, 0.9);

  const auto report = average_precision({pred}, {gt}, params,
                                        oks_thresholds(), all_slots());
  CHECK(report.means.at("ap") == doctest::Approx(1.0));
  CHECK(report.means.at("ar") == doctest::Approx(1.0));
  CHECK(report.means.at("ap50") == doctest::Approx(1.0));
  CHECK(report.means.at("ap75") == doctest::Approx(1.0));
  CHECK(report.instances == 1);
}

TEST_CASE("a detection on an empty image is a false positive") {
  const auto params = default_sigmas(standard_union());
  const auto gt = uniform_instance({50, 50}, 5000.0, 1);
  const auto hit = uniform_instance({50, 50}, 5000.0, 1, 0.9);
  // Image 2 has no ground truth; the in-range detection there is an fp.
  const auto stray = uniform_instance({10, 10}, 5000.0, 2, 0.95);

  const auto report = average_precision({hit, stray}, {gt}, params,
                                        oks_thresholds(), all_slots());
  // fp ranked first: precision at the single recall point is 1/2.
  CHECK(report.means.at("ap50") == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(report.means.at("ar50") == doctest::Approx(1.0));
}

TEST_CASE("out-of-bucket detections are ignored rather than penalized") {
  const auto params = default_sigmas(standard_union());
  const auto gt = uniform_instance({50, 50}, 5000.0, 1);
  const auto hit = uniform_instance({50, 50}, 5000.0, 1, 0.9);
  // Unmatched stray whose own tiny area is outside every bucket it could
  // hurt: in the overall bucket lo=0 it still counts as fp, so park it in
  // the M bucket check instead.
  auto stray = uniform_instance({10, 10}, 5000.0, 2, 0.95);
  stray.area = 10.0;

  const auto report = average_precision({hit, stray}, {gt}, params,
                                        oks_thresholds(), all_slots());
  // gt area 5000 lies in (1024, 9216]: the M bucket sees the stray's area
  // 10 as out of range and ignores it, so ap_m stays perfect.
  CHECK(report.means.at("ap_m") == doctest::Approx(1.0));
  CHECK_FALSE(report.means.contains("ap_l"));
}

TEST_CASE("area bucket boundaries are half-open") {
  const auto params = default_sigmas(standard_union());
  SUBCASE("area exactly 32^2 is below the M bucket") {
    const auto gt = uniform_instance({50, 50}, 1024.0, 1);
    const auto pred = uniform_instance({50, 50}, 1024.0, 1, 0.9);
    const auto report = average_precision({pred}, {gt}, params,
                                          oks_thresholds(), all_slots());
    CHECK_FALSE(report.means.contains("ap_m"));
    CHECK(report.means.contains("ap"));
  }
  SUBCASE("area exactly 96^2 is inside the M bucket") {
    const auto gt = uniform_instance({50, 50}, 9216.0, 1);
    const auto pred = uniform_instance({50, 50}, 9216.0, 1, 0.9);
    const auto report = average_precision({pred}, {gt}, params,
                                          oks_thresholds(), all_slots());
    CHECK(report.means.at("ap_m") == doctest::Approx(1.0));
    CHECK_FALSE(report.means.contains("ap_l"));
  }
}

TEST_CASE("equal scores break ties by detection order") {
  const auto params = default_sigmas(standard_union());
  const auto gt = uniform_instance({50, 50}, 5000.0, 1);
  const auto close = uniform_instance({50, 50}, 5000.0, 1, 0.5);
  const auto far = uniform_instance({500, 500}, 5000.0, 1, 0.5);

  // far first in the vector: it is processed first, fails to match, and
  // precedes the hit in the pooled list.
  const auto r1 = average_precision({far, close}, {gt}, params,
                                    oks_thresholds(), all_slots());
  // close first: the fp ranks after the tp.
  const auto r2 = average_precision({close, far}, {gt}, params,
                                    oks_thresholds(), all_slots());
  CHECK(r1.means.at("ap50") < r2.means.at("ap50"));
  CHECK(r2.means.at("ap50") == doctest::Approx(1.0));
}

TEST_CASE("average precision matches the reference on random scenes") {
  Rng rng(404);
  const auto params = default_sigmas(standard_union());
  const auto thresholds = oks_thresholds();

  for (int scene = 0; scene < 8; ++scene) {
    std::vector<UnifiedInstance> gts;
    std::vector<UnifiedInstance> preds;
    const int images = 3 + static_cast<int>(rng.index(3));
    for (int img = 0; img < images; ++img) {
      const int n_gt = 1 + static_cast<int>(rng.index(3));
      for (int i = 0; i < n_gt; ++i) {
        gts.push_back(random_scene_instance(rng, img, 1.0));
      }
      const int n_pred = 1 + static_cast<int>(rng.index(4));
      for (int i = 0; i < n_pred; ++i) {
        // Half the predictions perturb a gt, half are noise.
        auto pred = random_scene_instance(rng, img, rng.uniform01());
        if (rng.uniform01() < 0.5 && !gts.empty()) {
          const auto& base = gts[rng.index(gts.size())];
          if (base.image_id == img) {
            pred = base;
            pred.score = rng.uniform01();
            for (std::size_t k = 0; k < pred.coords.size(); ++k) {
              if (!pred.mask[k]) continue;
              pred.coords[k].x += rng.uniform(-15, 15);
              pred.coords[k].y += rng.uniform(-15, 15);
            }
          }
        }
        preds.push_back(std::move(pred));
      }
    }
    const auto subset = scene % 2 == 0 ? all_slots()
                                       : subset_slots(standard_union(), "coco");
    const auto report =
        average_precision(preds, gts, params, thresholds, subset);

    const double inf = std::numeric_limits<double>::infinity();
    const auto overall = oracles::naive_average_precision(
        preds, gts, params.sigmas, thresholds, subset, 0.0, inf);
    const auto medium = oracles::naive_average_precision(
        preds, gts, params.sigmas, thresholds, subset, 1024.0, 9216.0);
    const auto large = oracles::naive_average_precision(
        preds, gts, params.sigmas, thresholds, subset, 9216.0, inf);

    for (const char* key : {"ap", "ar", "ap50", "ar50", "ap75", "ar75"}) {
      REQUIRE(report.means.contains(key) == overall.means.contains(key));
      if (overall.means.contains(key)) {
        CHECK(report.means.at(key) ==
              doctest::Approx(overall.means.at(key)).epsilon(1e-10));
      }
    }
    CHECK(report.means.contains("ap_m") == (medium.usable_gts > 0));
    if (medium.usable_gts > 0) {
      CHECK(report.means.at("ap_m") ==
            doctest::Approx(medium.means.at("ap")).epsilon(1e-10));
      CHECK(report.means.at("ar_m") ==
            doctest::Approx(medium.means.at("ar")).epsilon(1e-10));
    }
    CHECK(report.means.contains("ap_l") == (large.usable_gts > 0));
    if (large.usable_gts > 0) {
      CHECK(report.means.at("ap_l") ==
            doctest::Approx(large.means.at("ap")).epsilon(1e-10));
      CHECK(report.means.at("ar_l") ==
            doctest::Approx(large.means.at("ar")).epsilon(1e-10));
    }
  }
}

TEST_CASE("eval report json round trip") {
  EvalReport report;
  report.per_keypoint = {{"nose", 0.5}, {"left_eye", 0.25}};
  report.means = {{"pck", 0.375}};
  report.instances = 4;
  report.skipped = 1;
  report.keypoints = 8;
  const auto back = eval_report_from_json(eval_report_to_json(report));
  CHECK(back.per_keypoint == report.per_keypoint);
  CHECK(back.means == report.means);
  CHECK(back.instances == report.instances);
  CHECK(back.skipped == report.skipped);
  CHECK(back.keypoints == report.keypoints);
  CHECK_THROWS_AS(eval_report_from_json("[1,2]"), FormatError);
}
