#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "roadlift/ablation.hpp"
#include "roadlift/pipeline.hpp"
#include "roadlift/synth.hpp"

using namespace roadlift;

namespace {

std::vector<Scene> smallBenchmark() {
  BenchmarkSpec spec;
  spec.scenes_per_pose = 2;
  return benchmark(spec);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("ordered parallel map keeps index order for any worker count") {
  for (int workers : {1, 2, 5, 64}) {
    const auto out = orderedParallelMap<int>(37, workers, [](int i) { return i * i; });
    REQUIRE(out.size() == 37u);
    for (int i = 0; i < 37; ++i) CHECK(out[i] == i * i);
  }
  CHECK(orderedParallelMap<int>(0, 4, [](int i) { return i; }).empty());
}

TEST_CASE("ordered parallel map rethrows the lowest failing index") {
  for (int workers : {1, 3}) {
    try {
      orderedParallelMap<int>(20, workers, [](int i) -> int {
        if (i == 7 || i == 13) throw std::runtime_error("fail " + std::to_string(i));
        return i;
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "fail 7");
    }
  }
}

TEST_CASE("lift failures become records, not exceptions") {
  SceneSpec spec;
  const Scene scene = generateScene(spec);
  auto dets = oracleDescriptor(scene.frame, {});
  // push one detection's keypoints far above the horizon
  for (int k = 0; k < 4; ++k) dets[0].descriptor.values[2 * k + 1] = -40;
  const auto records = liftDetections(dets, scene.frame.camera, scene.map);
  REQUIRE(records.size() == dets.size());
  CHECK_FALSE(records[0].result.has_value());
  CHECK_FALSE(records[0].error.empty());
  for (std::size_t i = 1; i < records.size(); ++i) CHECK(records[i].result.has_value());
  const auto boxes = scoredBoxes(records);
  CHECK(boxes.size() == dets.size() - 1);
  CHECK(boxes[0].object_id == dets[1].object_id);
}

TEST_CASE("ablation grid: rows, columns and the nominal column") {
  const auto scenes = smallBenchmark();
  AblationConfig cfg;
  cfg.oracle = {0.02, 0.02, 0.005, 2.0, 0};
  cfg.workers = 2;
  const AblationTable t = runAblation(scenes, cfg);
  REQUIRE(t.cells.size() == 9u);
  // oracle descriptors ignore the lane channel
  for (std::size_t c = 0; c < 3; ++c) CHECK(*t.at(1, c).report.pooled_ap == *t.at(0, c).report.pooled_ap);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(*t.at(r, 0).report.pooled_ap >= *t.at(r, 1).report.pooled_ap);
    CHECK(*t.at(r, 1).report.pooled_ap > *t.at(r, 2).report.pooled_ap);
  }
  // a zero-sigma column is the nominal map
  AblationConfig nominal = cfg;
  nominal.map_sigmas = {0};
  nominal.setups = {Setup::Full};
  CHECK(*runAblation(scenes, nominal).at(0, 0).report.pooled_ap == *t.at(0, 0).report.pooled_ap);
  // worker count does not change results
  nominal.workers = 1;
  CHECK(formatCsv(runAblation(scenes, nominal)) == formatCsv(runAblation(scenes, [&] {
          auto c = nominal;
          c.workers = 4;
          return c;
        }())));

  const std::string grid = formatGrid(t);
  for (const char* s : {"Full model", "No driving centerlines", "Keypoints at bottom", "Nominal", "STD 10cm", "STD 40cm"})
    CHECK(grid.find(s) != std::string::npos);
  const std::string csv = formatCsv(t);
  CHECK(csv.rfind("setup,column,map_sigma,ap_pooled", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}

TEST_CASE("perfect oracle, nominal map: every vehicle found") {
  const auto scenes = smallBenchmark();
  AblationConfig cfg;
  cfg.map_sigmas = {0};
  const AblationTable t = runAblation(scenes, cfg);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(*t.at(r, 0).report.pooled_ap == 1.0);
    CHECK(t.at(r, 0).lift_failures == 0);
  }
}

TEST_CASE("column labels") {
  CHECK(columnLabel(0) == "Nominal");
  CHECK(columnLabel(0.1) == "STD 10cm");
  CHECK(columnLabel(0.4) == "STD 40cm");
  CHECK(columnLabel(0.025) == "STD 2.5cm");
  CHECK(setupLabel(Setup::BottomOnly) == "Keypoints at bottom");
}

}
