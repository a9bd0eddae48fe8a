#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pectoral/phantom.hpp"
#include "pectoral/pipeline.hpp"
#include "support.hpp"

using namespace pectoral;

namespace {

Error error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error raised";
  return Error(ErrorKind::Io, "none");
}

bool touches_first_column(const PixelPath& p) {
  for (const Pixel q : p.nodes)
    if (q.col == 0) return true;
  return false;
}

bool touches_last_row(const PixelPath& p, int height) {
  for (const Pixel q : p.nodes)
    if (q.row == height - 1) return true;
  return false;
}

}  // namespace

// --- Fusion -----------------------------------------------------------------

TEST(Fuse, FullMaskPassesSourceThrough) {
  std::mt19937_64 rng(1);
  const EdgeProbMap out1 = support::random_map(rng, 12, 9);
  const EdgeProbMap out2 = support::random_map(rng, 12, 9);
  const BinaryMask all(12, 9, 1);
  EXPECT_EQ(fuse(all, out1, out2), out2);
  PipelineConfig cfg;
  cfg.fusion_source = FusionSource::Out1;
  EXPECT_EQ(fuse(all, out1, out2, cfg), out1);
}

TEST(Fuse, EmptyMaskAnnihilates) {
  std::mt19937_64 rng(2);
  const EdgeProbMap out = support::random_map(rng, 12, 9);
  EXPECT_EQ(fuse(BinaryMask(12, 9), out, out), EdgeProbMap(12, 9, 0.0f));
}

TEST(Fuse, PointwiseProduct) {
  std::mt19937_64 rng(3);
  const EdgeProbMap out1 = support::random_map(rng, 30, 20);
  const EdgeProbMap out2 = support::random_map(rng, 30, 20);
  const BinaryMask b = support::random_mask(rng, 30, 20, 0.5);
  const EdgeProbMap m = fuse(b, out1, out2);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 30; ++c) EXPECT_EQ(m(r, c), b(r, c) ? out2(r, c) : 0.0f);
}

TEST(Fuse, CompletedPixelsGetTheComponentMean) {
  const EdgeProbMap out2(4, 1, std::vector<float>{0.2f, 0.6f, 0.0f, 0.9f});
  const BinaryMask original(4, 1, std::vector<std::uint8_t>{1, 1, 0, 0});
  const BinaryMask completed(4, 1, std::vector<std::uint8_t>{1, 1, 1, 0});
  const EdgeProbMap m = fuse(completed, original, out2, out2);
  EXPECT_EQ(m(0, 0), 0.2f);
  EXPECT_EQ(m(0, 1), 0.6f);
  EXPECT_FLOAT_EQ(m(0, 2), 0.4f);
  EXPECT_EQ(m(0, 3), 0.0f);
}

TEST(Fuse, ShapeMismatch) {
  EXPECT_EQ(error_of([] { fuse(BinaryMask(3, 3), EdgeProbMap(3, 3), EdgeProbMap(3, 4)); }).kind(), ErrorKind::Shape);
}

// --- Region masks -------------------------------------------------------------

TEST(MaskFromBoundary, DiagonalOfFourByFour) {
  const PixelPath diag{{{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 0};
  const RegionMasks m = mask_from_boundary(diag, 4, 4);
  EXPECT_EQ(count_true(m.pectoral), 10u);
  EXPECT_EQ(count_true(m.breast_region), 6u);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(m.pectoral(r, c) != 0, c <= r);
}

TEST(MaskFromBoundary, PathHuggingTheBorders) {
  PixelPath l;
  for (int r = 0; r < 4; ++r) l.nodes.push_back({r, 0});
  for (int c = 1; c < 4; ++c) l.nodes.push_back({3, c});
  const RegionMasks m = mask_from_boundary(l, 4, 4);
  EXPECT_EQ(count_true(m.pectoral), 7u);
  for (const Pixel p : l.nodes) EXPECT_TRUE(m.pectoral[p]);
  EXPECT_EQ(count_true(m.breast_region), 9u);
}

TEST(MaskFromBoundary, OpenPathIsRejected) {
  const PixelPath short_path{{{0, 0}, {1, 1}, {2, 2}}, 0};
  EXPECT_EQ(error_of([&] { mask_from_boundary(short_path, 4, 4); }).kind(), ErrorKind::OpenBoundary);
  const PixelPath floating{{{1, 1}, {2, 2}, {3, 3}}, 0};
  EXPECT_EQ(error_of([&] { mask_from_boundary(floating, 4, 4); }).kind(), ErrorKind::OpenBoundary);
}

TEST(MaskFromBoundary, RandomMonotonePathsMatchCornerFill) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 10 + static_cast<int>(rng() % 20), h = 10 + static_cast<int>(rng() % 20);
    PixelPath path;
    Pixel p{static_cast<int>(rng() % h), 0};
    path.nodes.push_back(p);
    while (p.row < h - 1) {
      const int step = static_cast<int>(rng() % 3);
      if (step == 0 || p.col == w - 1) ++p.row;
      else if (step == 1) ++p.col;
      else {
        ++p.row;
        ++p.col;
      }
      path.nodes.push_back(p);
    }
    const RegionMasks m = mask_from_boundary(path, w, h);
    EXPECT_EQ(m.pectoral, oracle::corner_region(path.nodes, w, h)) << trial;
    for (std::size_t i = 0; i < m.pectoral.size(); ++i)
      ASSERT_NE(m.pectoral.data()[i] != 0, m.breast_region.data()[i] != 0);
  }
}

TEST(BreastForeground, MatchesPhantomTissueRegion) {
  for (int i = 0; i < 8; ++i) {
    const Phantom ph = generate(make_spec(static_cast<Scenario>(i % 4), mix_seed(3, i)));
    const BinaryMask fg = breast_foreground(ph.image);
    EXPECT_EQ(fg, ph.gt_foreground) << i;
    BinaryMask breast(256, 256);
    for (std::size_t k = 0; k < breast.size(); ++k) breast.data()[k] = fg.data()[k] && !ph.gt_pectoral.data()[k];
    EXPECT_EQ(breast, ph.gt_breast) << i;
  }
}

TEST(BreastForeground, BlankImageIsDegenerate) {
  EXPECT_EQ(error_of([] { breast_foreground(GrayImage(32, 32)); }).kind(), ErrorKind::DegenerateHistogram);
}

TEST(BreastForeground, HolesAreFilled) {
  GrayImage img(32, 32);
  for (int r = 4; r < 28; ++r)
    for (int c = 4; c < 28; ++c) img(r, c) = 150;
  for (int r = 12; r < 16; ++r)
    for (int c = 12; c < 16; ++c) img(r, c) = 0;
  EXPECT_EQ(count_true(breast_foreground(img)), 24u * 24u);
}

// --- End to end ---------------------------------------------------------------

TEST(Segment, CleanPhantomFollowsTheTrueBoundary) {
  for (int i = 0; i < 5; ++i) {
    const Phantom ph = generate(make_spec(Scenario::Clean, mix_seed(100, i)));
    const SegmentationResult r = segment(ph.image, ph.out1, ph.out2);
    EXPECT_LE(boundary_distance(r.boundary, ph.gt_boundary).mean, 1.5);
    EXPECT_FALSE(r.report.completion_applied());
    EXPECT_EQ(r.report.orientation, (Orientation{false, false}));
    EXPECT_EQ(r.report.start, r.boundary.nodes.front());
    EXPECT_EQ(r.report.end, r.boundary.nodes.back());
    EXPECT_EQ(r.report.path_nodes, r.boundary.nodes.size());
    EXPECT_GT(r.report.path_cost, 0.0);
  }
}

TEST(Segment, OneSidedTruncationIsCompleted) {
  for (auto sides : {TruncationSides::Start, TruncationSides::End}) {
    PhantomSpec spec = make_spec(Scenario::Clean, 17);
    spec.out2_truncation = 0.3;
    spec.truncation_sides = sides;
    const Phantom ph = generate(spec);
    const SegmentationResult r = segment(ph.image, ph.out1, ph.out2);
    EXPECT_TRUE(r.report.completion_applied());
    EXPECT_EQ(r.report.completed_left, sides == TruncationSides::Start);
    EXPECT_EQ(r.report.completed_bottom, sides == TruncationSides::End);
    EXPECT_TRUE(touches_first_column(r.boundary));
    EXPECT_TRUE(touches_last_row(r.boundary, 256));
  }
}

TEST(Segment, MasksPartitionTheImage) {
  const Phantom ph = generate(make_spec(Scenario::Cluttered, 5));
  const SegmentationResult r = segment(ph.image, ph.out1, ph.out2);
  const BinaryMask fg = breast_foreground(ph.image);
  for (std::size_t i = 0; i < r.breast_mask.size(); ++i) {
    ASSERT_FALSE(r.breast_mask.data()[i] && r.pectoral_mask.data()[i]);
    ASSERT_EQ(r.breast_mask.data()[i] != 0, fg.data()[i] && !r.pectoral_mask.data()[i]);
  }
  for (const Pixel p : r.boundary.nodes) EXPECT_TRUE(r.pectoral_mask[p]);
}

TEST(Segment, IsDeterministic) {
  const Phantom ph = generate(make_spec(Scenario::Truncated, 6));
  const SegmentationResult a = segment(ph.image, ph.out1, ph.out2);
  const SegmentationResult b = segment(ph.image, ph.out1, ph.out2);
  EXPECT_EQ(a.boundary, b.boundary);
  EXPECT_EQ(a.pectoral_mask, b.pectoral_mask);
  EXPECT_EQ(a.breast_mask, b.breast_mask);
  EXPECT_EQ(to_text(a.report), to_text(b.report));
}

TEST(Segment, FlippedInputsGiveFlippedMasks) {
  const Phantom ph = generate(make_spec(Scenario::Truncated, 9));
  const SegmentationResult base = segment(ph.image, ph.out1, ph.out2);
  for (bool h : {false, true})
    for (bool v : {false, true}) {
      const Orientation o{h, v};
      const SegmentationResult r =
          segment(apply_orientation(ph.image, o), apply_orientation(ph.out1, o), apply_orientation(ph.out2, o));
      EXPECT_EQ(r.report.orientation, o);
      EXPECT_EQ(r.pectoral_mask, apply_orientation(base.pectoral_mask, o));
      EXPECT_EQ(r.breast_mask, apply_orientation(base.breast_mask, o));
      ASSERT_EQ(r.boundary.nodes.size(), base.boundary.nodes.size());
      for (std::size_t i = 0; i < r.boundary.nodes.size(); ++i)
        EXPECT_EQ(r.boundary.nodes[i], apply_orientation(base.boundary.nodes[i], o, 256, 256));
    }
}

TEST(Segment, Out1FusionAlsoWorks) {
  const Phantom ph = generate(make_spec(Scenario::Clean, 12));
  PipelineConfig cfg;
  cfg.fusion_source = FusionSource::Out1;
  const SegmentationResult r = segment(ph.image, ph.out1, ph.out2, cfg);
  EXPECT_LE(boundary_distance(r.boundary, ph.gt_boundary).mean, 1.5);
}

TEST(Segment, ThresholdOverride) {
  const Phantom ph = generate(make_spec(Scenario::Clean, 12));
  PipelineConfig cfg;
  cfg.threshold_override = 0.5f;
  const SegmentationResult r = segment(ph.image, ph.out1, ph.out2, cfg);
  EXPECT_TRUE(r.report.threshold_overridden);
  EXPECT_EQ(r.report.threshold, 0.5f);
  EXPECT_NE(to_text(r.report).find("threshold.source=override"), std::string::npos);
  cfg.threshold_override = 1.5f;
  EXPECT_EQ(error_of([&] { segment(ph.image, ph.out1, ph.out2, cfg); }).kind(), ErrorKind::BadSpec);
}

TEST(Segment, ZeroOut2FailsAtThresholdStage) {
  const Phantom ph = generate(make_spec(Scenario::Clean, 1));
  const Error e = error_of([&] { segment(ph.image, ph.out1, EdgeProbMap(256, 256, 0.0f)); });
  EXPECT_EQ(e.kind(), ErrorKind::DegenerateHistogram);
  EXPECT_EQ(e.stage(), "threshold");
}

TEST(Segment, InputChecks) {
  const Phantom ph = generate(make_spec(Scenario::Clean, 1));
  Error e = error_of([&] { segment(ph.image, ph.out1, EdgeProbMap(255, 256)); });
  EXPECT_EQ(e.kind(), ErrorKind::Shape);
  EXPECT_EQ(e.stage(), "input");
  e = error_of([] { segment(GrayImage(8, 8), EdgeProbMap(8, 8), EdgeProbMap(8, 8)); });
  EXPECT_EQ(e.kind(), ErrorKind::Shape);
  e = error_of([&] { segment(GrayImage(256, 256, 50), ph.out1, ph.out2); });
  EXPECT_EQ(e.kind(), ErrorKind::AmbiguousOrientation);
  EXPECT_EQ(e.stage(), "orient");
}

TEST(Segment, ReportText) {
  const Phantom ph = generate(make_spec(Scenario::Clean, 3));
  const std::string text = to_text(segment(ph.image, ph.out1, ph.out2).report);
  for (const char* key : {"orientation.flip_horizontal=0", "threshold.source=otsu", "completion.applied=0",
                          "terminals.start=", "path.nodes=", "path.cost="})
    EXPECT_NE(text.find(key), std::string::npos) << key;
}
