#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "oracles.hpp"
#include "pectoral/morphology.hpp"
#include "pectoral/phantom.hpp"

using namespace pectoral;

namespace {

bool bit_identical(const EdgeProbMap& a, const EdgeProbMap& b) {
  return a.same_shape(b) && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

BinaryMask thresholded_out2(const Phantom& ph) {
  return longest_component(binarize(ph.out2, otsu_threshold(ph.out2)));
}

}  // namespace

TEST(PortableRng, SequenceIsFixed) {
  // The standard pins the 10000th output of a default-seeded mt19937_64.
  PortableRng rng(5489u);
  std::mt19937_64 reference;
  reference.discard(9999);
  EXPECT_EQ(reference(), 9981545732273789042ull);
  double lo = 1, hi = 0;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  PortableRng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(PortableRng, UniformIntCoversItsRange) {
  PortableRng rng(3);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 1000; ++i) {
    const int v = rng.uniform_int(10, 14);
    ASSERT_GE(v, 10);
    ASSERT_LE(v, 14);
    ++seen[v - 10];
  }
  for (int s : seen) EXPECT_GT(s, 100);
}

TEST(MixSeed, DistinctIndicesGiveDistinctSeeds) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.push_back(mix_seed(7, i));
  std::sort(seeds.begin(), seeds.end());
  EXPECT_EQ(std::adjacent_find(seeds.begin(), seeds.end()), seeds.end());
  EXPECT_NE(mix_seed(7, 0), mix_seed(8, 0));
}

TEST(Scenario, NamesRoundTrip) {
  for (auto s : {Scenario::Clean, Scenario::Truncated, Scenario::LowContrast, Scenario::Cluttered})
    EXPECT_EQ(parse_scenario(to_string(s)), s);
  EXPECT_FALSE(parse_scenario("noisy").has_value());
  EXPECT_EQ(to_string(Scenario::LowContrast), "low-contrast");
}

TEST(Generate, SameSeedIsBitIdentical) {
  for (auto scenario : {Scenario::Clean, Scenario::Cluttered}) {
    const PhantomSpec spec = make_spec(scenario, 99);
    const Phantom a = generate(spec), b = generate(spec);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.gt_boundary, b.gt_boundary);
    EXPECT_EQ(a.gt_breast, b.gt_breast);
    EXPECT_TRUE(bit_identical(a.out1, b.out1));
    EXPECT_TRUE(bit_identical(a.out2, b.out2));
  }
  EXPECT_NE(generate(make_spec(Scenario::Clean, 1)).image, generate(make_spec(Scenario::Clean, 2)).image);
}

TEST(Generate, BoundaryIsMonotoneAndSpansBothBorders) {
  for (int i = 0; i < 20; ++i) {
    const Phantom ph = generate(make_spec(Scenario::Clean, mix_seed(5, i)));
    const auto& nodes = ph.gt_boundary.nodes;
    ASSERT_GE(nodes.size(), 2u);
    EXPECT_EQ(nodes.front().col, 0);
    EXPECT_EQ(nodes.back().row, 255);
    for (std::size_t k = 1; k < nodes.size(); ++k) {
      EXPECT_TRUE(are_8_neighbors(nodes[k - 1], nodes[k]));
      EXPECT_GE(nodes[k].row, nodes[k - 1].row);
      EXPECT_GE(nodes[k].col, nodes[k - 1].col);
    }
  }
}

TEST(Generate, CleanOut1StaysNearTheBoundary) {
  PhantomSpec spec = make_spec(Scenario::Clean, 11);
  spec.clutter_density = 0;
  spec.out2_truncation = 0;
  const Phantom ph = generate(spec);
  for (int r = 0; r < spec.size; ++r)
    for (int c = 0; c < spec.size; ++c) {
      if (ph.out1(r, c) == 0.0f) continue;
      double nearest = 1e9;
      for (const Pixel p : ph.gt_boundary.nodes) nearest = std::min(nearest, std::hypot(r - p.row, c - p.col));
      EXPECT_LE(nearest, 2.0) << r << "," << c;
    }
}

TEST(Generate, MapsAreProbabilities) {
  const Phantom ph = generate(make_spec(Scenario::Cluttered, 4));
  for (float v : ph.out1.data()) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
  for (float v : ph.out2.data()) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
}

TEST(Generate, TruncationLeavesTheBandShortOnTheCutSide) {
  for (int i = 0; i < 5; ++i) {
    PhantomSpec spec = make_spec(Scenario::Clean, mix_seed(13, i));
    spec.out2_truncation = 0.3;
    spec.truncation_sides = TruncationSides::Start;
    BorderContact contact = is_disconnected(thresholded_out2(generate(spec)));
    EXPECT_TRUE(contact.left_short);
    EXPECT_FALSE(contact.right_short);
    spec.truncation_sides = TruncationSides::End;
    contact = is_disconnected(thresholded_out2(generate(spec)));
    EXPECT_FALSE(contact.left_short);
    EXPECT_TRUE(contact.right_short);
    spec.truncation_sides = TruncationSides::Both;
    contact = is_disconnected(thresholded_out2(generate(spec)));
    EXPECT_TRUE(contact.left_short);
    EXPECT_TRUE(contact.right_short);
  }
}

TEST(Generate, UntruncatedBandReachesBothBorders) {
  const BorderContact contact = is_disconnected(thresholded_out2(generate(make_spec(Scenario::Clean, 8))));
  EXPECT_FALSE(contact.left_short);
  EXPECT_FALSE(contact.right_short);
}

TEST(Generate, GroundTruthMasksAreConsistent) {
  for (int i = 0; i < 5; ++i) {
    const Phantom ph = generate(make_spec(static_cast<Scenario>(i % 4), mix_seed(21, i)));
    const BinaryMask pectoral = oracle::corner_region(ph.gt_boundary.nodes, 256, 256);
    EXPECT_EQ(pectoral, ph.gt_pectoral);
    for (std::size_t k = 0; k < ph.gt_breast.size(); ++k) {
      ASSERT_EQ(ph.gt_breast.data()[k] != 0, ph.gt_foreground.data()[k] && !pectoral.data()[k]);
      // Background is flat zero; tissue is clearly brighter.
      if (ph.gt_foreground.data()[k]) {
        ASSERT_GE(ph.image.data()[k], 60);
      } else {
        ASSERT_EQ(ph.image.data()[k], 0);
      }
    }
  }
}

TEST(Generate, InvalidSpecsAreRejected) {
  PhantomSpec spec;
  spec.boundary.bend = 300;  // folds back on itself
  EXPECT_THROW(generate(spec), Error);
  try {
    generate(spec);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BadSpec);
  }
  PhantomSpec small;
  small.size = 8;
  EXPECT_THROW(generate(small), Error);
  PhantomSpec dim;
  dim.contrast = {50, 40, 200};
  EXPECT_THROW(generate(dim), Error);
  PhantomSpec cut;
  cut.out2_truncation = 0.5;
  EXPECT_THROW(generate(cut), Error);
}

TEST(Scenarios, TruncatedCorpusHasEnoughTruncation) {
  for (int i = 0; i < 50; ++i) {
    const PhantomSpec spec = make_spec(Scenario::Truncated, mix_seed(7, i));
    EXPECT_GE(spec.out2_truncation, 0.15);
    EXPECT_LE(spec.out2_truncation, 0.35);
  }
}

TEST(Scenarios, LowContrastKeepsIntensitiesClose) {
  const PhantomSpec spec = make_spec(Scenario::LowContrast, 3);
  EXPECT_GE(spec.contrast.pectoral - spec.contrast.tissue, 20);
  EXPECT_LE(spec.contrast.pectoral - spec.contrast.tissue, 30);
}

TEST(BoundaryDistance, IdentityIsZero) {
  const Phantom ph = generate(make_spec(Scenario::Clean, 2));
  const BoundaryDistance d = boundary_distance(ph.gt_boundary, ph.gt_boundary);
  EXPECT_EQ(d.mean, 0.0);
  EXPECT_EQ(d.max, 0.0);
}

TEST(BoundaryDistance, OneColumnShift) {
  PixelPath gt, est;
  for (int r = 0; r < 50; ++r) {
    gt.nodes.push_back({r, 10});
    est.nodes.push_back({r, 11});
  }
  const BoundaryDistance d = boundary_distance(est, gt);
  EXPECT_DOUBLE_EQ(d.mean, 1.0);
  EXPECT_DOUBLE_EQ(d.max, 1.0);
}

TEST(BoundaryDistance, MatchesAllPairsOracle) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> coord(0, 99);
  for (int trial = 0; trial < 50; ++trial) {
    PixelPath a, b;
    for (int i = 0; i < 40; ++i) a.nodes.push_back({coord(rng), coord(rng)});
    for (int i = 0; i < 60; ++i) b.nodes.push_back({coord(rng), coord(rng)});
    const BoundaryDistance d = boundary_distance(a, b);
    const auto [mean, worst] = oracle::all_pairs_distance(a.nodes, b.nodes);
    EXPECT_NEAR(d.mean, mean, 1e-12);
    EXPECT_EQ(d.max, worst);
  }
}
