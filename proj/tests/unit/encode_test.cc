#include "featureless/encode.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "featureless/common.h"

namespace featureless {
namespace {

TEST(Bow, CountsAndNormalization) {
  const std::vector<int> a{0, 2, 2};
  EXPECT_EQ(bow_aggregate(a, 3, false).counts, (std::vector<double>{1, 0, 2}));
  const auto n = bow_aggregate(a, 3, true, "v");
  EXPECT_TRUE(n.normalized);
  EXPECT_EQ(n.video_id, "v");
  EXPECT_DOUBLE_EQ(n.counts[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(n.counts[2], 2.0 / 3.0);
  EXPECT_EQ(bow_aggregate(std::vector<int>(7, 1), 4, false).counts,
            (std::vector<double>{0, 7, 0, 0}));
}

TEST(Bow, Errors) {
  EXPECT_THROW(bow_aggregate(std::vector<int>{3}, 3, false), Error);
  EXPECT_THROW(bow_aggregate(std::vector<int>{-1}, 3, false), Error);
  EXPECT_THROW(bow_aggregate(std::vector<int>{}, 3, false), Error);
}

TEST(Bow, CountIdentityAndOrderInvariance) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 20;
    std::vector<int> a(1 + trial * 7);
    std::uniform_int_distribution<int> u(0, k - 1);
    for (int& v : a) v = u(rng);
    const auto h = bow_aggregate(a, k, false);
    EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), 0.0),
              static_cast<double>(a.size()));
    std::shuffle(a.begin(), a.end(), rng);
    EXPECT_EQ(bow_aggregate(a, k, false).counts, h.counts);
    const auto n = bow_aggregate(a, k, true);
    EXPECT_NEAR(std::accumulate(n.counts.begin(), n.counts.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(Concat, ExampleSymmetryAndErrors) {
  BowHistogram a{"v", {1.0, 0.0}, true};
  BowHistogram b{"v", {0.0, 1.0}, true};
  EXPECT_EQ(concat_representations(a, b), (std::vector<double>{1, 0, 0, 1}));
  BowHistogram c{"v", {0.25, 0.25, 0.5}, true};
  auto ac = concat_representations(a, c);
  auto ca = concat_representations(c, a);
  std::sort(ac.begin(), ac.end());
  std::sort(ca.begin(), ca.end());
  EXPECT_EQ(ac, ca);
  BowHistogram other{"w", {1.0}, true};
  EXPECT_THROW(concat_representations(a, other), Error);
  BowHistogram raw{"v", {3.0, 1.0}, false};
  EXPECT_THROW(concat_representations(a, raw), Error);
}

TEST(HistogramRows, LosslessRoundTrip) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<HistogramRow> rows;
  for (int i = 0; i < 10; ++i) {
    HistogramRow r{"vid" + std::to_string(i), i % 3, {}};
    for (int j = 0; j < 6; ++j) r.values.push_back(u(rng) / 3.0);
    rows.push_back(r);
  }
  std::stringstream ss;
  write_histogram_rows(ss, rows);
  const auto back = read_histogram_rows(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].video_id, rows[i].video_id);
    EXPECT_EQ(back[i].label, rows[i].label);
    EXPECT_EQ(back[i].values, rows[i].values);
  }
}

TEST(HistogramRows, RejectsBadInput) {
  std::istringstream missing("onlyid\n");
  EXPECT_THROW(read_histogram_rows(missing), Error);
  std::istringstream bad_value("v,0,0.5,abc\n");
  EXPECT_THROW(read_histogram_rows(bad_value), Error);
  std::istringstream bad_label("v,x,0.5\n");
  EXPECT_THROW(read_histogram_rows(bad_label), Error);
  std::istringstream ragged("a,0,1,2\nb,1,1\n");
  EXPECT_THROW(read_histogram_rows(ragged), Error);
}

}  // namespace
}  // namespace featureless
