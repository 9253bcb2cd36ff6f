#include "featureless/config.h"

#include <gtest/gtest.h>

#include <fstream>

#include "test_util.h"

namespace featureless {
namespace {

TEST(Config, DefaultsAreFullScale) {
  const PipelineConfig c;
  EXPECT_EQ(c.patch_size, 24);
  EXPECT_EQ(c.effective_stride(), 24);
  EXPECT_EQ(c.sample_dim(), 576);
  EXPECT_EQ(c.codebook_size, 100);
  EXPECT_EQ(c.stages, 1000);
  EXPECT_EQ(c.max_depth, 15);
  EXPECT_DOUBLE_EQ(c.pool_fraction, 0.1);
  EXPECT_DOUBLE_EQ(c.alpha, 0.97);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, TextRoundTrip) {
  PipelineConfig c;
  c.alpha = 0.123456789012345;
  c.descriptor = DescriptorKind::kHof3d;
  c.temporal_depth = 9;
  c.codebookless = true;
  c.seed = 18446744073709551615ull;
  c.trim_mass = 1.0 / 3.0;
  EXPECT_EQ(parse_config(c.to_text()), c);
}

TEST(Config, CommentsWhitespaceAndOverrides) {
  const PipelineConfig c = parse_config(
      "# desk scale\n"
      "  stages = 40   # fewer\n"
      "\n"
      "codebook_size=20\n"
      "stages=50\n");
  EXPECT_EQ(c.stages, 50);
  EXPECT_EQ(c.codebook_size, 20);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("nonsense\n"), Error);
  EXPECT_THROW(parse_config("no_such_key=1\n"), Error);
  EXPECT_THROW(parse_config("stages=ten\n"), Error);
  EXPECT_THROW(parse_config("codebookless=maybe\n"), Error);
  EXPECT_THROW(parse_config("descriptor=sift\n"), Error);
  try {
    parse_config("descriptor=hof3d\ntemporal_depth=1\n").validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("temporal_depth=9"), std::string::npos);
  }
  PipelineConfig bad;
  bad.pool_fraction = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.alpha = 1.5;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.codebook_size = 1;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Config, LoadFromFile) {
  testing::TempDir dir("config");
  {
    std::ofstream out(dir.path() / "c.cfg");
    out << "stages=7\nalpha=0.5\n";
  }
  const PipelineConfig c = load_config(dir.path() / "c.cfg");
  EXPECT_EQ(c.stages, 7);
  EXPECT_DOUBLE_EQ(c.alpha, 0.5);
  EXPECT_THROW(load_config(dir.path() / "missing.cfg"), Error);
}

}  // namespace
}  // namespace featureless
