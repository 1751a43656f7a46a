#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dsel/metrics.hpp"

namespace dsel {
namespace {

MetricsRow sample(std::uint64_t step, std::string phase) {
  MetricsRow r;
  r.step = step;
  r.phase = std::move(phase);
  r.heldout_specific_loss = 1.0 / 3.0;
  r.heldout_generic_loss = 2.5e-7;
  r.mean_target_weight = 0.1 + 0.2;
  r.weight_entropy = 4.0;
  return r;
}

TEST(Metrics, HeaderHasNineColumns) {
  EXPECT_EQ(metrics_columns().size(), 9u);
  EXPECT_EQ(metrics_header(),
            "step,phase,heldout_specific_loss,heldout_generic_loss,mean_target_weight,"
            "mean_distractor_weight,weight_entropy,sar,gar");
}

TEST(Metrics, FormatParseRoundTripIsExact) {
  const std::vector<MetricsRow> rows{sample(0, "soba:pretrain"), sample(10, "soba:finetune")};
  const MetricsTable t = parse_metrics(format_metrics(rows));
  EXPECT_EQ(t.rows, rows);
  ASSERT_EQ(t.raw.size(), 2u);
  EXPECT_EQ(t.raw[0][4], format_real(0.1 + 0.2));
  EXPECT_EQ(t.raw[0][5], "");
}

TEST(Metrics, EmptyBodyIsHeaderOnly) {
  EXPECT_EQ(format_metrics({}), metrics_header() + "\n");
  EXPECT_TRUE(parse_metrics(format_metrics({})).rows.empty());
}

TEST(Metrics, FormatRealIsShortestRoundTrip) {
  EXPECT_EQ(format_real(0.5), "0.5");
  for (double v : {1.0 / 3.0, 1e-300, 123456789.125, -2.0})
    EXPECT_EQ(std::stod(format_real(v)), v);
  EXPECT_EQ(format_real(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Metrics, MalformedRowIsNamed) {
  const std::string text = metrics_header() + "\n" + format_row(sample(1, "a:pretrain")) +
                           "\n2,a:pretrain,x,1,,,,,\n";
  try {
    parse_metrics(text);
    FAIL() << "expected MalformedRow";
  } catch (const MalformedRow& e) {
    EXPECT_EQ(e.row(), 3u);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
}

TEST(Metrics, WrongColumnCountAndHeader) {
  EXPECT_THROW(parse_metrics(metrics_header() + "\n1,a:pretrain,1,2\n"), MalformedRow);
  EXPECT_THROW(parse_metrics("step,phase\n"), MalformedRow);
  EXPECT_THROW(parse_metrics(""), MalformedRow);
}

TEST(Metrics, ArmOfPhase) {
  EXPECT_EQ(arm_of("soba:finetune"), "soba");
  EXPECT_EQ(arm_of("mixing_0.1:pretrain"), "mixing_0.1");
  EXPECT_EQ(arm_of("plain"), "plain");
}

}  // namespace
}  // namespace dsel
