#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace crbm;

namespace {

std::vector<double> axis(const GridSpec& g, const std::string& name) {
  for (const auto& a : g.axes)
    if (a.name == name) return a.values;
  return {};
}

}  // namespace

TEST(Defaults, TwinCountAndSplit) {
  EXPECT_EQ(defaults::kTwinCount, 100);
  auto r = defaults::split_ratios();
  EXPECT_EQ(r.train, 0.5);
  EXPECT_EQ(r.val, 0.2);
  EXPECT_EQ(r.test, 0.3);
}

TEST(Defaults, ThreeMonthGrid) {
  auto g = defaults::grid(ModelKind::three_month);
  EXPECT_EQ(axis(g, "batch_size"), (std::vector<double>{400, 600, 800}));
  EXPECT_EQ(axis(g, "learning_rate"), (std::vector<double>{0.002, 0.004, 0.008, 0.012, 0.016}));
  EXPECT_EQ(axis(g, "beta_std"), (std::vector<double>{0.15, 0.30, 0.45}));
  EXPECT_EQ(axis(g, "adversary_weight"), (std::vector<double>{0, 0.15, 0.30}));
  EXPECT_EQ(axis(g, "hidden_units"), (std::vector<double>{65, 130, 195}));
  EXPECT_EQ(g.size(), 405u);
  auto c = defaults::selected_config(ModelKind::three_month);
  EXPECT_EQ(c.batch_size, 400);
  EXPECT_EQ(c.epochs, 1000);
  EXPECT_EQ(c.learning_rate, 0.016);
  EXPECT_EQ(c.beta_std, 0.15);
  EXPECT_EQ(c.weight_penalty, 0.001);
  EXPECT_EQ(c.mc_steps, 25);
  EXPECT_EQ(c.adversary_weight, 0.30);
  EXPECT_EQ(c.hidden_units, 65);
}

TEST(Defaults, SixMonthGrid) {
  auto g = defaults::grid(ModelKind::six_month);
  EXPECT_EQ(axis(g, "batch_size"), (std::vector<double>{100, 200, 400}));
  EXPECT_EQ(axis(g, "learning_rate"), (std::vector<double>{0.004, 0.008, 0.012, 0.016, 0.024, 0.032}));
  EXPECT_EQ(axis(g, "beta_std"), (std::vector<double>{0.15, 0.30, 0.45}));
  EXPECT_EQ(axis(g, "adversary_weight"), (std::vector<double>{0, 0.15, 0.30}));
  EXPECT_EQ(axis(g, "hidden_units"), (std::vector<double>{32, 64}));
  EXPECT_EQ(g.size(), 324u);
  auto c = defaults::selected_config(ModelKind::six_month);
  EXPECT_EQ(c.batch_size, 100);
  EXPECT_EQ(c.epochs, 1000);
  EXPECT_EQ(c.learning_rate, 0.032);
  EXPECT_EQ(c.beta_std, 0.15);
  EXPECT_EQ(c.weight_penalty, 0.001);
  EXPECT_EQ(c.mc_steps, 25);
  EXPECT_EQ(c.adversary_weight, 0.0);
  EXPECT_EQ(c.hidden_units, 32);
}

TEST(Defaults, SelectedConfigsLieOnTheirGrids) {
  for (auto k : {ModelKind::three_month, ModelKind::six_month}) {
    auto g = defaults::grid(k);
    auto sel = defaults::selected_config(k);
    bool found = false;
    for (std::size_t i = 0; i < g.size() && !found; ++i) {
      auto c = g.config(defaults::base_config(), i);
      found = c.batch_size == sel.batch_size && c.learning_rate == sel.learning_rate && c.beta_std == sel.beta_std &&
              c.adversary_weight == sel.adversary_weight && c.hidden_units == sel.hidden_units;
    }
    EXPECT_TRUE(found) << to_string(k);
  }
}

TEST(Defaults, ImputerSettings) {
  auto c = imputer_config();
  EXPECT_EQ(c.batch_size, 500);
  EXPECT_EQ(c.epochs, 1000);
  EXPECT_EQ(c.learning_rate, 0.02);
  EXPECT_EQ(c.beta_std, 0.15);
  EXPECT_EQ(c.weight_penalty, 0.001);
  EXPECT_EQ(c.mc_steps, 25);
  EXPECT_EQ(c.adversary_weight, 0.30);
  EXPECT_EQ(c.hidden_units, 32);
}

TEST(Defaults, MetricCountsAndBonferroni) {
  EXPECT_EQ(defaults::selection_metric_names(ModelKind::three_month).size(), 7u);
  EXPECT_EQ(defaults::selection_metric_names(ModelKind::six_month).size(), 9u);
  EXPECT_EQ(bonferroni_threshold(defaults::kCalibrationVariables, defaults::kCalibrationVisits), 0.05 / 126);
  EXPECT_EQ(defaults::kCalibrationVariables * defaults::kCalibrationVisits, 126u);
}
