#include <algorithm>
#include <random>
#include <set>

#include "attrition/dtree.hpp"
#include "attrition/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace attrition;
using fixtures::cat;
using fixtures::num;

namespace {

const std::vector<std::string> kAll{"City_deve", "relevent_experience", "enrolled_university"};

}  // namespace

TEST_CASE("entropy examples") {
  const std::vector<std::size_t> even{4, 4};
  const std::vector<std::size_t> pure{0, 5};
  const std::vector<std::size_t> three_two{3, 2};
  CHECK(entropy(even) == 1.0);
  CHECK(entropy(pure) == 0.0);
  CHECK(entropy(three_two) == doctest::Approx(0.9709505944546686).epsilon(1e-12));
  CHECK(entropy(ClassCounts{3, 2}) == entropy(three_two));
  CHECK_THROWS(entropy(std::vector<std::size_t>{0, 0}));
}

TEST_CASE("entropy properties over random count vectors") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 1 + gen() % 4;
    std::vector<std::size_t> counts(k);
    for (auto& c : counts) c = gen() % 20;
    counts[0] += 1;
    const double h = entropy(counts);
    CHECK(h >= 0.0);
    CHECK(h <= std::log2(static_cast<double>(k)) + 1e-12);
    CHECK(h == doctest::Approx(fixtures::entropy_oracle(counts)).epsilon(1e-12));
    auto shuffled = counts;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(entropy(shuffled) == h);
  }
}

TEST_CASE("worked example: conditional entropies and gains") {
  const auto x = fixtures::sample_features();
  const auto y = fixtures::sample_target();

  const auto enrolled = information_gain(x, "enrolled_university", y);
  CHECK(enrolled.parent_entropy == 1.0);
  CHECK(enrolled.conditional_entropy == doctest::Approx(0.8568441215341679).epsilon(1e-12));
  CHECK(enrolled.information_gain == doctest::Approx(1.0 - 0.8568441215341679).epsilon(1e-12));
  REQUIRE(enrolled.partitions.size() == 3);

  const auto experience = information_gain(x, "relevent_experience", y);
  const auto city = information_gain(x, "City_deve", y);
  CHECK(experience.conditional_entropy == doctest::Approx(0.9512050593046015).epsilon(1e-12));
  CHECK(std::abs(experience.conditional_entropy - city.conditional_entropy) <= 1e-12);
  CHECK(std::abs(experience.information_gain - city.information_gain) <= 1e-12);
  CHECK(city.kind == SplitKind::NumericThreshold);
  CHECK(city.threshold == 0.81);
  CHECK(city.partitions[0].counts == ClassCounts{1, 2});  // >= 0.81: rows 1, 7, 8
  CHECK(city.partitions[1].counts == ClassCounts{3, 2});  // <  0.81
}

TEST_CASE("numeric threshold") {
  const std::vector<double> city{0.92, 0.776, 0.624, 0.789, 0.767, 0.764, 0.92, 0.92};
  CHECK(numeric_threshold(city) == 0.81);
  CHECK(numeric_threshold(std::vector<double>{0, 1}) == 0.5);
  CHECK(numeric_threshold(std::vector<double>{3, 3}) == 3.0);
}

TEST_CASE("constant and identifying columns") {
  const Table x({num("k", {1, 1, 1, 1}), cat("id", {"a", "b", "c", "d"})});
  const Labels y{0, 1, 1, 0};
  const auto constant = information_gain(x, "k", y);
  CHECK(constant.degenerate);
  CHECK(constant.information_gain == 0.0);
  CHECK(conditional_entropy(x, "id", y).conditional_entropy == 0.0);
}

TEST_CASE("best split picks enrolled_university and reports the other tie") {
  const auto x = fixtures::sample_features();
  const auto y = fixtures::sample_target();
  const auto all = best_split(x, kAll, y, TiePolicy::FirstInSchemaOrder);
  REQUIRE(all);
  CHECK(all->best.column == "enrolled_university");
  CHECK(all->tied.size() == 1);

  const std::vector<std::string> pair{"relevent_experience", "City_deve"};
  const auto tie = best_split(x, pair, y, TiePolicy::FirstInSchemaOrder);
  REQUIRE(tie);
  CHECK(tie->best.column == "relevent_experience");
  REQUIRE(tie->tied.size() == 2);

  const std::vector<std::string> single{"City_deve"};
  CHECK(best_split(x, single, y, TiePolicy::FirstInSchemaOrder)->best.column == "City_deve");

  Rng rng(1);
  std::set<std::string> seen;
  for (int i = 0; i < 40; ++i) seen.insert(best_split(x, pair, y, TiePolicy::Random, &rng)->best.column);
  CHECK(seen.size() == 2);

  CHECK_THROWS(best_split(x, std::vector<std::string>{}, y, TiePolicy::FirstInSchemaOrder));
}

TEST_CASE("best split signals stop when nothing gains") {
  const Table x({num("k", {1, 1, 1})});
  const Labels y{0, 1, 0};
  const std::vector<std::string> names{"k"};
  CHECK_FALSE(best_split(x, names, y, TiePolicy::FirstInSchemaOrder).has_value());
}

TEST_CASE("worked example tree") {
  const auto x = fixtures::sample_features();
  const auto y = fixtures::sample_target();
  const auto tree = build_tree(x, y);
  CHECK(tree.root().kind == TreeNode::Kind::Categorical);
  CHECK(tree.features()[tree.root().feature].name == "enrolled_university");

  std::vector<Cell> part_time{0.764, std::string("Has relevent experience"),
                              std::string("Part time course")};
  CHECK(tree.predict(part_time).label == 1);
  CHECK(tree.predict(x, 2).label == 0);

  // Rows 1, 7 and 8 are identical with labels 1, 0, 1; everything else is learnt.
  const auto predicted = tree.predict_all(x);
  for (std::size_t r : {1, 2, 3, 4, 5}) CHECK(predicted[r] == y[r]);

  const auto restored = DecisionTree::from_json(tree.to_json());
  CHECK(restored.to_json() == tree.to_json());
  CHECK(restored.predict_all(x) == predicted);
}

TEST_CASE("tree stopping rules") {
  const auto x = fixtures::sample_features();
  const auto y = fixtures::sample_target();

  const auto pure = build_tree(x, Labels(8, 1));
  CHECK(pure.leaf_count() == 1);
  CHECK(pure.root().label == 1);

  TreeParams stump;
  stump.max_depth = 0;
  const auto root_only = build_tree(x, y, stump);
  CHECK(root_only.leaf_count() == 1);
  CHECK(root_only.root().label == 0);  // 4 vs 4 tie goes to class 0

  TreeParams big_leaf;
  big_leaf.min_samples_leaf = 9;
  CHECK(build_tree(x, y, big_leaf).leaf_count() == 1);

  CHECK_THROWS(build_tree(x.select_rows(std::vector<std::size_t>{}), Labels{}));
}

TEST_CASE("categorical columns are tested at most once per path") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 50; ++t) {
    const auto c = fixtures::random_case(gen, 4, 12, 3);
    const auto tree = build_tree(c.features, c.target);
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> stack{{0, {}}};
    while (!stack.empty()) {
      auto [index, used] = stack.back();
      stack.pop_back();
      const auto& node = tree.nodes()[index];
      if (node.kind == TreeNode::Kind::Categorical) {
        CHECK(std::find(used.begin(), used.end(), node.feature) == used.end());
        used.push_back(node.feature);
        for (const auto& [label, child] : node.branches) stack.emplace_back(child, used);
      } else if (node.kind == TreeNode::Kind::Numeric) {
        stack.emplace_back(node.high, used);
        stack.emplace_back(node.low, used);
      }
    }
  }
}

TEST_CASE("conflict-consistent data is fitted exactly") {
  const auto table = fixtures::synthetic_hr(150, 9);
  const auto split = split_columns(table.without_identifiers());
  const auto tree = build_tree(split.features, split.target);
  CHECK(tree.predict_all(split.features) == split.target);
}

TEST_CASE("unseen category follows the heaviest child and missing values are rejected") {
  const Table x({cat("c", {"a", "a", "a", "b"})});
  const Labels y{1, 1, 0, 0};
  const auto tree = build_tree(x, y);
  const std::vector<Cell> unseen{std::string("zzz")};
  CHECK(tree.predict(unseen).label == tree.predict(std::vector<Cell>{std::string("a")}).label);
  CHECK_THROWS(tree.predict(std::vector<Cell>{std::monostate{}}));
}

TEST_CASE("identical params and seed give identical trees") {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 20; ++t) {
    const auto c = fixtures::random_case(gen, 5, 15, 3);
    TreeParams params;
    params.feature_subset_size = 1;
    params.tie_policy = TiePolicy::Random;
    params.seed = gen();
    CHECK(build_tree(c.features, c.target, params) == build_tree(c.features, c.target, params));
  }
}
