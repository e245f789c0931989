#include <edisco/conformal.hpp>
#include <edisco/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMax = std::numeric_limits<double>::max();

// Random dataset with exchangeable (null) columns.
edisco::expression_dataset random_null_dataset(std::uint64_t seed,
                                               std::size_t genes,
                                               std::size_t n1, std::size_t n2) {
  edisco::splitmix64 rng(seed);
  std::vector<std::string> ids(genes);
  std::vector<double> values(genes * (n1 + n2));
  for (std::size_t g = 0; g < genes; ++g) ids[g] = "g" + std::to_string(g + 1);
  for (auto& v : values) v = edisco::normal_inverse_cdf(rng.uniform01());
  std::vector<int> groups(n1, 1);
  groups.insert(groups.end(), n2, 2);
  return edisco::expression_dataset::create(std::move(ids), std::move(values),
                                            std::move(groups));
}

}  // namespace

TEST(WelchT, FrozenValues) {
  const std::vector<double> a{0.0, 2.0}, b{3.0, 5.0};
  EXPECT_DOUBLE_EQ(edisco::welch_t(a, b), 3.0 / std::sqrt(2.0));
  const std::vector<double> c{1.0, 3.0}, d{2.0, 6.0};
  EXPECT_DOUBLE_EQ(edisco::welch_t(c, d), 2.0 / std::sqrt(5.0));
  const std::vector<double> same{1.0, 3.0};
  EXPECT_DOUBLE_EQ(edisco::welch_t(same, same), 0.0);
}

TEST(WelchT, AntisymmetricUnderGroupSwap) {
  edisco::splitmix64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(2 + rng.next_below(6)), b(2 + rng.next_below(6));
    for (auto& v : a) v = rng.uniform01() * 10.0;
    for (auto& v : b) v = rng.uniform01() * 10.0;
    const double t = edisco::welch_t(a, b);
    EXPECT_DOUBLE_EQ(edisco::welch_t(b, a), -t);
    EXPECT_DOUBLE_EQ(edisco::nonconformity_score(t, 10.0),
                     edisco::nonconformity_score(-t, 10.0));
  }
}

TEST(WelchT, Validation) {
  const std::vector<double> one{1.0}, two{1.0, 2.0};
  EXPECT_THROW(edisco::welch_t(one, two), std::domain_error);
  EXPECT_THROW(edisco::welch_t(two, one), std::domain_error);
  const std::vector<double> flat{2.0, 2.0, 2.0};
  EXPECT_THROW(edisco::welch_t(flat, flat), edisco::score_error);
}

TEST(NonconformityScore, FrozenValuesAndValidation) {
  EXPECT_DOUBLE_EQ(edisco::nonconformity_score(-2.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(edisco::nonconformity_score(2.0, 10.0), 1024.0);
  EXPECT_DOUBLE_EQ(edisco::nonconformity_score(0.0, 10.0), 0.0);
  EXPECT_THROW(edisco::nonconformity_score(1.0, 0.0), std::domain_error);
}

TEST(ConformalE, FrozenScoreExamples) {
  const std::vector<double> nulls{1.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(edisco::conformal_e_from_scores(2.0, nulls), 2.0);
  EXPECT_DOUBLE_EQ(edisco::simplified_e_from_scores(2.0, nulls), 3.0);

  const std::vector<double> zeros(3, 0.0);
  EXPECT_DOUBLE_EQ(edisco::conformal_e_from_scores(0.0, zeros), 1.0);  // 0/0
  EXPECT_DOUBLE_EQ(edisco::conformal_e_from_scores(5.0, zeros), 4.0);  // B + 1
  EXPECT_DOUBLE_EQ(edisco::simplified_e_from_scores(0.0, zeros), 1.0);
  EXPECT_EQ(edisco::simplified_e_from_scores(5.0, zeros), kInf);
  EXPECT_DOUBLE_EQ(edisco::simplified_e_from_scores(0.0, nulls), 0.0);
}

TEST(ConformalE, ConstantPanelsScoreOne) {
  for (double c : {1.0, 1e-300, 1e300, kMax}) {
    const std::vector<double> nulls(5, c);
    EXPECT_DOUBLE_EQ(edisco::conformal_e_from_scores(c, nulls), 1.0) << c;
  }
}

TEST(ConformalE, InfiniteScoresSplitTheBudget) {
  const std::vector<double> nulls{kInf, 1.0, 1.0};
  // Two infinities among four terms: each gets (B + 1) / 2.
  EXPECT_DOUBLE_EQ(edisco::conformal_e_from_scores(kInf, nulls), 2.0);
  // A finite observation against an infinite null sum vanishes.
  EXPECT_DOUBLE_EQ(edisco::conformal_e_from_scores(1.0, nulls), 0.0);
}

TEST(ConformalE, StaysInsideTheDeterministicRange) {
  edisco::splitmix64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t B = 1 + rng.next_below(20);
    std::vector<double> nulls(B);
    for (auto& v : nulls) v = rng.uniform01() < 0.1 ? 0.0 : rng.uniform01() * 5.0;
    const double observed = rng.uniform01() < 0.1 ? 0.0 : rng.uniform01() * 5.0;
    const double e = edisco::conformal_e_from_scores(observed, nulls);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, static_cast<double>(B) + 1.0);
  }
}

TEST(ConformalE, Validation) {
  EXPECT_THROW(edisco::conformal_e_from_scores(1.0, {}), std::invalid_argument);
  const std::vector<double> nulls{1.0};
  EXPECT_THROW(edisco::conformal_e_from_scores(-1.0, nulls), std::domain_error);
  const std::vector<double> bad{-2.0};
  EXPECT_THROW(edisco::conformal_e_from_scores(1.0, bad), std::domain_error);
}

TEST(ConformalP, FrozenCounts) {
  EXPECT_DOUBLE_EQ(edisco::conformal_p_from_count(0, 4), 0.2);
  EXPECT_DOUBLE_EQ(edisco::conformal_p_from_count(3, 4), 0.8);
  EXPECT_DOUBLE_EQ(edisco::conformal_p_from_count(4, 4), 1.0);
  EXPECT_DOUBLE_EQ(edisco::st_p_from_count(0, 4), 0.0);
  EXPECT_DOUBLE_EQ(edisco::st_p_from_count(3, 4), 0.75);
  EXPECT_DOUBLE_EQ(edisco::st_p_from_count(4, 4), 1.0);
}

TEST(ScorePanel, ObservedColumnMatchesDirectWelch) {
  const auto data = random_null_dataset(5, 20, 4, 5);
  const edisco::permutation_config cfg{.permutations = 50, .seed = 2};
  const auto panel = edisco::compute_score_panel(data, cfg);
  ASSERT_EQ(panel.genes, 20u);
  ASSERT_EQ(panel.permutations, 50u);
  for (std::size_t g = 0; g < panel.genes; ++g) {
    const auto row = data.gene_row(g);
    const std::vector<double> g1(row.begin(), row.begin() + 4);
    const std::vector<double> g2(row.begin() + 4, row.end());
    const double t = edisco::welch_t(g1, g2);
    EXPECT_DOUBLE_EQ(panel.t_observed[g], t);
    EXPECT_DOUBLE_EQ(panel.observed[g],
                     edisco::nonconformity_score(t, cfg.score_exponent));
  }
  EXPECT_EQ(panel.degenerate_scores, 0u);
}

TEST(ScorePanel, BitIdenticalAcrossWorkerCounts) {
  const auto data = random_null_dataset(9, 30, 5, 5);
  const edisco::permutation_config cfg{.permutations = 40, .seed = 3};
  const auto serial = edisco::compute_score_panel(data, cfg, 1);
  const auto parallel = edisco::compute_score_panel(data, cfg, 6);
  EXPECT_EQ(serial.nulls, parallel.nulls);
  EXPECT_EQ(serial.observed, parallel.observed);
  EXPECT_EQ(serial.t_observed, parallel.t_observed);
  EXPECT_EQ(serial.degenerate_scores, parallel.degenerate_scores);
  const auto again = edisco::compute_score_panel(data, cfg, 6);
  EXPECT_EQ(parallel.nulls, again.nulls);
}

TEST(ScorePanel, DegenerateRowsAreCountedNotFatal) {
  // Constant within each group but different across groups; half the
  // permutations keep that split and trip the zero-variance guard.
  std::vector<double> values{1.0, 1.0, 2.0, 2.0};
  auto data = edisco::expression_dataset::create(
      {"flat"}, std::move(values), {1, 1, 2, 2});
  const edisco::permutation_config cfg{.permutations = 64, .seed = 4};
  const auto panel = edisco::compute_score_panel(data, cfg);
  EXPECT_GT(panel.degenerate_scores, 0u);
  EXPECT_EQ(panel.observed[0], kMax);
  EXPECT_TRUE(std::isinf(panel.t_observed[0]));
  for (double v : panel.nulls) {
    EXPECT_TRUE(v == 0.0 || v == kMax);
  }
  const auto e = edisco::conformal_e_values(panel);
  EXPECT_GE(e[0], 0.0);
  EXPECT_LE(e[0], 65.0);
}

TEST(PanelEValues, AgreeWithScalarTransforms) {
  const auto data = random_null_dataset(13, 15, 4, 4);
  const edisco::permutation_config cfg{.permutations = 30, .seed = 6};
  const auto panel = edisco::compute_score_panel(data, cfg);
  const auto e = edisco::conformal_e_values(panel);
  const auto simplified = edisco::simplified_e_values(panel);
  for (std::size_t g = 0; g < panel.genes; ++g) {
    EXPECT_EQ(e[g], edisco::conformal_e_from_scores(panel.observed[g],
                                                    panel.null_row(g)));
    EXPECT_EQ(simplified[g], edisco::simplified_e_from_scores(
                                 panel.observed[g], panel.null_row(g)));
  }
}

TEST(PanelEValues, PooledReducesToConformalForOneGene) {
  const auto data = random_null_dataset(21, 1, 4, 4);
  const edisco::permutation_config cfg{.permutations = 100, .seed = 8};
  const auto panel = edisco::compute_score_panel(data, cfg);
  const auto pooled = edisco::pooled_conformal_e_values(panel);
  const auto conformal = edisco::conformal_e_values(panel);
  ASSERT_EQ(pooled.size(), 1u);
  EXPECT_DOUBLE_EQ(pooled[0], conformal[0]);
}

TEST(PanelEValues, PooledSmallCaseByHand) {
  edisco::score_panel panel;
  panel.genes = 2;
  panel.permutations = 2;
  panel.t_observed = {1.0, 1.0};
  panel.observed = {6.0, 1.0};
  panel.nulls = {2.0, 1.0, 1.0, 1.0};
  const auto pooled = edisco::pooled_conformal_e_values(panel);
  // Denominator averages the 4 pooled nulls plus the gene's own observed
  // score (5 terms): gene 0 gets (5 + 6)/5, gene 1 gets (5 + 1)/5.
  EXPECT_DOUBLE_EQ(pooled[0], 6.0 / (11.0 / 5.0));
  EXPECT_DOUBLE_EQ(pooled[1], 1.0 / (6.0 / 5.0));
}

TEST(PanelPValues, CountsRanksWithinThePooledNulls) {
  edisco::score_panel panel;
  panel.genes = 2;
  panel.permutations = 2;
  panel.t_observed = {1.0, 1.0};
  panel.observed = {3.0, 0.5};
  panel.nulls = {1.0, 2.0, 4.0, 0.5};
  const auto p = edisco::conformal_p_values(panel);
  const auto st = edisco::st_p_values(panel);
  // Pooled nulls (1, 2, 4, 0.5): one is >= 3, all four are >= 0.5.
  EXPECT_DOUBLE_EQ(p[0], 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(p[1], 1.0);
  EXPECT_DOUBLE_EQ(st[0], 1.0 / 4.0);
  EXPECT_DOUBLE_EQ(st[1], 1.0);
}

TEST(PanelPValues, StVariantCanReachZeroButConformalCannot) {
  const auto data = random_null_dataset(33, 25, 4, 4);
  const edisco::permutation_config cfg{.permutations = 60, .seed = 9};
  const auto panel = edisco::compute_score_panel(data, cfg);
  const auto p = edisco::conformal_p_values(panel);
  const auto st = edisco::st_p_values(panel);
  for (std::size_t g = 0; g < panel.genes; ++g) {
    EXPECT_GT(p[g], 0.0);
    EXPECT_LE(p[g], 1.0);
    EXPECT_GE(st[g], 0.0);
    EXPECT_LE(st[g], 1.0);
    // (c)/(n) < (c+1)/(n+1) strictly whenever c < n, and both hit 1 at c = n.
    if (p[g] < 1.0) {
      EXPECT_LT(st[g], p[g]);
    } else {
      EXPECT_DOUBLE_EQ(st[g], 1.0);
    }
  }
}

// Null data: the conformal e-values must average close to one.
TEST(Validity, NullMeanStaysNearOne) {
  const auto data = random_null_dataset(42, 500, 4, 5);
  const edisco::permutation_config cfg{.permutations = 50, .seed = 10};
  const auto e = edisco::conformal_e_values(data, cfg);
  double sum = 0.0, sum_squares = 0.0;
  for (double v : e) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 51.0);
    sum += v;
    sum_squares += v * v;
  }
  const double G = static_cast<double>(e.size());
  const double mean = sum / G;
  const double sd = std::sqrt(std::max(0.0, sum_squares / G - mean * mean));
  EXPECT_LE(mean, 1.0 + 4.0 * sd / std::sqrt(G));
}

// With many permutations the two e-value flavors converge on typical genes.
TEST(Convergence, SimplifiedApproachesConformal) {
  const auto data = random_null_dataset(51, 40, 7, 8);
  const edisco::permutation_config cfg{.permutations = 10000, .seed = 11};
  const auto panel = edisco::compute_score_panel(data, cfg);
  const auto e = edisco::conformal_e_values(panel);
  const auto simplified = edisco::simplified_e_values(panel);
  std::vector<double> gaps;
  for (std::size_t g = 0; g < panel.genes; ++g) {
    if (e[g] > 0.0 && std::isfinite(simplified[g])) {
      gaps.push_back(std::abs(e[g] - simplified[g]) / e[g]);
    }
  }
  ASSERT_GT(gaps.size(), 20u);
  std::sort(gaps.begin(), gaps.end());
  EXPECT_LT(gaps[gaps.size() / 2], 1e-2);
}

TEST(ConformalTable, SharesOnePanelAcrossColumns) {
  const auto data = random_null_dataset(60, 12, 4, 4);
  const edisco::permutation_config cfg{.permutations = 25, .seed = 12};
  const auto table = edisco::compute_conformal_table(data, cfg);
  EXPECT_EQ(table.gene_ids, data.gene_ids());
  EXPECT_EQ(table.e_conformal, edisco::conformal_e_values(data, cfg));
  EXPECT_EQ(table.e_simplified, edisco::simplified_e_values(data, cfg));
  EXPECT_EQ(table.p_conformal, edisco::conformal_p_values(data, cfg));
  EXPECT_EQ(table.p_st, edisco::st_p_values(data, cfg));
  ASSERT_EQ(table.t.size(), 12u);
}

TEST(Dataset, CreateValidation) {
  EXPECT_THROW(edisco::expression_dataset::create({}, {}, {1, 1, 2, 2}),
               std::invalid_argument);
  EXPECT_THROW(edisco::expression_dataset::create({"g"}, {1, 2, 3, 4},
                                                  {1, 1, 2, 3}),
               std::invalid_argument);
  EXPECT_THROW(edisco::expression_dataset::create({"g"}, {1, 2, 3, 4},
                                                  {1, 1, 1, 2}),
               std::domain_error);
  EXPECT_THROW(edisco::expression_dataset::create({"g"}, {1, 2, 3},
                                                  {1, 1, 2, 2}),
               std::invalid_argument);
  EXPECT_THROW(edisco::expression_dataset::create({"g"}, {1, 2, 3, kInf},
                                                  {1, 1, 2, 2}),
               std::invalid_argument);
}

TEST(Loader, CommaWithHeaderAndDropFilter) {
  std::istringstream in(
      "gene_id,s1,s2,s3,s4\n"
      "g1,1,2,4,8\n"
      "g2,32,21,2,2\n");
  const std::vector<int> groups{1, 1, 2, 2};
  const auto data = edisco::load_expression_dataset(in, groups);
  ASSERT_EQ(data.genes(), 1u);
  EXPECT_EQ(data.dropped_rows(), 1u);
  EXPECT_EQ(data.gene_ids()[0], "g1");
  const auto row = data.gene_row(0);
  EXPECT_DOUBLE_EQ(row[0], 0.0);
  EXPECT_DOUBLE_EQ(row[1], 1.0);
  EXPECT_DOUBLE_EQ(row[2], 2.0);
  EXPECT_DOUBLE_EQ(row[3], 3.0);
}

TEST(Loader, TabSeparatedWithoutHeader) {
  std::istringstream in("a\t1\t2\t4\t8\r\nb\t2\t2\t2\t4\n");
  const std::vector<int> groups{1, 1, 2, 2};
  const auto data = edisco::load_expression_dataset(in, groups);
  ASSERT_EQ(data.genes(), 2u);
  EXPECT_EQ(data.dropped_rows(), 0u);
  EXPECT_EQ(data.gene_ids()[1], "b");
  EXPECT_DOUBLE_EQ(data.gene_row(1)[3], 2.0);
}

TEST(Loader, ErrorsNameRowAndColumn) {
  const std::vector<int> groups{1, 1, 2, 2};
  {
    std::istringstream in("g1,1,0,1,1\n");
    try {
      edisco::load_expression_dataset(in, groups);
      FAIL() << "expected parse_error";
    } catch (const edisco::parse_error& err) {
      EXPECT_NE(std::string(err.what()).find("row 1"), std::string::npos);
      EXPECT_NE(std::string(err.what()).find("column 3"), std::string::npos);
    }
  }
  {
    std::istringstream in("g1,1,x,1,1\n");
    EXPECT_THROW(edisco::load_expression_dataset(in, groups),
                 edisco::parse_error);
  }
  {
    std::istringstream in("g1,1,2,3\n");
    EXPECT_THROW(edisco::load_expression_dataset(in, groups),
                 edisco::parse_error);
  }
  {
    std::istringstream in("");
    EXPECT_THROW(edisco::load_expression_dataset(in, groups),
                 edisco::parse_error);
  }
  {
    // Positivity problems outrank the drop filter on the same row.
    std::istringstream in("g1,30,0,1,1\n");
    EXPECT_THROW(edisco::load_expression_dataset(in, groups),
                 edisco::parse_error);
  }
  {
    std::istringstream in("g1,1,2,4,8\n");
    EXPECT_THROW(edisco::load_expression_dataset(in, std::vector<int>{}),
                 std::domain_error);
  }
}

TEST(Loader, MissingFileIsAnIoError) {
  const std::vector<int> groups{1, 1, 2, 2};
  EXPECT_THROW(
      edisco::load_expression_dataset(std::string("/nonexistent/x.csv"), groups),
      edisco::parse_error);
}

TEST(GroupLabels, ParsesCommaAndWhitespaceForms) {
  EXPECT_EQ(edisco::parse_group_labels("1,1,2,2"),
            (std::vector<int>{1, 1, 2, 2}));
  EXPECT_EQ(edisco::parse_group_labels("1 1 2 2"),
            (std::vector<int>{1, 1, 2, 2}));
  EXPECT_EQ(edisco::parse_group_labels(" 2,1 ,1,2 "),
            (std::vector<int>{2, 1, 1, 2}));
  EXPECT_THROW(edisco::parse_group_labels("1,3"), edisco::parse_error);
  EXPECT_THROW(edisco::parse_group_labels(""), edisco::parse_error);
  EXPECT_THROW(edisco::parse_group_labels("1,,2"), edisco::parse_error);
}
