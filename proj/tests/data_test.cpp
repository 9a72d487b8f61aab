#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "clustermodel/data.hpp"
#include "clustermodel/stats.hpp"

namespace cmodel {
namespace {

LabeledDataset parse(const std::string& text, const std::string& label,
                     MissingPolicy policy = MissingPolicy::reject) {
  std::istringstream in(text);
  return parse_csv(in, label, policy);
}

TEST(LoadCsv, ShapeBookkeeping) {
  auto ds = parse("g,score,placed\nM,71,yes\nF,64,no\nM,80,yes\n", "placed");
  EXPECT_EQ(ds.matrix.rows(), 3u);
  EXPECT_EQ(ds.matrix.cols(), 2u);
  EXPECT_EQ(ds.matrix.col_names(), (std::vector<std::string>{"g", "score"}));
  EXPECT_EQ(ds.label_name, "placed");
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"yes", "no"}));
  EXPECT_EQ(ds.labels, (std::vector<ClassId>{0, 1, 0}));
}

TEST(LoadCsv, FirstSeenOrdinalCodes) {
  auto ds = parse("g,y\nM,0\nF,1\nM,1\n", "y");
  EXPECT_EQ(ds.matrix.column(0), (std::vector<double>{0, 1, 0}));
}

TEST(LoadCsv, NumericLabelsOrderedByValue) {
  auto ds = parse("x,y\n1,1\n2,0\n3,1\n", "y");
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"0", "1"}));
  EXPECT_EQ(ds.labels, (std::vector<ClassId>{1, 0, 1}));
}

TEST(LoadCsv, EmptyCellRejectedWithRow) {
  try {
    parse("a,b,y\n1,2,0\n3,,1\n4,5,0\n", "y");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), "b");
  }
}

TEST(LoadCsv, ModeImputation) {
  auto ds = parse("a,c,y\n1,x,0\n2,y,1\n2,,0\n,x,1\n", "y", MissingPolicy::impute_mode);
  EXPECT_EQ(ds.matrix.column(0), (std::vector<double>{1, 2, 2, 2}));
  EXPECT_EQ(ds.matrix.column(1), (std::vector<double>{0, 1, 0, 0}));
}

TEST(LoadCsv, MissingLabelColumn) {
  EXPECT_THROW(parse("a,b\n1,2\n3,4\n", "y"), SchemaError);
}

TEST(LoadCsv, QuotedFields) {
  auto ds = parse("\"name, full\",v,y\n\"Doe, \"\"J\"\"\",1.5,a\nX,2,b\n", "y");
  EXPECT_EQ(ds.matrix.col_names()[0], "name, full");
  EXPECT_EQ(ds.matrix(1, 1), 2.0);
  EXPECT_EQ(ds.matrix(0, 0), 0.0);
}

TEST(LoadCsv, RaggedRowIsParseError) {
  EXPECT_THROW(parse("a,b,y\n1,2,0\n3,1\n", "y"), ParseError);
}

TEST(LoadCsv, SingleClassRejected) {
  EXPECT_THROW(parse("a,y\n1,0\n2,0\n", "y"), SchemaError);
}

TEST(LoadCsv, MissingFileIsIoError) {
  EXPECT_THROW(load_csv("/nonexistent/file.csv", "y"), IoError);
}

TEST(CsvRoundTrip, WriteThenLoadPreservesDataset) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    SyntheticConfig cfg;
    cfg.n_instances = 50;
    cfg.n_groups = 2;
    cfg.attrs_per_group = 3;
    cfg.noise_attrs = 1;
    cfg.imbalance = 0.6;
    cfg.seed = rng();
    auto ds = generate_synthetic(cfg);
    std::stringstream buf;
    write_csv(ds, buf);
    auto back = parse_csv(buf, ds.label_name);
    EXPECT_EQ(back, ds);
  }
}

TEST(Discretize, BinRuleAndTies) {
  LabeledDataset ds{DataMatrix::from_rows({{72, 1}, {60, 2}, {50, 3}, {95, 4}, {10, 5}}, {"m", "o"}),
                    {0, 1, 0, 1, 0},
                    {"a", "b"}};
  std::vector<AttributeSchema> schema{{"m", AttributeKind::numeric, {50, 60, 75, 90}},
                                      {"o", AttributeKind::numeric, {}}};
  auto out = discretize(ds, schema);
  // 72 > 50, > 60, <= 75 -> bin 2; cut points fall into the lower bin.
  EXPECT_EQ(out.matrix.column(0), (std::vector<double>{2, 1, 0, 4, 0}));
  EXPECT_EQ(out.matrix.column(1), ds.matrix.column(1));
}

TEST(Discretize, NonAscendingBinsRejected) {
  LabeledDataset ds{DataMatrix::from_rows({{1}, {2}}, {"m"}), {0, 1}, {"a", "b"}};
  std::vector<AttributeSchema> schema{{"m", AttributeKind::numeric, {5, 5}}};
  EXPECT_THROW(discretize(ds, schema), SchemaError);
}

TEST(Schema, ExactlyOneLabel) {
  std::vector<AttributeSchema> none{{"a", AttributeKind::numeric, {}}};
  EXPECT_THROW(validate_schema(none), SchemaError);
  std::vector<AttributeSchema> ok{{"a", AttributeKind::numeric, {1, 2}},
                                  {"y", AttributeKind::label, {}}};
  EXPECT_NO_THROW(validate_schema(ok));
}

TEST(Schema, DropExcluded) {
  LabeledDataset ds{DataMatrix::from_rows({{1, 2, 3}, {4, 5, 6}}, {"a", "phone", "c"}),
                    {0, 1},
                    {"n", "y"}};
  std::vector<AttributeSchema> schema{{"phone", AttributeKind::excluded, {}}};
  auto out = drop_excluded(ds, schema);
  EXPECT_EQ(out.matrix.col_names(), (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(out.matrix.column(1), (std::vector<double>{3, 6}));
}

TEST(MinMaxScale, Examples) {
  auto m = min_max_scale(DataMatrix::from_rows({{2, 5, 0}, {4, 5, 0.5}, {6, 5, 1}}));
  EXPECT_EQ(m.column(0), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(m.column(1), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(m.column(2), (std::vector<double>{0, 0.5, 1}));
}

TEST(MinMaxScale, RangeAndRankProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 2 + rng() % 20, c = 1 + rng() % 6;
    std::vector<double> v(r * c);
    for (auto& x : v) x = u(rng);
    DataMatrix m(r, c, v, std::vector<std::string>(c, "x"));
    auto s = min_max_scale(m);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        EXPECT_GE(s(i, j), 0.0);
        EXPECT_LE(s(i, j), 1.0);
        for (std::size_t k = 0; k < r; ++k)
          if (m(i, j) < m(k, j)) {
            EXPECT_LE(s(i, j), s(k, j));
          }
      }
    EXPECT_EQ(min_max_scale(s), s);
  }
}

TEST(Transpose, Example) {
  auto m = DataMatrix::from_rows({{1, 2, 3}, {4, 5, 6}}, {"a", "b", "c"});
  auto t = transpose(m);
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.cols(), 2u);
  EXPECT_EQ(t.values(), (std::vector<double>{1, 4, 2, 5, 3, 6}));
  EXPECT_EQ(t.row_names(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(t.col_names(), (std::vector<std::string>{"r0", "r1"}));
}

TEST(Transpose, SingleCell) {
  auto m = DataMatrix::from_rows({{7}});
  EXPECT_EQ(transpose(m).values(), m.values());
}

TEST(Transpose, InvolutionProperty) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng() % 15, c = 1 + rng() % 15;
    std::vector<double> v(r * c);
    for (auto& x : v) x = n(rng);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < c; ++j) names.push_back("x" + std::to_string(j));
    DataMatrix m(r, c, v, names);
    auto back = transpose(transpose(m));
    EXPECT_EQ(back.values(), m.values());
    EXPECT_EQ(back.col_names(), m.col_names());
  }
}

TEST(DataMatrix, RejectsNonFinite) {
  EXPECT_THROW(DataMatrix(1, 1, {std::nan("")}, {"a"}), DomainError);
  EXPECT_THROW(DataMatrix(1, 2, {1.0}, {"a", "b"}), ShapeError);
}

TEST(Synthetic, Deterministic) {
  SyntheticConfig cfg;
  cfg.seed = 42;
  auto a = generate_synthetic(cfg), b = generate_synthetic(cfg);
  std::stringstream sa, sb;
  write_csv(a, sa);
  write_csv(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
  cfg.seed = 43;
  std::stringstream sc;
  write_csv(generate_synthetic(cfg), sc);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Synthetic, InvalidImbalance) {
  SyntheticConfig cfg;
  cfg.imbalance = 1.0;
  EXPECT_THROW(generate_synthetic(cfg), ParameterError);
  cfg.imbalance = 0.0;
  EXPECT_THROW(generate_synthetic(cfg), ParameterError);
}

// Minority count ~ Binomial(1000, 0.1): sd ~ 9.5, so [60,140] is > 4 sd wide.
TEST(Synthetic, MinorityCountOverSeeds) {
  SyntheticConfig cfg;
  cfg.n_instances = 1000;
  cfg.imbalance = 0.9;
  cfg.n_groups = 1;
  cfg.attrs_per_group = 1;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    cfg.seed = seed;
    const auto counts = generate_synthetic(cfg).class_counts();
    EXPECT_GE(counts[1], 60u) << seed;
    EXPECT_LE(counts[1], 140u) << seed;
    // within 3 binomial standard deviations of the expected prevalence
    EXPECT_LE(std::abs(static_cast<double>(counts[1]) - 100.0), 3 * std::sqrt(1000 * 0.1 * 0.9))
        << seed;
  }
}

TEST(Synthetic, WithinGroupCorrelationExceedsCrossGroup) {
  SyntheticConfig cfg;
  cfg.n_instances = 500;
  cfg.n_groups = 3;
  cfg.attrs_per_group = 4;
  cfg.noise_attrs = 3;
  cfg.seed = 9;
  auto ds = generate_synthetic(cfg);
  double within = 0, cross = 0;
  int nw = 0, nc = 0;
  const std::size_t grouped = cfg.n_groups * cfg.attrs_per_group;
  for (std::size_t i = 0; i < ds.matrix.cols(); ++i)
    for (std::size_t j = i + 1; j < ds.matrix.cols(); ++j) {
      const double r = std::abs(pearson_correlation(ds.matrix.column(i), ds.matrix.column(j)));
      const bool same = i < grouped && j < grouped && i / cfg.attrs_per_group == j / cfg.attrs_per_group;
      (same ? within : cross) += r;
      ++(same ? nw : nc);
    }
  EXPECT_GT(within / nw, cross / nc);
  EXPECT_GT(within / nw, 0.8);
}

}  // namespace
}  // namespace cmodel
