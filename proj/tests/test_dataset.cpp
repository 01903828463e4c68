#include "support.hpp"
#include <gtest/gtest.h>
#include <sstream>

using namespace safegrid;

namespace {

Dataset parse(const std::string& text, DataFormat f)
{
    std::istringstream in(text);
    return parse_dataset(in, f);
}

std::size_t parse_error_line(const std::string& text, DataFormat f)
{
    try {
        parse(text, f);
    } catch (const ParseError& e) {
        return e.line();
    }
    return std::size_t(-1);
}

} // namespace

TEST(Libsvm, SingleLine)
{
    const Dataset d = parse("1 3:0.5 7:-2\n", DataFormat::libsvm);
    ASSERT_TRUE(d.sparse());
    const auto& X = std::get<SparseMatrix>(d.X);
    EXPECT_EQ(d.n(), 1);
    EXPECT_EQ(d.p(), 7);
    EXPECT_EQ(X.nonZeros(), 2);
    EXPECT_EQ(X.coeff(0, 2), 0.5);
    EXPECT_EQ(X.coeff(0, 6), -2.0);
    EXPECT_EQ(d.y[0], 1.0);
}

TEST(Libsvm, CommentsBlankLinesAndEmptyRows)
{
    const Dataset d = parse("# header\n+1 1:1 2:2\n\n-1   # no features\n0 2:3.5e-1\n", DataFormat::libsvm);
    EXPECT_EQ(d.n(), 3);
    EXPECT_EQ(d.p(), 2);
    EXPECT_EQ(d.y[1], -1.0);
    EXPECT_EQ(std::get<SparseMatrix>(d.X).coeff(2, 1), 0.35);
}

TEST(Libsvm, Errors)
{
    EXPECT_THROW(parse("", DataFormat::libsvm), ParseError);
    EXPECT_EQ(parse_error_line("1 1:1\n1 0:2\n", DataFormat::libsvm), 2u);
    EXPECT_EQ(parse_error_line("1 2:1 1:2\n", DataFormat::libsvm), 1u);
    EXPECT_EQ(parse_error_line("1 1:1\n\n1 1:nan\n", DataFormat::libsvm), 3u);
    EXPECT_EQ(parse_error_line("1 1:inf\n", DataFormat::libsvm), 1u);
    EXPECT_EQ(parse_error_line("x 1:1\n", DataFormat::libsvm), 1u);
    EXPECT_EQ(parse_error_line("1 1-1\n", DataFormat::libsvm), 1u);
    EXPECT_EQ(parse_error_line("1 a:1\n", DataFormat::libsvm), 1u);
}

TEST(Csv, HeaderAndShape)
{
    const Dataset d = parse("a,b,c,label\n1,2,3,0\n4,5,6,1\n", DataFormat::csv);
    ASSERT_FALSE(d.sparse());
    EXPECT_EQ(d.n(), 2);
    EXPECT_EQ(d.p(), 3);
    EXPECT_EQ(std::get<DenseMatrix>(d.X)(1, 2), 6.0);
    EXPECT_EQ(d.y[1], 1.0);
}

TEST(Csv, Errors)
{
    EXPECT_THROW(parse("", DataFormat::csv), ParseError);
    EXPECT_THROW(parse("a,b\n", DataFormat::csv), ParseError);
    EXPECT_EQ(parse_error_line("a,b\n1,2\n1,2,3\n", DataFormat::csv), 3u);
    EXPECT_EQ(parse_error_line("a,b\n1,NaN\n", DataFormat::csv), 2u);
    EXPECT_EQ(parse_error_line("a,b\n1,\n", DataFormat::csv), 2u);
    EXPECT_EQ(parse_error_line("label\n1\n", DataFormat::csv), 1u);
}

TEST(LoadDataset, MissingFile)
{
    EXPECT_THROW(load_dataset("/nonexistent/file.svm", DataFormat::libsvm), std::runtime_error);
}

TEST(SelectRows, DenseAndSparseAgree)
{
    const Dataset d = parse("1 1:1 3:2\n0 2:3\n1 1:4\n0 3:5\n", DataFormat::libsvm);
    const Dataset s = select_rows(d, {3, 1});
    const DenseMatrix expected = DenseMatrix(std::get<SparseMatrix>(s.X));
    EXPECT_EQ(expected(0, 2), 5.0);
    EXPECT_EQ(expected(1, 1), 3.0);
    EXPECT_EQ(s.y[0], 0.0);
    const DenseMatrix dense = select_rows(DenseMatrix(std::get<SparseMatrix>(d.X)), {3, 1});
    EXPECT_EQ(dense, expected);
}

TEST(Split, SizesDisjointAndSeeded)
{
    const Dataset d = synthetic(SyntheticKind::regression, 50, 3, 1);
    const Split a = train_validation_split(d, 0.3, 42);
    const Split b = train_validation_split(d, 0.3, 42);
    const Split c = train_validation_split(d, 0.3, 43);
    EXPECT_EQ(a.validation.n(), 15);
    EXPECT_EQ(a.train.n(), 35);
    EXPECT_EQ(a.validation.y, b.validation.y);
    EXPECT_NE(a.validation.y, c.validation.y);
    double total = a.train.y.sum() + a.validation.y.sum();
    EXPECT_NEAR(total, d.y.sum(), 1e-9);
    EXPECT_THROW(train_validation_split(d, 0.0, 1), ConfigError);
    EXPECT_THROW(train_validation_split(d, 1.0, 1), ConfigError);
}

TEST(Rng, ReproducibleStream)
{
    Rng a(2024), b(2024);
    for (int k = 0; k < 100; ++k) EXPECT_EQ(a.normal(), b.normal());
    // mt19937_64 reference: the 10000th output for the default seed is fixed by the standard
    std::mt19937_64 engine;
    engine.discard(9999);
    EXPECT_EQ(engine(), 9981545732273789042ull);
}

TEST(Rng, MomentsAreSane)
{
    Rng rng(1);
    double sum = 0, sq = 0;
    const int m = 200000;
    for (int k = 0; k < m; ++k) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / m, 0.0, 0.01);
    EXPECT_NEAR(sq / m, 1.0, 0.01);
    for (int k = 0; k < 1000; ++k) EXPECT_LT(rng.below(7), 7u);
}

TEST(Synthetic, ShapesAndLabels)
{
    const Dataset r = synthetic(SyntheticKind::regression, 20, 30, 5);
    EXPECT_EQ(r.n(), 20);
    EXPECT_EQ(r.p(), 30);
    const Dataset c = synthetic(SyntheticKind::classification, 40, 5, 5);
    EXPECT_TRUE(((c.y.array() == 0) || (c.y.array() == 1)).all());
    EXPECT_GT(c.y.sum(), 0);
    EXPECT_LT(c.y.sum(), 40);
    const Dataset again = synthetic(SyntheticKind::regression, 20, 30, 5);
    EXPECT_EQ(std::get<DenseMatrix>(r.X), std::get<DenseMatrix>(again.X));
}
