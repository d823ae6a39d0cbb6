#include <doctest.h>

#include <sstream>

#include "asls/libsvm.hpp"

using namespace asls;

namespace {

Dataset parse(const std::string& text, Index min_features = 0) {
    std::istringstream in(text);
    return parse_libsvm(in, min_features);
}

std::size_t error_line(const std::string& file) {
    try {
        (void)load_libsvm(std::string(ASLS_TEST_DATA) + "/" + file);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_CASE("two rows") {
    const Dataset ds = parse("+1 1:0.5 3:2.0\n-1 2:1.0\n");
    Eigen::MatrixXd expected(2, 3);
    expected << 0.5, 0, 2, 0, 1, 0;
    CHECK(Eigen::MatrixXd(ds.features) == expected);
    CHECK(ds.labels == std::vector<double>{1.0, -1.0});
    CHECK(load_libsvm(std::string(ASLS_TEST_DATA) + "/valid.libsvm") == ds);
}

TEST_CASE("label-only line is a zero row") {
    const Dataset ds = parse("+1\n-1 2:1\n");
    CHECK(ds.features.row(0).nonZeros() == 0);
    CHECK(ds.rows() == 2);
}

TEST_CASE("min_features widens the matrix") {
    CHECK(parse("+1 1:1\n", 5).cols() == 5);
}

TEST_CASE("0/1 labels are remapped, comments and blank lines skipped") {
    const Dataset ds = load_libsvm(std::string(ASLS_TEST_DATA) + "/labels01.libsvm");
    CHECK(ds.labels == std::vector<double>{1.0, -1.0, 1.0});
    CHECK(ds.features.coeff(1, 1) == 1e-3);
    CHECK(parse("2 1:1\n1 1:2\n").labels == std::vector<double>{1.0, -1.0});
}

TEST_CASE("malformed inputs report the line") {
    CHECK(error_line("bad_token.libsvm") == 2);
    CHECK(error_line("decreasing_index.libsvm") == 2);
    CHECK(error_line("bad_labels.libsvm") == 3);
    CHECK(error_line("zero_index.libsvm") == 1);
    CHECK_THROWS_AS((void)parse("abc 1:1\n"), ParseError);
    CHECK_THROWS_AS((void)parse("+1 1:1 1:2\n"), ParseError);
    CHECK_THROWS_AS((void)parse("+1 1:\n"), ParseError);
    CHECK_THROWS_AS((void)load_libsvm("/nonexistent/file.libsvm"), std::runtime_error);
}

TEST_CASE("write then parse is exact") {
    const Dataset ds = parse("+1 1:0.1 4:3.3333333333333335\n-1 2:-1e-300 3:123456789.123\n");
    std::ostringstream out;
    write_libsvm(out, ds);
    CHECK(parse(out.str()) == ds);
}
