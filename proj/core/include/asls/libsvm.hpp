#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "asls/problems.hpp"

namespace asls {

/// Malformed LIBSVM input. line() is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message);
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Reads "label idx:val idx:val ..." lines with 1-based, strictly increasing
/// indices. Blank lines and lines starting with '#' are skipped. Labels in
/// {-1,+1} are kept, {0,1} and {1,2} are mapped to {-1,+1}; any other label set
/// is rejected. The feature count is max(index seen, min_features).
[[nodiscard]] Dataset parse_libsvm(std::istream& in, Index min_features = 0);
[[nodiscard]] Dataset load_libsvm(const std::string& path, Index min_features = 0);

/// Writes one line per row with values at 17 significant digits; only stored
/// entries are emitted.
void write_libsvm(std::ostream& out, const Dataset& ds);

}  // namespace asls
