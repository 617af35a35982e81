#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mvstdm/basis.hpp"

namespace mvstdm {

/// Triplet text format: `rows cols nnz`, then one `row col value` line per
/// stored entry in column-major order, values at 17 significant digits.
void write_triplets(std::ostream& out, const SparseMatrix& m);
SparseMatrix read_triplets(std::istream& in);

void save_triplets(const std::filesystem::path& path, const SparseMatrix& m);
SparseMatrix load_triplets(const std::filesystem::path& path);

/// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double v);

}  // namespace mvstdm
