#include "mvstdm/sparse_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include <fmt/format.h>

#include "mvstdm/errors.hpp"

namespace mvstdm {

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_triplets(std::ostream& out, const SparseMatrix& m) {
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
    }
  }
}

SparseMatrix read_triplets(std::istream& in) {
  Eigen::Index rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0) {
    throw IoError("malformed triplet header");
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nnz));
  for (Eigen::Index e = 0; e < nnz; ++e) {
    Eigen::Index r = 0, c = 0;
    double v = 0.0;
    if (!(in >> r >> c >> v)) throw IoError(fmt::format("truncated triplet entry {}", e));
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      throw IoError(fmt::format("triplet entry {} out of range ({}, {})", e, r, c));
    }
    trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end(), [](double, double) -> double {
    throw IoError("duplicate triplet entry");
  });
  m.makeCompressed();
  return m;
}

void save_triplets(const std::filesystem::path& path, const SparseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  write_triplets(out, m);
}

SparseMatrix load_triplets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  return read_triplets(in);
}

}  // namespace mvstdm
