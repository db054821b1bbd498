#include <fstream>
#include <iomanip>
#include <sstream>

#include "fcmwave/linalg.hpp"

namespace fcmwave {

void write_matrix_market(const std::string& path, const SparseSym& A) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  Eigen::Index lower = 0;
  for (int r = 0; r < A.outerSize(); ++r)
    for (SparseSym::InnerIterator it(A, r); it; ++it)
      if (it.col() <= r) ++lower;
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << A.rows() << ' ' << A.cols() << ' ' << lower << '\n';
  os << std::setprecision(17);
  for (int r = 0; r < A.outerSize(); ++r)
    for (SparseSym::InnerIterator it(A, r); it; ++it)
      if (it.col() <= r) os << r + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

void write_matrix_market(const std::string& path, const VectorXd& v) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << "%%MatrixMarket matrix array real general\n";
  os << v.size() << " 1\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << v[i] << '\n';
}

SparseSym read_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  std::getline(is, line);
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
      field != "real")
    throw ConfigError("'" + path + "': expected a coordinate real MatrixMarket file");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw ConfigError("'" + path + "': unsupported symmetry '" + symmetry + "'");
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream header(line);
  Eigen::Index rows = 0, cols = 0, nnz = 0;
  if (!(header >> rows >> cols >> nnz)) throw ConfigError("'" + path + "': bad size line");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (Eigen::Index k = 0; k < nnz; ++k) {
    Eigen::Index i, j;
    double v;
    if (!(is >> i >> j >> v)) throw ConfigError("'" + path + "': truncated entries");
    t.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    if (symmetric && i != j) t.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), v);
  }
  SparseSym A(rows, cols);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

}  // namespace fcmwave
