#include "pipestab/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "pipestab/errors.hpp"

namespace pipestab {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& os, const std::string& name,
                  const Eigen::MatrixXd& m) {
  os << "matrix " << name << " " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_number(m(i, j));
    }
    os << "\n";
  }
}

std::map<std::string, Eigen::MatrixXd> read_matrices(std::istream& is) {
  std::map<std::string, Eigen::MatrixXd> out;
  std::string line;
  int lineno = 0;
  auto next_data_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      return true;
    }
    return false;
  };
  while (next_data_line()) {
    std::istringstream hs(line);
    std::string tag, name;
    Eigen::Index rows = -1, cols = -1;
    if (!(hs >> tag >> name >> rows >> cols) || tag != "matrix" || rows < 0 ||
        cols < 0) {
      throw InputError("malformed matrix header at line " +
                       std::to_string(lineno));
    }
    if (out.count(name)) throw InputError("duplicate matrix '" + name + "'");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!next_data_line()) {
        throw InputError("matrix '" + name + "' is truncated");
      }
      std::istringstream rs(line);
      for (Eigen::Index j = 0; j < cols; ++j) {
        std::string tok;
        if (!(rs >> tok)) {
          throw InputError("short row in matrix '" + name + "' at line " +
                           std::to_string(lineno));
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
          throw InputError("bad number '" + tok + "' at line " +
                           std::to_string(lineno));
        }
        m(i, j) = v;
      }
    }
    out.emplace(name, std::move(m));
  }
  return out;
}

}  // namespace pipestab
