#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include <Eigen/Dense>

namespace pipestab {

// Plain-text matrix format. Each matrix is a header line
//   matrix <name> <rows> <cols>
// followed by <rows> lines of space-separated values in row-major order.
// Lines starting with '#' are comments. Values use 17 significant digits so
// that a round trip is bit-exact.

std::string format_number(double v);

void write_matrix(std::ostream& os, const std::string& name,
                  const Eigen::MatrixXd& m);

// Parses every matrix in the stream. Throws InputError on malformed input or
// duplicate names.
std::map<std::string, Eigen::MatrixXd> read_matrices(std::istream& is);

}  // namespace pipestab
