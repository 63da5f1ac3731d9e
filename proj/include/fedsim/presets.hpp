#pragma once

#include <string>
#include <vector>

#include "fedsim/quadratic.hpp"

namespace fedsim {

// Named two-client scalar testbeds. groups 1-4 step from homogeneous to an
// extreme pair with one linear client; sweep-d{0,13,1}-z{1,10,100}
// sweep curvature spread (delta = 0, 1/3, 1) against optimum heterogeneity
// (zeta* = 1, 10, 100). All have global objective F(x) = x^2/2, minimizer 0.
Federationd preset(const std::string& name);

std::vector<std::string> preset_names();

// JSON interchange for arbitrary federations. The document layout is
//   {"clients": [{"A": [[...], ...], "b": [...], "c": 0.0}, ...]}
// with "c" optional (default 0). Curvature blocks must be square, symmetric
// and dimension-consistent across clients; violations raise std::runtime_error.
Federationd federation_from_json(const std::string& text);
std::string federation_to_json(const Federationd& fed);

}  // namespace fedsim
