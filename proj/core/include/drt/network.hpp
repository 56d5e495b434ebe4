#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace drt {

struct Line {
  int from = -1;
  int to = -1;
  double x = 0.0;      // series reactance, must be positive
  double limit = 0.0;  // thermal limit, symmetric (|flow| <= limit)
};

struct Generator {
  int node = -1;
  double a = 0.0;  // quadratic cost coefficient, must be positive
  double b = 0.0;
  double c = 0.0;
  double pmin = 0.0;
  double pmax = 0.0;
  bool synthetic = false;  // filled in for nodes that had no generator
};

// A validated case: node-indexed vectors, exactly one generator per node
// (load-only nodes carry a synthetic zero-capacity unit so dispatch vectors
// stay node-aligned).
struct NetworkCase {
  std::string name;
  std::vector<std::string> node_ids;
  std::map<std::string, int> index_of;
  int slack = -1;
  std::vector<Line> lines;
  std::vector<Generator> gens;     // sorted by node index, size == nodes
  Eigen::VectorXd base_load;       // per node, defaults to zero
  Eigen::VectorXd box_lo, box_hi;  // admissible load interval per node

  int n() const { return static_cast<int>(node_ids.size()); }
  int l() const { return static_cast<int>(lines.size()); }
};

// Parse and validate a case from JSON text.  Throws ParseError for malformed
// JSON or wrong shapes, ValidationError for rule violations; messages name
// the offending field.
NetworkCase load_case_text(const std::string& json_text);

// Same, reading from a file.
NetworkCase load_case(const std::string& path);

// Injection-shift-factor (PTDF) matrix, lines x nodes, slack column zero.
// Flow on line e for net injection p is row e of H times p.  Throws
// ValidationError if the network is not connected.
Eigen::MatrixXd build_shift_factors(const NetworkCase& net);

}  // namespace drt
