#include "drt/network.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "drt/errors.hpp"
#include "json.hpp"

namespace drt {
namespace {

using nlohmann::json;

// Cost coefficient for synthetic zero-capacity units.  Keeps the dispatch
// Hessian positive definite without influencing any optimum (the unit is
// pinned at zero output).
constexpr double kSyntheticA = 1e-4;

const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(where + ": must be finite");
  return d;
}

std::string str(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + ": expected a string");
  return v.get<std::string>();
}

int node_ref(const NetworkCase& net, const json& v, const std::string& where) {
  const std::string id = str(v, where);
  const auto it = net.index_of.find(id);
  if (it == net.index_of.end()) {
    throw ValidationError(where + ": unknown node '" + id + "'");
  }
  return it->second;
}

}  // namespace

NetworkCase load_case_text(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("case: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("case: top level must be an object");

  NetworkCase net;
  if (doc.contains("name")) net.name = str(doc.at("name"), "case.name");

  const json& nodes = member(doc, "nodes", "case");
  if (!nodes.is_array() || nodes.empty()) {
    throw ParseError("case.nodes: expected a non-empty array");
  }
  for (size_t i = 0; i < nodes.size(); ++i) {
    const std::string id =
        str(nodes[i], "case.nodes[" + std::to_string(i) + "]");
    if (id.empty()) {
      throw ValidationError("case.nodes[" + std::to_string(i) +
                            "]: empty node id");
    }
    if (net.index_of.count(id)) {
      throw ValidationError("case.nodes: duplicate node id '" + id + "'");
    }
    net.index_of[id] = static_cast<int>(net.node_ids.size());
    net.node_ids.push_back(id);
  }
  const int n = net.n();

  net.slack = node_ref(net, member(doc, "slack", "case"), "case.slack");

  if (doc.contains("lines")) {
    const json& lines = doc.at("lines");
    if (!lines.is_array()) throw ParseError("case.lines: expected an array");
    for (size_t i = 0; i < lines.size(); ++i) {
      const std::string where = "case.lines[" + std::to_string(i) + "]";
      const json& lj = lines[i];
      Line ln;
      ln.from = node_ref(net, member(lj, "from", where), where + ".from");
      ln.to = node_ref(net, member(lj, "to", where), where + ".to");
      ln.x = number(member(lj, "x", where), where + ".x");
      ln.limit = number(member(lj, "limit", where), where + ".limit");
      if (ln.from == ln.to) {
        throw ValidationError(where + ": 'from' and 'to' must differ");
      }
      if (ln.x <= 0.0) throw ValidationError(where + ".x: must be positive");
      if (ln.limit <= 0.0) {
        throw ValidationError(where + ".limit: must be positive");
      }
      net.lines.push_back(ln);
    }
  }

  std::vector<Generator> given(n);
  std::vector<bool> has_gen(n, false);
  if (doc.contains("generators")) {
    const json& gens = doc.at("generators");
    if (!gens.is_array()) {
      throw ParseError("case.generators: expected an array");
    }
    for (size_t i = 0; i < gens.size(); ++i) {
      const std::string where = "case.generators[" + std::to_string(i) + "]";
      const json& gj = gens[i];
      Generator g;
      g.node = node_ref(net, member(gj, "node", where), where + ".node");
      g.a = number(member(gj, "a", where), where + ".a");
      g.b = number(member(gj, "b", where), where + ".b");
      g.c = gj.contains("c") ? number(gj.at("c"), where + ".c") : 0.0;
      g.pmin = number(member(gj, "pmin", where), where + ".pmin");
      g.pmax = number(member(gj, "pmax", where), where + ".pmax");
      if (g.a <= 0.0) throw ValidationError(where + ".a: must be positive");
      if (g.pmin > g.pmax) {
        throw ValidationError(where + ": pmin exceeds pmax");
      }
      if (has_gen[g.node]) {
        throw ValidationError(where + ": node '" + net.node_ids[g.node] +
                              "' already has a generator");
      }
      has_gen[g.node] = true;
      given[g.node] = g;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!has_gen[i]) {
      Generator g;
      g.node = i;
      g.a = kSyntheticA;
      g.synthetic = true;
      given[i] = g;
    }
  }
  net.gens = std::move(given);

  net.base_load = Eigen::VectorXd::Zero(n);
  if (doc.contains("base_load")) {
    const json& bl = doc.at("base_load");
    if (!bl.is_array()) throw ParseError("case.base_load: expected an array");
    std::set<int> seen;
    for (size_t i = 0; i < bl.size(); ++i) {
      const std::string where = "case.base_load[" + std::to_string(i) + "]";
      const int node = node_ref(net, member(bl[i], "node", where), where + ".node");
      if (!seen.insert(node).second) {
        throw ValidationError(where + ": duplicate entry for node '" +
                              net.node_ids[node] + "'");
      }
      net.base_load(node) = number(member(bl[i], "mw", where), where + ".mw");
    }
  }

  // Default admissible interval: between zero and twice the base load.
  net.box_lo.resize(n);
  net.box_hi.resize(n);
  for (int i = 0; i < n; ++i) {
    net.box_lo(i) = std::min(0.0, 2.0 * net.base_load(i));
    net.box_hi(i) = std::max(0.0, 2.0 * net.base_load(i));
  }
  if (doc.contains("load_box")) {
    const json& lb = doc.at("load_box");
    if (!lb.is_array()) throw ParseError("case.load_box: expected an array");
    std::set<int> seen;
    for (size_t i = 0; i < lb.size(); ++i) {
      const std::string where = "case.load_box[" + std::to_string(i) + "]";
      const int node = node_ref(net, member(lb[i], "node", where), where + ".node");
      if (!seen.insert(node).second) {
        throw ValidationError(where + ": duplicate entry for node '" +
                              net.node_ids[node] + "'");
      }
      const double lo = number(member(lb[i], "lo", where), where + ".lo");
      const double hi = number(member(lb[i], "hi", where), where + ".hi");
      if (lo > hi) throw ValidationError(where + ": lo exceeds hi");
      net.box_lo(node) = lo;
      net.box_hi(node) = hi;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (net.base_load(i) < net.box_lo(i) - 1e-12 ||
        net.base_load(i) > net.box_hi(i) + 1e-12) {
      throw ValidationError("case.load_box: base load at node '" +
                            net.node_ids[i] +
                            "' lies outside its admissible interval");
    }
  }
  return net;
}

NetworkCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_case_text(buf.str());
}

Eigen::MatrixXd build_shift_factors(const NetworkCase& net) {
  const int n = net.n();
  const int l = net.l();
  if (n == 1) return Eigen::MatrixXd::Zero(l, 1);

  // Connectivity first, so islanding gets a readable error instead of a
  // numerical one.
  std::vector<std::vector<int>> adj(n);
  for (const Line& ln : net.lines) {
    adj[ln.from].push_back(ln.to);
    adj[ln.to].push_back(ln.from);
  }
  std::vector<bool> seen(n, false);
  std::vector<int> stack = {net.slack};
  seen[net.slack] = true;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!seen[i]) {
      throw ValidationError("network is not connected: node '" +
                            net.node_ids[i] + "' is unreachable from the slack");
    }
  }

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(l, n);
  Eigen::VectorXd binv(l);
  for (int e = 0; e < l; ++e) {
    C(e, net.lines[e].from) = 1.0;
    C(e, net.lines[e].to) = -1.0;
    binv(e) = 1.0 / net.lines[e].x;
  }
  const Eigen::MatrixXd bbus = C.transpose() * binv.asDiagonal() * C;

  // Drop the slack row/column, invert the reduced susceptance matrix.
  std::vector<int> keep;
  keep.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    if (i != net.slack) keep.push_back(i);
  }
  Eigen::MatrixXd bred(n - 1, n - 1);
  for (int i = 0; i < n - 1; ++i) {
    for (int j = 0; j < n - 1; ++j) bred(i, j) = bbus(keep[i], keep[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(bred);
  if (llt.info() != Eigen::Success) {
    throw NumericsError("build_shift_factors: singular susceptance matrix");
  }

  Eigen::MatrixXd cred(l, n - 1);
  for (int j = 0; j < n - 1; ++j) cred.col(j) = C.col(keep[j]);
  const Eigen::MatrixXd hred =
      binv.asDiagonal() * cred * llt.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(l, n);
  for (int j = 0; j < n - 1; ++j) H.col(keep[j]) = hred.col(j);
  return H;
}

}  // namespace drt
