#include "drt/mpqp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "drt/errors.hpp"
#include "drt/lp.hpp"

namespace drt {
namespace {

constexpr double kRowDropTol = 1e-12;  // zero-normal rows in region cuts
constexpr double kMergeGapTol = 1e-9;  // interior found outside A and B

double unit_draw(std::mt19937_64& rng) {
  // 53-bit mantissa draw; bit-identical across platforms, unlike the
  // distributions in <random>.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string vec_str(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os.precision(6);
  os << "[";
  for (int i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << "]";
  return os.str();
}

}  // namespace

Eigen::VectorXd ParameterSpace::lift(const Eigen::VectorXd& z) const {
  if (z.size() != dim()) throw ValidationError("lift: wrong free dimension");
  Eigen::VectorXd load = fixed_load;
  for (int k = 0; k < dim(); ++k) load(free_nodes[k]) = z(k);
  return load;
}

Eigen::VectorXd ParameterSpace::project(const Eigen::VectorXd& load) const {
  if (load.size() != n_nodes) throw ValidationError("project: wrong length");
  Eigen::VectorXd z(dim());
  for (int k = 0; k < dim(); ++k) z(k) = load(free_nodes[k]);
  return z;
}

ParameterSpace make_parameter_space(const NetworkCase& net) {
  ParameterSpace ps;
  ps.n_nodes = net.n();
  ps.fixed_load = net.base_load;
  for (int i = 0; i < net.n(); ++i) {
    if (net.box_hi(i) - net.box_lo(i) > 0.0) {
      ps.free_nodes.push_back(i);
    } else {
      ps.fixed_load(i) = net.box_lo(i);
    }
  }
  return ps;
}

Polytope domain_box(const NetworkCase& net, const ParameterSpace& ps) {
  const int d = ps.dim();
  Polytope box;
  box.tag = "domain";
  box.R = Eigen::MatrixXd::Zero(2 * d, d);
  box.r.resize(2 * d);
  for (int k = 0; k < d; ++k) {
    box.R(2 * k, k) = 1.0;
    box.r(2 * k) = net.box_hi(ps.free_nodes[k]);
    box.R(2 * k + 1, k) = -1.0;
    box.r(2 * k + 1) = -net.box_lo(ps.free_nodes[k]);
  }
  return box;
}

Sensitivity compute_sensitivity(const ScedQp& sced, const Eigen::VectorXd& load,
                                const DispatchResult& dr) {
  const int N = sced.n(), L = sced.l();
  const int m_line = 2 * L, m_gen = 2 * N;
  const int dim = N + 1 + m_line + m_gen;

  Eigen::MatrixXd a_line(m_line, N);
  a_line.topRows(L) = sced.H;
  a_line.bottomRows(L) = -sced.H;
  Eigen::MatrixXd a_gen(m_gen, N);
  a_gen.topRows(N) = Eigen::MatrixXd::Identity(N, N);
  a_gen.bottomRows(N) = -Eigen::MatrixXd::Identity(N, N);

  const Eigen::VectorXd hl = L > 0 ? Eigen::VectorXd(sced.H * load)
                                   : Eigen::VectorXd::Zero(0);
  Eigen::VectorXd b_line(m_line);
  b_line.head(L) = sced.f + hl;
  b_line.tail(L) = sced.f - hl;
  Eigen::VectorXd b_gen(m_gen);
  b_gen.head(N) = sced.pmax;
  b_gen.tail(N) = -sced.pmin;

  Eigen::VectorXd mu(m_line);
  mu.head(L) = dr.mu_upper;
  mu.tail(L) = dr.mu_lower;
  Eigen::VectorXd psi(m_gen);
  psi.head(N) = dr.psi_upper;
  psi.tail(N) = dr.psi_lower;

  const Eigen::VectorXd slack_line = a_line * dr.generation - b_line;
  const Eigen::VectorXd slack_gen = a_gen * dr.generation - b_gen;

  // KKT Jacobian: stationarity, balance, and one complementarity row per
  // inequality, differentiated at the solution.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  M.block(0, 0, N, N) = Eigen::MatrixXd(sced.a.asDiagonal());
  M.block(0, N, N, 1) = Eigen::VectorXd::Ones(N);
  if (L > 0) M.block(0, N + 1, N, m_line) = a_line.transpose();
  M.block(0, N + 1 + m_line, N, m_gen) = a_gen.transpose();
  M.block(N, 0, 1, N) = Eigen::RowVectorXd::Ones(N);
  if (L > 0) {
    M.block(N + 1, 0, m_line, N) = mu.asDiagonal() * a_line;
    M.block(N + 1, N + 1, m_line, m_line) =
        Eigen::MatrixXd(slack_line.asDiagonal());
  }
  M.block(N + 1 + m_line, 0, m_gen, N) = psi.asDiagonal() * a_gen;
  M.block(N + 1 + m_line, N + 1 + m_line, m_gen, m_gen) =
      Eigen::MatrixXd(slack_gen.asDiagonal());

  Eigen::MatrixXd Nrhs = Eigen::MatrixXd::Zero(dim, N);
  Nrhs.block(N, 0, 1, N) = Eigen::RowVectorXd::Ones(N);
  if (L > 0) {
    Eigen::MatrixXd dbdl(m_line, N);
    dbdl.topRows(L) = sced.H;
    dbdl.bottomRows(L) = -sced.H;
    Nrhs.block(N + 1, 0, m_line, N) = mu.asDiagonal() * dbdl;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) {
    throw NumericsError(
        "sensitivity: singular KKT Jacobian (degenerate active set)");
  }
  const Eigen::MatrixXd X = lu.solve(Nrhs);
  if ((M * X - Nrhs).cwiseAbs().maxCoeff() >
      1e-6 * (1.0 + Nrhs.cwiseAbs().maxCoeff())) {
    throw NumericsError("sensitivity: ill-conditioned KKT Jacobian");
  }

  Sensitivity s;
  s.gen = X.topRows(N);
  s.gamma = -X.row(N);  // internal multiplier sign -> price convention
  s.mu = X.middleRows(N + 1, m_line);
  s.psi = X.bottomRows(m_gen);
  return s;
}

Eigen::VectorXd AffinePiece::lmp_at(const Eigen::VectorXd& load) const {
  return F * load + g;
}

Eigen::VectorXd AffinePiece::generation_at(const Eigen::VectorXd& load) const {
  return gen0 + gen_jac * (load - base_load);
}

CriticalRegion build_region(const ScedQp& sced, const ParameterSpace& ps,
                            const NetworkCase& net, const Eigen::VectorXd& load,
                            const DispatchResult& dr) {
  const int N = sced.n(), L = sced.l();
  const int m = 2 * L + 2 * N;
  const int d = ps.dim();
  const Sensitivity sens = compute_sensitivity(sced, load, dr);

  CriticalRegion cr;
  AffinePiece& pc = cr.piece;
  pc.base_load = load;
  pc.gen0 = dr.generation;
  pc.gen_jac = sens.gen;
  pc.gamma0 = dr.gamma;
  pc.gamma_jac = sens.gamma;
  pc.mu0.resize(2 * L);
  pc.mu0.head(L) = dr.mu_upper;
  pc.mu0.tail(L) = dr.mu_lower;
  pc.mu_jac = sens.mu;
  pc.psi0.resize(2 * N);
  pc.psi0.head(N) = dr.psi_upper;
  pc.psi0.tail(N) = dr.psi_lower;
  pc.psi_jac = sens.psi;
  pc.F = Eigen::MatrixXd::Zero(N, N);
  pc.F.rowwise() += Eigen::RowVectorXd(sens.gamma);
  if (L > 0) {
    pc.F -= sced.H.transpose() *
            (sens.mu.topRows(L) - sens.mu.bottomRows(L));
  }
  pc.g = dr.lmp - pc.F * load;
  pc.active_set = dr.active_set;

  // Region cuts in free coordinates.  Inactive primal rows must stay
  // satisfied by the affine solution; active multipliers must stay
  // nonnegative; and z stays in the admissible box.
  const Eigen::MatrixXd A = sced.ineq_matrix();
  const Eigen::VectorXd b0 = sced.ineq_rhs(load);
  const Eigen::VectorXd z0 = ps.project(load);

  Eigen::MatrixXd jp_free(N, d);
  Eigen::MatrixXd dual_jac_free(2 * L + 2 * N, d);
  Eigen::MatrixXd db_free = Eigen::MatrixXd::Zero(m, d);
  for (int k = 0; k < d; ++k) {
    const int node = ps.free_nodes[k];
    jp_free.col(k) = sens.gen.col(node);
    dual_jac_free.col(k).head(2 * L) = sens.mu.col(node);
    dual_jac_free.col(k).tail(2 * N) = sens.psi.col(node);
    if (L > 0) {
      db_free.col(k).head(L) = sced.H.col(node);
      db_free.col(k).segment(L, L) = -sced.H.col(node);
    }
  }

  std::vector<bool> is_active(m, false);
  for (int j : dr.active_set) is_active[j] = true;

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (int j = 0; j < m; ++j) {
    Eigen::RowVectorXd v(d);
    double c;
    if (is_active[j]) {
      // dual_j(z) >= 0
      v = -dual_jac_free.row(j);
      const double d0 = j < 2 * L ? pc.mu0(j) : pc.psi0(j - 2 * L);
      c = d0 + v.dot(z0);
    } else {
      // A_j (gen0 + Jp (z - z0)) <= b_j(z)
      v = A.row(j) * jp_free - db_free.row(j);
      c = b0(j) - A.row(j).dot(dr.generation) + v.dot(z0);
    }
    const double nrm = v.norm();
    if (nrm <= kRowDropTol) {
      if (c < -1e-9) {
        throw NumericsError("build_region: inconsistent zero row");
      }
      continue;
    }
    rows.push_back(v / nrm);
    rhs.push_back(c / nrm);
  }

  const Polytope box = domain_box(net, ps);
  Polytope raw;
  raw.R.resize(static_cast<int>(rows.size()) + box.rows(), d);
  raw.r.resize(static_cast<int>(rows.size()) + box.rows());
  for (size_t i = 0; i < rows.size(); ++i) {
    raw.R.row(static_cast<int>(i)) = rows[i];
    raw.r(static_cast<int>(i)) = rhs[i];
  }
  raw.R.bottomRows(box.rows()) = box.R;
  raw.r.tail(box.rows()) = box.r;

  cr.region = minimize_representation(raw);
  return cr;
}

std::optional<Eigen::VectorXd> find_feasible_load(const ScedQp& sced,
                                                  const ParameterSpace& ps,
                                                  const Polytope& within) {
  const int N = sced.n(), L = sced.l(), d = ps.dim();
  const ChebyshevResult cc = chebyshev_center(within);
  if (!cc.feasible) return std::nullopt;

  // Constant part of the network load contributed by the pinned nodes.
  Eigen::VectorXd fixed_part = ps.fixed_load;
  for (int k = 0; k < d; ++k) fixed_part(ps.free_nodes[k]) = 0.0;

  QpProblem p;
  p.Q = Eigen::MatrixXd::Identity(N + d, N + d);
  p.Q.topLeftCorner(N, N) *= 1e-6;  // bias toward staying near the center
  p.q = Eigen::VectorXd::Zero(N + d);
  p.q.tail(d) = -cc.center;
  p.has_eq = true;
  p.e = Eigen::VectorXd::Ones(N + d);
  p.e.tail(d) *= -1.0;
  p.e_rhs = fixed_part.sum();

  const int rows_n = 2 * L + 2 * N + within.rows();
  p.A = Eigen::MatrixXd::Zero(rows_n, N + d);
  p.b.resize(rows_n);
  const Eigen::VectorXd h0 =
      L > 0 ? Eigen::VectorXd(sced.H * fixed_part) : Eigen::VectorXd::Zero(0);
  Eigen::MatrixXd h_free(L, d);
  for (int k = 0; k < d; ++k) {
    if (L > 0) h_free.col(k) = sced.H.col(ps.free_nodes[k]);
  }
  if (L > 0) {
    p.A.block(0, 0, L, N) = sced.H;
    p.A.block(0, N, L, d) = -h_free;
    p.b.head(L) = sced.f + h0;
    p.A.block(L, 0, L, N) = -sced.H;
    p.A.block(L, N, L, d) = h_free;
    p.b.segment(L, L) = sced.f - h0;
  }
  p.A.block(2 * L, 0, N, N) = Eigen::MatrixXd::Identity(N, N);
  p.b.segment(2 * L, N) = sced.pmax;
  p.A.block(2 * L + N, 0, N, N) = -Eigen::MatrixXd::Identity(N, N);
  p.b.segment(2 * L + N, N) = -sced.pmin;
  if (within.rows() > 0) {
    p.A.block(2 * L + 2 * N, N, within.rows(), d) = within.R;
    p.b.tail(within.rows()) = within.r;
  }

  try {
    const QpSolution qs = solve_qp(p);
    return Eigen::VectorXd(qs.x.tail(d));
  } catch (const InfeasibleError&) {
    return std::nullopt;
  }
}

std::vector<Polytope> partition_complement(const Polytope& base,
                                           const Polytope& region) {
  std::vector<Polytope> out;
  for (int i = 0; i < region.rows(); ++i) {
    Polytope piece;
    piece.tag = base.tag;
    piece.R.resize(base.rows() + i + 1, base.dim());
    piece.r.resize(base.rows() + i + 1);
    piece.R.topRows(base.rows()) = base.R;
    piece.r.head(base.rows()) = base.r;
    for (int k = 0; k < i; ++k) {
      piece.R.row(base.rows() + k) = region.R.row(k);
      piece.r(base.rows() + k) = region.r(k);
    }
    piece.R.row(base.rows() + i) = -region.R.row(i);
    piece.r(base.rows() + i) = -region.r(i);
    const ChebyshevResult cc = chebyshev_center(piece);
    if (!cc.feasible || cc.radius <= 1e-9) continue;
    out.push_back(minimize_representation(piece));
  }
  return out;
}

namespace {

bool rows_close(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const double scale = 1.0 + a.cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() <= 1e-8 * scale;
}

bool same_maps(const AffinePiece& a, const AffinePiece& b) {
  if (!rows_close(a.F, b.F)) return false;
  if (!rows_close(a.g, b.g)) return false;
  if (!rows_close(a.gen_jac, b.gen_jac)) return false;
  // Compare generation at a common point (load = 0) so different expansion
  // points cannot hide a genuinely different map.
  const Eigen::VectorXd ga = a.gen0 - a.gen_jac * a.base_load;
  const Eigen::VectorXd gb = b.gen0 - b.gen_jac * b.base_load;
  return rows_close(ga, gb);
}

// Max of v'z over the polytope; regions sit inside the load box, so the LP
// is always bounded.
double max_over(const Polytope& p, const Eigen::RowVectorXd& v) {
  const LpResult lp = solve_lp_max(v.transpose(), p.R, p.r);
  if (lp.status != LpStatus::Optimal) {
    throw NumericsError("unify: support LP failed");
  }
  return lp.value;
}

// Try to replace regions a and b by their convex hull.  Valid only when the
// union is itself convex; certified by cut-pair LPs plus random sampling.
bool try_merge(const CriticalRegion& a, const CriticalRegion& b,
               std::mt19937_64& rng, int sample_checks, Polytope* merged) {
  const Polytope& A = a.region;
  const Polytope& B = b.region;
  const int d = A.dim();

  std::vector<int> cut_a, cut_b;
  std::vector<Eigen::RowVectorXd> env_rows;
  std::vector<double> env_rhs;
  for (int i = 0; i < A.rows(); ++i) {
    if (max_over(B, A.R.row(i)) <= A.r(i) + 1e-9) {
      env_rows.emplace_back(A.R.row(i));
      env_rhs.push_back(A.r(i));
    } else {
      cut_a.push_back(i);
    }
  }
  for (int i = 0; i < B.rows(); ++i) {
    if (max_over(A, B.R.row(i)) <= B.r(i) + 1e-9) {
      env_rows.emplace_back(B.R.row(i));
      env_rhs.push_back(B.r(i));
    } else {
      cut_b.push_back(i);
    }
  }

  Polytope env;
  env.tag = A.tag;
  env.R.resize(static_cast<int>(env_rows.size()), d);
  env.r.resize(static_cast<int>(env_rows.size()));
  for (size_t i = 0; i < env_rows.size(); ++i) {
    env.R.row(static_cast<int>(i)) = env_rows[i];
    env.r(static_cast<int>(i)) = env_rhs[i];
  }

  // One region swallowing the other is the trivial merge.
  if (!cut_a.empty() && !cut_b.empty()) {
    // The envelope equals the union iff no envelope point violates a cut row
    // of A and a cut row of B at the same time, with interior to spare.
    for (int p : cut_a) {
      for (int q : cut_b) {
        Polytope probe = env;
        const int base = probe.rows();
        probe.R.conservativeResize(base + 2, d);
        probe.r.conservativeResize(base + 2);
        probe.R.row(base) = -A.R.row(p);
        probe.r(base) = -A.r(p);
        probe.R.row(base + 1) = -B.R.row(q);
        probe.r(base + 1) = -B.r(q);
        const ChebyshevResult cc = chebyshev_center(probe);
        if (cc.feasible && cc.radius > kMergeGapTol) return false;
      }
    }
  }

  // Sampling double-check: points of the envelope must land in A or B.
  Eigen::VectorXd lo(d), hi(d);
  for (int k = 0; k < d; ++k) {
    Eigen::RowVectorXd dir = Eigen::RowVectorXd::Zero(d);
    dir(k) = 1.0;
    hi(k) = max_over(env, dir);
    lo(k) = -max_over(env, -dir);
  }
  int accepted = 0;
  for (int draw = 0; draw < sample_checks * 20 && accepted < sample_checks;
       ++draw) {
    Eigen::VectorXd z(d);
    for (int k = 0; k < d; ++k) z(k) = lo(k) + (hi(k) - lo(k)) * unit_draw(rng);
    if (!contains(env, z, 1e-9)) continue;
    ++accepted;
    if (!contains(A, z, 1e-7) && !contains(B, z, 1e-7)) return false;
  }

  *merged = minimize_representation(env);
  return true;
}

}  // namespace

void unify_regions(Policy& policy, const PolicyBuildOptions& opt) {
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < policy.regions.size() && !changed; ++i) {
      for (size_t j = i + 1; j < policy.regions.size() && !changed; ++j) {
        if (!same_maps(policy.regions[i].piece, policy.regions[j].piece)) {
          continue;
        }
        Polytope merged;
        if (try_merge(policy.regions[i], policy.regions[j], rng,
                      opt.sample_checks, &merged)) {
          policy.regions[i].region = merged;
          policy.regions.erase(policy.regions.begin() +
                               static_cast<long>(j));
          changed = true;
        }
      }
    }
  }
  for (size_t i = 0; i < policy.regions.size(); ++i) {
    policy.regions[i].region.tag = "R" + std::to_string(i);
  }
}

Policy build_policy(const ScedQp& sced, const NetworkCase& net,
                    const PolicyBuildOptions& opt) {
  Policy policy;
  policy.space = make_parameter_space(net);
  const ParameterSpace& ps = policy.space;
  const int d = ps.dim();
  if (d == 0) {
    throw ValidationError(
        "build_policy: the load box pins every node; nothing to explore");
  }
  policy.domain = domain_box(net, ps);

  std::mt19937_64 rng(opt.seed);
  std::vector<Polytope> frontier = {policy.domain};
  int iter = 0;

  while (!frontier.empty()) {
    if (++iter > opt.max_iterations) {
      throw NumericsError("build_policy: exploration did not settle");
    }
    const Polytope piece = frontier.back();
    frontier.pop_back();

    const ChebyshevResult cc = chebyshev_center(piece);
    if (!cc.feasible || cc.radius < opt.min_radius) {
      if (cc.feasible && cc.radius >= 1e-9) {
        policy.notes.push_back("dropped sliver piece around " +
                               vec_str(cc.center));
      }
      continue;
    }

    // Seed the piece: its center if dispatchable, otherwise any feasible
    // load inside it.
    Eigen::VectorXd z_seed = cc.center;
    bool have_dispatch = false;
    DispatchResult dr;
    try {
      dr = dispatch(sced, ps.lift(z_seed), opt.qp);
      have_dispatch = true;
    } catch (const InfeasibleError&) {
    }
    if (!have_dispatch) {
      const auto zf = find_feasible_load(sced, ps, piece);
      if (!zf) {
        policy.notes.push_back("piece with no dispatchable load around " +
                               vec_str(cc.center));
        continue;
      }
      z_seed = *zf;
      dr = dispatch(sced, ps.lift(z_seed), opt.qp);
    }

    // Degenerate seeds sit on region boundaries; nudge off and retry.
    CriticalRegion cr;
    bool built = false;
    std::string last_err;
    for (int attempt = 0; attempt <= opt.perturb_retries && !built; ++attempt) {
      try {
        cr = build_region(sced, ps, net, ps.lift(z_seed), dr);
        built = true;
      } catch (const NumericsError& e) {
        last_err = e.what();
        bool moved = false;
        for (int tries = 0; tries < 32 && !moved; ++tries) {
          Eigen::VectorXd z_try(d);
          const double step =
              opt.perturb_scale * std::max(1.0, cc.radius) * (attempt + 1);
          for (int k = 0; k < d; ++k) {
            z_try(k) = z_seed(k) + step * (2.0 * unit_draw(rng) - 1.0);
          }
          if (!contains(piece, z_try, 0.0)) continue;
          try {
            dr = dispatch(sced, ps.lift(z_try), opt.qp);
            z_seed = z_try;
            moved = true;
          } catch (const InfeasibleError&) {
          }
        }
        if (!moved) break;
      }
    }
    if (!built) {
      policy.notes.push_back("degenerate seed skipped near " +
                             vec_str(cc.center) + ": " + last_err);
      continue;
    }

    // The same active set can resurface when a seed lands on a face shared
    // with an already-built region; reuse its polytope instead of duplicating.
    int dup = -1;
    for (size_t k = 0; k < policy.regions.size(); ++k) {
      if (policy.regions[k].piece.active_set == cr.piece.active_set) {
        dup = static_cast<int>(k);
        break;
      }
    }
    const Polytope* cut = nullptr;
    if (dup < 0) {
      cr.region.tag = "R" + std::to_string(policy.regions.size());
      policy.regions.push_back(cr);
      if (static_cast<int>(policy.regions.size()) > opt.max_regions) {
        throw NumericsError("build_policy: region budget exceeded");
      }
      cut = &policy.regions.back().region;
    } else {
      cut = &policy.regions[dup].region;
    }

    std::vector<Polytope> next;
    for (const Polytope& fp : frontier) {
      std::vector<Polytope> parts = partition_complement(fp, *cut);
      next.insert(next.end(), parts.begin(), parts.end());
    }
    std::vector<Polytope> own = partition_complement(piece, *cut);
    if (dup >= 0 && own.size() == 1) {
      // No real progress on a rediscovered region: drop the piece rather
      // than spin on it.
      const ChebyshevResult after = chebyshev_center(own[0]);
      if (after.feasible && std::abs(after.radius - cc.radius) <= 1e-12) {
        policy.notes.push_back("stalled piece dropped near " +
                               vec_str(cc.center));
        own.clear();
      }
    }
    next.insert(next.end(), own.begin(), own.end());
    frontier = std::move(next);
  }

  if (opt.unify) unify_regions(policy, opt);

  // Canonical numbering: sort by Chebyshev center, lexicographic with a 1e-9
  // tie band, so region indices do not depend on the exploration history.
  std::vector<Eigen::VectorXd> center(policy.regions.size());
  for (size_t i = 0; i < policy.regions.size(); ++i) {
    center[i] = chebyshev_center(policy.regions[i].region).center;
  }
  std::vector<size_t> ord(policy.regions.size());
  std::iota(ord.begin(), ord.end(), size_t{0});
  std::stable_sort(ord.begin(), ord.end(), [&](size_t a, size_t b) {
    for (int k = 0; k < d; ++k) {
      if (std::abs(center[a](k) - center[b](k)) > 1e-9) {
        return center[a](k) < center[b](k);
      }
    }
    return a < b;
  });
  std::vector<CriticalRegion> sorted;
  sorted.reserve(ord.size());
  for (size_t i : ord) sorted.push_back(std::move(policy.regions[i]));
  policy.regions = std::move(sorted);
  for (size_t i = 0; i < policy.regions.size(); ++i) {
    policy.regions[i].region.tag = "R" + std::to_string(i);
  }
  return policy;
}

PolicyEval evaluate(const Policy& policy, const Eigen::VectorXd& load,
                    double tol) {
  const ParameterSpace& ps = policy.space;
  if (load.size() != ps.n_nodes) {
    throw ValidationError("evaluate: load length mismatch");
  }
  PolicyEval ev;

  std::vector<bool> is_free(ps.n_nodes, false);
  for (int k : ps.free_nodes) is_free[k] = true;
  for (int i = 0; i < ps.n_nodes; ++i) {
    if (!is_free[i] &&
        std::abs(load(i) - ps.fixed_load(i)) >
            tol * (1.0 + std::abs(ps.fixed_load(i)))) {
      return ev;  // off the pinned slice: outside the policy domain
    }
  }

  const Eigen::VectorXd z = ps.project(load);
  if (!contains(policy.domain, z, tol)) return ev;
  for (size_t k = 0; k < policy.regions.size(); ++k) {
    if (contains(policy.regions[k].region, z, tol)) {
      ev.inside = true;
      ev.region = static_cast<int>(k);
      ev.lmp = policy.regions[k].piece.lmp_at(load);
      ev.generation = policy.regions[k].piece.generation_at(load);
      return ev;
    }
  }
  return ev;
}

}  // namespace drt
