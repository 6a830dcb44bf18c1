// SPDX-License-Identifier: MIT

/// \file lkstab/dual_lmi.hpp
/// \brief Assembly of the stability feasibility programs and the
/// margin-bisection driver.
///
/// A delay system is certified exponentially stable by exhibiting a
/// complete-quadratic functional that is coercive and whose derivative
/// form along the dynamics is negative (LyapunovForm selects between the
/// classical trajectory derivative and the dual composed-operator form).
/// Both conditions flatten to multiplier/kernel pairs over the delay grid;
/// each pair, adjusted by a spacing operator (which changes nothing about
/// the form), must be a member of the Gram-certified positive cone.
/// Everything reduces to linear coefficient matching between affine
/// polynomial families plus PSD constraints: one semidefinite feasibility
/// program.

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lkstab/complete_quad_op.hpp"
#include "lkstab/delay_system.hpp"
#include "lkstab/derivative_op.hpp"
#include "lkstab/ipm.hpp"
#include "lkstab/mult_kernel_op.hpp"
#include "lkstab/sdp_problem.hpp"
#include "lkstab/soscone.hpp"
#include "lkstab/spacing.hpp"

namespace lkstab {

/// How the cone degree d' and the operator support derive from the
/// user-facing degree d.
enum class DegreePolicy {
  kConeSameDegree,  ///< operator tensor support d, cone degree d.
  kConePlusOne,     ///< operator tensor support d, cone degree d+1 (default).
  kConeInduced,     ///< operator support matched to the cone image, cone d.
};

/// Which Lyapunov argument the multi-delay assembly encodes. The two forms
/// pair a tuple constraint set with the matching derivative construction;
/// mixing them is not sound, so they switch together.
enum class LyapunovForm {
  /// Classical direction (default): the tuple parameterizes a quadratic
  /// functional V, free of structural boundary ties, and the decrease side
  /// is the literal d/dt V along trajectories (derivative_op_trajectory).
  /// Strictly larger search space at equal degree; decisively stronger on
  /// multi-delay problems.
  kClassicalLk,
  /// Dual direction: the tuple is constrained to a self-adjoint,
  /// structure-preserving operator (boundary equalities active) and the
  /// decrease side is the composed-operator form (derivative_op_multi).
  kDualOperator,
};

struct AssembleOptions {
  DegreePolicy policy = DegreePolicy::kConePlusOne;
  /// Per-variable degree of the spacing generating functions; -1 derives it
  /// from the cone expansion degree (2d' + 2) so spacing can absorb every
  /// cone monomial outside the operator image.
  int spacing_degree = -1;
  FlattenMode flatten = FlattenMode::kJacobianCorrected;
  /// Route K = 1 systems through the multi-delay assembly (cross-check).
  bool force_multi = false;
  /// Lyapunov argument encoded by the multi-delay assembly (the single-delay
  /// block form is inherently the dual one; this switch does not affect it).
  LyapunovForm form = LyapunovForm::kClassicalLk;
};

/// The assembled feasibility program plus the handles needed to pull a
/// certificate back out of a solution.
struct StabilityProgram {
  DelaySystem sys;
  int d = 0;
  int cone_degree = 0;
  double epsilon = 0.0;
  SdpProblem problem;
  CompleteQuadOp op;  ///< Affine-entry operator family (certificate shape).
};

/// Default coercivity shift: small relative to the system scale.
inline double default_epsilon(const DelaySystem& sys) {
  return 1e-3 * std::max(1.0, sys.A(0).norm());
}

namespace lmi_detail {

inline int cone_degree_for(int d, DegreePolicy policy) {
  return policy == DegreePolicy::kConePlusOne ? d + 1 : d;
}

inline OperatorSupport support_for(int d, DegreePolicy policy) {
  return policy == DegreePolicy::kConeInduced ? OperatorSupport::cone_induced(d)
                                              : OperatorSupport::tensor(d);
}

/// Basis-row caps for one cone side. The interval weight's -s^2 leading
/// term lifts its segment-diagonal output to degree 2 d' + 2, where the
/// unit family (topping out at 2 d') has nothing to cancel against; when
/// the matched multiplier diagonal has lower degree than that, those top
/// coefficients are pure positively-weighted sums of Gram diagonals pinned
/// to zero, which forces the rows themselves to zero and glues the whole
/// program to the boundary of the PSD cone (no Slater point). Dropping
/// exactly that top interval row restores strict feasibility without
/// shrinking what the cone can express. Every other basis row enters some
/// mixed-sign matching functional and stays.
inline XiOptions cone_caps(int finite, int s_degree, int dprime) {
  XiOptions options;
  if (s_degree >= 2 * dprime + 2) return options;  // nothing sticks out
  ConeCaps caps;
  caps.finite = finite;
  caps.y1_segment = dprime >= 1 ? dprime - 1 : -2;
  options.interval_caps = caps;
  return options;
}

/// Ties a fresh cone member to the target pair: cone.M == target_M,
/// cone.N == target_N, coefficient-wise, piece by piece.
inline void match_cone(SdpProblem& problem, const MultKernelOp& cone,
                       const PiecewisePoly1D& target_m,
                       const PiecewisePoly2D& target_n) {
  const IntervalGrid& grid = cone.grid();
  for (int i = 0; i < grid.pieces(); ++i) {
    problem.add_poly_equality(cone.M.piece(i), target_m.piece(i));
    for (int j = 0; j < grid.pieces(); ++j)
      problem.add_poly_equality(cone.N.piece(i, j), target_n.piece(i, j));
  }
}

inline MatrixPoly leading_block_identity(int total, int n, double eps) {
  MatrixPoly out(total, total);
  add_block(out, 0, 0, MatrixPoly::identity(n, eps));
  return out;
}

}  // namespace lmi_detail

/// Single-delay program (the 2n/3n block form). The operator's P and Q are
/// already eliminated by substitution inside make_free_operator, so the
/// program has no structural rows; the coercivity shift enters as -eps I on
/// the full multiplier and +eps on the leading derivative blocks.
inline StabilityProgram assemble_single(const DelaySystem& sys, int d,
                                        double epsilon,
                                        const AssembleOptions& options = {}) {
  if (sys.K() != 1)
    throw std::invalid_argument("assemble_single: system must have K = 1");
  if (d < 0 || epsilon <= 0.0)
    throw std::invalid_argument("assemble_single: need d >= 0, epsilon > 0");
  const int n = sys.n();
  const IntervalGrid grid = sys.grid();
  const int dprime = lmi_detail::cone_degree_for(d, options.policy);
  const int d_sp =
      options.spacing_degree >= 0 ? options.spacing_degree : 2 * dprime + 2;

  StabilityProgram prog{sys, d, dprime, epsilon, {}, {}};
  SdpProblem& problem = prog.problem;
  const OperatorSupport support = lmi_detail::support_for(d, options.policy);
  prog.op = make_free_operator(problem, n, 1, sys.taus(), support);

  // Coercivity side: {M0, N0} = flattened operator; M = M0 + F1 - eps I.
  MultKernelOp flat = flatten_l1(l1_input(prog.op), options.flatten);
  SpacingOp sp1 = spacing_make(problem, n, n, grid, d_sp);
  PiecewisePoly1D target_m = flat.M + sp1.F;
  for (int i = 0; i < grid.pieces(); ++i)
    target_m.piece(i) -= MatrixPoly::identity(2 * n, epsilon);
  PiecewisePoly2D target_n = flat.N + sp1.H;
  XiMember cone1 = make_xi_member(
      problem, dprime, 2 * n, grid,
      lmi_detail::cone_caps(n, support.s_degree, dprime));
  lmi_detail::match_cone(problem, cone1.op, target_m, target_n);

  // Derivative side: the explicit single-delay block form, eps on the
  // leading diagonal block and on Sdot, then flattened, spaced, negated,
  // and cone-matched.
  DerivativeOpSingle deriv =
      derivative_op_single(sys, prog.op.S[0], prog.op.r(0, 0));
  L1Input dinput{
      deriv.D0 + lmi_detail::leading_block_identity(2 * n, n, epsilon),
      {deriv.V},
      {deriv.Sdot + MatrixPoly::identity(n, epsilon)},
      {deriv.E},
      grid};
  MultKernelOp dflat = flatten_l1(dinput, options.flatten);
  SpacingOp sp2 = spacing_make(problem, 2 * n, n, grid, d_sp);
  PiecewisePoly1D target_d = dflat.M + sp2.F;
  PiecewisePoly2D target_e = dflat.N + sp2.H;
  XiMember cone2 = make_xi_member(
      problem, dprime, 3 * n, grid,
      lmi_detail::cone_caps(2 * n, std::max(support.s_degree - 1, 0), dprime));
  lmi_detail::match_cone(problem, cone2.op, -target_d, -target_e);

  for (const auto& row : sp1.constraints) problem.add_equality(row);
  for (const auto& row : sp2.constraints) problem.add_equality(row);
  return prog;
}

/// Multi-delay program (any K >= 1). The coercivity shift enters both
/// inside the flattening (P - eps I, S_i - eps I) and as -eps I on the
/// assembled multiplier. Under LyapunovForm::kClassicalLk (default) the
/// tuple is free of boundary ties and the decrease side is the trajectory
/// derivative; under kDualOperator the structural equalities are active and
/// the decrease side is the composed-operator form.
inline StabilityProgram assemble_multi(const DelaySystem& sys, int d,
                                       double epsilon,
                                       const AssembleOptions& options = {}) {
  if (d < 0 || epsilon <= 0.0)
    throw std::invalid_argument("assemble_multi: need d >= 0, epsilon > 0");
  const int n = sys.n();
  const int K = sys.K();
  const IntervalGrid grid = sys.grid();
  const int dprime = lmi_detail::cone_degree_for(d, options.policy);
  const int d_sp =
      options.spacing_degree >= 0 ? options.spacing_degree : 2 * dprime + 2;
  const bool classical = options.form == LyapunovForm::kClassicalLk;

  StabilityProgram prog{sys, d, dprime, epsilon, {}, {}};
  SdpProblem& problem = prog.problem;
  const OperatorSupport support = lmi_detail::support_for(d, options.policy);
  prog.op = make_free_operator(problem, n, K, sys.taus(), support);
  if (!classical)
    for (const auto& row : prog.op.structural_constraints)
      problem.add_equality(row);

  // Coercivity side.
  L1Input shifted = l1_input(prog.op);
  shifted.P -= MatrixPoly::identity(n, epsilon);
  for (auto& s : shifted.S) s -= MatrixPoly::identity(n, epsilon);
  MultKernelOp flat = flatten_l1(shifted, options.flatten);
  SpacingOp sp1 = spacing_make(problem, n, n, grid, d_sp);
  PiecewisePoly1D target_m = flat.M + sp1.F;
  for (int i = 0; i < grid.pieces(); ++i)
    target_m.piece(i) -= MatrixPoly::identity(2 * n, epsilon);
  PiecewisePoly2D target_n = flat.N + sp1.H;
  XiMember cone1 = make_xi_member(
      problem, dprime, 2 * n, grid,
      lmi_detail::cone_caps(n, support.s_degree, dprime));
  lmi_detail::match_cone(problem, cone1.op, target_m, target_n);

  // Derivative side over the extended finite state of dimension n(K+1).
  DerivativeOpMulti deriv = classical ? derivative_op_trajectory(sys, prog.op)
                                      : derivative_op_multi(sys, prog.op);
  const int m = n * (K + 1);
  L1Input dinput = deriv.l1_input();
  dinput.P += lmi_detail::leading_block_identity(m, n, epsilon);
  for (auto& s : dinput.S) s += MatrixPoly::identity(n, epsilon);
  MultKernelOp dflat = flatten_l1(dinput, options.flatten);
  SpacingOp sp2 = spacing_make(problem, m, n, grid, d_sp);
  PiecewisePoly1D target_d = dflat.M + sp2.F;
  PiecewisePoly2D target_e = dflat.N + sp2.H;
  XiMember cone2 = make_xi_member(
      problem, dprime, n * (K + 2), grid,
      lmi_detail::cone_caps(m, std::max(support.s_degree - 1, 0), dprime));
  lmi_detail::match_cone(problem, cone2.op, -target_d, -target_e);

  for (const auto& row : sp1.constraints) problem.add_equality(row);
  for (const auto& row : sp2.constraints) problem.add_equality(row);
  return prog;
}

/// Routes to the single- or multi-delay assembly.
inline StabilityProgram assemble(const DelaySystem& sys, int d, double epsilon,
                                 const AssembleOptions& options = {}) {
  if (sys.K() == 1 && !options.force_multi)
    return assemble_single(sys, d, epsilon, options);
  return assemble_multi(sys, d, epsilon, options);
}

/// Feasibility verdict plus the independently recomputed solution quality.
struct StabilityReport {
  bool feasible = false;
  SdpStatus status = SdpStatus::unknown;
  int d = 0;
  double epsilon = 0.0;
  int iterations = 0;
  double solve_seconds = 0.0;
  double margin = 0.0;  ///< Phase-I PSD slack of the returned iterate.
  double max_equality_residual = 0.0;
  double min_eigenvalue = 0.0;
  std::string detail;
  bool has_certificate = false;
  CompleteQuadOp certificate;  ///< Numeric operator when feasible.
};

/// Solves the assembled program. A solver breakdown is reported as
/// status unknown (never as infeasible), and a "feasible" answer is
/// downgraded to unknown unless the recomputed residuals actually meet the
/// certification gates.
inline StabilityReport check_feasible(const StabilityProgram& prog,
                                      const SolveOptions& solver = {}) {
  StabilityReport rep;
  rep.d = prog.d;
  rep.epsilon = prog.epsilon;

  SdpSolution sol = solve(prog.problem, solver);
  rep.status = sol.status;
  rep.iterations = sol.iterations;
  rep.solve_seconds = sol.solve_seconds;
  rep.margin = sol.margin;
  rep.detail = sol.detail;

  if (sol.status == SdpStatus::feasible) {
    VerifyReport vr = verify(prog.problem, sol.assignment);
    rep.max_equality_residual = vr.max_equality_residual;
    rep.min_eigenvalue = vr.min_eigenvalue;
    const double res_tol = 1e-6;
    const double eig_tol = 1e-7;
    if (vr.max_equality_residual < res_tol && vr.min_eigenvalue > -eig_tol) {
      rep.feasible = true;
      rep.has_certificate = true;
      rep.certificate = with_values(prog.op, sol.assignment);
    } else {
      rep.status = SdpStatus::unknown;
      rep.detail = "solution failed certification gates (residual " +
                   std::to_string(vr.max_equality_residual) + ", min eig " +
                   std::to_string(vr.min_eigenvalue) + ")";
    }
  }
  return rep;
}

/// A one-parameter family of delay systems, e.g. a gain or delay sweep.
struct ParameterizedFamily {
  std::function<DelaySystem(double)> at;
  std::string name;
};

/// lambda -> {A_i + lambda * dA_i} with fixed delays.
inline ParameterizedFamily matrix_direction_family(
    const DelaySystem& base, std::vector<Eigen::MatrixXd> directions,
    std::string name = "matrix sweep") {
  if (directions.size() != base.matrices().size())
    throw std::invalid_argument("matrix_direction_family: direction count");
  return ParameterizedFamily{
      [base, dirs = std::move(directions)](double lambda) {
        std::vector<Eigen::MatrixXd> mats = base.matrices();
        for (std::size_t i = 0; i < mats.size(); ++i)
          mats[i] += lambda * dirs[i];
        return DelaySystem(std::move(mats), base.taus());
      },
      std::move(name)};
}

/// lambda -> same matrices, delays scaled to lambda * (tau_i / tau_K).
inline ParameterizedFamily delay_scaling_family(const DelaySystem& base,
                                                std::string name = "delay sweep") {
  return ParameterizedFamily{
      [base](double lambda) {
        std::vector<double> taus = base.taus();
        const double tau_K = taus.back();
        for (double& t : taus) t *= lambda / tau_K;
        return DelaySystem(base.matrices(), std::move(taus));
      },
      std::move(name)};
}

struct BisectionStep {
  double lambda = 0.0;
  SdpStatus status = SdpStatus::unknown;
  bool certified = false;
  double solve_seconds = 0.0;
  int iterations = 0;
};

struct MarginResult {
  bool valid = false;
  double margin = 0.0;  ///< Largest (or smallest) certified-feasible lambda.
  double uncertified = 0.0;  ///< Bracket endpoint on the uncertified side.
  std::vector<BisectionStep> log;
  std::string note;
};

struct BisectionOptions {
  int d = 1;
  double epsilon = -1.0;  ///< <= 0: per-system default_epsilon.
  double tol = 1e-3;
  int max_steps = 60;
  AssembleOptions assemble;
  SolveOptions solver;
};

/// Bisects the family parameter between a certified-feasible endpoint and an
/// uncertified one. Solver "unknown" outcomes count as uncertified (the
/// bracket shrinks toward the feasible side) and are flagged in the log.
/// The reported margin is the last certified-feasible lambda: a true
/// stability certificate, with the usual one-sided-guarantee semantics.
inline MarginResult margin_bisection(const ParameterizedFamily& family,
                                     double lo, double hi,
                                     const BisectionOptions& options = {}) {
  MarginResult result;
  auto probe = [&](double lambda) {
    DelaySystem sys = family.at(lambda);
    const double eps =
        options.epsilon > 0.0 ? options.epsilon : default_epsilon(sys);
    StabilityProgram prog = assemble(sys, options.d, eps, options.assemble);
    StabilityReport rep = check_feasible(prog, options.solver);
    result.log.push_back(BisectionStep{lambda, rep.status, rep.feasible,
                                       rep.solve_seconds, rep.iterations});
    return rep.feasible;
  };

  const bool lo_ok = probe(lo);
  const bool hi_ok = probe(hi);
  if (lo_ok == hi_ok) {
    result.note = lo_ok ? "both endpoints certified feasible"
                        : "no certified-feasible endpoint";
    return result;
  }
  double good = lo_ok ? lo : hi;
  double bad = lo_ok ? hi : lo;
  for (int step = 0; step < options.max_steps; ++step) {
    if (std::abs(good - bad) <= options.tol) break;
    const double mid = 0.5 * (good + bad);
    if (probe(mid))
      good = mid;
    else
      bad = mid;
  }
  result.valid = true;
  result.margin = good;
  result.uncertified = bad;
  return result;
}

}  // namespace lkstab
