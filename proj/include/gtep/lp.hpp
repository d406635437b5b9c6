#pragma once

// Reference LP solver: bounded-variable revised simplex with exact duals.
//
// Every constraint row i is written as  sum_j a_ij x_j - r_i = 0  with a
// logical variable r_i whose bounds encode the sense and right-hand side:
//
//   <= b :  r_i in (-inf, b]
//   =  b :  r_i in [b, b]
//   >= b :  r_i in [b, +inf)
//
// so the initial basis (all logicals) is always available and phase 1 only
// has to repair bound violations of basic variables.  The basis is held as a
// sparse LU factorization (Eigen SparseLU) followed by an eta file of pivot
// updates; it is refactorized every few dozen pivots and once more at the
// end, which keeps the reported duals accurate to ~1e-12 on desk-scale
// problems.  A previous optimal basis can be passed in as a warm start.
//
// Dual convention (minimization): dual[i] = d(objective)/d(rhs_i), hence
// duals of >= rows are >= 0 and duals of <= rows are <= 0.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gtep {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

struct Term {
  int var = 0;
  double coeff = 0.0;
};

struct LpVariable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
};

struct LpRow {
  std::string name;
  std::vector<Term> terms;
  RowSense sense = RowSense::kEqual;
  double rhs = 0.0;
};

// Minimization problem  min c'x  s.t. rows, bounds.
struct LinearProgram {
  std::vector<LpVariable> variables;
  std::vector<LpRow> rows;

  int add_variable(std::string name, double lower, double upper,
                   double cost = 0.0) {
    variables.push_back({std::move(name), lower, upper, cost});
    return static_cast<int>(variables.size()) - 1;
  }

  int add_row(std::string name, std::vector<Term> terms, RowSense sense,
              double rhs) {
    rows.push_back({std::move(name), std::move(terms), sense, rhs});
    return static_cast<int>(rows.size()) - 1;
  }

  int num_variables() const { return static_cast<int>(variables.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  // Empty string when well formed.
  std::string check() const {
    for (const auto& v : variables) {
      if (std::isnan(v.lower) || std::isnan(v.upper) || std::isnan(v.cost))
        return "variable " + v.name + " has NaN data";
      if (v.lower > v.upper) return "variable " + v.name + " has lower > upper";
      if (v.lower == kInf || v.upper == -kInf)
        return "variable " + v.name + " has an infinite fixed bound";
    }
    for (const auto& r : rows) {
      if (!std::isfinite(r.rhs)) return "row " + r.name + " has non-finite rhs";
      for (const auto& t : r.terms) {
        if (t.var < 0 || t.var >= num_variables())
          return "row " + r.name + " references variable out of range";
        if (!std::isfinite(t.coeff))
          return "row " + r.name + " has non-finite coefficient";
      }
    }
    return {};
  }

  double row_activity(int i, const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& t : rows[i].terms) s += t.coeff * x[t.var];
    return s;
  }
};

enum class LpStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kNumericalFailure,
  kNodeLimit,
};

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kNumericalFailure: return "numerical_failure";
    case LpStatus::kNodeLimit: return "node_limit";
  }
  return "unknown";
}

enum class BasisStatus : std::uint8_t { kBasic, kLower, kUpper, kFree };

// Final simplex basis, reusable as the starting point of a related LP with
// the same variables and possibly more rows appended at the end.
struct LpBasis {
  std::vector<BasisStatus> variables;
  std::vector<BasisStatus> rows;  // status of each row's logical variable

  bool empty() const { return variables.empty() && rows.empty(); }
};

struct LpSolution {
  LpStatus status = LpStatus::kNumericalFailure;
  std::vector<double> primal;
  std::vector<double> duals;  // one per row, d(obj)/d(rhs)
  double objective = 0.0;
  long iterations = 0;
  // MILP only.
  double best_bound = -kInf;
  double gap = 0.0;
  long nodes = 0;
  LpBasis basis;

  bool optimal() const { return status == LpStatus::kOptimal; }
};

struct SolverTolerances {
  double feasibility = 1e-7;  // primal / dual / complementarity
  double objective = 1e-6;    // relative strong-duality gap
  double pivot = 1e-9;
  double optimality = 1e-9;   // reduced-cost threshold for pricing
  long max_iterations = 200000;
  int degenerate_threshold = 50;  // consecutive degenerate pivots before Bland
  int refactor_interval = 50;
  bool verify = false;  // run the KKT audit on every optimal solve
};

// Outcome of the KKT audit; max_* are absolute violations.
struct KktReport {
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;     // wrong-signed reduced costs / duals
  double complementarity = 0.0;
  double duality_gap = 0.0;            // |primal - dual| / max(1, |primal|)
  double dual_objective = 0.0;

  bool ok(const SolverTolerances& tol) const {
    return primal_infeasibility <= tol.feasibility &&
           dual_infeasibility <= tol.feasibility &&
           complementarity <= tol.feasibility &&
           duality_gap <= tol.objective;
  }
};

inline KktReport audit_kkt(const LinearProgram& lp, const LpSolution& sol) {
  KktReport rep;
  const int n = lp.num_variables();
  const int m = lp.num_rows();
  std::vector<double> reduced(n);
  for (int j = 0; j < n; ++j) reduced[j] = lp.variables[j].cost;
  double dual_obj = 0.0;
  for (int i = 0; i < m; ++i) {
    const auto& row = lp.rows[i];
    const double y = sol.duals[i];
    const double act = lp.row_activity(i, sol.primal);
    double viol = 0.0;
    switch (row.sense) {
      case RowSense::kLessEqual:
        viol = std::max(0.0, act - row.rhs);
        rep.dual_infeasibility = std::max(rep.dual_infeasibility, y);
        break;
      case RowSense::kGreaterEqual:
        viol = std::max(0.0, row.rhs - act);
        rep.dual_infeasibility = std::max(rep.dual_infeasibility, -y);
        break;
      case RowSense::kEqual:
        viol = std::abs(act - row.rhs);
        break;
    }
    rep.primal_infeasibility = std::max(rep.primal_infeasibility, viol);
    rep.complementarity =
        std::max(rep.complementarity, std::abs(y * (act - row.rhs)) /
                                          std::max(1.0, std::abs(y)));
    dual_obj += y * row.rhs;
    for (const auto& t : row.terms) reduced[t.var] -= y * t.coeff;
  }
  for (int j = 0; j < n; ++j) {
    const auto& v = lp.variables[j];
    const double x = sol.primal[j];
    rep.primal_infeasibility = std::max(
        rep.primal_infeasibility, std::max(v.lower - x, x - v.upper));
    const double d = reduced[j];
    // d > 0 needs a finite lower bound at which x sits; d < 0 an upper bound.
    if (d > 0.0) {
      if (std::isfinite(v.lower)) {
        dual_obj += d * v.lower;
        rep.complementarity = std::max(
            rep.complementarity,
            std::abs(d * (x - v.lower)) / std::max(1.0, std::abs(d)));
      } else {
        rep.dual_infeasibility = std::max(rep.dual_infeasibility, d);
      }
    } else if (d < 0.0) {
      if (std::isfinite(v.upper)) {
        dual_obj += d * v.upper;
        rep.complementarity = std::max(
            rep.complementarity,
            std::abs(d * (v.upper - x)) / std::max(1.0, std::abs(d)));
      } else {
        rep.dual_infeasibility = std::max(rep.dual_infeasibility, -d);
      }
    }
  }
  rep.dual_objective = dual_obj;
  rep.duality_gap =
      std::abs(sol.objective - dual_obj) / std::max(1.0, std::abs(sol.objective));
  return rep;
}

// Abstract interface so an external LP code can be slotted in behind the
// same contract (primal, row duals with the convention above, status).
class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual LpSolution solve(const LinearProgram& lp, const LpBasis* hint) const = 0;
  LpSolution solve(const LinearProgram& lp) const { return solve(lp, nullptr); }
};

namespace detail {

// Sparse LU of a basis matrix followed by product-form pivot updates.
class BasisFactor {
 public:
  bool factor(const Eigen::SparseMatrix<double>& b) {
    etas_.clear();
    m_ = static_cast<int>(b.rows());
    if (m_ == 0) return true;
    lu_.analyzePattern(b);
    lu_.factorize(b);
    return lu_.info() == Eigen::Success;
  }

  // v <- B^{-1} v
  void ftran(Eigen::VectorXd& v) const {
    if (m_ == 0) return;
    v = lu_.solve(v);
    for (const auto& e : etas_) {
      const double xr = v[e.row] / e.pivot;
      if (xr != 0.0)
        for (const auto& [i, a] : e.entries) v[i] -= a * xr;
      v[e.row] = xr;
    }
  }

  // v <- B^{-T} v
  void btran(Eigen::VectorXd& v) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->row];
      for (const auto& [i, a] : it->entries) s -= a * v[i];
      v[it->row] = s / it->pivot;
    }
    v = lu_.transpose().solve(v);
  }

  // Basis column in position `row` replaced; alpha = B_old^{-1} a_enter.
  void update(int row, const Eigen::VectorXd& alpha) {
    Eta e;
    e.row = row;
    e.pivot = alpha[row];
    for (int i = 0; i < m_; ++i)
      if (i != row && alpha[i] != 0.0) e.entries.push_back({i, alpha[i]});
    etas_.push_back(std::move(e));
  }

  int updates() const { return static_cast<int>(etas_.size()); }

 private:
  struct Eta {
    int row = 0;
    double pivot = 1.0;
    std::vector<std::pair<int, double>> entries;
  };
  int m_ = 0;
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
};

class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const SolverTolerances& tol,
                 const LpBasis* hint = nullptr)
      : lp_(lp), tol_(tol), n_(lp.num_variables()), m_(lp.num_rows()), hint_(hint) {}

  LpSolution run() {
    LpSolution sol;
    if (!setup()) return sol;
    LpStatus st = LpStatus::kNumericalFailure;
    if (warm_ && !dual_phase()) return sol;
    // A refactorization at the end can reveal drift; allow a few repairs.
    for (int attempt = 0; attempt < 4; ++attempt) {
      st = iterate();
      if (st != LpStatus::kOptimal) break;
      if (!refactor()) {
        st = LpStatus::kNumericalFailure;
        break;
      }
      if (max_basic_infeasibility() <= tol_.feasibility) break;
      st = LpStatus::kNumericalFailure;
    }
    sol.status = st;
    sol.iterations = iterations_;
    if (st != LpStatus::kOptimal) return sol;

    sol.primal.assign(x_.begin(), x_.begin() + n_);
    // Snap structurals that drifted marginally outside their bounds.
    for (int j = 0; j < n_; ++j) {
      const auto& v = lp_.variables[j];
      sol.primal[j] = std::clamp(sol.primal[j], v.lower, v.upper);
    }
    Eigen::VectorXd y(m_);
    for (int r = 0; r < m_; ++r) y[r] = cost(basis_[r]);
    factor_.btran(y);
    sol.duals.assign(y.data(), y.data() + m_);
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += lp_.variables[j].cost * sol.primal[j];
    sol.objective = obj;
    sol.basis.variables.assign(state_.begin(), state_.begin() + n_);
    sol.basis.rows.assign(state_.begin() + n_, state_.end());
    return sol;
  }

 private:
  using State = BasisStatus;

  double cost(int j) const { return j < n_ ? lp_.variables[j].cost : 0.0; }

  bool setup() {
    const int total = n_ + m_;
    lo_.resize(total);
    up_.resize(total);
    x_.assign(total, 0.0);
    state_.assign(total, State::kLower);
    cols_.assign(n_, {});
    for (int i = 0; i < m_; ++i) {
      for (const auto& t : lp_.rows[i].terms) {
        if (t.coeff != 0.0) cols_[t.var].push_back({i, t.coeff});
      }
    }
    // Repeated terms in one row are summed.
    for (auto& col : cols_) {
      std::size_t out = 0;
      for (std::size_t e = 0; e < col.size(); ++e) {
        if (out > 0 && col[out - 1].first == col[e].first)
          col[out - 1].second += col[e].second;
        else
          col[out++] = col[e];
      }
      col.resize(out);
      std::erase_if(col, [](const auto& entry) { return entry.second == 0.0; });
    }
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp_.variables[j].lower;
      up_[j] = lp_.variables[j].upper;
    }
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[i];
      const int k = n_ + i;
      lo_[k] = row.sense == RowSense::kLessEqual ? -kInf : row.rhs;
      up_[k] = row.sense == RowSense::kGreaterEqual ? kInf : row.rhs;
    }
    if (hint_ != nullptr && apply_hint(*hint_) && refactor()) {
      warm_ = true;
      return true;
    }
    slack_basis();
    return refactor();
  }

  void place_nonbasic(int j, State preferred) {
    const bool has_lo = std::isfinite(lo_[j]), has_up = std::isfinite(up_[j]);
    if (preferred == State::kUpper && has_up) {
      state_[j] = State::kUpper;
      x_[j] = up_[j];
    } else if (has_lo) {
      state_[j] = State::kLower;
      x_[j] = lo_[j];
    } else if (has_up) {
      state_[j] = State::kUpper;
      x_[j] = up_[j];
    } else {
      state_[j] = State::kFree;
      x_[j] = 0.0;
    }
  }

  void slack_basis() {
    for (int j = 0; j < n_; ++j) place_nonbasic(j, State::kLower);
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      state_[n_ + i] = State::kBasic;
    }
  }

  bool apply_hint(const LpBasis& h) {
    if (static_cast<int>(h.variables.size()) != n_ || static_cast<int>(h.rows.size()) > m_)
      return false;
    basis_.clear();
    for (int k = 0; k < n_ + m_; ++k) {
      State s = State::kBasic;
      if (k < n_)
        s = h.variables[k];
      else if (k - n_ < static_cast<int>(h.rows.size()))
        s = h.rows[k - n_];
      if (s == State::kBasic) {
        state_[k] = State::kBasic;
        basis_.push_back(k);
      } else {
        place_nonbasic(k, s);
      }
    }
    return static_cast<int>(basis_.size()) == m_;
  }

  // x_B = B^{-1} (-N x_N)
  void recompute_basics() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < n_; ++j) {
      if (state_[j] == State::kBasic || x_[j] == 0.0) continue;
      for (const auto& [i, a] : cols_[j]) rhs[i] -= a * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      const int k = n_ + i;
      if (state_[k] != State::kBasic) rhs[i] += x_[k];
    }
    factor_.ftran(rhs);
    for (int r = 0; r < m_; ++r) x_[basis_[r]] = rhs[r];
  }

  bool refactor() {
    if (m_ == 0) return true;
    std::vector<Eigen::Triplet<double>> trip;
    for (int r = 0; r < m_; ++r) {
      const int k = basis_[r];
      if (k < n_) {
        for (const auto& [i, a] : cols_[k]) trip.emplace_back(i, r, a);
      } else {
        trip.emplace_back(k - n_, r, -1.0);
      }
    }
    Eigen::SparseMatrix<double> b(m_, m_);
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    if (!factor_.factor(b)) return false;
    recompute_basics();
    return true;
  }

  double max_basic_infeasibility() const {
    double worst = 0.0;
    for (int r = 0; r < m_; ++r) {
      const int k = basis_[r];
      worst = std::max(worst, std::max(lo_[k] - x_[k], x_[k] - up_[k]));
    }
    return worst;
  }

  // alpha = B^{-1} a_q
  Eigen::VectorXd column(int q) const {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_);
    if (q < n_) {
      for (const auto& [i, a] : cols_[q]) alpha[i] = a;
    } else {
      alpha[q - n_] = -1.0;
    }
    factor_.ftran(alpha);
    return alpha;
  }

  // Reduced costs of every variable for the current basis.
  std::vector<double> reduced_costs() const {
    Eigen::VectorXd y(m_);
    for (int r = 0; r < m_; ++r) y[r] = cost(basis_[r]);
    factor_.btran(y);
    std::vector<double> d(n_ + m_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (state_[j] == State::kBasic) continue;
      double v = cost(j);
      for (const auto& [i, a] : cols_[j]) v -= y[i] * a;
      d[j] = v;
    }
    for (int i = 0; i < m_; ++i)
      if (state_[n_ + i] != State::kBasic) d[n_ + i] = y[i];
    return d;
  }

  // Bounded dual simplex from a warm-start basis.  Moves boxed nonbasics to
  // the bound matching their reduced-cost sign, then pivots out primal
  // infeasibilities while keeping dual feasibility.  Leaves the primal
  // simplex to finish (or to take over when the basis is not dual feasible).
  // Returns false only on a factorization failure.
  bool dual_phase() {
    const double dtol = tol_.optimality;
    std::vector<double> d = reduced_costs();
    bool moved = false;
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == State::kBasic || lo_[j] == up_[j]) continue;
      const bool has_lo = std::isfinite(lo_[j]), has_up = std::isfinite(up_[j]);
      if (d[j] < -dtol && state_[j] != State::kUpper) {
        if (!has_up) return true;
        state_[j] = State::kUpper;
        x_[j] = up_[j];
        moved = true;
      } else if (d[j] > dtol && state_[j] != State::kLower) {
        if (!has_lo) return true;
        state_[j] = State::kLower;
        x_[j] = lo_[j];
        moved = true;
      }
    }
    if (moved) recompute_basics();

    const long cap = iterations_ + 10L * (n_ + m_) + 100;
    while (iterations_ < cap) {
      int leave = -1;
      double worst = tol_.feasibility;
      for (int r = 0; r < m_; ++r) {
        const int k = basis_[r];
        const double v = std::max(lo_[k] - x_[k], x_[k] - up_[k]);
        if (v > worst) {
          worst = v;
          leave = r;
        }
      }
      if (leave < 0) return true;
      const int out = basis_[leave];
      const bool below = x_[out] < lo_[out];
      const double target = below ? lo_[out] : up_[out];

      Eigen::VectorXd rho = Eigen::VectorXd::Zero(m_);
      rho[leave] = 1.0;
      factor_.btran(rho);
      d = reduced_costs();

      // alpha_rj = rho . a_j;  x_out = beta - sum_j alpha_rj x_j.
      auto row_entry = [&](int j) {
        if (j < n_) {
          double v = 0.0;
          for (const auto& [i, a] : cols_[j]) v += rho[i] * a;
          return v;
        }
        return -rho[j - n_];
      };
      std::vector<std::pair<int, double>> eligible;
      for (int j = 0; j < n_ + m_; ++j) {
        const State s = state_[j];
        if (s == State::kBasic || lo_[j] == up_[j]) continue;
        const double a = row_entry(j);
        if (std::abs(a) <= tol_.pivot) continue;
        // Direction of x_j that moves x_out toward its violated bound.
        const int dir = (below ? -a : a) > 0 ? 1 : -1;
        if (dir > 0 && s == State::kUpper) continue;
        if (dir < 0 && s == State::kLower) continue;
        eligible.push_back({j, a});
      }
      if (eligible.empty()) return true;  // primal infeasible; let phase 1 confirm
      double theta_max = kInf;
      for (const auto& [j, a] : eligible)
        theta_max = std::min(theta_max, (std::abs(d[j]) + dtol) / std::abs(a));
      int enter = -1;
      double best = 0.0;
      for (const auto& [j, a] : eligible) {
        if (std::abs(d[j]) / std::abs(a) <= theta_max && std::abs(a) > best) {
          best = std::abs(a);
          enter = j;
        }
      }
      if (enter < 0) return true;

      const Eigen::VectorXd alpha = column(enter);
      if (std::abs(alpha[leave]) <= tol_.pivot) return true;
      const double step = (x_[out] - target) / alpha[leave];
      x_[enter] += step;
      for (int r = 0; r < m_; ++r) x_[basis_[r]] -= step * alpha[r];
      x_[out] = target;
      state_[out] = below ? State::kLower : State::kUpper;
      if (lo_[out] == up_[out]) state_[out] = State::kLower;
      basis_[leave] = enter;
      state_[enter] = State::kBasic;
      ++iterations_;
      factor_.update(leave, alpha);
      if (factor_.updates() >= tol_.refactor_interval && !refactor()) return false;
    }
    return true;
  }

  LpStatus iterate() {
    Eigen::VectorXd y(m_);
    int degenerate_run = 0;
    bool bland = false;
    while (true) {
      if (iterations_ >= tol_.max_iterations) return LpStatus::kNumericalFailure;

      // Phase selection from the current basic values.
      bool phase1 = false;
      for (int r = 0; r < m_; ++r) {
        const int k = basis_[r];
        double c = 0.0;
        if (x_[k] < lo_[k] - tol_.feasibility) {
          c = -1.0;
          phase1 = true;
        } else if (x_[k] > up_[k] + tol_.feasibility) {
          c = 1.0;
          phase1 = true;
        }
        y[r] = c;
      }
      if (!phase1) {
        for (int r = 0; r < m_; ++r) y[r] = cost(basis_[r]);
      }
      factor_.btran(y);

      // Pricing.
      int enter = -1;
      double best = 0.0;
      int dir = 0;
      for (int j = 0; j < n_ + m_; ++j) {
        const State s = state_[j];
        if (s == State::kBasic || lo_[j] == up_[j]) continue;
        double d = phase1 ? 0.0 : cost(j);
        if (j < n_) {
          for (const auto& [i, a] : cols_[j]) d -= y[i] * a;
        } else {
          d += y[j - n_];
        }
        int jdir = 0;
        if ((s == State::kLower || s == State::kFree) && d < -tol_.optimality)
          jdir = 1;
        else if ((s == State::kUpper || s == State::kFree) &&
                 d > tol_.optimality)
          jdir = -1;
        if (jdir == 0) continue;
        if (bland) {
          enter = j;
          dir = jdir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
          dir = jdir;
        }
      }
      if (enter < 0) {
        return phase1 ? LpStatus::kInfeasible : LpStatus::kOptimal;
      }

      const Eigen::VectorXd alpha = column(enter);

      // Harris two-pass ratio test.  delta_r is the rate of change of the
      // basic variable in row r per unit step of the entering variable.
      auto limit_of = [&](int r, double slack) -> double {
        const double delta = -dir * alpha[r];
        if (std::abs(alpha[r]) <= tol_.pivot) return kInf;
        const int k = basis_[r];
        const double xk = x_[k];
        if (delta > 0.0) {
          double bound = up_[k];
          if (phase1 && xk < lo_[k] - tol_.feasibility) bound = lo_[k];
          if (phase1 && xk > up_[k] + tol_.feasibility) return kInf;
          if (!std::isfinite(bound)) return kInf;
          return (bound + slack - xk) / delta;
        }
        double bound = lo_[k];
        if (phase1 && xk > up_[k] + tol_.feasibility) bound = up_[k];
        if (phase1 && xk < lo_[k] - tol_.feasibility) return kInf;
        if (!std::isfinite(bound)) return kInf;
        return (xk - (bound - slack)) / (-delta);
      };

      const double harris_slack = bland ? 0.0 : 0.5 * tol_.feasibility;
      double tmax = kInf;
      for (int r = 0; r < m_; ++r)
        tmax = std::min(tmax, limit_of(r, harris_slack));
      int leave = -1;
      double step = kInf;
      double best_pivot = 0.0;
      if (std::isfinite(tmax)) {
        for (int r = 0; r < m_; ++r) {
          const double t = limit_of(r, 0.0);
          if (!std::isfinite(t) || t > tmax) continue;
          const double piv = std::abs(alpha[r]);
          bool take = false;
          if (leave < 0) {
            take = true;
          } else if (bland) {
            take = t < step - 1e-12 ||
                   (t <= step + 1e-12 && basis_[r] < basis_[leave]);
          } else {
            take = piv > best_pivot;
          }
          if (take) {
            leave = r;
            step = t;
            best_pivot = piv;
          }
        }
        step = std::max(step, 0.0);
      }

      const double range = up_[enter] - lo_[enter];
      const bool flip = std::isfinite(range) && range <= step;
      if (leave < 0 && !flip) {
        return phase1 ? LpStatus::kNumericalFailure : LpStatus::kUnbounded;
      }
      if (flip) step = range;

      ++iterations_;
      if (step <= 1e-12) {
        if (++degenerate_run > tol_.degenerate_threshold) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      // Bound the leaving variable is heading to (decided before moving).
      int out = -1;
      double target = 0.0;
      if (!flip) {
        out = basis_[leave];
        const double delta = -dir * alpha[leave];
        if (delta > 0.0)
          target = (phase1 && x_[out] < lo_[out] - tol_.feasibility)
                       ? lo_[out]
                       : up_[out];
        else
          target = (phase1 && x_[out] > up_[out] + tol_.feasibility)
                       ? up_[out]
                       : lo_[out];
      }

      // Primal update.
      x_[enter] += dir * step;
      for (int r = 0; r < m_; ++r) x_[basis_[r]] -= dir * step * alpha[r];

      if (flip) {
        state_[enter] = dir > 0 ? State::kUpper : State::kLower;
        x_[enter] = dir > 0 ? up_[enter] : lo_[enter];
        continue;
      }

      x_[out] = target;
      state_[out] = (target == up_[out] && lo_[out] != up_[out])
                        ? State::kUpper
                        : State::kLower;
      basis_[leave] = enter;
      state_[enter] = State::kBasic;

      factor_.update(leave, alpha);
      if (factor_.updates() >= tol_.refactor_interval && !refactor())
        return LpStatus::kNumericalFailure;
    }
  }

  const LinearProgram& lp_;
  SolverTolerances tol_;
  int n_;
  int m_;
  const LpBasis* hint_;
  bool warm_ = false;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> lo_, up_, x_;
  std::vector<State> state_;
  std::vector<int> basis_;
  BasisFactor factor_;
  long iterations_ = 0;
};

}  // namespace detail

class SimplexSolver final : public LpSolver {
 public:
  SimplexSolver() = default;
  explicit SimplexSolver(SolverTolerances tol) : tol_(tol) {}

  const SolverTolerances& tolerances() const { return tol_; }

  using LpSolver::solve;

  LpSolution solve(const LinearProgram& lp, const LpBasis* hint) const override {
    if (auto err = lp.check(); !err.empty())
      throw std::invalid_argument("malformed LP: " + err);
    detail::RevisedSimplex simplex(lp, tol_, hint);
    LpSolution sol = simplex.run();
    if (tol_.verify && sol.optimal()) {
      const KktReport rep = audit_kkt(lp, sol);
      if (!rep.ok(tol_)) {
        std::ostringstream os;
        os << "KKT audit failed: primal " << rep.primal_infeasibility
           << " dual " << rep.dual_infeasibility << " compl "
           << rep.complementarity << " gap " << rep.duality_gap;
        throw std::runtime_error(os.str());
      }
    }
    return sol;
  }

 private:
  SolverTolerances tol_;
};

inline LpSolution solve_lp(const LinearProgram& lp,
                           const SolverTolerances& tol = {}) {
  return SimplexSolver(tol).solve(lp);
}

// ---------------------------------------------------------------------------
// Branch and bound over binary variables.

struct MilpRequest {
  LinearProgram lp;
  std::vector<int> binaries;
  double relative_gap = 1e-9;
  long node_limit = 200000;
};

inline LpSolution solve_milp(const MilpRequest& req, const LpSolver& solver,
                             double integrality_tol = 1e-6) {
  for (int b : req.binaries) {
    const auto& v = req.lp.variables.at(b);
    if (v.lower < 0.0 || v.upper > 1.0)
      throw std::invalid_argument("binary variable " + v.name +
                                  " must have bounds within [0,1]");
  }

  struct Node {
    double bound;
    long id;
    std::vector<std::pair<int, double>> fixings;  // (binary var, value)
  };
  struct Worse {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;
      return a.id > b.id;
    }
  };

  LinearProgram work = req.lp;
  auto solve_node = [&](const Node& node) {
    for (int b : req.binaries) {
      work.variables[b].lower = req.lp.variables[b].lower;
      work.variables[b].upper = req.lp.variables[b].upper;
    }
    for (const auto& [var, val] : node.fixings) {
      work.variables[var].lower = val;
      work.variables[var].upper = val;
    }
    return solver.solve(work);
  };

  LpSolution incumbent;
  incumbent.status = LpStatus::kInfeasible;
  double incumbent_obj = kInf;
  long next_id = 0;
  long nodes = 0;
  long iterations = 0;

  std::priority_queue<Node, std::vector<Node>, Worse> open;
  open.push({-kInf, next_id++, {}});
  double global_bound = -kInf;

  auto gap_of = [](double inc, double bound) {
    if (!std::isfinite(inc)) return kInf;
    if (!std::isfinite(bound)) return kInf;
    return std::max(0.0, inc - bound) / std::max(1e-10, std::abs(inc));
  };

  while (!open.empty()) {
    const double frontier = open.top().bound;
    global_bound = std::min(frontier, incumbent_obj);
    if (gap_of(incumbent_obj, frontier) <= req.relative_gap ||
        frontier >= incumbent_obj)
      break;
    if (nodes >= req.node_limit) {
      incumbent.status = LpStatus::kNodeLimit;
      incumbent.best_bound = frontier;
      incumbent.gap = gap_of(incumbent_obj, frontier);
      incumbent.nodes = nodes;
      incumbent.iterations = iterations;
      return incumbent;
    }
    Node node = open.top();
    open.pop();
    ++nodes;
    LpSolution rel = solve_node(node);
    iterations += rel.iterations;
    if (rel.status == LpStatus::kInfeasible) continue;
    if (rel.status == LpStatus::kUnbounded) {
      if (node.fixings.empty()) {
        rel.nodes = nodes;
        return rel;
      }
      continue;
    }
    if (!rel.optimal()) {
      rel.nodes = nodes;
      return rel;
    }
    if (rel.objective >= incumbent_obj - 1e-12 * std::max(1.0, std::abs(incumbent_obj)))
      continue;

    // Most fractional binary; ties broken by lowest variable index.
    int branch = -1;
    double most = integrality_tol;
    for (int b : req.binaries) {
      const double v = rel.primal[b];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > most + 1e-12) {
        most = frac;
        branch = b;
      } else if (branch >= 0 && frac > integrality_tol &&
                 std::abs(frac - most) <= 1e-12 && b < branch) {
        branch = b;
      }
    }
    if (branch < 0) {
      for (int b : req.binaries) rel.primal[b] = std::round(rel.primal[b]);
      double obj = 0.0;
      for (int j = 0; j < req.lp.num_variables(); ++j)
        obj += req.lp.variables[j].cost * rel.primal[j];
      rel.objective = obj;
      incumbent = std::move(rel);
      incumbent_obj = incumbent.objective;
      continue;
    }
    for (double val : {0.0, 1.0}) {
      Node child{rel.objective, next_id++, node.fixings};
      child.fixings.emplace_back(branch, val);
      open.push(std::move(child));
    }
  }

  if (!std::isfinite(incumbent_obj)) {
    LpSolution out;
    out.status = LpStatus::kInfeasible;
    out.nodes = nodes;
    out.iterations = iterations;
    return out;
  }
  incumbent.status = LpStatus::kOptimal;
  incumbent.best_bound = open.empty() ? incumbent_obj : std::min(global_bound, incumbent_obj);
  incumbent.gap = gap_of(incumbent_obj, incumbent.best_bound);
  incumbent.nodes = nodes;
  incumbent.iterations = iterations;
  incumbent.duals.clear();
  return incumbent;
}

inline LpSolution solve_milp(const MilpRequest& req,
                             const SolverTolerances& tol = {}) {
  return solve_milp(req, SimplexSolver(tol));
}

// ---------------------------------------------------------------------------
// CPLEX-style LP text dump for debugging.

namespace detail {
inline std::string lp_name(const std::string& raw, char prefix, int index) {
  std::string out;
  for (char c : raw) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                    c == '.' || c == '(' || c == ')' || c == '[' || c == ']' ||
                    c == ',';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])) ||
      out[0] == '.')
    out = std::string(1, prefix) + std::to_string(index) + "_" + out;
  return out;
}

inline void write_linear(std::ostream& os, const std::vector<Term>& terms,
                         const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& t : terms) {
    if (t.coeff == 0.0) continue;
    if (t.coeff < 0.0)
      os << (first ? "- " : " - ");
    else if (!first)
      os << " + ";
    if (std::abs(t.coeff) != 1.0) os << std::abs(t.coeff) << ' ';
    os << names[t.var];
    first = false;
  }
  if (first) os << "0 " << names.front();
}
}  // namespace detail

inline void write_lp(std::ostream& os, const LinearProgram& lp,
                     const std::vector<int>& binaries = {}) {
  std::vector<std::string> names;
  names.reserve(lp.variables.size());
  for (int j = 0; j < lp.num_variables(); ++j)
    names.push_back(detail::lp_name(lp.variables[j].name, 'x', j));
  os.precision(17);
  os << "Minimize\n obj: ";
  std::vector<Term> obj;
  for (int j = 0; j < lp.num_variables(); ++j)
    if (lp.variables[j].cost != 0.0) obj.push_back({j, lp.variables[j].cost});
  if (obj.empty() && !names.empty()) obj.push_back({0, 0.0});
  if (!names.empty()) {
    if (obj.size() == 1 && obj[0].coeff == 0.0)
      os << "0 " << names[0];
    else
      detail::write_linear(os, obj, names);
  }
  os << "\nSubject To\n";
  for (int i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows[i];
    os << ' ' << detail::lp_name(row.name, 'c', i) << ": ";
    if (names.empty()) os << "0";
    else detail::write_linear(os, row.terms, names);
    switch (row.sense) {
      case RowSense::kLessEqual: os << " <= "; break;
      case RowSense::kEqual: os << " = "; break;
      case RowSense::kGreaterEqual: os << " >= "; break;
    }
    os << row.rhs << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < lp.num_variables(); ++j) {
    const auto& v = lp.variables[j];
    if (!std::isfinite(v.lower) && !std::isfinite(v.upper)) {
      os << ' ' << names[j] << " free\n";
    } else if (v.lower == v.upper) {
      os << ' ' << names[j] << " = " << v.lower << '\n';
    } else {
      os << ' ';
      if (std::isfinite(v.lower)) os << v.lower; else os << "-inf";
      os << " <= " << names[j] << " <= ";
      if (std::isfinite(v.upper)) os << v.upper; else os << "+inf";
      os << '\n';
    }
  }
  if (!binaries.empty()) {
    os << "Binaries\n";
    for (int b : binaries) os << ' ' << names[b] << '\n';
  }
  os << "End\n";
}

}  // namespace gtep
