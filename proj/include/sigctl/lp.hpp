#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace sigctl::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEq, GreaterEq, Equal };
enum class Status { Optimal, Infeasible, Unbounded };

struct Term {
  std::size_t var;
  double coef;
};

/// maximize c^T x subject to rows and lo <= x <= hi. Bounds may be infinite.
class Problem {
 public:
  std::size_t add_variable(double lo, double hi, double cost = 0.0) {
    lo_.push_back(lo);
    hi_.push_back(hi);
    cost_.push_back(cost);
    return lo_.size() - 1;
  }
  void add_row(std::vector<Term> terms, Sense sense, double rhs) {
    rows_.push_back({std::move(terms), sense, rhs});
  }
  void set_cost(std::size_t var, double c) { cost_[var] = c; }

  std::size_t variables() const noexcept { return lo_.size(); }
  std::size_t rows() const noexcept { return rows_.size(); }

 private:
  struct Row {
    std::vector<Term> terms;
    Sense sense;
    double rhs;
  };
  std::vector<double> lo_, hi_, cost_;
  std::vector<Row> rows_;

  friend struct Solver;
};

struct Solution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t iterations = 0;
};

struct Options {
  double pivot_tol = 1e-9;       // smallest pivot magnitude accepted
  double optimality_tol = 1e-9;  // reduced-cost threshold
  double feasibility_tol = 1e-7;
  std::size_t max_iterations = 1000000;
};

/// Dense tableau implementation of the bounded-variable primal simplex
/// method. Two phases, Bland's smallest-index rule for both the entering and
/// the leaving variable, so degenerate problems terminate.
struct Solver {
  // Internal column j: 0 <= y_j <= upper[j]. Original var v equals
  // offset[v] + sum over its (column, sign) pieces.
  struct Piece {
    std::size_t col;
    double sign;
  };

  const Problem& prob;
  Options opt;

  std::size_t m = 0, n = 0;
  std::vector<std::vector<double>> tab;  // m x n, B^-1 A
  std::vector<double> upper;
  std::vector<double> xb;               // values of basic columns, per row
  std::vector<std::size_t> basis;       // column basic in each row
  std::vector<char> at_upper;           // nonbasic status
  std::vector<char> is_basic;
  std::vector<char> excluded;           // never allowed to enter
  std::vector<double> offset;
  std::vector<std::vector<Piece>> pieces;
  std::size_t first_artificial = 0;
  std::size_t iterations = 0;

  Solver(const Problem& p, Options o) : prob(p), opt(o) {}

  std::size_t new_column(double ub) {
    upper.push_back(ub);
    for (auto& row : tab) row.push_back(0.0);
    return n++;
  }

  void build() {
    const std::size_t nv = prob.lo_.size();
    offset.assign(nv, 0.0);
    pieces.assign(nv, {});
    m = prob.rows_.size();
    tab.assign(m, {});
    for (std::size_t v = 0; v < nv; ++v) {
      const double lo = prob.lo_[v], hi = prob.hi_[v];
      if (std::isfinite(lo)) {
        offset[v] = lo;
        pieces[v].push_back({new_column(hi - lo), 1.0});
      } else if (std::isfinite(hi)) {
        offset[v] = hi;
        pieces[v].push_back({new_column(kInf), -1.0});
      } else {
        pieces[v].push_back({new_column(kInf), 1.0});
        pieces[v].push_back({new_column(kInf), -1.0});
      }
    }
    std::vector<double> rhs(m);
    std::vector<std::size_t> slack(m, static_cast<std::size_t>(-1));
    for (std::size_t r = 0; r < m; ++r) {
      const auto& row = prob.rows_[r];
      double b = row.rhs;
      for (const auto& t : row.terms) {
        b -= t.coef * offset[t.var];
        for (const auto& pc : pieces[t.var]) tab[r][pc.col] += t.coef * pc.sign;
      }
      if (row.sense != Sense::Equal) {
        const std::size_t s = new_column(kInf);
        tab[r][s] = row.sense == Sense::LessEq ? 1.0 : -1.0;
        slack[r] = s;
      }
      rhs[r] = b;
    }
    for (std::size_t r = 0; r < m; ++r)
      if (rhs[r] < 0.0) {
        for (auto& a : tab[r]) a = -a;
        rhs[r] = -rhs[r];
      }
    first_artificial = n;
    basis.assign(m, 0);
    xb = rhs;
    for (std::size_t r = 0; r < m; ++r) {
      if (slack[r] != static_cast<std::size_t>(-1) && tab[r][slack[r]] > 0.0) {
        basis[r] = slack[r];
      } else {
        const std::size_t a = new_column(kInf);
        tab[r][a] = 1.0;
        basis[r] = a;
      }
    }
    at_upper.assign(n, 0);
    is_basic.assign(n, 0);
    excluded.assign(n, 0);
    for (std::size_t r = 0; r < m; ++r) is_basic[basis[r]] = 1;
  }

  void pivot(std::size_t r, std::size_t col) {
    const double piv = tab[r][col];
    for (auto& a : tab[r]) a /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r) continue;
      const double f = tab[i][col];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) tab[i][k] -= f * tab[r][k];
    }
  }

  double column_value(std::size_t col) const {
    if (is_basic[col]) {
      for (std::size_t r = 0; r < m; ++r)
        if (basis[r] == col) return xb[r];
    }
    return at_upper[col] ? upper[col] : 0.0;
  }

  // Runs simplex iterations for `cost` (maximise); returns false if unbounded.
  bool optimise(const std::vector<double>& cost) {
    std::vector<double> d(n);
    while (iterations < opt.max_iterations) {
      std::size_t enter = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (is_basic[j] || excluded[j]) continue;
        double dj = cost[j];
        for (std::size_t r = 0; r < m; ++r) dj -= cost[basis[r]] * tab[r][j];
        const bool up = !at_upper[j] && dj > opt.optimality_tol && upper[j] > 0.0;
        const bool down = at_upper[j] && dj < -opt.optimality_tol;
        if (up || down) {
          enter = j;
          break;
        }
      }
      if (enter == n) return true;
      ++iterations;

      const double dir = at_upper[enter] ? -1.0 : 1.0;
      double theta = upper[enter];
      std::size_t leave_row = m;
      bool leave_to_upper = false;
      for (std::size_t r = 0; r < m; ++r) {
        const double alpha = tab[r][enter] * dir;
        double lim = kInf;
        bool to_upper = false;
        if (alpha > opt.pivot_tol) {
          lim = std::max(0.0, xb[r]) / alpha;
        } else if (alpha < -opt.pivot_tol && std::isfinite(upper[basis[r]])) {
          lim = std::max(0.0, upper[basis[r]] - xb[r]) / -alpha;
          to_upper = true;
        } else {
          continue;
        }
        const bool tie = std::isfinite(theta) && std::abs(lim - theta) <= 1e-12 * std::max(1.0, std::abs(theta));
        const bool better = (lim < theta && !tie) || (tie && leave_row < m && basis[r] < basis[leave_row]);
        if (better) {
          theta = lim;
          leave_row = r;
          leave_to_upper = to_upper;
        }
      }
      if (!std::isfinite(theta)) return false;

      for (std::size_t r = 0; r < m; ++r) xb[r] -= tab[r][enter] * dir * theta;
      if (leave_row == m) {
        at_upper[enter] = !at_upper[enter];  // bound flip, basis unchanged
        continue;
      }
      const double entering_value = at_upper[enter] ? upper[enter] - theta : theta;
      const std::size_t leaving = basis[leave_row];
      pivot(leave_row, enter);
      basis[leave_row] = enter;
      xb[leave_row] = entering_value;
      is_basic[enter] = 1;
      at_upper[enter] = 0;
      is_basic[leaving] = 0;
      at_upper[leaving] = leave_to_upper ? 1 : 0;
      for (auto& v : xb)
        if (std::abs(v) < 1e-13) v = 0.0;
    }
    return true;
  }

  Solution run() {
    build();
    Solution sol;
    if (first_artificial < n) {
      std::vector<double> c1(n, 0.0);
      for (std::size_t j = first_artificial; j < n; ++j) c1[j] = -1.0;
      optimise(c1);
      double infeas = 0.0;
      for (std::size_t j = first_artificial; j < n; ++j) infeas += column_value(j);
      double scale = 1.0;
      for (double b : xb) scale = std::max(scale, std::abs(b));
      if (infeas > opt.feasibility_tol * scale) {
        sol.status = Status::Infeasible;
        sol.iterations = iterations;
        return sol;
      }
      for (std::size_t j = first_artificial; j < n; ++j) {
        upper[j] = 0.0;
        excluded[j] = 1;
      }
    }
    std::vector<double> c2(n, 0.0);
    for (std::size_t v = 0; v < prob.cost_.size(); ++v) {
      for (const auto& pc : pieces[v]) c2[pc.col] += prob.cost_[v] * pc.sign;
    }
    if (!optimise(c2)) {
      sol.status = Status::Unbounded;
      sol.iterations = iterations;
      return sol;
    }
    sol.status = Status::Optimal;
    sol.x.assign(prob.lo_.size(), 0.0);
    for (std::size_t v = 0; v < prob.lo_.size(); ++v) {
      double x = offset[v];
      for (const auto& pc : pieces[v]) x += pc.sign * column_value(pc.col);
      sol.x[v] = x;
    }
    sol.objective = 0.0;
    for (std::size_t v = 0; v < prob.cost_.size(); ++v) sol.objective += prob.cost_[v] * sol.x[v];
    sol.iterations = iterations;
    return sol;
  }
};

inline Solution solve(const Problem& p, Options opt = {}) { return Solver(p, opt).run(); }

}  // namespace sigctl::lp
