#include "pipestab/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>

#include "pipestab/errors.hpp"
#include "pipestab/matrix_io.hpp"

namespace pipestab {

LmiProblem make_problem(int N, const PlantParams& plant,
                        const ControllerParams& ctrl) {
  return assemble(N, balance_states(build_closed_loop(plant, ctrl), plant),
                  plant);
}

bool necessary_condition(const PlantParams& plant, const ControllerParams&,
                         double alpha) {
  return alpha_max(plant).admits(alpha);
}

namespace {

double default_cap(const PlantParams& plant, const ControllerParams& ctrl) {
  const ClosedLoop cl = build_closed_loop(plant, ctrl);
  return 10.0 * std::abs(spectral_abscissa(cl.Atil)) + 1.0;
}

}  // namespace

DecayResult max_decay_rate(const PlantParams& plant,
                           const ControllerParams& ctrl, int N,
                           const DecayOptions& opts) {
  if (!(opts.tol > 0.0)) throw DomainError("bisection tolerance must be positive");
  const LmiProblem pb = make_problem(N, plant, ctrl);

  DecayResult res;
  res.N = N;
  res.bound = alpha_max(plant);
  const double cap = opts.cap ? *opts.cap : default_cap(plant, ctrl);
  if (!(cap > 0.0)) throw DomainError("bisection cap must be positive");
  double hi = res.bound.capped(cap);

  auto solve = [&](double alpha) {
    FeasibilityReport r = solve_feasibility(pb, alpha, opts.solver);
    ++res.solver_calls;
    res.newton_steps += r.iterations;
    return r;
  };

  FeasibilityReport base = solve(0.0);
  res.base_status = base.status;
  if (base.status == FeasibilityStatus::numerical_failure) {
    throw NumericalFailure("solver failed at alpha = 0 for N = " +
                           std::to_string(N) + ": " + base.diagnostics);
  }
  if (base.status != FeasibilityStatus::feasible) {
    res.note = "no certificate of asymptotic stability at this N";
    res.hi = 0.0;
    return res;
  }
  res.certified = true;
  res.certificate = base.certificate;

  double lo = 0.0;
  FeasibilityReport top = solve(hi);
  if (top.status == FeasibilityStatus::feasible) {
    lo = hi;
    res.certificate = top.certificate;
    res.note = "feasible at the upper end of the bracket";
  } else {
    if (top.status == FeasibilityStatus::numerical_failure) ++res.numerical_failures;
    while (hi - lo > opts.tol) {
      const double mid = 0.5 * (lo + hi);
      FeasibilityReport r = solve(mid);
      if (r.status == FeasibilityStatus::feasible) {
        lo = mid;
        res.certificate = r.certificate;
      } else {
        if (r.status == FeasibilityStatus::numerical_failure) ++res.numerical_failures;
        hi = mid;
      }
    }
  }
  res.lo = lo;
  res.hi = hi;
  res.alpha_N = lo;
  return res;
}

HierarchyTable hierarchy_table(const PlantParams& plant,
                               const std::vector<LabeledController>& ctrls,
                               int N_max, const DecayOptions& opts,
                               unsigned threads) {
  if (N_max < 0 || N_max > kMaxTableOrder) {
    throw DomainError("table order must lie in [0, " +
                      std::to_string(kMaxTableOrder) + "]");
  }
  // Bad parameters are a caller error, not a per-cell numerical failure.
  plant.validate();
  for (const auto& row : ctrls) row.ctrl.validate();
  HierarchyTable table;
  table.bound = alpha_max(plant);
  table.N_max = N_max;
  table.tol = opts.tol;

  const std::size_t per_row = static_cast<std::size_t>(N_max) + 1;
  const std::size_t jobs = ctrls.size() * per_row;
  std::vector<DecayResult> cells(jobs);
  std::vector<std::string> errors(jobs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const int N = static_cast<int>(j % per_row);
      try {
        cells[j] = max_decay_rate(plant, ctrls[j / per_row].ctrl, N, opts);
      } catch (const std::exception& e) {
        cells[j].N = N;
        cells[j].base_status = FeasibilityStatus::numerical_failure;
        errors[j] = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs, 1)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (std::size_t r = 0; r < ctrls.size(); ++r) {
    HierarchyRow row;
    row.label = ctrls[r].label;
    for (std::size_t n = 0; n < per_row; ++n) {
      const std::size_t j = r * per_row + n;
      if (!errors[j].empty() && !row.failure) {
        row.failure = "N=" + std::to_string(n) + ": " + errors[j];
      }
      row.cells.push_back(std::move(cells[j]));
    }
    for (std::size_t n = 0; n + 1 < per_row; ++n) {
      const DecayResult& a = row.cells[n];
      const DecayResult& b = row.cells[n + 1];
      if (a.certified && (!b.certified || b.alpha_N < a.alpha_N - opts.tol)) {
        row.monotone = false;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string bound_text(const AlphaMax& b, int digits) {
  return b.is_infinite() ? "inf" : fixed(b.value(), digits);
}

}  // namespace

void write_table_text(std::ostream& os, const HierarchyTable& table) {
  std::size_t label_w = 10;
  for (const auto& row : table.rows) label_w = std::max(label_w, row.label.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::string head = std::string(label_w, ' ');
  head.replace(0, 10, "controller");
  os << head;
  for (int n = 0; n <= table.N_max; ++n) os << pad("N=" + std::to_string(n), 10);
  os << pad("alpha_max", 11) << "\n";
  for (const auto& row : table.rows) {
    std::string label = row.label;
    label.resize(label_w, ' ');
    os << label;
    for (const auto& cell : row.cells) {
      std::string v = cell.certified ? fixed(cell.alpha_N, 4) : "-";
      if (cell.base_status == FeasibilityStatus::numerical_failure) v = "fail";
      os << pad(v, 10);
    }
    os << pad(bound_text(table.bound, 4), 11);
    if (!row.monotone) os << "  (hierarchy violated)";
    os << "\n";
  }
}

void write_table_csv(std::ostream& os, const HierarchyTable& table) {
  os << "controller,N,alpha_N,alpha_max,margin,iterations\n";
  for (const auto& row : table.rows) {
    for (const auto& cell : row.cells) {
      os << row.label << ',' << cell.N << ',';
      if (cell.base_status == FeasibilityStatus::numerical_failure) {
        os << "fail";
      } else if (cell.certified) {
        os << format_number(cell.alpha_N);
      } else {
        os << "none";
      }
      os << ',' << (table.bound.is_infinite() ? "inf" : format_number(table.bound.value()))
         << ',' << (cell.certificate ? format_number(cell.certificate->margin) : "")
         << ',' << cell.newton_steps << '\n';
    }
  }
}

double lyapunov_value(const LmiProblem& pb, const Certificate& cert,
                      const Eigen::VectorXd& x_ode, const Field2& chi) {
  if (x_ode.size() != pb.m) throw InputError("ODE state does not match the LMI");
  if (cert.vars.P().rows() != pb.state_dim()) {
    throw InputError("certificate does not match the LMI order");
  }
  if (chi.cols() < 3 || chi.cols() % 2 == 0) {
    throw InputError("chi must be sampled on an odd number (>= 3) of grid points");
  }
  Eigen::VectorXd z(pb.state_dim());
  z.head(pb.m) = x_ode.cwiseQuotient(pb.state_scale);
  z.tail(pb.p) = projection_stack(chi, pb.N);
  double v = z.dot(cert.vars.P() * z);

  const Eigen::Index n = chi.cols();
  const Eigen::VectorXd w = quadrature_weights(n);
  const Eigen::Matrix2d& S = cert.vars.S();
  const Eigen::Matrix2d& R = cert.vars.R();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    const Eigen::Vector2d ci = chi.col(i);
    v += w(i) * std::exp(2.0 * cert.alpha * x / pb.c) * ci.dot((S + x * R) * ci);
  }
  return v;
}

}  // namespace pipestab
