#include "pipestab/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "pipestab/errors.hpp"
#include "pipestab/fileio.hpp"
#include "pipestab/legendre.hpp"
#include "pipestab/matrix_io.hpp"

namespace pipestab {

const char* to_string(InitialCondition ic) {
  switch (ic) {
    case InitialCondition::ramp: return "ramp";
    case InitialCondition::equilibrium: return "equilibrium";
    case InitialCondition::perturbed: return "perturbed";
  }
  return "?";
}

InitialCondition parse_initial_condition(const std::string& s) {
  if (s == "ramp") return InitialCondition::ramp;
  if (s == "equilibrium") return InitialCondition::equilibrium;
  if (s == "perturbed") return InitialCondition::perturbed;
  throw ConfigError("unknown initial condition '" + s +
                    "' (expected ramp, equilibrium or perturbed)");
}

double SimConfig::time_step(const PlantParams& plant) const {
  return dt ? *dt : dt_factor / (plant.c * M);
}

void SimConfig::validate(const PlantParams& plant) const {
  if (M < 2 || M % 2 != 0) {
    throw ConfigError("M must be even and at least 2 (Simpson needs M + 1 odd)");
  }
  const double h = time_step(plant);
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("time step must be positive");
  const double cfl = plant.c * h * M;
  if (cfl > 1.0) {
    std::ostringstream os;
    os << "CFL number c dt M = " << cfl << " exceeds 1";
    throw ConfigError(os.str());
  }
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("horizon T must be positive");
  if (stride < 1) throw ConfigError("stride must be at least 1");
  if (!(perturbation >= 0.0)) throw ConfigError("perturbation must be nonnegative");
}

namespace {

double grid_x(int i, int M) { return static_cast<double>(i) / M; }

// One leapfrog step for nodes 1..M-1.
void leapfrog_interior(const Eigen::VectorXd& vm, const Eigen::VectorXd& v,
                       double lambda2, Eigen::VectorXd& vp) {
  const Eigen::Index M = v.size() - 1;
  vp.segment(1, M - 1) = 2.0 * v.segment(1, M - 1) - vm.segment(1, M - 1) +
                         lambda2 * (v.segment(2, M - 1) - 2.0 * v.segment(1, M - 1) +
                                    v.segment(0, M - 1));
}

// v + dt v_t + dt^2/2 c^2 v_xx on nodes 1..M-1.
void taylor_interior(const Eigen::VectorXd& v, const Eigen::VectorXd& vt,
                     double dt, double lambda2, Eigen::VectorXd& vp) {
  const Eigen::Index M = v.size() - 1;
  vp.segment(1, M - 1) = v.segment(1, M - 1) + dt * vt.segment(1, M - 1) +
                         0.5 * lambda2 * (v.segment(2, M - 1) - 2.0 * v.segment(1, M - 1) +
                                          v.segment(0, M - 1));
}

struct Problem {
  double c, k, g;
  double sigma1;
  double f0, f1;  // residual constant forcing of the deviation Robin conditions
  FeedforwardControls ff;
  ClosedLoop cl;
  int n;
  Eigen::RowVectorXd C2;
  Eigen::RowVector2d K;
};

Problem make_problem(const PlantParams& plant, const ControllerParams& ctrl) {
  Problem p;
  p.c = plant.c;
  p.k = plant.k;
  p.g = plant.g;
  p.sigma1 = equilibrium_slope(plant);
  p.ff = feedforward_controls(plant);
  // Zero up to rounding; kept so the equilibrium test sees the real scheme.
  p.f0 = plant.g * (plant.Omega_e - p.ff.u1e) - p.sigma1;
  p.f1 = -plant.k * plant.Omega_e - plant.q * plant.Te - p.sigma1;
  p.cl = build_closed_loop(plant, ctrl);
  p.n = ctrl.n;
  p.C2 = ctrl.C2;
  p.K = ctrl.K;
  return p;
}

double second_order_slope(const Eigen::VectorXd& w, int M, bool left) {
  const double dx = 1.0 / M;
  if (left) return (-3.0 * w(0) + 4.0 * w(1) - w(2)) / (2.0 * dx);
  return (3.0 * w(M) - 4.0 * w(M - 1) + w(M - 2)) / (2.0 * dx);
}

}  // namespace

SimState initial_state(const PlantParams& plant, const ControllerParams& ctrl,
                       const SimConfig& cfg) {
  ctrl.validate();
  const int M = cfg.M;
  const double sigma1 = equilibrium_slope(plant);
  SimState s;
  s.w.resize(M + 1);
  s.wt.resize(M + 1);
  s.X = Eigen::VectorXd::Zero(ctrl.n + 2);
  switch (cfg.ic) {
    case InitialCondition::ramp: {
      const double u1e = feedforward_controls(plant).u1e;
      const double a = (plant.Omega_e - plant.q * plant.Te) / plant.k;
      const double b = (u1e - plant.Omega_e) / plant.g;
      for (int i = 0; i <= M; ++i) {
        const double x = grid_x(i, M);
        s.w(i) = 2.0 - plant.Omega_e * x;
        s.wt(i) = a * x - b * (1.0 - x);
      }
      break;
    }
    case InitialCondition::equilibrium:
      for (int i = 0; i <= M; ++i) {
        s.w(i) = sigma1 * grid_x(i, M);
        s.wt(i) = plant.Omega_e;
      }
      break;
    case InitialCondition::perturbed: {
      // Sine modes in w_t and cosine modes in w keep the perturbation
      // compatible with both boundary conditions when C1 X = 0.
      std::mt19937_64 rng(cfg.seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      constexpr int kModes = 4;
      double a[kModes], b[kModes];
      for (int j = 0; j < kModes; ++j) {
        a[j] = cfg.perturbation * u(rng);
        b[j] = cfg.perturbation * u(rng) / ((j + 1) * std::numbers::pi);
      }
      for (int i = 0; i <= M; ++i) {
        const double x = grid_x(i, M);
        double dw = 0.0, dwt = 0.0;
        for (int j = 0; j < kModes; ++j) {
          const double kx = (j + 1) * std::numbers::pi * x;
          dw += b[j] * std::cos(kx);
          dwt += a[j] * std::sin(kx);
        }
        s.w(i) = sigma1 * x + dw;
        s.wt(i) = plant.Omega_e + dwt;
      }
      for (int j = ctrl.n; j < ctrl.n + 2; ++j) s.X(j) = cfg.perturbation * u(rng);
      break;
    }
  }
  return s;
}

SimTrace simulate(const PlantParams& plant, const ControllerParams& ctrl,
                  const SimConfig& cfg) {
  cfg.validate(plant);
  return simulate(plant, ctrl, cfg, initial_state(plant, ctrl, cfg));
}

SimTrace simulate(const PlantParams& plant, const ControllerParams& ctrl,
                  const SimConfig& cfg, const SimState& start) {
  cfg.validate(plant);
  const Problem p = make_problem(plant, ctrl);
  const int M = cfg.M;
  const int m = p.cl.m;
  if (start.w.size() != M + 1 || start.wt.size() != M + 1 || start.X.size() != m) {
    throw InputError("initial state does not match the grid or the controller order");
  }
  const double dx = 1.0 / M;
  const double dt = cfg.time_step(plant);
  const double lambda = p.c * dt / dx;
  const double lambda2 = lambda * lambda;
  const double beta = lambda * p.c * p.g;
  const double gamma = lambda * p.c * p.k;
  const long steps = static_cast<long>(std::ceil(cfg.T / dt - 1e-9));

  SimTrace tr;
  tr.M = M;
  tr.n = p.n;
  tr.dt = dt;

  // Deviation variable v = w - Omega_e t - sigma1 x.
  Eigen::VectorXd v(M + 1), vt0(M + 1);
  for (int i = 0; i <= M; ++i) {
    v(i) = start.w(i) - p.sigma1 * grid_x(i, M);
    vt0(i) = start.wt(i) - plant.Omega_e;
  }
  Eigen::VectorXd X = start.X;
  {
    const double u1 = p.cl.C1.dot(X) + p.ff.u1e;
    tr.initial_residuals.at_0 =
        second_order_slope(start.w, M, true) - p.g * (start.wt(0) - u1);
    tr.initial_residuals.at_1 = second_order_slope(start.w, M, false) +
                                p.k * start.wt(M) + plant.q * plant.Te;
  }

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  const Eigen::PartialPivLU<Eigen::MatrixXd> implicit(I - 0.5 * dt * p.cl.Atil);
  const Eigen::MatrixXd explicit_part = I + 0.5 * dt * p.cl.Atil;

  Eigen::VectorXd vm = v, vp(M + 1), vt(M + 1), wx(M + 1);
  const Eigen::VectorXd weights = quadrature_weights(M + 1);

  for (long j = 0; j <= steps; ++j) {
    const double u1 = p.cl.C1.dot(X);  // deviation of the first control
    if (j == 0) {
      taylor_interior(v, vt0, dt, lambda2, vp);
      const double vx0 = p.g * (vt0(0) - u1) + p.f0;
      const double vxM = -p.k * vt0(M) + p.f1;
      vp(0) = v(0) + dt * vt0(0) + lambda2 * (v(1) - v(0) - dx * vx0);
      vp(M) = v(M) + dt * vt0(M) + lambda2 * (v(M - 1) - v(M) + dx * vxM);
      vt = vt0;
    } else {
      leapfrog_interior(vm, v, lambda2, vp);
      vp(0) = (2.0 * v(0) - (1.0 - beta) * vm(0) + 2.0 * lambda2 * (v(1) - v(0)) +
               2.0 * lambda2 * dx * (p.g * u1 - p.f0)) /
              (1.0 + beta);
      vp(M) = (2.0 * v(M) - (1.0 - gamma) * vm(M) +
               2.0 * lambda2 * (v(M - 1) - v(M)) + 2.0 * lambda2 * dx * p.f1) /
              (1.0 + gamma);
      vt = (vp - vm) / (2.0 * dt);
    }
    if (!std::isfinite(vp(0)) || !std::isfinite(vp(M)) || !vp.allFinite()) {
      throw DivergenceError("simulation diverged at step " + std::to_string(j), j);
    }

    if (j % cfg.stride == 0) {
      const double t = j * dt;
      wx.segment(1, M - 1) = (v.segment(2, M - 1) - v.segment(0, M - 1)) / (2.0 * dx);
      wx(0) = p.g * (vt(0) - u1) + p.f0;
      wx(M) = -p.k * vt(M) + p.f1;
      const double fe =
          weights.dot((p.c * p.c * wx.array().square() + vt.array().square()).matrix());
      tr.t.push_back(t);
      tr.wt0.push_back(vt(0) + plant.Omega_e);
      tr.wt1.push_back(vt(M) + plant.Omega_e);
      tr.X.push_back(X);
      tr.u1.push_back(p.ff.u1e + u1);
      const Eigen::Vector2d Y = X.tail(2);
      tr.u2.push_back(p.ff.u2e + p.C2.dot(X.head(p.n)) + p.K.dot(Y));
      tr.field_energy.push_back(fe);
      tr.energy.push_back(X.squaredNorm() + fe);
      if (cfg.keep_fields) {
        Eigen::VectorXd w(M + 1);
        for (int i = 0; i <= M; ++i) {
          w(i) = v(i) + plant.Omega_e * t + p.sigma1 * grid_x(i, M);
        }
        tr.w.push_back(std::move(w));
        tr.wt.push_back(vt.array() + plant.Omega_e);
        tr.wx.push_back(wx.array() + p.sigma1);
      }
    }
    if (j == steps) break;

    // Boundary velocity integrated over the step is the displacement change.
    Eigen::Vector2d tail(vp(M) - v(M), vp(0) - v(0));
    X = implicit.solve(explicit_part * X + p.cl.Bhat * tail);
    if (!X.allFinite()) {
      throw DivergenceError("ODE state diverged at step " + std::to_string(j), j);
    }
    vm.swap(v);
    v.swap(vp);
  }
  return tr;
}

double energy(const PlantParams& plant, const Eigen::VectorXd& X,
              const Eigen::VectorXd& wx, const Eigen::VectorXd& wt) {
  if (wx.size() != wt.size()) throw InputError("w_x and w_t sample counts differ");
  const Eigen::VectorXd w = quadrature_weights(wx.size());
  const double sigma1 = equilibrium_slope(plant);
  const Eigen::ArrayXd dx = wx.array() - sigma1;
  const Eigen::ArrayXd dt = wt.array() - plant.Omega_e;
  return X.squaredNorm() +
         w.dot((plant.c * plant.c * dx.square() + dt.square()).matrix());
}

Eigen::Matrix2Xd riemann(const PlantParams& plant, const Eigen::VectorXd& wx,
                         const Eigen::VectorXd& wt) {
  if (wx.size() != wt.size()) throw InputError("w_x and w_t sample counts differ");
  const Eigen::Index n = wx.size();
  const double sigma1 = equilibrium_slope(plant);
  Eigen::Matrix2Xd chi(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = n - 1 - i;
    chi(0, i) = (wt(i) - plant.Omega_e) + plant.c * (wx(i) - sigma1);
    chi(1, i) = (wt(r) - plant.Omega_e) - plant.c * (wx(r) - sigma1);
  }
  return chi;
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& e,
                   double t_start, double t_end) {
  if (t.size() != e.size()) throw InputError("time and energy series differ in length");
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_start || t[i] > t_end) continue;
    if (!(e[i] > 0.0)) {
      throw InputError("nonpositive energy at t = " + std::to_string(t[i]) +
                       " inside the fit window");
    }
    const double y = std::log(e[i]);
    s += 1;
    sx += t[i];
    sy += y;
    sxx += t[i] * t[i];
    sxy += t[i] * y;
    syy += y * y;
  }
  if (s < 2) throw InputError("fit window holds fewer than two samples");
  const double vxx = sxx - sx * sx / s;
  const double vxy = sxy - sx * sy / s;
  const double vyy = syy - sy * sy / s;
  DecayFit fit;
  fit.samples = static_cast<int>(s);
  const double slope = vxy / vxx;
  fit.alpha = -0.5 * slope;
  fit.r2 = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
  return fit;
}

DecayFit fit_decay(const SimTrace& trace, double t_start, double t_end) {
  return fit_decay(trace.t, trace.energy, t_start, t_end);
}

void export_csv(const SimTrace& tr, const std::string& path) {
  std::ostringstream os;
  os << "t,wt0,wt1,Y1,Y2";
  for (int i = 1; i <= tr.n; ++i) os << ",Xc" << i;
  os << ",u1,u2,energy\n";
  for (std::size_t r = 0; r < tr.size(); ++r) {
    const Eigen::VectorXd& X = tr.X[r];
    os << format_number(tr.t[r]) << ',' << format_number(tr.wt0[r]) << ','
       << format_number(tr.wt1[r]) << ',' << format_number(X(tr.n)) << ','
       << format_number(X(tr.n + 1));
    for (int i = 0; i < tr.n; ++i) os << ',' << format_number(X(i));
    os << ',' << format_number(tr.u1[r]) << ',' << format_number(tr.u2[r]) << ','
       << format_number(tr.energy[r]) << '\n';
  }
  write_file_atomic(path, os.str());
}

void export_fields_csv(const SimTrace& tr, const std::string& path) {
  if (tr.size() == 0) throw InputError("trace is empty");
  if (tr.w.size() != tr.size()) {
    throw InputError("trace holds no field snapshots (enable keep_fields)");
  }
  std::ostringstream os;
  os << "x,t,w,wt\n";
  for (std::size_t r = 0; r < tr.size(); ++r) {
    for (int i = 0; i <= tr.M; ++i) {
      os << format_number(grid_x(i, tr.M)) << ',' << format_number(tr.t[r]) << ','
         << format_number(tr.w[r](i)) << ',' << format_number(tr.wt[r](i)) << '\n';
    }
  }
  write_file_atomic(path, os.str());
}

SimTrace read_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "' is empty");
  const int columns = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  SimTrace tr;
  tr.n = columns - 8;
  if (tr.n < 0 || line.rfind("t,wt0,wt1,Y1,Y2", 0) != 0) {
    throw InputError("'" + path + "' does not have a simulation header");
  }
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> vals;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc() || ptr != comma) {
        throw InputError("'" + path + "' line " + std::to_string(row) + ": bad number");
      }
      vals.push_back(v);
      p = comma + 1;
    }
    if (static_cast<int>(vals.size()) != columns) {
      throw InputError("'" + path + "' line " + std::to_string(row) +
                       ": wrong column count");
    }
    tr.t.push_back(vals[0]);
    tr.wt0.push_back(vals[1]);
    tr.wt1.push_back(vals[2]);
    Eigen::VectorXd X(tr.n + 2);
    X(tr.n) = vals[3];
    X(tr.n + 1) = vals[4];
    for (int i = 0; i < tr.n; ++i) X(i) = vals[5 + i];
    tr.X.push_back(X);
    tr.u1.push_back(vals[5 + tr.n]);
    tr.u2.push_back(vals[6 + tr.n]);
    tr.energy.push_back(vals[7 + tr.n]);
  }
  return tr;
}

double fixed_end_error(double c, int M, double cfl, double T) {
  if (M < 2 || !(cfl > 0.0) || cfl > 1.0 || !(T > 0.0)) {
    throw ConfigError("invalid fixed-end test configuration");
  }
  const long steps = std::lround(std::ceil(T * c * M / cfl));
  const double dt = T / steps;
  const double lambda2 = std::pow(c * dt * M, 2);
  const double pi = std::numbers::pi;
  // u(x, t) = sin(pi x) cos(pi c t) + 0.5 sin(2 pi x) sin(2 pi c t) / (2 pi c)
  auto exact = [&](double x, double t) {
    return std::sin(pi * x) * std::cos(pi * c * t) +
           0.5 * std::sin(2 * pi * x) * std::sin(2 * pi * c * t) / (2 * pi * c);
  };
  Eigen::VectorXd v(M + 1), vt(M + 1);
  for (int i = 0; i <= M; ++i) {
    const double x = grid_x(i, M);
    v(i) = exact(x, 0.0);
    vt(i) = 0.5 * std::sin(2 * pi * x);
  }
  Eigen::VectorXd vm = v, vp = Eigen::VectorXd::Zero(M + 1);
  taylor_interior(v, vt, dt, lambda2, vp);
  vp(0) = vp(M) = 0.0;
  for (long j = 1; j < steps; ++j) {
    vm.swap(v);
    v.swap(vp);
    leapfrog_interior(vm, v, lambda2, vp);
    vp(0) = vp(M) = 0.0;
  }
  double err = 0.0;
  for (int i = 0; i <= M; ++i) err = std::max(err, std::abs(vp(i) - exact(grid_x(i, M), T)));
  return err;
}

}  // namespace pipestab
