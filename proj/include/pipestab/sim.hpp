#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pipestab/model.hpp"

namespace pipestab {

enum class InitialCondition { ramp, equilibrium, perturbed };

const char* to_string(InitialCondition ic);
// Accepts "ramp", "equilibrium" and "perturbed". Throws ConfigError.
InitialCondition parse_initial_condition(const std::string& s);

struct SimConfig {
  int M = 200;              // spatial intervals, even
  double dt_factor = 0.9;   // dt = dt_factor / (c M) unless dt is set
  std::optional<double> dt;
  double T = 25.0;
  int stride = 10;          // record every stride-th step
  InitialCondition ic = InitialCondition::ramp;
  std::uint64_t seed = 1;
  double perturbation = 0.1;  // amplitude for the perturbed start
  bool keep_fields = false;   // store w, w_t, w_x at every recorded step

  double time_step(const PlantParams& plant) const;
  // Throws ConfigError on CFL > 1, odd M, nonpositive T, dt or stride.
  void validate(const PlantParams& plant) const;
};

// Physical fields on the grid x_i = i / M and the controller/bit state
// X = [Xc; Y], all as deviations except w and w_t.
struct SimState {
  Eigen::VectorXd w;
  Eigen::VectorXd wt;
  Eigen::VectorXd X;
};

SimState initial_state(const PlantParams& plant, const ControllerParams& ctrl,
                       const SimConfig& cfg);

// Mismatch of the initial profile against both Robin conditions, from
// second-order one-sided differences of w.
struct BoundaryResiduals {
  double at_0 = 0.0;  // w_x(0) - g (w_t(0) - u1)
  double at_1 = 0.0;  // w_x(1) + k w_t(1) + q Te
};

struct SimTrace {
  int M = 0;
  int n = 0;  // controller order
  double dt = 0.0;
  std::vector<double> t;
  std::vector<double> wt0, wt1;
  std::vector<Eigen::VectorXd> X;  // [Xc; Y] per record
  std::vector<double> u1, u2;
  std::vector<double> energy;
  std::vector<double> field_energy;  // energy without the |X|^2 term
  // Filled when keep_fields is set; one grid vector per record.
  std::vector<Eigen::VectorXd> w, wt, wx;
  BoundaryResiduals initial_residuals;

  std::size_t size() const { return t.size(); }
};

// Leapfrog in the interior, ghost-point closure of both Robin conditions,
// trapezoidal rule for [Xc; Y] driven by centered boundary velocities.
// Throws DivergenceError on the first non-finite value.
SimTrace simulate(const PlantParams& plant, const ControllerParams& ctrl,
                  const SimConfig& cfg);
SimTrace simulate(const PlantParams& plant, const ControllerParams& ctrl,
                  const SimConfig& cfg, const SimState& start);

// |X|^2 + c^2 ||w_x - sigma1||^2 + ||w_t - Omega_e||^2, Simpson in x.
double energy(const PlantParams& plant, const Eigen::VectorXd& X,
              const Eigen::VectorXd& wx, const Eigen::VectorXd& wt);

// Riemann coordinates of the deviation fields:
//   chi1(x) = w_t(x) + c w_x(x),  chi2(x) = w_t(1 - x) - c w_x(1 - x).
Eigen::Matrix2Xd riemann(const PlantParams& plant, const Eigen::VectorXd& wx,
                         const Eigen::VectorXd& wt);

struct DecayFit {
  double alpha = 0.0;
  double r2 = 0.0;
  int samples = 0;
};

// Least-squares slope s of log E over [t_start, t_end]; alpha = -s / 2.
// Throws InputError if the window holds fewer than two samples or a
// nonpositive energy.
DecayFit fit_decay(const std::vector<double>& t,
                   const std::vector<double>& energy, double t_start,
                   double t_end);
DecayFit fit_decay(const SimTrace& trace, double t_start, double t_end);

// t,wt0,wt1,Y1,Y2,Xc1..Xcn,u1,u2,energy with 17 significant digits.
void export_csv(const SimTrace& trace, const std::string& path);
// x,t,w,wt per grid point and record. Needs keep_fields.
void export_fields_csv(const SimTrace& trace, const std::string& path);
// Reads the series written by export_csv back; n is taken from the header.
SimTrace read_csv(const std::string& path);

// Max error at time T of the same leapfrog and Taylor start on the fixed-end
// problem u(0) = u(1) = 0 against the exact standing-wave solution.
double fixed_end_error(double c, int M, double cfl, double T);

}  // namespace pipestab
