#include "pipestab/config.hpp"

#include <charconv>
#include <sstream>

#include "pipestab/errors.hpp"
#include "pipestab/fileio.hpp"
#include "pipestab/matrix_io.hpp"

namespace pipestab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

double to_double(const std::string& section, const std::string& key,
                 const std::string& value) {
  double v = 0.0;
  const char* b = value.data();
  const char* e = b + value.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    throw ConfigError(where(section, key) + ": '" + value + "' is not a number");
  }
  return v;
}

long to_integer(const std::string& section, const std::string& key,
                const std::string& value) {
  long v = 0;
  const char* b = value.data();
  const char* e = b + value.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    throw ConfigError(where(section, key) + ": '" + value + "' is not an integer");
  }
  return v;
}

std::vector<double> to_list(const std::string& section, const std::string& key,
                            const std::string& value) {
  std::string s = value;
  for (char& ch : s) {
    if (ch == ',' || ch == ';' || ch == '[' || ch == ']') ch = ' ';
  }
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(section, key, tok));
  return out;
}

Eigen::MatrixXd row_major(const std::vector<double>& v, int rows, int cols,
                          const std::string& name) {
  if (static_cast<int>(v.size()) != rows * cols) {
    throw ConfigError("[controller] " + name + ": expected " +
                      std::to_string(rows * cols) + " entries, got " +
                      std::to_string(v.size()));
  }
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = v[i * cols + j];
  }
  return m;
}

std::string list_text(const Eigen::MatrixXd& m) {
  std::string out;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (!out.empty()) out += ' ';
      out += format_number(m(i, j));
    }
  }
  return out;
}

}  // namespace

void RunConfig::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  auto num = [&] { return to_double(section, key, value); };
  auto integer = [&] { return to_integer(section, key, value); };
  if (section == "plant") {
    double* slot = nullptr;
    if (key == "c") slot = &plant.c;
    else if (key == "k") slot = &plant.k;
    else if (key == "g") slot = &plant.g;
    else if (key == "q") slot = &plant.q;
    else if (key == "Te") slot = &plant.Te;
    else if (key == "Omega_e") slot = &plant.Omega_e;
    else if (key == "A21") slot = &plant.A21;
    else if (key == "A22") slot = &plant.A22;
    else if (key == "b") slot = &plant.b;
    else if (key == "e1") slot = &plant.e1;
    else if (key == "e2") slot = &plant.e2;
    if (!slot) throw ConfigError("unknown key " + where(section, key));
    *slot = num();
  } else if (section == "controller") {
    if (key == "type") {
      if (value != "feedforward" && value != "dynamic" && value != "custom") {
        throw ConfigError(where(section, key) + ": expected feedforward, dynamic or custom");
      }
      controller_type = value;
    } else if (key == "n") {
      const long n = integer();
      if (n < 0 || n > 64) throw ConfigError(where(section, key) + ": out of range");
      controller_order = static_cast<int>(n);
    } else if (key == "Ac" || key == "Bc1" || key == "Bc2" || key == "C1" ||
               key == "C2" || key == "K") {
      controller_matrices[key] = to_list(section, key, value);
    } else {
      throw ConfigError("unknown key " + where(section, key));
    }
  } else if (section == "analysis") {
    if (key == "tol") decay.tol = num();
    else if (key == "cap") decay.cap = num();
    else if (key == "margin_tol") decay.solver.margin_tol = num();
    else if (key == "max_newton_steps") decay.solver.max_newton_steps = static_cast<int>(integer());
    else if (key == "threads") {
      const long t = integer();
      if (t < 0) throw ConfigError(where(section, key) + ": must be nonnegative");
      threads = static_cast<unsigned>(t);
    } else {
      throw ConfigError("unknown key " + where(section, key));
    }
  } else if (section == "sim") {
    if (key == "M") sim.M = static_cast<int>(integer());
    else if (key == "dt_factor") sim.dt_factor = num();
    else if (key == "dt") sim.dt = num();
    else if (key == "T") sim.T = num();
    else if (key == "stride") sim.stride = static_cast<int>(integer());
    else if (key == "ic") sim.ic = parse_initial_condition(value);
    else if (key == "perturbation") sim.perturbation = num();
    else if (key == "fields") {
      if (value != "true" && value != "false") {
        throw ConfigError(where(section, key) + ": expected true or false");
      }
      sim.keep_fields = value == "true";
    } else if (key == "fit_start") fit_start = num();
    else if (key == "fit_end") fit_end = num();
    else throw ConfigError("unknown key " + where(section, key));
  } else if (section == "run") {
    if (key == "output") output_dir = value;
    else if (key == "seed") {
      const long s = integer();
      if (s < 0) throw ConfigError(where(section, key) + ": must be nonnegative");
      seed = static_cast<std::uint64_t>(s);
      sim.seed = seed;
    } else {
      throw ConfigError("unknown key " + where(section, key));
    }
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto dot = assignment.find('.');
  const auto eq = assignment.find('=');
  if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' is not section.key=value");
  }
  set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
      trim(assignment.substr(eq + 1)));
  overrides.push_back(assignment);
}

ControllerParams RunConfig::controller() const { return controller(controller_type); }

ControllerParams RunConfig::controller(const std::string& type) const {
  ControllerParams ctrl;
  if (type == "feedforward") return ControllerParams::feedforward();
  if (type == "dynamic") {
    ctrl = ControllerParams::dynamic_reference();
  } else if (type == "custom") {
    if (!controller_order) throw ConfigError("[controller] n is required for a custom controller");
    const int n = *controller_order;
    ctrl.n = n;
    ctrl.Ac = Eigen::MatrixXd::Zero(n, n);
    ctrl.Bc1 = Eigen::MatrixXd::Zero(n, 2);
    ctrl.Bc2 = Eigen::MatrixXd::Zero(n, 2);
    ctrl.C1 = Eigen::RowVectorXd::Zero(n + 2);
    ctrl.C2 = Eigen::RowVectorXd::Zero(n);
  } else {
    throw ConfigError("unknown controller type '" + type + "'");
  }
  if (type == "dynamic" && controller_order && *controller_order != ctrl.n) {
    throw ConfigError("[controller] n must be 2 for the dynamic controller");
  }
  const int n = ctrl.n;
  for (const auto& [name, v] : controller_matrices) {
    if (name == "Ac") ctrl.Ac = row_major(v, n, n, name);
    else if (name == "Bc1") ctrl.Bc1 = row_major(v, n, 2, name);
    else if (name == "Bc2") ctrl.Bc2 = row_major(v, n, 2, name);
    else if (name == "C1") ctrl.C1 = row_major(v, 1, n + 2, name);
    else if (name == "C2") ctrl.C2 = row_major(v, 1, n, name);
    else if (name == "K") ctrl.K = row_major(v, 1, 2, name);
  }
  return ctrl;
}

std::string RunConfig::dump() const {
  std::ostringstream os;
  const PlantParams& p = plant;
  os << "[plant]\n"
     << "c = " << format_number(p.c) << "\nk = " << format_number(p.k)
     << "\ng = " << format_number(p.g) << "\nq = " << format_number(p.q)
     << "\nTe = " << format_number(p.Te) << "\nOmega_e = " << format_number(p.Omega_e)
     << "\nA21 = " << format_number(p.A21) << "\nA22 = " << format_number(p.A22)
     << "\nb = " << format_number(p.b) << "\ne1 = " << format_number(p.e1)
     << "\ne2 = " << format_number(p.e2) << "\n\n";

  os << "[controller]\ntype = " << controller_type << "\n";
  if (controller_type != "feedforward") {
    const ControllerParams ctrl = controller();
    os << "n = " << ctrl.n << "\n";
    if (ctrl.n > 0) {
      os << "Ac = " << list_text(ctrl.Ac) << "\nBc1 = " << list_text(ctrl.Bc1)
         << "\nBc2 = " << list_text(ctrl.Bc2) << "\nC2 = " << list_text(ctrl.C2) << "\n";
    }
    os << "C1 = " << list_text(ctrl.C1) << "\nK = " << list_text(ctrl.K) << "\n";
  }
  os << "\n[analysis]\ntol = " << format_number(decay.tol) << "\n";
  if (decay.cap) os << "cap = " << format_number(*decay.cap) << "\n";
  os << "margin_tol = " << format_number(decay.solver.margin_tol)
     << "\nmax_newton_steps = " << decay.solver.max_newton_steps
     << "\nthreads = " << threads << "\n\n";

  os << "[sim]\nM = " << sim.M << "\ndt_factor = " << format_number(sim.dt_factor) << "\n";
  if (sim.dt) os << "dt = " << format_number(*sim.dt) << "\n";
  os << "T = " << format_number(sim.T) << "\nstride = " << sim.stride
     << "\nic = " << to_string(sim.ic)
     << "\nperturbation = " << format_number(sim.perturbation)
     << "\nfields = " << (sim.keep_fields ? "true" : "false")
     << "\nfit_start = " << format_number(window_start())
     << "\nfit_end = " << format_number(window_end()) << "\n\n";

  os << "[run]\noutput = " << output_dir << "\nseed = " << seed << "\n";
  return os.str();
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string at = origin + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(at + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "plant" && section != "controller" && section != "analysis" &&
          section != "sim" && section != "run") {
        throw ConfigError(at + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(at + "expected key = value");
    if (section.empty()) throw ConfigError(at + "key outside of any section");
    try {
      cfg.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(at + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read configuration: ") + e.what());
  }
  return parse_config(text, path);
}

}  // namespace pipestab
