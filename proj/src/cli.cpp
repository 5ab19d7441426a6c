#include "pipestab/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pipestab/config.hpp"
#include "pipestab/errors.hpp"
#include "pipestab/fileio.hpp"
#include "pipestab/validation.hpp"

namespace pipestab {

const char* tool_version() { return "0.1.0"; }

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Context {
  RunConfig cfg;
  std::filesystem::path dir;
  std::vector<std::string> outputs;
  std::ostream& out;
  std::ostream& err;

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void write(const std::string& name, const std::string& content) {
    write_file_atomic(path(name), content);
    outputs.push_back(name);
  }
};

std::string bound_text(const AlphaMax& b) {
  return b.is_infinite() ? "inf" : fixed(b.value(), 3);
}

int cmd_check(Context& ctx, double alpha, int order) {
  const PlantParams& plant = ctx.cfg.plant;
  const ControllerParams ctrl = ctx.cfg.controller();
  std::ostringstream os;
  os << "controller: " << ctx.cfg.controller_type << "\norder: " << order
     << "\nalpha: " << alpha << "\n";
  if (!necessary_condition(plant, ctrl, alpha)) {
    os << "verdict: infeasible\nreason: exceeds alpha_max = " << bound_text(alpha_max(plant))
       << "\n";
    ctx.out << os.str();
    ctx.write("check.txt", os.str());
    return kExitOk;
  }
  const LmiProblem pb = make_problem(order, plant, ctrl);
  const FeasibilityReport r = solve_feasibility(pb, alpha, ctx.cfg.decay.solver);
  os << "verdict: " << to_string(r.status) << "\nnewton_steps: " << r.iterations
     << "\nmargin_bracket: [" << r.margin_lower << ", " << r.margin_upper << "]\n";
  if (r.certificate) {
    const Certificate& cert = *r.certificate;
    os << "margin: " << cert.margin << "\nverified: "
       << (verify_certificate(pb, cert, 0.5 * cert.margin) ? "yes" : "no") << "\n";
    std::ostringstream c;
    write_certificate(c, pb, cert);
    ctx.write("certificate.txt", c.str());
  }
  ctx.out << os.str();
  ctx.write("check.txt", os.str());
  if (r.status == FeasibilityStatus::numerical_failure) {
    ctx.err << "error: numerical failure: " << r.diagnostics << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

void describe(std::ostream& os, const DecayResult& r) {
  os << "order: " << r.N << "\n";
  if (!r.certified) {
    os << "alpha_N: none (" << r.note << ")\n";
  } else {
    os << "alpha_N: " << fixed(r.alpha_N, 6) << "\nbracket: [" << fixed(r.lo, 6) << ", "
       << fixed(r.hi, 6) << "]\n";
    if (r.certificate) os << "margin: " << r.certificate->margin << "\n";
  }
  os << "alpha_max: " << bound_text(r.bound) << "\nsolver_calls: " << r.solver_calls
     << "\nnewton_steps: " << r.newton_steps
     << "\nnumerical_failures: " << r.numerical_failures << "\n";
}

int cmd_analyze(Context& ctx, int order) {
  const ControllerParams ctrl = ctx.cfg.controller();
  const DecayResult r = max_decay_rate(ctx.cfg.plant, ctrl, order, ctx.cfg.decay);
  std::ostringstream os;
  os << "controller: " << ctx.cfg.controller_type << "\n";
  describe(os, r);
  ctx.out << os.str();
  ctx.write("decay.txt", os.str());
  if (r.certificate) {
    std::ostringstream c;
    write_certificate(c, make_problem(order, ctx.cfg.plant, ctrl), *r.certificate);
    ctx.write("certificate.txt", c.str());
  }
  return kExitOk;
}

std::vector<LabeledController> table_rows(const RunConfig& cfg) {
  std::vector<LabeledController> rows{{"feedforward", cfg.controller("feedforward")}};
  const std::string other = cfg.controller_type == "feedforward" ? "dynamic" : cfg.controller_type;
  rows.push_back({other, cfg.controller(other)});
  return rows;
}

int cmd_table(Context& ctx, int max_order) {
  const HierarchyTable t =
      hierarchy_table(ctx.cfg.plant, table_rows(ctx.cfg), max_order, ctx.cfg.decay, ctx.cfg.threads);
  std::ostringstream text, csv;
  write_table_text(text, t);
  write_table_csv(csv, t);
  ctx.out << text.str();
  ctx.write("table.txt", text.str());
  ctx.write("table.csv", csv.str());
  bool failed = false;
  for (const auto& row : t.rows) {
    if (row.failure) {
      ctx.err << "error: numerical failure in row " << row.label << ": " << *row.failure << "\n";
      failed = true;
    }
  }
  return failed ? kExitNumerical : kExitOk;
}

int cmd_simulate(Context& ctx, int order) {
  const PlantParams& plant = ctx.cfg.plant;
  const ControllerParams ctrl = ctx.cfg.controller();
  const SimTrace tr = simulate(plant, ctrl, ctx.cfg.sim);
  export_csv(tr, ctx.path("trace.csv"));
  ctx.outputs.push_back("trace.csv");
  if (ctx.cfg.sim.keep_fields) {
    export_fields_csv(tr, ctx.path("fields.csv"));
    ctx.outputs.push_back("fields.csv");
  }
  std::ostringstream os;
  os << "controller: " << ctx.cfg.controller_type << "\ninitial_condition: "
     << to_string(ctx.cfg.sim.ic) << "\nsteps_recorded: " << tr.size()
     << "\nboundary_residual_x0: " << tr.initial_residuals.at_0
     << "\nboundary_residual_x1: " << tr.initial_residuals.at_1 << "\n";
  const double t0 = ctx.cfg.window_start();
  const double t1 = ctx.cfg.window_end();
  try {
    const DecayFit fit = fit_decay(tr, t0, t1);
    os << "fit_window: [" << t0 << ", " << t1 << "]\nalpha_emp: " << fixed(fit.alpha, 6)
       << "\nr2: " << fixed(fit.r2, 4) << "\n";
    std::optional<DecayResult> best;
    for (int N = 0; N <= order; ++N) {
      DecayResult r = max_decay_rate(plant, ctrl, N, ctx.cfg.decay);
      if (r.certified && (!best || r.alpha_N > best->alpha_N)) best = std::move(r);
    }
    if (best) {
      os << "best_certified: " << fixed(best->alpha_N, 6) << " (N=" << best->N << ")\n"
         << "consistent: " << (fit.alpha >= 0.95 * best->alpha_N ? "yes" : "no") << "\n";
    } else {
      os << "best_certified: none for N <= " << order << "\n";
    }
  } catch (const InputError& e) {
    os << "fit: " << e.what() << "\n";
  }
  ctx.out << os.str();
  ctx.write("simulate.txt", os.str());
  return kExitOk;
}

int cmd_validate(Context& ctx) {
  std::vector<CheckResult> checks =
      run_validation(ctx.cfg.plant, ControllerParams::feedforward(), ctx.cfg.seed);
  if (ctx.cfg.controller_type != "feedforward") {
    CheckResult c = check_certificates(ctx.cfg.plant, ctx.cfg.controller(), 3);
    c.name += "-" + ctx.cfg.controller_type;
    checks.push_back(std::move(c));
  }
  std::ostringstream os;
  int passed = 0;
  for (const auto& c : checks) {
    passed += c.passed;
    os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  }
  os << passed << " passed, " << checks.size() - passed << " failed\n";
  ctx.out << os.str();
  ctx.write("validate.txt", os.str());
  return passed == static_cast<int>(checks.size()) ? kExitOk : kExitError;
}

void write_manifest(Context& ctx, const std::string& command,
                    const std::vector<std::string>& argv, int status,
                    const std::string& error, double seconds) {
  nlohmann::ordered_json m;
  m["tool"] = "pipestab";
  m["version"] = tool_version();
  m["command"] = command;
  m["argv"] = argv;
  m["exit_status"] = status;
  if (!error.empty()) m["error"] = error;
  m["wall_time_s"] = seconds;
  m["seed"] = ctx.cfg.seed;
  m["overrides"] = ctx.cfg.overrides;
  m["outputs"] = ctx.outputs;
  m["config"] = ctx.cfg.dump();
  write_file_atomic(ctx.path("manifest.json"), m.dump(2) + "\n");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Decay-rate certificates and simulation for a drilling pipe model", "pipestab"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, output, controller, ic;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  app.add_option("-c,--config", config_path, "configuration file (default $PIPESTAB_CONFIG)");
  app.add_option("--set", sets, "override, section.key=value (repeatable)");
  app.add_option("-o,--output", output, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads for table (0 = all cores)");
  app.set_version_flag("--version", tool_version());

  auto controller_opt = [&](CLI::App* sub) {
    sub->add_option("--controller", controller, "feedforward, dynamic or custom")
        ->check(CLI::IsMember({"feedforward", "dynamic", "custom"}));
  };
  double alpha = 0.0;
  int order = 3;
  int max_order = 3;
  bool fields = false;

  CLI::App* check = app.add_subcommand("check", "feasibility verdict at one decay rate");
  check->add_option("--alpha", alpha, "decay rate (1/s)")->required();
  check->add_option("--order", order, "projection order N")->check(CLI::Range(0, kMaxLegendreDegree));
  controller_opt(check);

  CLI::App* analyze = app.add_subcommand("analyze", "largest certified decay rate");
  analyze->add_option("--order", order, "projection order N")->check(CLI::Range(0, kMaxLegendreDegree));
  controller_opt(analyze);

  CLI::App* table = app.add_subcommand("table", "decay rates for N = 0..max-order");
  table->add_option("--max-order", max_order, "largest order")->check(CLI::Range(0, kMaxTableOrder));

  CLI::App* sim = app.add_subcommand("simulate", "finite-difference simulation");
  controller_opt(sim);
  sim->add_option("--ic", ic, "ramp, equilibrium or perturbed")
      ->check(CLI::IsMember({"ramp", "equilibrium", "perturbed"}));
  sim->add_flag("--fields", fields, "also write field snapshots");
  sim->add_option("--order", order, "largest order for the certificate comparison")
      ->check(CLI::Range(0, kMaxTableOrder));

  CLI::App* validate = app.add_subcommand("validate", "invariant suite");
  controller_opt(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  std::string command = app.get_subcommands().front()->get_name();
  std::vector<std::string> args(argv + 1, argv + argc);

  RunConfig cfg;
  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("PIPESTAB_CONFIG"); env && *env) config_path = env;
    }
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& s : sets) cfg.apply_override(s);
    if (!controller.empty()) cfg.apply_override("controller.type=" + controller);
    if (seed) cfg.apply_override("run.seed=" + std::to_string(*seed));
    if (threads) cfg.apply_override("analysis.threads=" + std::to_string(*threads));
    if (!output.empty()) cfg.apply_override("run.output=" + output);
    if (!ic.empty()) cfg.apply_override("sim.ic=" + ic);
    if (fields) cfg.apply_override("sim.fields=true");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  Context ctx{cfg, cfg.output_dir, {}, out, err};
  int status = kExitOk;
  std::string error;
  try {
    std::filesystem::create_directories(ctx.dir);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: cannot create output directory '" << ctx.dir.string() << "': " << e.what() << "\n";
    return kExitError;
  }
  for (const auto& o : cfg.overrides) err << "override: " << o << "\n";
  try {
    if (command == "check") status = cmd_check(ctx, alpha, order);
    else if (command == "analyze") status = cmd_analyze(ctx, order);
    else if (command == "table") status = cmd_table(ctx, max_order);
    else if (command == "simulate") status = cmd_simulate(ctx, order);
    else status = cmd_validate(ctx);
  } catch (const NumericalFailure& e) {
    error = e.what();
    err << "error: numerical failure: " << e.what() << "\n";
    status = kExitNumerical;
  } catch (const DivergenceError& e) {
    error = e.what();
    err << "error: " << e.what() << " (step " << e.step() << ")\n";
    status = kExitError;
  } catch (const Error& e) {
    error = e.what();
    err << "error: " << e.what() << "\n";
    status = kExitError;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    write_manifest(ctx, command, args, status, error, seconds);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (status == kExitOk) status = kExitError;
  }
  return status;
}

}  // namespace pipestab
