// Experiment command line: scenario generation, solving and aggregation.
// Talks to the solver library exclusively through its C interface.
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treeloc/treeloc_c.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitInput = 2;

struct ScenarioParams {
  int sensors = 0;
  int anchors = 0;
  std::string area = "1x1";
  double rc = 0.0;
  std::int64_t seed = 0;
  std::vector<double> noise;
  int runs = 1;
};

bool parse_area(const std::string& s, double& w, double& h) {
  std::istringstream is(s);
  char x = 0;
  return (is >> w >> x >> h) && (x == 'x' || x == 'X') && w > 0 && h > 0;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string run_label(double sigma, int run) {
  return "s" + format_double(sigma) + "_r" + std::to_string(run);
}

// Measurement streams get an offset so they never collide with the
// position streams derived from the same base seed.
constexpr std::int64_t kMeasSeedOffset = 10007;

int fail_input(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kExitInput;
}

int generate_one(const ScenarioParams& p, double sigma, int run,
                 const fs::path& path) {
  double w = 0, h = 0;
  parse_area(p.area, w, h);
  tl_scenario* base = nullptr;
  if (tl_scenario_generate(p.sensors, p.anchors, w, h, p.rc, p.seed + run, &base))
    return fail_input(tl_last_error());
  tl_scenario* scn = nullptr;
  if (tl_scenario_synthesize(base, sigma, sigma, p.seed + run + kMeasSeedOffset,
                             &scn)) {
    tl_scenario_free(base);
    return fail_input(tl_last_error());
  }
  tl_scenario_free(base);
  tl_status st = tl_scenario_save(scn, path.string().c_str());
  tl_scenario_free(scn);
  if (st) return fail_input(tl_last_error());
  return kExitOk;
}

int cmd_generate(const ScenarioParams& p, const std::string& out_dir) {
  double w = 0, h = 0;
  if (!parse_area(p.area, w, h)) return fail_input("--area must look like 0.8x0.8");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::vector<double> noises = p.noise.empty() ? std::vector<double>{0.0} : p.noise;
  for (double sigma : noises)
    for (int r = 0; r < p.runs; ++r) {
      fs::path path = fs::path(out_dir) / ("scenario_" + run_label(sigma, r) + ".json");
      if (int rc = generate_one(p, sigma, r, path)) return rc;
      std::cout << path.string() << "\n";
    }
  return kExitOk;
}

struct RunOutcome {
  std::string run_id;
  std::string solver;
  std::string status;
  int iters = 0;
  long long comms = 0;
  int tree_height = 0;
  double rmse = -1.0;
  double objective = 0.0;
  double wall_time_s = 0.0;
};

void write_results_csv(const fs::path& path, const std::vector<RunOutcome>& rows) {
  std::ofstream os(path);
  os << "run_id,solver,status,iters,per_agent_comms,tree_height,rmse,objective,"
        "wall_time_s\n";
  for (const auto& r : rows) {
    os << r.run_id << ',' << r.solver << ',' << r.status << ',' << r.iters << ','
       << r.comms << ',' << r.tree_height << ','
       << (r.rmse >= 0 ? format_double(r.rmse) : std::string()) << ','
       << format_double(r.objective) << ',' << format_double(r.wall_time_s) << '\n';
  }
}

int solve_one(tl_scenario* scn, const tl_solver_options& opts,
              const std::string& solver_name, const std::string& run_id,
              const fs::path& out_dir, bool trace, RunOutcome& row) {
  tl_result* res = nullptr;
  auto t0 = std::chrono::steady_clock::now();
  tl_status st = tl_solve(scn, &opts, &res);
  auto t1 = std::chrono::steady_clock::now();
  if (st) {
    std::cerr << "error: " << run_id << ": " << tl_last_error() << "\n";
    return st == TL_ERR_SOLVER ? kExitSolver : kExitInput;
  }
  row.run_id = run_id;
  row.solver = solver_name;
  row.status = tl_result_status(res);
  row.iters = tl_result_iterations(res);
  row.comms = tl_result_per_agent_comms(res);
  row.tree_height = tl_result_tree_height(res);
  row.rmse = tl_result_rmse(res);
  row.objective = tl_result_objective(res);
  row.wall_time_s = std::chrono::duration<double>(t1 - t0).count();

  const int n = tl_scenario_num_sensors(scn);
  const int d = tl_scenario_dim(scn);
  std::vector<double> xy(static_cast<size_t>(n) * d);
  tl_result_positions(res, xy.data());
  std::ofstream os(out_dir / ("estimate_" + run_id + ".json"));
  os << "{\n  \"run_id\": \"" << run_id << "\",\n  \"iterations\": " << row.iters
     << ",\n  \"per_agent_communications\": " << row.comms
     << ",\n  \"objective\": " << format_double(row.objective)
     << ",\n  \"positions\": [";
  for (int i = 0; i < n; ++i) {
    os << (i ? ", [" : "[");
    for (int j = 0; j < d; ++j) os << (j ? ", " : "") << format_double(xy[i * d + j]);
    os << "]";
  }
  os << "]\n}\n";

  char* text = nullptr;
  if (tl_result_commlog_csv(res, &text) == TL_OK && text && *text) {
    std::ofstream cs(out_dir / ("commlog_" + run_id + ".csv"));
    cs << text;
  }
  tl_string_free(text);
  text = nullptr;
  if (trace && tl_result_trace_csv(res, &text) == TL_OK && text && *text) {
    std::ofstream ts(out_dir / ("trace_" + run_id + ".csv"));
    ts << text;
  }
  tl_string_free(text);
  tl_result_free(res);
  return kExitOk;
}

int cmd_solve(const ScenarioParams& p, const std::vector<std::string>& inputs,
              const tl_solver_options& opts, const std::string& solver_name,
              const std::string& out_dir, bool trace) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::vector<RunOutcome> rows;
  bool solver_failure = false;

  auto run_scn = [&](tl_scenario* scn, const std::string& run_id) {
    RunOutcome row;
    int rc = solve_one(scn, opts, solver_name, run_id, out_dir, trace, row);
    tl_scenario_free(scn);
    if (rc != kExitOk) return rc;
    rows.push_back(row);
    if (row.status != "converged") solver_failure = true;
    return kExitOk;
  };

  if (!inputs.empty()) {
    for (const std::string& in : inputs) {
      tl_scenario* scn = nullptr;
      if (tl_scenario_load(in.c_str(), &scn)) return fail_input(tl_last_error());
      if (int rc = run_scn(scn, fs::path(in).stem().string())) return rc;
    }
  } else {
    double w = 0, h = 0;
    if (!parse_area(p.area, w, h)) return fail_input("--area must look like 0.8x0.8");
    std::vector<double> noises = p.noise.empty() ? std::vector<double>{0.0} : p.noise;
    for (double sigma : noises)
      for (int r = 0; r < p.runs; ++r) {
        tl_scenario* base = nullptr;
        if (tl_scenario_generate(p.sensors, p.anchors, w, h, p.rc, p.seed + r,
                                 &base))
          return fail_input(tl_last_error());
        tl_scenario* scn = nullptr;
        tl_status st = tl_scenario_synthesize(base, sigma, sigma,
                                              p.seed + r + kMeasSeedOffset, &scn);
        tl_scenario_free(base);
        if (st) return fail_input(tl_last_error());
        if (int rc = run_scn(scn, run_label(sigma, r))) return rc;
      }
  }
  write_results_csv(fs::path(out_dir) / "results.csv", rows);
  return solver_failure ? kExitSolver : kExitOk;
}

struct Aggregate {
  int runs = 0, converged = 0;
  double rmse_sum = 0, rmse_min = 0, rmse_max = 0;
  int rmse_n = 0;
  double iters_sum = 0, iters_max = 0;
  double comms_sum = 0, comms_max = 0;
  double obj_sum = 0;
};

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_file) {
  std::map<std::pair<std::string, std::string>, Aggregate> groups;
  for (const std::string& in : inputs) {
    std::ifstream is(in);
    if (!is) return fail_input("cannot open " + in);
    std::string line;
    if (!std::getline(is, line) ||
        line.rfind("run_id,solver,status,iters,per_agent_comms,tree_height,rmse,"
                   "objective,wall_time_s",
                   0) != 0)
      return fail_input(in + ": unexpected results schema");
    std::string label = fs::path(in).parent_path().filename().string();
    if (label.empty()) label = fs::path(in).stem().string();
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::istringstream ls(line);
      std::string tok;
      while (std::getline(ls, tok, ',')) f.push_back(tok);
      f.resize(9);
      Aggregate& a = groups[{label, f[1]}];
      a.runs++;
      if (f[2] == "converged") a.converged++;
      double iters = std::atof(f[3].c_str());
      double comms = std::atof(f[4].c_str());
      a.iters_sum += iters;
      a.iters_max = std::max(a.iters_max, iters);
      a.comms_sum += comms;
      a.comms_max = std::max(a.comms_max, comms);
      a.obj_sum += std::atof(f[7].c_str());
      if (!f[6].empty()) {
        double r = std::atof(f[6].c_str());
        if (a.rmse_n == 0) a.rmse_min = a.rmse_max = r;
        a.rmse_min = std::min(a.rmse_min, r);
        a.rmse_max = std::max(a.rmse_max, r);
        a.rmse_sum += r;
        a.rmse_n++;
      }
    }
  }
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_file.empty()) {
    file.open(out_file);
    if (!file) return fail_input("cannot write " + out_file);
    os = &file;
  }
  *os << "source,solver,runs,converged,mean_rmse,min_rmse,max_rmse,mean_iters,"
         "max_iters,mean_per_agent_comms,max_per_agent_comms,mean_objective\n";
  for (const auto& [key, a] : groups) {
    *os << key.first << ',' << key.second << ',' << a.runs << ',' << a.converged
        << ',';
    if (a.rmse_n > 0)
      *os << format_double(a.rmse_sum / a.rmse_n) << ',' << format_double(a.rmse_min)
          << ',' << format_double(a.rmse_max) << ',';
    else
      *os << ",,,";
    *os << format_double(a.iters_sum / a.runs) << ',' << format_double(a.iters_max)
        << ',' << format_double(a.comms_sum / a.runs) << ','
        << format_double(a.comms_max) << ',' << format_double(a.obj_sum / a.runs)
        << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Range-based sensor-network localization experiments"};
  app.require_subcommand(1);

  ScenarioParams params;
  std::string out_dir = ".";
  std::string out_file;
  std::vector<std::string> inputs;
  std::string solver_name = "centralized";
  std::string root = "auto";
  bool trace = false;
  tl_solver_options opts;
  tl_default_options(&opts);

  auto add_scenario_flags = [&](CLI::App* c, bool required) {
    c->add_option("--sensors", params.sensors, "number of sensors")
        ->required(required);
    c->add_option("--anchors", params.anchors, "number of anchors")
        ->required(required);
    c->add_option("--area", params.area, "area as WxH, e.g. 0.8x0.8");
    c->add_option("--rc", params.rc, "communication range")->required(required);
    c->add_option("--seed", params.seed, "base seed; run r uses seed+r");
    c->add_option("--noise", params.noise, "noise std-dev (repeatable)");
    c->add_option("--runs", params.runs, "Monte-Carlo runs per noise level")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* gen = app.add_subcommand("generate", "write scenario JSON files");
  add_scenario_flags(gen, true);
  gen->add_option("--out", out_dir, "output directory");

  CLI::App* solve = app.add_subcommand("solve", "solve scenarios, write results CSV");
  add_scenario_flags(solve, false);
  solve->add_option("scenarios", inputs, "scenario JSON files (omit to generate)");
  solve->add_option("--solver", solver_name, "centralized or distributed")
      ->check(CLI::IsMember({"centralized", "distributed"}));
  solve->add_option("--root", root, "clique-tree root: auto or a clique index");
  solve->add_option("--eps-feas", opts.eps_feas, "feasibility tolerance");
  solve->add_option("--eps-gap", opts.eps_gap, "duality-measure tolerance");
  solve->add_option("--max-iters", opts.max_iters, "iteration limit");
  solve->add_option("--gamma", opts.gamma, "fraction-to-boundary factor");
  solve->add_option("--sigma-c", opts.sigma_c, "centering parameter");
  solve->add_option("--reg-alpha", opts.reg_alpha, "trace regularization on T");
  solve->add_option("--reg-rho", opts.reg_rho, "trace regularization on Gamma");
  solve->add_option("--reg-mu", opts.reg_mu, "trace regularization on Phi");
  solve->add_option("--out", out_dir, "output directory");
  solve->add_flag("--trace", trace, "write per-iteration trace CSVs");

  CLI::App* report = app.add_subcommand("report", "aggregate results CSVs");
  report->add_option("results", inputs, "results.csv files")->required();
  report->add_option("--out", out_file, "aggregate CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  if (gen->parsed()) return cmd_generate(params, out_dir);
  if (solve->parsed()) {
    if (inputs.empty() && params.sensors <= 0)
      return fail_input("give scenario files or --sensors/--anchors/--rc");
    opts.distributed = solver_name == "distributed" ? 1 : 0;
    if (root != "auto") {
      try {
        opts.root_clique = std::stoi(root);
      } catch (...) {
        return fail_input("--root must be auto or a clique index");
      }
    }
    opts.collect_trace = trace ? 1 : 0;
    return cmd_solve(params, inputs, opts, solver_name, out_dir, trace);
  }
  return cmd_report(inputs, out_file);
}
