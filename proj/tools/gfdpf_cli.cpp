// gfdpf: command-line front end for the power-flow library.
//
// Exit codes: 0 success/converged, 1 input error, 2 not converged,
// 3 a --check threshold was exceeded.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gfdpf/gfdpf.hpp"

namespace {

using namespace gfdpf;

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;
constexpr int kCheckFailed = 3;

struct Common {
  double tol = 1e-3;
  int max_iter = 30;
  std::string start = "nonflat";
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::string format = "text";
  std::string output;

  SolverOptions options() const {
    SolverOptions o;
    o.tolerance = tol;
    o.max_iterations = max_iter;
    o.start = start == "flat" ? StartMode::Flat : StartMode::NonFlat;
    o.threads = threads;
    return o;
  }
};

void add_solver_flags(CLI::App* cmd, Common& c, bool with_threads = true) {
  cmd->add_option("--tol", c.tol, "Mismatch tolerance (p.u.)")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--max-iter", c.max_iter, "Iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--start", c.start, "Initial state")->check(CLI::IsMember({"flat", "nonflat"}))->capture_default_str();
  if (with_threads)
    cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

void add_output_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  cmd->add_option("-o,--output", c.output, "Write the report here instead of standard output");
}

/// Report sink: the named file or standard output.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("report '" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<std::size_t> parse_thread_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v < 1) throw std::runtime_error("--threads expects a list like 1,2,4 (got '" + text + "')");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw std::runtime_error("--threads list is empty");
  return out;
}

int cmd_solve(const std::string& case_path, const Common& c) {
  const Network net = load_case(case_path);
  const Solution s = fdpf_solve(net, c.options());
  Sink sink(c.output);
  if (c.format == "json") {
    json j{{"case", case_path}, {"base_mva", net.base_mva()}, {"solution", solution_json(net, s)}};
    sink.stream() << j.dump(2) << '\n';
  } else {
    write_solution_text(sink.stream(), net, s);
  }
  return s.converged ? kOk : kNotConverged;
}

struct DistFlags {
  double noise = 0.0;
  std::uint64_t seed = 1;
  bool check = false;
  double max_angle = 0.01;
  double max_vm = 1e-3;
};

int cmd_distsolve(const std::string& case_path, const std::string& map_path, const Common& c, const DistFlags& f) {
  const Network net = load_case(case_path);
  const AreaMap map = load_area_map(map_path);
  split_areas(net, map);  // surface partition errors before the reference solve
  const SolverOptions opts = c.options();
  ThreadPool pool(opts.threads);
  const Solution mono = fdpf_solve(net, opts, nullptr, &pool);
  if (!mono.converged) {
    std::cerr << "gfdpf: monolithic reference solve did not converge\n";
    return kNotConverged;
  }
  const PowerFlowState reference = perturb_state(net, mono.state, f.noise, f.seed);
  const DistributedSolution d = run_distributed(net, map, reference, opts, &pool);
  const DiffReport diff = compare_solutions(d.merged, mono);

  Sink sink(c.output);
  if (c.format == "json") {
    json j = distributed_json(net, d);
    j["case"] = case_path;
    j["noise"] = {{"sigma", f.noise}, {"seed", f.seed}};
    j["reference"] = solution_json(net, mono);
    j["diff"] = diff_json(diff);
    sink.stream() << j.dump(2) << '\n';
  } else {
    write_distributed_text(sink.stream(), net, d);
    sink.stream() << "monolithic reference: " << mono.iterations << " iterations\n";
    write_diff_text(sink.stream(), diff);
  }
  if (!d.merged.converged) {
    std::cerr << "gfdpf: areas did not converge:";
    for (int a : d.failed_areas) std::cerr << ' ' << a;
    std::cerr << '\n';
    return kNotConverged;
  }
  if (f.check && (diff.max_angle_diff_deg > f.max_angle || diff.max_vm_diff_pu > f.max_vm)) {
    std::cerr << "gfdpf: check failed: max angle diff " << diff.max_angle_diff_deg << " deg (limit " << f.max_angle
              << "), max vm diff " << diff.max_vm_diff_pu << " p.u. (limit " << f.max_vm << ")\n";
    return kCheckFailed;
  }
  return kOk;
}

int cmd_partition(const std::string& case_path, const std::string& map_path, const Common& c, const DistFlags& f) {
  const Network net = load_case(case_path);
  const AreaPartition part = split_areas(net, load_area_map(map_path));
  const Solution mono = fdpf_solve(net, c.options());
  if (!mono.converged) {
    std::cerr << "gfdpf: reference solve did not converge\n";
    return kNotConverged;
  }
  const PowerFlowState reference = perturb_state(net, mono.state, f.noise, f.seed);
  const BoundaryInjectionSet inj = boundary_injections(net, part, reference);
  const std::vector<AreaSlack> slacks = select_area_slacks(part, net, reference);
  const std::size_t boundary = part.boundary_buses(net).size();

  Sink sink(c.output);
  std::ostream& os = sink.stream();
  if (c.format == "json") {
    json areas = json::array();
    for (std::size_t a = 0; a < part.areas.size(); ++a)
      areas.push_back({{"area", part.areas[a].id},
                       {"buses", part.areas[a].network.n_bus()},
                       {"branches", part.areas[a].network.branches().size()},
                       {"slack_bus", slacks[a].bus},
                       {"slack_va_deg", slacks[a].va * kRadToDeg},
                       {"slack_vm", slacks[a].vm}});
    json j{{"case", case_path},
           {"base_mva", net.base_mva()},
           {"areas", areas},
           {"inter_area_branches", part.inter_area_branches},
           {"boundary_buses", boundary},
           {"boundary_bus_ratio", double(boundary) / double(net.n_bus())},
           {"injections", injections_json(net, inj)}};
    os << j.dump(2) << '\n';
  } else {
    os << part.areas.size() << " areas, " << part.inter_area_branches.size() << " inter-area branches, " << boundary
       << " boundary buses (" << std::fixed << std::setprecision(1) << 100.0 * double(boundary) / double(net.n_bus())
       << "%)\n" << std::defaultfloat;
    for (std::size_t a = 0; a < part.areas.size(); ++a)
      os << "area " << part.areas[a].id << ": " << part.areas[a].network.n_bus() << " buses, slack " << slacks[a].bus
         << " pinned at " << std::setprecision(6) << slacks[a].va * kRadToDeg << " deg, " << slacks[a].vm << " p.u.\n";
    os << "\nboundary injections (extra load):\n";
    write_injections_text(os, net, inj);
  }
  return kOk;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const Common& c, std::size_t top,
                const DistFlags& f) {
  const Solution a = solution_from_report(read_json(a_path));
  const Solution b = solution_from_report(read_json(b_path));
  const DiffReport d = compare_solutions(a, b, top);
  Sink sink(c.output);
  if (c.format == "json")
    sink.stream() << diff_json(d).dump(2) << '\n';
  else
    write_diff_text(sink.stream(), d);
  if (f.check && (d.max_angle_diff_deg > f.max_angle || d.max_vm_diff_pu > f.max_vm)) return kCheckFailed;
  return kOk;
}

int cmd_bench(const std::string& case_path, const std::string& map_path, const Common& c, const std::string& threads,
              int repeats, const std::string& csv_path) {
  const Network net = load_case(case_path);
  const AreaMap map = load_area_map(map_path);
  split_areas(net, map);
  const BenchmarkTable t = benchmark(net, map, parse_thread_list(threads), c.options(), repeats);
  Sink sink(c.output);
  if (c.format == "json") {
    sink.stream() << benchmark_json(t).dump(2) << '\n';
  } else {
    write_benchmark_text(sink.stream(), t);
    sink.stream() << '\n';
    write_benchmark_csv(sink.stream(), t);
  }
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write '" + csv_path + "'");
    write_benchmark_csv(csv, t);
  }
  return kOk;
}

int cmd_synth(const std::string& base_path, const std::string& case_out, const std::string& map_out,
              const SyntheticGridOptions& opt) {
  const SyntheticGrid g = make_synthetic_grid(load_case(base_path), opt);
  std::ofstream cs(case_out), ms(map_out);
  if (!cs) throw std::runtime_error("cannot write '" + case_out + "'");
  if (!ms) throw std::runtime_error("cannot write '" + map_out + "'");
  cs << serialize_case(g.network);
  write_area_map(ms, g.areas);
  std::cerr << "gfdpf: wrote " << g.network.n_bus() << " buses, " << g.network.branches().size() << " branches\n";
  return kOk;
}

int cmd_matrices(const std::string& case_path, const std::string& dir) {
  const Network net = load_case(case_path);
  std::filesystem::create_directories(dir);
  const FdpfMatrices m = build_fdpf_matrices(net);
  auto open = [&](const char* name) {
    std::ofstream os(std::filesystem::path(dir) / name);
    if (!os) throw std::runtime_error("cannot write into '" + dir + "'");
    return os;
  };
  {
    auto os = open("ybus.mtx");
    write_matrix_market(os, build_ybus(net));
  }
  {
    auto os = open("b_prime.mtx");
    write_matrix_market(os, m.b_prime);
  }
  {
    auto os = open("b_double_prime.mtx");
    write_matrix_market(os, m.b_double_prime);
  }
  if (m.b_prime.size() > 0) {
    auto os = open("b_prime.symbolic.txt");
    write_symbolic(os, *factorize(m.b_prime).symbolic);
  }
  if (m.b_double_prime.size() > 0) {
    auto os = open("b_double_prime.symbolic.txt");
    write_symbolic(os, *factorize(m.b_double_prime).symbolic);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast decoupled power flow with elimination-tree parallel solves and area-decoupled distributed mode"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gfdpf 1.0.0");

  Common common;
  DistFlags dist;
  std::string case_path, map_path, a_path, b_path, threads_list = "1,2,4,8", csv_path, out_dir, case_out, map_out;
  std::size_t top = 10;
  int repeats = 5;
  SyntheticGridOptions synth;

  auto* solve = app.add_subcommand("solve", "Monolithic power flow");
  solve->add_option("case", case_path, "Case file (MatPower .m or native JSON)")->required();
  add_solver_flags(solve, common);
  add_output_flags(solve, common);

  auto add_dist_flags = [&](CLI::App* cmd) {
    cmd->add_option("--noise", dist.noise, "Std. deviation of reference-state noise (vm p.u., va rad)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", dist.seed, "Noise seed")->capture_default_str();
  };
  auto add_check_flags = [&](CLI::App* cmd) {
    cmd->add_flag("--check", dist.check, "Exit 3 when differences exceed the limits");
    cmd->add_option("--max-angle-diff", dist.max_angle, "Angle limit for --check (deg)")->capture_default_str();
    cmd->add_option("--max-vm-diff", dist.max_vm, "Magnitude limit for --check (p.u.)")->capture_default_str();
  };

  auto* distsolve = app.add_subcommand("distsolve", "Distributed area solve against a monolithic reference");
  distsolve->add_option("case", case_path, "Case file")->required();
  distsolve->add_option("areas", map_path, "Area map file")->required();
  add_solver_flags(distsolve, common);
  add_output_flags(distsolve, common);
  add_dist_flags(distsolve);
  add_check_flags(distsolve);

  auto* partition = app.add_subcommand("partition", "Split into areas and audit boundary injections");
  partition->add_option("case", case_path, "Case file")->required();
  partition->add_option("areas", map_path, "Area map file")->required();
  add_solver_flags(partition, common);
  add_output_flags(partition, common);
  add_dist_flags(partition);

  auto* compare = app.add_subcommand("compare", "Compare two solution reports");
  compare->add_option("a", a_path, "First report (JSON)")->required();
  compare->add_option("b", b_path, "Second report (JSON)")->required();
  compare->add_option("--top", top, "Offenders listed")->capture_default_str();
  add_output_flags(compare, common);
  add_check_flags(compare);

  auto* bench = app.add_subcommand("bench", "Median timings per thread count");
  bench->add_option("case", case_path, "Case file")->required();
  bench->add_option("areas", map_path, "Area map file")->required();
  add_solver_flags(bench, common, false);
  add_output_flags(bench, common);
  bench->add_option("--threads", threads_list, "Comma-separated thread counts")->capture_default_str();
  bench->add_option("--repeats", repeats, "Timed runs per cell")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--csv", csv_path, "Also write the delimited table here");

  auto* synth_cmd = app.add_subcommand("synth", "Stitch copies of a case into a large multi-area grid");
  synth_cmd->add_option("base", case_path, "Base case file")->required();
  synth_cmd->add_option("--out-case", case_out, "Output case (native JSON)")->required();
  synth_cmd->add_option("--out-areas", map_out, "Output area map")->required();
  synth_cmd->add_option("--rows", synth.rows)->capture_default_str();
  synth_cmd->add_option("--cols", synth.cols)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();

  auto* matrices = app.add_subcommand("matrices", "Export Ybus, B', B'' (MatrixMarket) and symbolic dumps");
  matrices->add_option("case", case_path, "Case file")->required();
  matrices->add_option("--out-dir", out_dir, "Directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInputError;
  }

  try {
    if (*solve) return cmd_solve(case_path, common);
    if (*distsolve) return cmd_distsolve(case_path, map_path, common, dist);
    if (*partition) return cmd_partition(case_path, map_path, common, dist);
    if (*compare) return cmd_compare(a_path, b_path, common, top, dist);
    if (*bench) return cmd_bench(case_path, map_path, common, threads_list, repeats, csv_path);
    if (*synth_cmd) return cmd_synth(case_path, case_out, map_out, synth);
    if (*matrices) return cmd_matrices(case_path, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "gfdpf: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
