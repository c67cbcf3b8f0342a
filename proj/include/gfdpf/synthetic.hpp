#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "gfdpf/fdpf.hpp"
#include "gfdpf/network.hpp"
#include "gfdpf/partition.hpp"

namespace gfdpf {

struct SyntheticGridOptions {
  int rows = 9;
  int cols = 10;
  int ties_per_link = 2;
  double tie_x_min = 0.15;  // weak ties: several times a typical line reactance
  double tie_x_max = 0.30;
  double load_spread = 0.03;  // per-copy load/generation scale in [1-s, 1+s]
  std::uint64_t seed = 20190401;
  int id_stride = 1000;       // copy c's bus k gets id c*stride + k
};

struct SyntheticGrid {
  Network network;
  AreaMap areas;  // lattice quadrants
};

/// Large test grid from copies of a base case laid on a rows x cols lattice.
/// Neighbouring copies are tied by weak lines joining the same bus label, so
/// non-flat start angles on both ends agree. Copy 0 keeps the base slack; the
/// others turn theirs into a PV bus dispatched at the solved slack output,
/// keeping each copy close to self-balanced.
inline SyntheticGrid make_synthetic_grid(const Network& base, const SyntheticGridOptions& opt = {}) {
  if (opt.rows < 1 || opt.cols < 1 || opt.ties_per_link < 1)
    throw std::invalid_argument("synthetic grid: lattice dimensions must be positive");
  int max_id = 0;
  for (const Bus& b : base.buses()) max_id = std::max(max_id, b.id);
  if (max_id >= opt.id_stride) throw std::invalid_argument("synthetic grid: base bus ids exceed id stride");

  SolverOptions solve_opts;
  solve_opts.threads = 1;
  solve_opts.tolerance = 1e-8;
  solve_opts.max_iterations = 100;
  const Solution solved = fdpf_solve(base, solve_opts);
  if (!solved.converged) throw std::runtime_error("synthetic grid: base case does not converge");
  const MismatchEvaluator eval(base, build_ybus(base));
  const std::vector<Complex> s = eval.injections(solved.state);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> spread(1.0 - opt.load_spread, 1.0 + opt.load_spread);
  std::uniform_real_distribution<double> tie_x(opt.tie_x_min, opt.tie_x_max);
  std::uniform_int_distribution<std::size_t> pick_bus(0, base.n_bus() - 1);

  const int copies = opt.rows * opt.cols;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> gens;
  buses.reserve(base.n_bus() * copies);
  SyntheticGrid out;
  for (int c = 0; c < copies; ++c) {
    const double scale = spread(rng);
    const int offset = c * opt.id_stride;
    const int area = 1 + (c / opt.cols >= (opt.rows + 1) / 2 ? 2 : 0) + (c % opt.cols >= (opt.cols + 1) / 2 ? 1 : 0);
    for (std::size_t i = 0; i < base.n_bus(); ++i) {
      Bus b = base.bus(i);
      b.id += offset;
      b.pd *= scale;
      b.qd *= scale;
      if (c > 0 && b.kind == BusKind::Slack) b.kind = BusKind::PV;
      out.areas.area_of_bus[b.id] = area;
      buses.push_back(b);
    }
    for (Branch br : base.branches()) {
      br.from += offset;
      br.to += offset;
      branches.push_back(br);
    }
    for (Generator g : base.generators()) {
      const std::size_t i = base.index_of(g.bus);
      if (c > 0 && base.bus(i).kind == BusKind::Slack && g.in_service)
        g.pg = (s[i].real() + base.bus(i).pd) / base.count_generators_at(i);
      g.bus += offset;
      g.pg *= scale;
      gens.push_back(g);
    }
  }

  auto tie = [&](int a, int b) {
    for (int t = 0; t < opt.ties_per_link; ++t) {
      const int label = base.bus(pick_bus(rng)).id;
      const double x = tie_x(rng);
      branches.push_back({a * opt.id_stride + label, b * opt.id_stride + label, 0.1 * x, x, 0.0, 1.0, 0.0, true});
    }
  };
  for (int r = 0; r < opt.rows; ++r)
    for (int c = 0; c < opt.cols; ++c) {
      const int k = r * opt.cols + c;
      if (c + 1 < opt.cols) tie(k, k + 1);
      if (r + 1 < opt.rows) tie(k, k + opt.cols);
    }
  out.network = Network(base.base_mva(), std::move(buses), std::move(branches), std::move(gens));
  return out;
}

}  // namespace gfdpf
