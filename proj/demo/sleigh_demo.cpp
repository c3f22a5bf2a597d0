// Chaplygin sleigh: integrate the full constrained system and compare with
// the reduced (u, omega) equations.

#include <cmath>
#include <cstdio>

#include "nhproj/nhproj.hpp"

int main() {
  using namespace nhproj;
  const scenarios::SleighParams prm{1.0, 2.0};
  const auto sys = scenarios::chaplygin_sleigh(prm);
  const auto traj = integrate(sys, scenarios::sleigh_state(prm, 0, 0, 0, {1.0, 1.0}), 5.0, 1e-3);
  const auto oracle = scenarios::sleigh_reduced_oracle(prm, 1.0, 1.0, 5.0, 1e-3);

  std::printf("%6s %12s %12s %12s %12s %10s\n", "t", "u", "omega", "u_reduced", "omega_red", "energy");
  for (std::size_t k = 0; k < traj.size(); k += 500) {
    const auto r = scenarios::sleigh_reduce(traj.samples[k]);
    std::printf("%6.2f %12.8f %12.8f %12.8f %12.8f %10.7f\n", traj.samples[k].t, r.u, r.omega, oracle.states[k].u,
                oracle.states[k].omega, traj.diagnostics[k].energy);
  }
  const auto& p = orthogonal_pair(sys.g, sys.pfaffian.matrix(traj.back().z), traj.back().z);
  std::printf("\nQ at final theta = %.4f:\n", traj.back().z[2]);
  for (Eigen::Index i = 0; i < 3; ++i) std::printf("  % .6f % .6f % .6f\n", p.Q(i, 0), p.Q(i, 1), p.Q(i, 2));
  return 0;
}
