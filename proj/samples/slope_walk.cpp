// Fits the guided strut policy and walks it across a 9 degree side slope,
// printing torso attitude against the estimated support plane once per
// policy step.

#include <cstdio>

#include "slopewalk/trainer.hpp"

using namespace slopewalk;

int main() {
  EnvConfig cfg;
  const GuidedFit fit = guided_init(collect_strut_demos(cfg, terrain_grid(7.0), GuidedInitConfig{}));
  std::printf("guided fit: rank %d from %zu samples\n", fit.rank, fit.samples);

  const EnvConfig quiet = evaluation_config(cfg);
  const TerrainPlane slope{9.0, 90.0};
  std::printf("%6s %9s %9s %9s %9s %8s\n", "step", "roll", "plane_r", "pitch", "plane_p", "Ys");
  const EpisodeSummary ep = run_episode(fit.policy, quiet, slope, 1, std::nullopt, false,
                                        [](const LocomotionEnv& env, const ActionVector& a, const StepResult& r) {
                                          if (!r.info.policy_step) return;
                                          std::printf("%6ld %9.4f %9.4f %9.4f %9.4f %8.4f\n", env.state().step,
                                                      r.info.attitude.roll, r.info.plane.roll, r.info.attitude.pitch,
                                                      r.info.plane.pitch, a[0].shift_y);
                                        });
  std::printf("return %.2f over %d steps, forward %.3f m%s\n", ep.total_return, ep.steps, ep.forward_displacement,
              ep.fell ? " (fell)" : "");
}
