#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mimiclab {

struct TrajectoryMeta {
  int index = 0;
  double duration_s = 0.0;
  int length = 0;  // control steps, round(duration / control_dt)
  std::string label;
};

struct SamplerParams {
  double bin_width = 4.0;  // Delta, seconds
  double alpha = 0.005;    // EMA factor
  double tau_base = 1.0;
  double epsilon = 0.15;   // uniform floor weight
};

/// min(4 s, shortest trajectory duration).
double default_bin_width(const std::vector<TrajectoryMeta>& metas);

/// Per-(trajectory, bin) failure levels over the validity mask
/// b * Delta < D_i; invalid entries hold -inf.
struct BinTable {
  SamplerParams params;
  std::vector<TrajectoryMeta> metas;
  int bins = 0;
  Eigen::MatrixXd failure;                   // N x B, -inf off the mask
  Eigen::MatrixXi visits;                    // sample_start draw counts
  std::vector<std::pair<int, int>> omega;    // valid (traj, bin), row-major

  int n_traj() const { return static_cast<int>(metas.size()); }
  int omega_size() const { return static_cast<int>(omega.size()); }
  bool valid(int i, int b) const { return std::isfinite(failure(i, b)); }
};

BinTable build_bins(const std::vector<TrajectoryMeta>& metas, const SamplerParams& params);

/// Length-normalized similarity: sum of the realized step scores over L_max,
/// so early terminations are penalized by the missing terms.
double episode_similarity(const std::vector<double>& step_scores, int L_max);

/// EMA toward the failure 1 - sbar.
void update_failure(BinTable& table, int i, int b, double sbar);

struct EpisodeResult {
  int traj = 0;
  int bin = 0;
  double sbar = 0.0;
};

/// Folds one iteration's episode results: same-bin scores are averaged first
/// so the outcome is independent of episode completion order.
void update_failure_batch(BinTable& table, const std::vector<EpisodeResult>& results);

/// Floor-smoothed categorical over the valid bins:
/// p = (1 - eps) softmax(f / tau) + eps / |Omega|, tau = tau_base / ln(1 + |Omega|).
Eigen::MatrixXd sampling_distribution(const BinTable& table);

struct StartSample {
  int traj = 0;
  int bin = 0;
  double t_init = 0.0;
  double phase = 0.0;  // t_init / D_i
};

/// Draws (i, b) from sampling_distribution, then t_init uniformly inside the
/// bin's intersection with [0, D_i). Bumps the visit counter.
StartSample sample_start(BinTable& table, std::mt19937_64& rng);

}  // namespace mimiclab
