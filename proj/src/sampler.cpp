#include "mimiclab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace mimiclab {

double default_bin_width(const std::vector<TrajectoryMeta>& metas) {
  if (metas.empty()) throw std::invalid_argument("default_bin_width: empty library");
  double d_min = std::numeric_limits<double>::infinity();
  for (const TrajectoryMeta& m : metas) d_min = std::min(d_min, m.duration_s);
  return std::min(4.0, d_min);
}

BinTable build_bins(const std::vector<TrajectoryMeta>& metas, const SamplerParams& params) {
  if (metas.empty()) throw std::invalid_argument("build_bins: empty trajectory library");
  if (params.bin_width <= 0.0) throw std::invalid_argument("build_bins: bin width must be > 0");
  for (const TrajectoryMeta& m : metas)
    if (m.duration_s <= 0.0) throw std::invalid_argument("build_bins: durations must be > 0");

  BinTable t;
  t.params = params;
  t.metas = metas;
  double d_max = 0.0;
  for (const TrajectoryMeta& m : metas) d_max = std::max(d_max, m.duration_s);
  t.bins = static_cast<int>(std::ceil(d_max / params.bin_width));
  const double inf = std::numeric_limits<double>::infinity();
  t.failure = Eigen::MatrixXd::Constant(t.n_traj(), t.bins, -inf);
  t.visits = Eigen::MatrixXi::Zero(t.n_traj(), t.bins);
  for (int i = 0; i < t.n_traj(); ++i)
    for (int b = 0; b < t.bins; ++b)
      if (b * params.bin_width < metas[i].duration_s) {
        t.failure(i, b) = 1.0;  // untried bins start at maximal failure
        t.omega.emplace_back(i, b);
      }
  return t;
}

double episode_similarity(const std::vector<double>& step_scores, int L_max) {
  if (L_max <= 0) throw std::invalid_argument("episode_similarity: L_max must be > 0");
  if (static_cast<int>(step_scores.size()) > L_max)
    throw std::invalid_argument("episode_similarity: more scores than L_max");
  double sum = 0.0;
  for (double s : step_scores) {
    if (s < 0.0 || s > 1.0) throw std::invalid_argument("episode_similarity: score outside [0,1]");
    sum += s;
  }
  return sum / L_max;
}

void update_failure(BinTable& table, int i, int b, double sbar) {
  if (i < 0 || i >= table.n_traj() || b < 0 || b >= table.bins || !table.valid(i, b))
    throw std::invalid_argument("update_failure: (i, b) outside the valid set");
  const double a = table.params.alpha;
  table.failure(i, b) = (1.0 - a) * table.failure(i, b) + a * (1.0 - sbar);
}

void update_failure_batch(BinTable& table, const std::vector<EpisodeResult>& results) {
  std::map<std::pair<int, int>, std::pair<double, int>> acc;
  for (const EpisodeResult& r : results) {
    auto& slot = acc[{r.traj, r.bin}];
    slot.first += r.sbar;
    slot.second += 1;
  }
  for (const auto& [key, slot] : acc)
    update_failure(table, key.first, key.second, slot.first / slot.second);
}

Eigen::MatrixXd sampling_distribution(const BinTable& table) {
  const int n_omega = table.omega_size();
  if (n_omega < 1) throw std::invalid_argument("sampling_distribution: empty valid set");
  const double tau = table.params.tau_base / std::log(1.0 + n_omega);
  double f_max = -std::numeric_limits<double>::infinity();
  for (const auto& [i, b] : table.omega) f_max = std::max(f_max, table.failure(i, b));

  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(table.n_traj(), table.bins);
  double z = 0.0;
  for (const auto& [i, b] : table.omega) {
    p(i, b) = std::exp((table.failure(i, b) - f_max) / tau);
    z += p(i, b);
  }
  const double eps = table.params.epsilon;
  for (const auto& [i, b] : table.omega)
    p(i, b) = (1.0 - eps) * p(i, b) / z + eps / n_omega;
  return p;
}

StartSample sample_start(BinTable& table, std::mt19937_64& rng) {
  const Eigen::MatrixXd p = sampling_distribution(table);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  StartSample out;
  double cdf = 0.0;
  for (const auto& [i, b] : table.omega) {
    cdf += p(i, b);
    out.traj = i;
    out.bin = b;
    if (u < cdf) break;  // falls through to the last valid bin on roundoff
  }
  const double lo = out.bin * table.params.bin_width;
  const double hi = std::min((out.bin + 1) * table.params.bin_width,
                             table.metas[out.traj].duration_s);
  out.t_init = std::uniform_real_distribution<double>(lo, hi)(rng);
  out.phase = out.t_init / table.metas[out.traj].duration_s;
  table.visits(out.traj, out.bin) += 1;
  return out;
}

}  // namespace mimiclab
