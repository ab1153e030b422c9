#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "exact/errors.hpp"

namespace exact {

// Mixture-of-topics model for prompt embeddings: a sample from topic t is
// its center plus isotropic Gaussian noise, with all pairwise center
// distances in [r, 4r].
struct TopicModel {
  int topic_count = 1;
  int dimension = 1;
  std::vector<std::vector<double>> centers;
  std::vector<double> weights;  // simplex
  double noise_sigma = 0.0;
  double separation = 0.0;  // guaranteed minimum pairwise center distance
};

// Places centers on scaled orthogonal axes (seeded axis permutation), so
// every pairwise distance equals r exactly. Requires topic_count <=
// dimension; throws InfeasibleGeometryError otherwise. Empty weights mean
// uniform.
TopicModel make_model(int topic_count, int dimension, double separation, double sigma,
                      std::vector<double> weights, std::uint64_t seed);

struct TopicSample {
  int topic = 0;
  std::vector<double> point;
};

// Arithmetic mean of all sample points.
std::vector<double> pool_estimate(const std::vector<TopicSample>& samples);

// Per-topic arithmetic means; throws EmptyTopicError if some topic in
// [0, topic_count) has no samples.
std::vector<std::vector<double>> topic_centers(const std::vector<TopicSample>& samples,
                                               int topic_count);

// Nearest center by Euclidean distance, ties toward the lowest topic id.
int classify(const std::vector<double>& point,
             const std::vector<std::vector<double>>& centers);

struct TopicSimStats {
  int topic = 0;
  int sample_count = 0;        // n_c per trial
  double weight = 0.0;         // n_c / m1
  double bias_analytic = 0.0;  // || mixture mean - center ||^2
  double pool_mse_analytic = 0.0;
  double pool_mse_emp = 0.0;
  double pool_mse_se = 0.0;
  double bias_emp = 0.0;  // unbiased per-trial bias estimator mean
  double bias_se = 0.0;
  double ret_mse_emp = 0.0;
  double ret_mse_se = 0.0;
  double ret_bound = 0.0;  // tr(Sigma_j)/n_j + 4*delta*r^2
  double miscls_rate = 0.0;
  double miscls_se = 0.0;
};

struct SimReport {
  int topic_count = 0;
  int dimension = 0;
  double separation = 0.0;
  double sigma = 0.0;
  double delta = 0.0;
  int trials = 0;
  int m1 = 0;     // total training samples per trial
  int n_min = 0;  // smallest per-topic count
  double pool_variance_analytic = 0.0;  // (1/m1) * sum_c p_c tr(Sigma_c)
  double pool_variance_emp = 0.0;       // E || pool - mixture mean ||^2
  double pool_variance_se = 0.0;
  double miscls_rate = 0.0;  // pooled over topics
  std::vector<TopicSimStats> per_topic;
};

// Monte Carlo over `trials` independent draws of the training set: compares
// the pooled estimator and the per-topic (retrieval) estimator against each
// true center, and classifies one fresh test draw per topic per trial.
// Trials derive their random streams from (seed, trial index) alone, so the
// report is reproducible regardless of scheduling.
SimReport run_sim(const TopicModel& model, const std::vector<int>& per_topic_counts,
                  int trials, double delta, std::uint64_t seed, int jobs = 1);

struct SweepRow {
  int n_min = 0;
  double miscls_rate = 0.0;
  double miscls_se = 0.0;
  double ret_mse_max = 0.0;  // worst per-topic retrieval MSE at this n
};

// Misclassification rate as a function of the per-topic sample count.
std::vector<SweepRow> sweep_min_count(const TopicModel& model, int n_lo, int n_hi,
                                      int trials, double delta, std::uint64_t seed,
                                      int jobs = 1);

// Smallest per-topic count in the sweep whose misclassification rate is at
// most delta, expressed as the constant C in
//   n_min >= C * (sigma^2 / r^2) * (d + log(k / delta)).
// Returns 0.0 when no sweep point reaches delta.
double fit_complexity_constant(const TopicModel& model, const std::vector<SweepRow>& sweep,
                               double delta);

// Evaluates the fitted sample-complexity condition for a given cell.
bool complexity_condition_holds(const TopicModel& model, int n_min, double delta,
                                double fitted_constant);

}  // namespace exact
