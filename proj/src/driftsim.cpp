#include "exact/driftsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "exact/detail/rand.hpp"

namespace exact {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return sq;
}

// Mean and standard error of the mean.
struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  void merge(const Accumulator& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
  double se() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) /
                                         static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

struct TrialAccumulators {
  std::vector<Accumulator> pool_mse;
  std::vector<Accumulator> bias;
  std::vector<Accumulator> ret_mse;
  std::vector<Accumulator> miscls;
  Accumulator pool_var;

  explicit TrialAccumulators(int k)
      : pool_mse(static_cast<std::size_t>(k)),
        bias(static_cast<std::size_t>(k)),
        ret_mse(static_cast<std::size_t>(k)),
        miscls(static_cast<std::size_t>(k)) {}

  void merge(const TrialAccumulators& o) {
    for (std::size_t j = 0; j < pool_mse.size(); ++j) {
      pool_mse[j].merge(o.pool_mse[j]);
      bias[j].merge(o.bias[j]);
      ret_mse[j].merge(o.ret_mse[j]);
      miscls[j].merge(o.miscls[j]);
    }
    pool_var.merge(o.pool_var);
  }
};

std::vector<double> mixture_mean(const TopicModel& model, const std::vector<double>& p) {
  std::vector<double> mu(static_cast<std::size_t>(model.dimension), 0.0);
  for (int c = 0; c < model.topic_count; ++c) {
    for (int i = 0; i < model.dimension; ++i) {
      mu[static_cast<std::size_t>(i)] +=
          p[static_cast<std::size_t>(c)] *
          model.centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
    }
  }
  return mu;
}

void run_trial(const TopicModel& model, const std::vector<int>& counts,
               const std::vector<double>& mix_mean, std::uint64_t seed, std::int64_t trial,
               TrialAccumulators& acc) {
  const int k = model.topic_count;
  const int d = model.dimension;
  detail::Rng rng(detail::fnv1a64_u64(static_cast<std::uint64_t>(trial),
                                      detail::fnv1a64_u64(seed)));

  // Draw the training set with fixed per-topic counts and accumulate sums.
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                        std::vector<double>(static_cast<std::size_t>(d), 0.0));
  int m1 = 0;
  for (int c = 0; c < k; ++c) {
    for (int s = 0; s < counts[static_cast<std::size_t>(c)]; ++s) {
      for (int i = 0; i < d; ++i) {
        const double x =
            model.centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] +
            model.noise_sigma * rng.next_gaussian();
        sums[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] += x;
      }
    }
    m1 += counts[static_cast<std::size_t>(c)];
  }

  std::vector<double> pool(static_cast<std::size_t>(d), 0.0);
  std::vector<std::vector<double>> centers_hat(
      static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < d; ++i) {
      pool[static_cast<std::size_t>(i)] += sums[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
      centers_hat[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
          sums[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] /
          static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
  }
  for (double& v : pool) v /= static_cast<double>(m1);

  const double pool_var = squared_distance(pool, mix_mean);
  acc.pool_var.add(pool_var);

  std::vector<double> test(static_cast<std::size_t>(d), 0.0);
  for (int j = 0; j < k; ++j) {
    const double pool_mse = squared_distance(pool, model.centers[static_cast<std::size_t>(j)]);
    acc.pool_mse[static_cast<std::size_t>(j)].add(pool_mse);
    // Per-trial unbiased bias estimate: the cross term has zero mean.
    acc.bias[static_cast<std::size_t>(j)].add(pool_mse - pool_var);

    // One fresh test draw from topic j, classified by nearest estimated
    // center.
    for (int i = 0; i < d; ++i) {
      test[static_cast<std::size_t>(i)] =
          model.centers[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] +
          model.noise_sigma * rng.next_gaussian();
    }
    const int picked = classify(test, centers_hat);
    acc.miscls[static_cast<std::size_t>(j)].add(picked == j ? 0.0 : 1.0);
    acc.ret_mse[static_cast<std::size_t>(j)].add(
        squared_distance(centers_hat[static_cast<std::size_t>(picked)],
                         model.centers[static_cast<std::size_t>(j)]));
  }
}

}  // namespace

TopicModel make_model(int topic_count, int dimension, double separation, double sigma,
                      std::vector<double> weights, std::uint64_t seed) {
  if (topic_count < 1) throw Error("topic_count must be at least 1");
  if (dimension < 1) throw Error("dimension must be at least 1");
  if (!(separation > 0.0)) throw Error("separation must be positive");
  if (sigma < 0.0) throw Error("sigma must be non-negative");
  if (topic_count > dimension) {
    throw InfeasibleGeometryError("orthogonal placement needs topic_count <= dimension (" +
                                  std::to_string(topic_count) + " > " +
                                  std::to_string(dimension) + ")");
  }
  if (weights.empty()) {
    weights.assign(static_cast<std::size_t>(topic_count),
                   1.0 / static_cast<double>(topic_count));
  }
  if (static_cast<int>(weights.size()) != topic_count) {
    throw Error("weights length must equal topic_count");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error("weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("weights must sum to 1");

  // Seeded permutation of the axes; centers at (r / sqrt(2)) * e_axis gives
  // every pair distance exactly r, which also satisfies the <= 4r ceiling
  // the retrieval bound relies on.
  std::vector<int> axes(static_cast<std::size_t>(dimension));
  std::iota(axes.begin(), axes.end(), 0);
  detail::Rng rng(detail::fnv1a64_u64(seed, detail::fnv1a64("topic-model")));
  rng.shuffle(axes);

  TopicModel model;
  model.topic_count = topic_count;
  model.dimension = dimension;
  model.noise_sigma = sigma;
  model.separation = separation;
  model.weights = std::move(weights);
  model.centers.assign(static_cast<std::size_t>(topic_count),
                       std::vector<double>(static_cast<std::size_t>(dimension), 0.0));
  const double scale = separation / std::sqrt(2.0);
  for (int c = 0; c < topic_count; ++c) {
    model.centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(axes[static_cast<std::size_t>(c)])] =
        scale;
  }
  return model;
}

std::vector<double> pool_estimate(const std::vector<TopicSample>& samples) {
  if (samples.empty()) throw Error("pool estimate of an empty sample set");
  std::vector<double> mean(samples.front().point.size(), 0.0);
  for (const auto& s : samples) {
    if (s.point.size() != mean.size()) {
      throw DimensionMismatchError("inconsistent sample dimensions");
    }
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.point[i];
  }
  for (double& v : mean) v /= static_cast<double>(samples.size());
  return mean;
}

std::vector<std::vector<double>> topic_centers(const std::vector<TopicSample>& samples,
                                               int topic_count) {
  if (samples.empty()) throw Error("topic centers of an empty sample set");
  const std::size_t d = samples.front().point.size();
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(topic_count),
                                        std::vector<double>(d, 0.0));
  std::vector<int> counts(static_cast<std::size_t>(topic_count), 0);
  for (const auto& s : samples) {
    if (s.topic < 0 || s.topic >= topic_count) {
      throw Error("sample topic out of range: " + std::to_string(s.topic));
    }
    if (s.point.size() != d) throw DimensionMismatchError("inconsistent sample dimensions");
    for (std::size_t i = 0; i < d; ++i) sums[static_cast<std::size_t>(s.topic)][i] += s.point[i];
    ++counts[static_cast<std::size_t>(s.topic)];
  }
  for (int c = 0; c < topic_count; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw EmptyTopicError("topic " + std::to_string(c) + " has no samples");
    }
    for (double& v : sums[static_cast<std::size_t>(c)]) {
      v /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
  }
  return sums;
}

int classify(const std::vector<double>& point,
             const std::vector<std::vector<double>>& centers) {
  if (centers.empty()) throw Error("classify with no centers");
  int best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double sq = squared_distance(point, centers[c]);
    if (sq < best_sq) {  // strict: ties keep the lowest topic id
      best_sq = sq;
      best = static_cast<int>(c);
    }
  }
  return best;
}

SimReport run_sim(const TopicModel& model, const std::vector<int>& per_topic_counts,
                  int trials, double delta, std::uint64_t seed, int jobs) {
  const int k = model.topic_count;
  std::vector<int> counts = per_topic_counts;
  if (counts.size() == 1 && k > 1) {
    counts.assign(static_cast<std::size_t>(k), counts.front());
  }
  if (static_cast<int>(counts.size()) != k) {
    throw Error("per-topic counts must have one entry per topic");
  }
  for (int n : counts) {
    if (n < 1) throw Error("per-topic counts must be positive");
  }
  if (trials < 100) throw Error("at least 100 trials required");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("delta must be in (0, 1)");

  int m1 = 0;
  int n_min = counts.front();
  for (int n : counts) {
    m1 += n;
    n_min = std::min(n_min, n);
  }
  std::vector<double> p(static_cast<std::size_t>(k), 0.0);
  for (int c = 0; c < k; ++c) {
    p[static_cast<std::size_t>(c)] =
        static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(m1);
  }
  const std::vector<double> mix_mean = mixture_mean(model, p);

  jobs = std::max(1, jobs);
  std::vector<TrialAccumulators> partials(static_cast<std::size_t>(jobs),
                                          TrialAccumulators(k));
  auto worker = [&](int w) {
    for (std::int64_t t = w; t < trials; t += jobs) {
      run_trial(model, counts, mix_mean, seed, t, partials[static_cast<std::size_t>(w)]);
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
    for (auto& th : threads) th.join();
  }
  TrialAccumulators acc = std::move(partials.front());
  for (int w = 1; w < jobs; ++w) acc.merge(partials[static_cast<std::size_t>(w)]);

  const double trace = static_cast<double>(model.dimension) * model.noise_sigma *
                       model.noise_sigma;  // tr(Sigma_c) = d * sigma^2
  SimReport report;
  report.topic_count = k;
  report.dimension = model.dimension;
  report.separation = model.separation;
  report.sigma = model.noise_sigma;
  report.delta = delta;
  report.trials = trials;
  report.m1 = m1;
  report.n_min = n_min;
  report.pool_variance_analytic = trace / static_cast<double>(m1);
  report.pool_variance_emp = acc.pool_var.mean();
  report.pool_variance_se = acc.pool_var.se();

  double miscls_total = 0.0;
  for (int j = 0; j < k; ++j) {
    TopicSimStats stats;
    stats.topic = j;
    stats.sample_count = counts[static_cast<std::size_t>(j)];
    stats.weight = p[static_cast<std::size_t>(j)];
    stats.bias_analytic =
        squared_distance(mix_mean, model.centers[static_cast<std::size_t>(j)]);
    stats.pool_mse_analytic = stats.bias_analytic + report.pool_variance_analytic;
    stats.pool_mse_emp = acc.pool_mse[static_cast<std::size_t>(j)].mean();
    stats.pool_mse_se = acc.pool_mse[static_cast<std::size_t>(j)].se();
    stats.bias_emp = acc.bias[static_cast<std::size_t>(j)].mean();
    stats.bias_se = acc.bias[static_cast<std::size_t>(j)].se();
    stats.ret_mse_emp = acc.ret_mse[static_cast<std::size_t>(j)].mean();
    stats.ret_mse_se = acc.ret_mse[static_cast<std::size_t>(j)].se();
    stats.ret_bound = trace / static_cast<double>(counts[static_cast<std::size_t>(j)]) +
                      4.0 * delta * model.separation * model.separation;
    stats.miscls_rate = acc.miscls[static_cast<std::size_t>(j)].mean();
    stats.miscls_se = acc.miscls[static_cast<std::size_t>(j)].se();
    miscls_total += stats.miscls_rate;
    report.per_topic.push_back(std::move(stats));
  }
  report.miscls_rate = miscls_total / static_cast<double>(k);
  return report;
}

std::vector<SweepRow> sweep_min_count(const TopicModel& model, int n_lo, int n_hi,
                                      int trials, double delta, std::uint64_t seed,
                                      int jobs) {
  if (n_lo < 1 || n_hi < n_lo) throw Error("bad sweep range");
  std::vector<SweepRow> rows;
  for (int n = n_lo; n <= n_hi; ++n) {
    const SimReport rep = run_sim(model, {n}, trials, delta,
                                  detail::fnv1a64_u64(static_cast<std::uint64_t>(n), seed),
                                  jobs);
    SweepRow row;
    row.n_min = n;
    row.miscls_rate = rep.miscls_rate;
    double se_sq = 0.0;
    double ret_max = 0.0;
    for (const auto& t : rep.per_topic) {
      se_sq += t.miscls_se * t.miscls_se;
      ret_max = std::max(ret_max, t.ret_mse_emp);
    }
    row.miscls_se = std::sqrt(se_sq) / static_cast<double>(rep.per_topic.size());
    row.ret_mse_max = ret_max;
    rows.push_back(row);
  }
  return rows;
}

double fit_complexity_constant(const TopicModel& model, const std::vector<SweepRow>& sweep,
                               double delta) {
  for (const auto& row : sweep) {
    if (row.miscls_rate <= delta) {
      const double denom =
          (model.noise_sigma * model.noise_sigma) / (model.separation * model.separation) *
          (static_cast<double>(model.dimension) +
           std::log(static_cast<double>(model.topic_count) / delta));
      return denom > 0.0 ? static_cast<double>(row.n_min) / denom : 0.0;
    }
  }
  return 0.0;
}

bool complexity_condition_holds(const TopicModel& model, int n_min, double delta,
                                double fitted_constant) {
  if (fitted_constant <= 0.0) return false;
  const double threshold =
      fitted_constant * (model.noise_sigma * model.noise_sigma) /
      (model.separation * model.separation) *
      (static_cast<double>(model.dimension) +
       std::log(static_cast<double>(model.topic_count) / delta));
  return static_cast<double>(n_min) >= threshold;
}

}  // namespace exact
