#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace instmeter {

// One measured data point: estimated cycle count plus a ground-truth cost
// (energy in joules or latency in seconds, depending on the fitting target).
struct Sample {
  std::string model_id;
  double cycles = 0.0;
  double truth = 0.0;
};

// How a predictor's coefficients were obtained.
struct FitReport {
  std::size_t n_samples = 0;
  std::size_t train_size = 0;
  std::size_t splits_evaluated = 0;
  std::uint64_t seed = 0;               // winning seed (0 for plain OLS)
  double mean_val_rel_err = 0.0;        // mean relative validation error, percent
  std::vector<std::size_t> train_indices;
};

// cost = a * cycles + b, with negative predictions clamped to zero.
struct LinearPredictor {
  std::string target;  // "energy" or "latency"
  double a = 0.0;
  double b = 0.0;
  FitReport fit_report;

  double predict(double cycles) const;
};

// Closed-form least squares over all samples. Degenerate inputs (constant
// cycles) fall back to a flat predictor at the mean truth.
LinearPredictor ols_fit(const std::vector<Sample>& samples, const std::string& target);

// Few-shot fitting: splits the samples into a small training subset and a
// validation remainder, fits each training subset by least squares, and keeps
// the split with the lowest mean relative validation error. The training size
// is max(2, floor(0.4 * n)). All possible splits are tried when there are at
// most 100; otherwise 100 random subsets are drawn per seed. The search runs
// across n_seeds derived seeds and keeps the best overall (ties favor the
// lowest seed index). Needs at least 5 samples.
LinearPredictor subsample_fit(const std::vector<Sample>& samples, const std::string& target,
                              int n_seeds = 10, std::uint64_t rng_seed = 42);

// |predicted - truth| / truth * 100. Truth must be positive.
double relative_error(double predicted, double truth);

// Linearly interpolated percentile (p in [0, 100]) of an unsorted sample set.
double percentile(std::vector<double> values, double p);

nlohmann::json predictor_to_json(const LinearPredictor& p);
LinearPredictor predictor_from_json(const nlohmann::json& j);

}  // namespace instmeter
