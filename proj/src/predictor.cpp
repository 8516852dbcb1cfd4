#include "instmeter/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "instmeter/errors.hpp"
#include "instmeter/mapper.hpp"

namespace instmeter {

double LinearPredictor::predict(double cycles) const {
  double v = a * cycles + b;
  return v < 0.0 ? 0.0 : v;
}

namespace {

struct Coeffs {
  double a = 0.0;
  double b = 0.0;
};

Coeffs least_squares(const std::vector<Sample>& samples, const std::vector<std::size_t>& idx) {
  double sx = 0.0, sy = 0.0;
  for (std::size_t i : idx) {
    sx += samples[i].cycles;
    sy += samples[i].truth;
  }
  double n = static_cast<double>(idx.size());
  double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i : idx) {
    double dx = samples[i].cycles - mx;
    sxx += dx * dx;
    sxy += dx * (samples[i].truth - my);
  }
  if (sxx == 0.0) return {0.0, my};
  double a = sxy / sxx;
  return {a, my - a * mx};
}

double mean_val_error(const Coeffs& c, const std::vector<Sample>& samples,
                      const std::vector<bool>& in_train) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (in_train[i]) continue;
    double p = c.a * samples[i].cycles + c.b;
    if (p < 0.0) p = 0.0;
    sum += relative_error(p, samples[i].truth);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// Number of t-subsets of n elements, saturating well above the enumeration cap.
std::uint64_t n_choose_k(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    if (r > 1'000'000) return r;  // plenty; only compared against a small cap
    r = r * (n - k + i) / i;
  }
  return r;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  // Rejection sampling over a power-of-two mask keeps the draw portable.
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    std::uint64_t v = rng() & mask;
    if (v < n) return v;
  }
}

}  // namespace

LinearPredictor ols_fit(const std::vector<Sample>& samples, const std::string& target) {
  if (samples.size() < 2) throw DataError("least-squares fit needs at least 2 samples");
  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Coeffs c = least_squares(samples, all);
  LinearPredictor p;
  p.target = target;
  p.a = c.a;
  p.b = c.b;
  p.fit_report.n_samples = samples.size();
  p.fit_report.train_size = samples.size();
  p.fit_report.splits_evaluated = 1;
  p.fit_report.train_indices = std::move(all);
  return p;
}

LinearPredictor subsample_fit(const std::vector<Sample>& samples, const std::string& target,
                              int n_seeds, std::uint64_t rng_seed) {
  const std::size_t n = samples.size();
  if (n < 5) throw DataError("few-shot fit needs at least 5 samples");
  for (const Sample& s : samples)
    if (s.truth <= 0.0)
      throw DataError("few-shot fit needs positive ground truth (sample '" + s.model_id + "')");
  const std::size_t t =
      std::max<std::size_t>(2, static_cast<std::size_t>(static_cast<double>(n) * 0.4));
  const std::uint64_t total_splits = n_choose_k(n, t);
  const bool exhaustive = total_splits <= 100;

  bool have_best = false;
  double best_err = 0.0;
  Coeffs best_coeffs;
  std::vector<std::size_t> best_train;
  std::uint64_t best_seed = 0;

  auto consider = [&](const std::vector<std::size_t>& train, std::uint64_t seed_index) {
    std::vector<bool> in_train(n, false);
    for (std::size_t i : train) in_train[i] = true;
    Coeffs c = least_squares(samples, train);
    double err = mean_val_error(c, samples, in_train);
    if (!have_best || err < best_err) {
      have_best = true;
      best_err = err;
      best_coeffs = c;
      best_train = train;
      best_seed = seed_index;
    }
  };

  if (exhaustive) {
    // Seeds are irrelevant when every split is visited once; walk the index
    // combinations lexicographically.
    std::vector<std::size_t> comb(t);
    for (std::size_t i = 0; i < t; ++i) comb[i] = i;
    bool more = true;
    while (more) {
      consider(comb, 0);
      more = false;
      for (std::size_t i = t; i-- > 0;) {
        if (comb[i] != i + n - t) {
          ++comb[i];
          for (std::size_t k = i + 1; k < t; ++k) comb[k] = comb[k - 1] + 1;
          more = true;
          break;
        }
      }
    }
  } else {
    for (int s = 0; s < n_seeds; ++s) {
      std::mt19937_64 rng(splitmix(rng_seed ^ splitmix(static_cast<std::uint64_t>(s))));
      std::vector<std::size_t> pool(n);
      for (std::size_t i = 0; i < n; ++i) pool[i] = i;
      for (int draw = 0; draw < 100; ++draw) {
        // Partial Fisher–Yates: the first t entries become the training set.
        for (std::size_t i = 0; i < t; ++i) {
          std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
          std::swap(pool[i], pool[j]);
        }
        std::vector<std::size_t> train(pool.begin(),
                                       pool.begin() + static_cast<std::ptrdiff_t>(t));
        std::sort(train.begin(), train.end());
        consider(train, static_cast<std::uint64_t>(s));
      }
    }
  }

  LinearPredictor p;
  p.target = target;
  p.a = best_coeffs.a;
  p.b = best_coeffs.b;
  p.fit_report.n_samples = n;
  p.fit_report.train_size = t;
  p.fit_report.splits_evaluated =
      exhaustive ? static_cast<std::size_t>(total_splits)
                 : static_cast<std::size_t>(n_seeds) * 100;
  p.fit_report.seed = best_seed;
  p.fit_report.mean_val_rel_err = best_err;
  p.fit_report.train_indices = best_train;
  return p;
}

double relative_error(double predicted, double truth) {
  if (truth <= 0.0) throw DataError("relative error needs positive ground truth");
  return std::fabs(predicted - truth) / truth * 100.0;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  if (p < 0.0 || p > 100.0) throw DataError("percentile rank must be in [0, 100]");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

nlohmann::json predictor_to_json(const LinearPredictor& p) {
  nlohmann::json j;
  j["target"] = p.target;
  j["a"] = p.a;
  j["b"] = p.b;
  j["fit_report"] = {
      {"n_samples", p.fit_report.n_samples},
      {"train_size", p.fit_report.train_size},
      {"splits_evaluated", p.fit_report.splits_evaluated},
      {"seed", p.fit_report.seed},
      {"mean_val_rel_err", p.fit_report.mean_val_rel_err},
      {"train_indices", p.fit_report.train_indices},
  };
  return j;
}

LinearPredictor predictor_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("predictor document must be an object");
  LinearPredictor p;
  p.target = j.at("target").get<std::string>();
  p.a = j.at("a").get<double>();
  p.b = j.at("b").get<double>();
  if (j.contains("fit_report")) {
    const auto& f = j["fit_report"];
    p.fit_report.n_samples = f.value("n_samples", std::size_t{0});
    p.fit_report.train_size = f.value("train_size", std::size_t{0});
    p.fit_report.splits_evaluated = f.value("splits_evaluated", std::size_t{0});
    p.fit_report.seed = f.value("seed", std::uint64_t{0});
    p.fit_report.mean_val_rel_err = f.value("mean_val_rel_err", 0.0);
    if (f.contains("train_indices"))
      p.fit_report.train_indices = f["train_indices"].get<std::vector<std::size_t>>();
  }
  return p;
}

}  // namespace instmeter
