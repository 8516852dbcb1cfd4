#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "instmeter/errors.hpp"
#include "instmeter/predictor.hpp"

using namespace instmeter;

namespace {

std::vector<Sample> on_line(std::vector<double> xs, double a, double b) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < xs.size(); ++i)
    s.push_back({"m" + std::to_string(i), xs[i], a * xs[i] + b});
  return s;
}

}  // namespace

TEST_CASE("ols_fit recovers an exact line") {
  // Integer-valued points on truth = 2x + 3: every intermediate sum and the
  // final division are exact in binary floating point.
  std::vector<Sample> s = on_line({1, 2, 3, 4}, 2.0, 3.0);
  LinearPredictor p = ols_fit(s, "energy");
  CHECK(p.a == 2.0);
  CHECK(p.b == 3.0);
  CHECK(p.target == "energy");
  CHECK(p.fit_report.n_samples == 4);
  CHECK(p.fit_report.train_size == 4);
  CHECK(p.fit_report.splits_evaluated == 1);
}

TEST_CASE("ols_fit matches the textbook normal equations on scattered data") {
  std::vector<Sample> s = {{"a", 1, 2}, {"b", 2, 2}, {"c", 3, 4}, {"d", 4, 5}};
  // Computed independently from sums: n*sxy - sx*sy over n*sxx - sx^2.
  double n = 4, sx = 10, sy = 13, sxy = 38, sxx2 = 30;
  double a = (n * sxy - sx * sy) / (n * sxx2 - sx * sx);
  double b = (sy - a * sx) / n;
  LinearPredictor p = ols_fit(s, "latency");
  CHECK(p.a == doctest::Approx(a).epsilon(1e-12));
  CHECK(p.b == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("ols_fit degenerates to the mean on constant cycles") {
  std::vector<Sample> s = {{"a", 7, 1}, {"b", 7, 3}, {"c", 7, 5}};
  LinearPredictor p = ols_fit(s, "energy");
  CHECK(p.a == 0.0);
  CHECK(p.b == 3.0);
  CHECK_THROWS_AS(ols_fit({{"x", 1, 1}}, "energy"), DataError);
}

TEST_CASE("subsample_fit recovers a noise-free line exhaustively") {
  // n = 6 gives train size max(2, floor(2.4)) = 2 and C(6,2) = 15 splits, so
  // every split is visited; any two distinct points recover the line.
  std::vector<Sample> s =
      on_line({1e6, 2e6, 3.5e6, 5e6, 8e6, 1.3e7}, 2.5e-9, 1.5e-3);
  LinearPredictor p = subsample_fit(s, "energy");
  CHECK(p.a == doctest::Approx(2.5e-9).epsilon(1e-9));
  CHECK(p.b == doctest::Approx(1.5e-3).epsilon(1e-9));
  CHECK(p.fit_report.mean_val_rel_err < 1e-9);
  CHECK(p.fit_report.n_samples == 6);
  CHECK(p.fit_report.train_size == 2);
  CHECK(p.fit_report.splits_evaluated == 15);
  CHECK(p.fit_report.seed == 0);
  REQUIRE(p.fit_report.train_indices.size() == 2);
  CHECK(p.fit_report.train_indices[0] < p.fit_report.train_indices[1]);
  CHECK(p.fit_report.train_indices[1] < 6);

  // The exhaustive walk does not consult the RNG at all.
  LinearPredictor q = subsample_fit(s, "energy", 10, 999);
  CHECK(q.a == p.a);
  CHECK(q.b == p.b);
  CHECK(q.fit_report.train_indices == p.fit_report.train_indices);
}

TEST_CASE("subsample_fit randomized search is deterministic per seed") {
  // n = 12 gives train size 4 and C(12,4) = 495 > 100, forcing sampled splits.
  std::vector<double> xs;
  for (int i = 1; i <= 12; ++i) xs.push_back(1e5 * i * i);
  std::vector<Sample> s = on_line(xs, 3e-8, 2e-4);
  // Perturb a few points so splits genuinely differ in validation error.
  s[2].truth *= 1.02;
  s[7].truth *= 0.97;
  s[10].truth *= 1.01;

  LinearPredictor p1 = subsample_fit(s, "latency", 10, 42);
  LinearPredictor p2 = subsample_fit(s, "latency", 10, 42);
  CHECK(p1.a == p2.a);
  CHECK(p1.b == p2.b);
  CHECK(p1.fit_report.seed == p2.fit_report.seed);
  CHECK(p1.fit_report.train_indices == p2.fit_report.train_indices);
  CHECK(p1.fit_report.splits_evaluated == 1000);
  CHECK(p1.fit_report.train_size == 4);
  // Mild perturbation should not keep the fit far from the generating line.
  CHECK(p1.a == doctest::Approx(3e-8).epsilon(0.05));
  CHECK(p1.b == doctest::Approx(2e-4).epsilon(0.25));
}

TEST_CASE("subsample_fit input validation") {
  std::vector<Sample> four = on_line({1, 2, 3, 4}, 1.0, 1.0);
  CHECK_THROWS_AS(subsample_fit(four, "energy"), DataError);

  std::vector<Sample> bad = on_line({1, 2, 3, 4, 5}, 1.0, 1.0);
  bad[3].truth = 0.0;
  try {
    subsample_fit(bad, "energy");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("m3") != std::string::npos);
  }
}

TEST_CASE("predict clamps negative values to zero") {
  LinearPredictor p;
  p.a = 1.0;
  p.b = -10.0;
  CHECK(p.predict(3.0) == 0.0);
  CHECK(p.predict(10.0) == 0.0);
  CHECK(p.predict(25.0) == 15.0);
}

TEST_CASE("relative_error") {
  CHECK(relative_error(11.0, 10.0) == doctest::Approx(10.0));
  CHECK(relative_error(9.0, 10.0) == doctest::Approx(10.0));
  CHECK(relative_error(10.0, 10.0) == 0.0);
  CHECK_THROWS_AS(relative_error(1.0, 0.0), DataError);
  CHECK_THROWS_AS(relative_error(1.0, -2.0), DataError);
}

TEST_CASE("percentile interpolates linearly over sorted values") {
  std::vector<double> v = {3, 1, 4, 2};  // unsorted on purpose
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 100) == 4.0);
  CHECK(percentile(v, 50) == 2.5);           // rank 1.5 between 2 and 3
  CHECK(percentile(v, 90) == doctest::Approx(3.7));  // rank 2.7 between 3 and 4
  CHECK(percentile({5.0}, 37) == 5.0);
  CHECK_THROWS_AS(percentile({}, 50), DataError);
  CHECK_THROWS_AS(percentile({1.0}, -1), DataError);
  CHECK_THROWS_AS(percentile({1.0}, 100.5), DataError);
}

TEST_CASE("predictor JSON round trips through text") {
  std::vector<Sample> s =
      on_line({1e6, 2e6, 3.5e6, 5e6, 8e6, 1.3e7}, 2.5e-9, 1.5e-3);
  LinearPredictor p = subsample_fit(s, "energy");
  nlohmann::json j = nlohmann::json::parse(predictor_to_json(p).dump(2));
  LinearPredictor q = predictor_from_json(j);
  CHECK(q.target == p.target);
  CHECK(q.a == p.a);
  CHECK(q.b == p.b);
  CHECK(q.fit_report.n_samples == p.fit_report.n_samples);
  CHECK(q.fit_report.train_size == p.fit_report.train_size);
  CHECK(q.fit_report.splits_evaluated == p.fit_report.splits_evaluated);
  CHECK(q.fit_report.seed == p.fit_report.seed);
  CHECK(q.fit_report.mean_val_rel_err == p.fit_report.mean_val_rel_err);
  CHECK(q.fit_report.train_indices == p.fit_report.train_indices);

  CHECK_THROWS_AS(predictor_from_json(nlohmann::json::array()), ValidationError);
  CHECK_THROWS_AS(predictor_from_json(nlohmann::json{{"target", "energy"}, {"a", 1.0}}),
                  nlohmann::json::exception);
}
