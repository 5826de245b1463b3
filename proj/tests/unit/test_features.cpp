#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <doctest.h>

#include "leafeon/errors.hpp"
#include "leafeon/features.hpp"
#include "samples.hpp"

using namespace leafeon;
using namespace leafeon::features;
using doctest::Approx;

namespace {

const std::vector<double> kLevels{50, 60, 70, 80, 90, 100};

std::vector<AngleCapture> fake_captures(const std::vector<double>& angles, std::size_t kappa) {
  std::vector<AngleCapture> out;
  for (double eta : angles) {
    AngleCapture c;
    c.steering_deg = eta;
    c.aoa_deg = {eta - 2.0, eta, eta + 2.0};
    c.range_m = 0.6;
    for (std::size_t i = 0; i < kappa * 3; ++i) c.rss_dbfs.push_back(-30.0 - eta - 0.1 * i);
    out.push_back(c);
  }
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::EmptyInput;
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("rwc from weights") {
    CHECK(rwc_from_weights(2.5, 2.5) == 100.0);
    CHECK(rwc_from_weights(1.0, 2.0) == 50.0);
    CHECK(code_of([] { rwc_from_weights(1.0, 0.0); }) == ErrorCode::InvalidWeight);
    CHECK(code_of([] { rwc_from_weights(3.0, 2.0); }) == ErrorCode::InvalidWeight);
    CHECK(code_of([] { rwc_from_weights(-1.0, 2.0); }) == ErrorCode::InvalidWeight);
  }

  TEST_CASE("leaf type names") {
    for (LeafType t : {LeafType::Avocado, LeafType::Rubra, LeafType::BullBay}) {
      CHECK(leaf_type_from_string(to_string(t)) == t);
    }
    CHECK(code_of([] { leaf_type_from_string("Oak"); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("sample sizes") {
    const auto angles = beam::default_steering_angles();
    const FeatureSample s = build_sample(fake_captures(angles, 4), angles, 0.6, 80.0);
    CHECK(s.input_size() == 187);
    CHECK(s.location.size() == 55);
    CHECK(s.rss.size() == 132);
    const std::vector<double> one{0.0};
    const FeatureSample t = build_sample(fake_captures(one, 4), one, 0.6, 80.0);
    CHECK(t.input_size() == 17);
    CHECK(t.location == std::vector<double>{0.0, -2.0, 0.0, 2.0, 0.6});
  }

  TEST_CASE("capture order does not matter") {
    const auto angles = beam::default_steering_angles();
    const FeatureSample ref = build_sample(fake_captures(angles, 4), angles, 0.6, 70.0, 3);
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 10; ++rep) {
      auto caps = fake_captures(angles, 4);
      std::shuffle(caps.begin(), caps.end(), rng);
      const FeatureSample s = build_sample(caps, angles, 0.6, 70.0, 3);
      CHECK(s.location == ref.location);
      CHECK(s.rss == ref.rss);
    }
    for (std::size_t i = 0; i + 1 < ref.iota; ++i) CHECK(ref.steering_deg(i) < ref.steering_deg(i + 1));
  }

  TEST_CASE("missing or duplicated angles") {
    const auto angles = beam::default_steering_angles();
    auto caps = fake_captures(angles, 4);
    caps.pop_back();
    CHECK(code_of([&] { build_sample(caps, angles, 0.6, 70.0); }) == ErrorCode::MissingAngle);
    caps.push_back(caps.front());
    CHECK(code_of([&] { build_sample(caps, angles, 0.6, 70.0); }) == ErrorCode::MissingAngle);
  }

  TEST_CASE("select angles") {
    const auto angles = beam::default_steering_angles();
    const FeatureSample s = build_sample(fake_captures(angles, 4), angles, 0.6, 70.0);
    const std::vector<double> keep{-2.0, 0.0, 2.0};
    const FeatureSample t = select_angles(s, keep);
    CHECK(t.iota == 3);
    CHECK(t.input_size() == 15 + 36);
    CHECK(std::equal(t.rss.begin(), t.rss.end(), s.rss.begin() + 4 * 12));
    CHECK(t.rwc == s.rwc);
  }

  TEST_CASE("extract capture from a simulated frame") {
    const radar::ChirpConfig cfg;
    radar::Scene scene;
    scene.leaf = leaf::LeafState::at(leaf::LeafSpec{}, 90.0);
    scene.snr_db = 30.0;
    const auto profile = radar::range_fft(radar::synth_frame(cfg, scene, 2.0, 8), cfg);
    const AngleCapture c = extract_capture(profile, cfg, 2.0, 0.6);
    CHECK(c.steering_deg == 2.0);
    CHECK(c.rss_dbfs.size() == 12);
    CHECK(c.range_m == Approx(15 * radar::range_resolution(cfg)));
    CHECK(c.rss_dbfs[1] == profile.dbfs(0, 15));
    CHECK(c.rss_dbfs[3 * 3 + 2] == profile.dbfs(3, 16));
    for (double a : c.aoa_deg) CHECK(std::abs(a) <= 20.0);
  }

  TEST_CASE("float32 storage rounding") {
    auto s = testing::random_samples(2, 4, {73.3}, 1, {0.6}, 1)[0];
    round_to_storage(s);
    for (double v : s.rss) CHECK(static_cast<double>(static_cast<float>(v)) == v);
    CHECK(s.rwc == static_cast<double>(73.3F));
  }

  TEST_CASE("scaler standardises the training split") {
    auto samples = testing::random_samples(3, 4, kLevels, 10, {0.6}, 2);
    for (auto& s : samples) s.rss[5] = -17.0;  // constant feature
    std::vector<std::size_t> train(samples.size());
    std::iota(train.begin(), train.end(), 0);
    const Scaler sc = fit_scaler(samples, train);
    const std::size_t dim = samples[0].input_size();
    REQUIRE(sc.mean.size() == dim);
    const std::size_t flagged = 15 + 5;  // location block then rss index 5
    CHECK(sc.degenerate[flagged]);
    // the steering-angle column of each angle is constant as well
    for (std::size_t i = 0; i < 3; ++i) CHECK(sc.degenerate[i * 5]);
    CHECK(std::count(sc.degenerate.begin(), sc.degenerate.end(), true) == 4);
    CHECK(sc.fitted_on == train);

    std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
    for (const auto& s : samples) {
      const FeatureSample z = sc.apply(s);
      for (std::size_t i = 0; i < dim; ++i) {
        const double v = i < 15 ? z.location[i] : z.rss[i - 15];
        sum[i] += v;
        sq[i] += v * v;
      }
      const FeatureSample back = sc.invert(z);
      for (std::size_t i = 0; i < s.rss.size(); ++i) CHECK(back.rss[i] == Approx(s.rss[i]).epsilon(1e-12));
    }
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < dim; ++i) {
      if (i == flagged) {
        CHECK(sum[i] / n == Approx(-17.0));
        continue;
      }
      if (sc.degenerate[i]) continue;
      const double mean = sum[i] / n;
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::sqrt(sq[i] / n - mean * mean) == Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("scaler fitted on one fold applies to another") {
    const auto samples = testing::random_samples(11, 4, kLevels, 10, {0.6}, 3);
    const auto folds = kfold_split(samples, 10, 7);
    const Scaler sc = fit_scaler(samples, folds[0].train);
    for (std::size_t idx : folds[0].test) {
      CHECK(std::find(sc.fitted_on.begin(), sc.fitted_on.end(), idx) == sc.fitted_on.end());
      const FeatureSample z = sc.apply(samples[idx]);
      for (double v : z.rss) CHECK(std::isfinite(v));
    }
    const std::vector<std::size_t> one{0};
    CHECK(code_of([&] { fit_scaler(samples, one); }) == ErrorCode::TooFewSamples);
  }

  TEST_CASE("power transform is invertible") {
    std::vector<double> y;
    for (double l : kLevels) {
      for (int i = 0; i < 5; ++i) y.push_back(l + i * 0.7);
    }
    const PowerTransform pt = PowerTransform::fit(y);
    CHECK(std::isfinite(pt.lambda));
    double mean = 0.0;
    for (double v : y) {
      mean += pt.forward(v);
      CHECK(pt.inverse(pt.forward(v)) == Approx(v).epsilon(1e-9));
    }
    CHECK(std::abs(mean / static_cast<double>(y.size())) < 1e-9);
    for (double v : {-3.0, -0.5, 0.0, 0.4, 7.0}) {
      PowerTransform p;
      p.lambda = 0.3;
      CHECK(p.inverse(p.forward(v)) == Approx(v).epsilon(1e-12));
      p.lambda = 2.0;
      CHECK(p.inverse(p.forward(v)) == Approx(v).epsilon(1e-12));
    }
  }

  TEST_CASE("k-fold partition and stratification") {
    const auto samples = testing::random_samples(1, 4, kLevels, 360, {0.4, 0.6, 0.8}, 4);
    REQUIRE(samples.size() == 2160);
    const auto folds = kfold_split(samples, 10, 11);
    REQUIRE(folds.size() == 10);
    std::vector<int> seen(samples.size(), 0);
    for (const Fold& f : folds) {
      CHECK(f.test.size() == 216);
      CHECK(f.train.size() + f.test.size() == samples.size());
      std::map<double, int> hist;
      for (std::size_t i : f.test) {
        ++seen[i];
        ++hist[samples[i].rwc];
      }
      for (double l : kLevels) CHECK(std::abs(hist[l] - 36) <= 1);
      const std::set<std::size_t> test(f.test.begin(), f.test.end());
      for (std::size_t i : f.train) CHECK(test.count(i) == 0);
    }
    for (int c : seen) CHECK(c == 1);
    CHECK(kfold_split(samples, 10, 11)[4].test == folds[4].test);
    CHECK(kfold_split(samples, 10, 12)[4].test != folds[4].test);
  }

  TEST_CASE("stratification with uneven level sizes") {
    auto samples = testing::random_samples(1, 4, kLevels, 13, {0.6}, 5);
    const auto folds = kfold_split(samples, 10, 1);
    std::vector<int> seen(samples.size(), 0);
    for (const Fold& f : folds) {
      std::map<double, int> hist;
      for (std::size_t i : f.test) {
        ++seen[i];
        ++hist[samples[i].rwc];
      }
      for (double l : kLevels) CHECK(std::abs(hist[l] - 1.3) <= 1.0);
    }
    for (int c : seen) CHECK(c == 1);
  }

  TEST_CASE("k-fold errors") {
    const auto samples = testing::random_samples(1, 4, kLevels, 1, {0.6}, 6);
    CHECK(code_of([&] { kfold_split(samples, 1, 0); }) == ErrorCode::TooFewSamples);
    CHECK(code_of([&] { kfold_split(samples, 7, 0); }) == ErrorCode::TooFewSamples);
  }

  TEST_CASE("leave one distance out") {
    const auto samples = testing::random_samples(1, 4, kLevels, 30, {0.4, 0.6, 0.8}, 7);
    const auto folds = logo_split(samples);
    REQUIRE(folds.size() == 3);
    CHECK(folds[0].label == "d=0.400m");
    std::size_t total = 0;
    for (const Fold& f : folds) {
      total += f.test.size();
      const double d = samples[f.test.front()].distance;
      for (std::size_t i : f.test) CHECK(samples[i].distance == d);
      for (std::size_t i : f.train) CHECK(samples[i].distance != d);
    }
    CHECK(total == samples.size());
  }

  TEST_CASE("validation hold-out") {
    const auto samples = testing::random_samples(1, 4, kLevels, 20, {0.6}, 8);
    std::vector<std::size_t> pool(samples.size());
    std::iota(pool.begin(), pool.end(), 0);
    const auto [train, val] = holdout_split(samples, pool, 0.1, 3);
    CHECK(train.size() + val.size() == pool.size());
    CHECK(val.size() == 12);
    std::map<double, int> hist;
    for (std::size_t i : val) ++hist[samples[i].rwc];
    for (double l : kLevels) CHECK(hist[l] == 2);
  }
}
