#include <qmean/harness.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace qmean {
namespace {

// Kahan-compensated mean, independent of exact_mean's plain loop.
double compensated_mean(std::span<const double> values) {
  double sum = 0.0, carry = 0.0;
  for (double v : values) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(values.size());
}

std::string to_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream out;
  write_csv(out, records);
  return out.str();
}

TEST(ExactMean, Examples) {
  EXPECT_DOUBLE_EQ(exact_mean(RealOracle({0.0, 0.25, 0.5, 0.75}, 2)), 0.375);
  EXPECT_DOUBLE_EQ(exact_mean(RealOracle({1.0, 1.0})), 1.0);
  RngStream rng(1, 0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(1024);
    for (auto& x : v) x = rng.uniform();
    const RealOracle f(v);
    EXPECT_NEAR(exact_mean(f), compensated_mean(v), 1e-12);
    EXPECT_EQ(f.counter().tally(), 0u);
  }
}

TEST(EncodedMean, SaturatesOnes) {
  EXPECT_DOUBLE_EQ(encoded_mean(RealOracle({1.0, 0.0}, 2)), 0.375);
  EXPECT_DOUBLE_EQ(encoded_mean(RealOracle({0.3, 0.5})), 0.4);
}

TEST(ExactMedian, Examples) {
  const auto [i, d] = exact_median(DistanceOracle(2, {0.0, 0.5, 0.5, 0.0}));
  EXPECT_EQ(i, 0u);
  EXPECT_DOUBLE_EQ(d, 0.25);

  const auto [j, e] = exact_median(DistanceOracle(4, {0.0, 0.1, 0.9, 0.9,   //
                                                      0.1, 0.0, 0.1, 0.1,   //
                                                      0.9, 0.1, 0.0, 0.9,   //
                                                      0.9, 0.1, 0.9, 0.0}));
  EXPECT_EQ(j, 1u);
  EXPECT_NEAR(e, 0.075, 1e-15);
}

TEST(ExactMedian, MatchesDoubleLoop) {
  RngStream rng(2, 0);
  InstanceSpec spec;
  spec.generator = Generator::random_distance;
  for (int trial = 0; trial < 100; ++trial) {
    spec.n = std::size_t{1} << (1 + rng.below(5));
    const auto d = std::get<DistanceOracle>(generate(spec, rng));
    std::size_t best = 0;
    double best_sum = 1e300;
    for (std::size_t a = 0; a < d.size(); ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < d.size(); ++b) s += d.peek(a, b);
      if (s < best_sum) {
        best_sum = s;
        best = a;
      }
    }
    const auto [idx, mean] = exact_median(d);
    EXPECT_EQ(idx, best);
    EXPECT_NEAR(mean, best_sum / static_cast<double>(d.size()), 1e-12);
  }
}

TEST(ClassicalSampleMean, Examples) {
  RngStream rng(3, 0);
  const RealOracle c(std::vector<double>(64, 0.25));
  EXPECT_EQ(classical_sample_mean(c, 10, rng), 0.25);
  EXPECT_EQ(c.counter().tally(), 10u);

  const RealOracle f({0.0, 1.0, 0.0, 1.0});
  EXPECT_DOUBLE_EQ(classical_sample_mean(f, 4, rng, Sampling::without_replacement), 0.5);
  EXPECT_THROW(classical_sample_mean(f, 5, rng, Sampling::without_replacement), ValidationError);
  EXPECT_THROW(classical_sample_mean(f, 0, rng), ValidationError);
}

TEST(ClassicalSampleMean, RmsErrorMatchesBinomial) {
  RngStream rng(4, 0);
  const RealOracle f({0.0, 1.0, 0.0, 1.0});
  const std::uint64_t q = 100;
  double sq = 0.0;
  const int reps = 4000;
  for (int i = 0; i < reps; ++i) {
    const double e = classical_sample_mean(f, q, rng) - 0.5;
    sq += e * e;
  }
  const double rms = std::sqrt(sq / reps);
  EXPECT_NEAR(rms, 0.5 / std::sqrt(static_cast<double>(q)), 0.005);
}

TEST(Generate, Examples) {
  RngStream rng(5, 0);
  InstanceSpec spec;

  spec.generator = Generator::constant;
  spec.n = 8;
  spec.value = 0.5;
  spec.ell = 1;
  const auto c = std::get<RealOracle>(generate(spec, rng));
  for (double v : c.values()) EXPECT_EQ(v, 0.5);

  spec = {};
  spec.generator = Generator::boolean_density;
  spec.n = 16;
  spec.density = 5;
  const auto b = std::get<RealOracle>(generate(spec, rng));
  EXPECT_EQ(b.ell(), 1u);
  EXPECT_EQ(std::count(b.values().begin(), b.values().end(), 1.0), 5);

  spec = {};
  spec.generator = Generator::permutation;
  spec.n = 8;
  const auto p = std::get<RealOracle>(generate(spec, rng));
  EXPECT_EQ(p.ell(), 3u);
  std::vector<double> sorted(p.values().begin(), p.values().end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(sorted[k], static_cast<double>(k) / 8.0);

  spec = {};
  spec.generator = Generator::close_pair;
  spec.n = 16;
  spec.delta = 0.5;
  const auto d = std::get<DistanceOracle>(generate(spec, rng));
  EXPECT_EQ(d.peek(0, 15), 0.5);
  EXPECT_EQ(d.peek(15, 0), 0.5);
  EXPECT_EQ(d.peek(3, 3), 0.0);
  EXPECT_EQ(d.peek(3, 4), 1.0);
  EXPECT_EQ(exact_median(d).first, 0u);

  spec = {};
  spec.generator = Generator::uniform_random;
  spec.n = 32;
  spec.ell = 4;
  const auto u = std::get<RealOracle>(generate(spec, rng));
  for (double v : u.values()) EXPECT_EQ(v * 16.0, std::floor(v * 16.0));

  spec.n = 12;
  EXPECT_THROW(generate(spec, rng), ValidationError);
  EXPECT_THROW(parse_generator("nope"), ValidationError);
}

ExperimentConfig mean1_config(std::uint64_t trials, std::uint64_t seed) {
  RngStream rng(6, 0);
  InstanceSpec spec;
  spec.generator = Generator::uniform_random;
  spec.n = 64;
  ExperimentConfig config;
  config.algorithm = Algorithm::mean1;
  config.instance = generate(spec, rng);
  config.t_values = {15, 63};
  config.trials = trials;
  config.seed = seed;
  return config;
}

TEST(RunExperiment, ZeroTrialsGiveHeaderOnly) {
  const auto records = run_experiment(mean1_config(0, 1));
  EXPECT_TRUE(records.empty());
  EXPECT_EQ(to_csv(records), std::string(kCsvHeader) + "\n");
}

TEST(RunExperiment, SameSeedSameBytes) {
  EXPECT_EQ(to_csv(run_experiment(mean1_config(50, 7))), to_csv(run_experiment(mean1_config(50, 7))));
  EXPECT_NE(to_csv(run_experiment(mean1_config(50, 7))), to_csv(run_experiment(mean1_config(50, 8))));
}

TEST(RunExperiment, RecordInvariants) {
  const auto records = run_experiment(mean1_config(30, 3));
  ASSERT_EQ(records.size(), 60u);
  for (const auto& r : records) {
    EXPECT_EQ(r.queries, 4 * (r.M - 1) + 2);
    EXPECT_EQ(r.t, r.M - 1);
    EXPECT_EQ(r.abs_error, std::abs(r.estimate - r.truth));
    EXPECT_EQ(r.within_bound, r.abs_error <= r.bound);
  }
}

TEST(RunExperiment, TrialUsesItsOwnStream) {
  auto config = mean1_config(5, 11);
  config.t_values = {63};
  const auto all = run_experiment(config);
  const RngStream probe(11, 3);
  RngStream rng = probe;
  const auto single = mean1(std::get<RealOracle>(config.instance).with_fresh_counter(), 63, rng);
  EXPECT_EQ(all[3].estimate, single.estimate);
}

TEST(RunExperiment, CountAndSearchAndMinimum) {
  RngStream rng(7, 0);
  InstanceSpec spec;
  spec.generator = Generator::boolean_density;
  spec.n = 64;
  spec.density = 16;
  ExperimentConfig config;
  config.instance = generate(spec, rng);
  config.trials = 20;

  config.algorithm = Algorithm::count;
  for (const auto& r : run_experiment(config)) {
    EXPECT_EQ(r.truth, 16.0);
    EXPECT_EQ(r.queries, r.M - 1);
  }
  config.algorithm = Algorithm::search;
  for (const auto& r : run_experiment(config)) EXPECT_EQ(r.truth, 1.0);
  config.backend = Backend::statevector;
  EXPECT_THROW(run_experiment(config), ConfigurationError);

  spec.generator = Generator::permutation;
  config.instance = generate(spec, rng);
  config.algorithm = Algorithm::minimum;
  config.backend = Backend::subspace;
  for (const auto& r : run_experiment(config)) EXPECT_EQ(r.truth, 0.0);

  spec.generator = Generator::uniform_random;
  config.instance = generate(spec, rng);
  config.algorithm = Algorithm::count;
  EXPECT_THROW(run_experiment(config), ValidationError);
}

TEST(Records, CsvAndJsonRoundTrip) {
  const auto records = run_experiment(mean1_config(10, 5));
  std::stringstream csv(to_csv(records));
  const auto back = read_records(csv);
  EXPECT_EQ(to_csv(back), to_csv(records));

  std::stringstream json;
  write_json(json, records);
  const auto from_json = read_records(json);
  EXPECT_EQ(to_csv(from_json), to_csv(records));

  std::stringstream bad("trial,foo\n");
  EXPECT_THROW(read_records(bad), ValidationError);
}

TEST(Summaries, LogLogSlopeAndGroups) {
  EXPECT_NEAR(loglog_slope({1.0, 10.0, 100.0}, {1.0, 0.1, 0.01}), -1.0, 1e-12);
  const auto records = run_experiment(mean1_config(100, 9));
  const auto groups = summarize_groups(records, SummaryCheck::bound_freq);
  ASSERT_EQ(groups.size(), 2u);
  for (const auto& g : groups) {
    EXPECT_EQ(g.trials, 100u);
    EXPECT_GE(g.value, 0.0);
    EXPECT_LE(g.value, 1.0);
  }
  EXPECT_NE(summarize(records, SummaryCheck::slope).find("slope="), std::string::npos);
  EXPECT_THROW(parse_check("nope"), ValidationError);
}

}  // namespace
}  // namespace qmean
