// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <qmean/qmean.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

using namespace qmean;

namespace {

constexpr double kPi = std::numbers::pi;
const double kEightOverPi2 = 8.0 / (kPi * kPi);

int failures = 0;

// Sub-checks of the criterion being evaluated; `finish_criterion` prints its one line.
struct Criterion {
  bool pass = true;
  std::string detail;
};
Criterion current;

void report(int, const std::string& name, bool pass, const std::string& detail) {
  current.pass &= pass;
  current.detail += (current.detail.empty() ? "" : " | ") + name + ": " + (pass ? "" : "FAILED ") + detail;
}

void finish_criterion(int id) {
  std::printf("[%s] criterion %d -- %s\n", current.pass ? "PASS" : "FAIL", id, current.detail.c_str());
  std::fflush(stdout);
  if (!current.pass) ++failures;
  current = {};
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

BooleanOracle marks_first(std::size_t n, std::size_t s) {
  return BooleanOracle::from_predicate(n, [s](std::size_t x) { return x < s; });
}

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

void counting_bound() {
  const std::size_t n = 64;
  const int trials = 10000;
  double worst = 1.0;
  std::string where;
  for (std::size_t s : {1u, 16u, 32u}) {
    for (std::uint64_t t : {15u, 63u, 255u}) {
      RngStream rng(101, s * 1000 + t);
      const auto pred = marks_first(n, s);
      int ok = 0;
      for (int i = 0; i < trials; ++i) {
        const auto c = count(pred, t, rng);
        const double bound = counting_error_bound(static_cast<double>(s), static_cast<double>(n),
                                                  static_cast<double>(c.ae.effective_t));
        ok += std::abs(static_cast<double>(c.estimate) - static_cast<double>(s)) <= bound;
      }
      const double freq = static_cast<double>(ok) / trials;
      if (freq < worst) {
        worst = freq;
        where = "s=" + std::to_string(s) + " t=" + std::to_string(t);
      }
    }
  }
  report(1, "count bound frequency >= 0.79 (N=64)", !(worst < 0.79),
         fmt("worst freq %.4f", worst) + " at " + where);
}

void counting_zero() {
  RngStream rng(102, 0);
  const auto pred = marks_first(64, 0);
  int zeros = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) zeros += count(pred, 63, rng).estimate == 0;
  report(2, "count with s=0 returns 0", zeros == trials, std::to_string(zeros) + "/" + std::to_string(trials));
}

void mean1_behaviour() {
  RngStream gen(103, 0);
  InstanceSpec spec;
  spec.generator = Generator::uniform_random;
  spec.n = 64;
  const auto f = std::get<RealOracle>(generate(spec, gen));
  const double m = exact_mean(f);

  RngStream rng(103, 1);
  const int trials = 10000;
  int ok = 0;
  bool cost_ok = true;
  for (int i = 0; i < trials; ++i) {
    const auto oracle = f.with_fresh_counter();
    const auto est = mean1(oracle, 63, rng);
    ok += std::abs(est.estimate - m) <= mean1_error_bound(m, est.effective_t);
    cost_ok &= est.f_queries == 4 * (est.M - 1) + 2 && oracle.counter().tally() == est.f_queries;
  }
  const double freq = static_cast<double>(ok) / trials;
  report(3, "mean1 bound frequency >= 0.79 (N=64, t=63)", !(freq < 0.79), fmt("freq %.4f", freq));

  const RealOracle quarter({0.0, 0.5, 0.25, 0.25});
  std::vector<double> ts, errs;
  for (std::uint64_t t : {15u, 63u, 255u, 1023u}) {
    std::vector<double> e;
    std::uint64_t eff = 0;
    for (int i = 0; i < trials; ++i) {
      const auto est = mean1(quarter, t, rng);
      eff = est.effective_t;
      e.push_back(std::abs(est.estimate - 0.25));
    }
    ts.push_back(static_cast<double>(eff));
    errs.push_back(median_of(std::move(e)));
  }
  const double slope = loglog_slope(ts, errs);
  report(3, "mean1 median error slope in [-1.15,-0.85] (a=1/4)", slope >= -1.15 && slope <= -0.85,
         fmt("slope %.4f", slope));
  report(3, "mean1 charges 4(M-1)+2 queries per run", cost_ok, cost_ok ? "all trials" : "mismatch");
}

void mean2_behaviour() {
  RngStream gen(104, 0);
  InstanceSpec spec;
  spec.generator = Generator::uniform_random;
  spec.n = 64;
  spec.ell = 8;
  const auto f = std::get<RealOracle>(generate(spec, gen));
  const double truth = encoded_mean(f);
  const double bound = mean2_error_bound(f);
  RngStream rng(104, 1);
  const int trials = 1000;
  int ok = 0;
  for (int i = 0; i < trials; ++i) ok += std::abs(mean2(f.with_fresh_counter(), rng).estimate - truth) <= bound;
  const double freq = static_cast<double>(ok) / trials;
  const double need = 2.0 / 3.0 - 0.03;
  report(4, "mean2 bound frequency >= 2/3 - 0.03 (N=64, ell=8)", !(freq < need), fmt("freq %.4f", freq));
}

void majority_behaviour() {
  const double truth = 0.4, delta = 0.01;
  bool all_ok = true;
  std::string detail;
  for (std::uint64_t n : {8u, 64u}) {
    for (auto mode : {MajorityMode::interval, MajorityMode::median}) {
      std::uint64_t calls = 0;
      StochasticEstimator base;
      base.sample = [&calls, truth, delta](std::size_t, RngStream& rng) {
        ++calls;
        if (rng.uniform() < 2.0 / 3.0) return truth + (2.0 * rng.uniform() - 1.0) * delta;
        return truth + (rng.uniform() < 0.5 ? -1.0 : 1.0) * (5.0 + rng.uniform()) * delta;
      };
      base.cost_per_sample = 1;
      base.delta = delta;
      const auto boosted = majority_boost(base, n, mode);
      RngStream rng(105, n * 2 + (mode == MajorityMode::median));
      const int evals = 10000;
      int bad = 0;
      for (int i = 0; i < evals; ++i) bad += std::abs(boosted.sample(0, rng) - truth) > 2.0 * delta;
      const double rate = static_cast<double>(bad) / evals;
      const bool ok = rate <= 1.0 / static_cast<double>(n) && calls == evals * repetitions_for(n);
      all_ok &= ok;
      detail += (detail.empty() ? "" : "; ") + std::string(mode == MajorityMode::interval ? "interval" : "median") +
                " n=" + std::to_string(n) + fmt(" fail %.4f", rate);
    }
  }
  const bool k_ok = repetitions_for(1024) == 714;
  report(5, "majority failure <= 1/n with repetitions_for(n) samples", all_ok && k_ok,
         detail + "; k(1024)=" + std::to_string(repetitions_for(1024)));
}

void minimum_behaviour() {
  RngStream rng(106, 0);
  const int trials = 10000;
  int hits = 0;
  for (int i = 0; i < trials; ++i) {
    std::vector<double> values(64);
    for (std::size_t x = 0; x < 64; ++x) values[x] = static_cast<double>(x);
    for (std::size_t k = 64; k > 1; --k) std::swap(values[k - 1], values[rng.below(k)]);
    hits += find_minimum(TabulatedFunction(values), rng).value == 0.0;
  }
  const double freq = static_cast<double>(hits) / trials;
  report(6, "minimum finding success >= 0.73 (N=64 permutations)", !(freq < 0.73), fmt("freq %.4f", freq));
}

void median_behaviour() {
  {
    RngStream rng(107, 0);
    InstanceSpec spec;
    spec.generator = Generator::close_pair;
    spec.n = 16;
    spec.delta = 0.5;
    const auto d = std::get<DistanceOracle>(generate(spec, rng));
    const int trials = 1000;
    int hits = 0;
    for (int i = 0; i < trials; ++i) {
      const auto r = median(d.with_fresh_counter(), rng);
      hits += r.index == 0 || r.index == 15;
    }
    const double freq = static_cast<double>(hits) / trials;
    report(7, "median close-pair success >= 2/3 (N=16, mean1 t=255)", !(freq < 2.0 / 3.0),
           fmt("freq %.4f", freq));
  }
  {
    RngStream rng(107, 1);
    InstanceSpec spec;
    spec.generator = Generator::random_distance;
    spec.n = 8;
    const auto d = std::get<DistanceOracle>(generate(spec, rng));
    const double d_min = d.min_row_mean();
    const double envelope = 3.0 * mean1_error_bound(d_min, 255);
    const int trials = 1000;
    int ok = 0;
    for (int i = 0; i < trials; ++i) ok += d.row_mean(median(d.with_fresh_counter(), rng).index) - d_min <= envelope;
    const double freq = static_cast<double>(ok) / trials;
    const double need = 4.0 * kEightOverPi2 / 5.0;
    report(7, "median envelope frequency >= 0.6367 (N=8 random)", !(freq < need), fmt("freq %.4f", freq));
  }
  {
    std::vector<double> ns, qs;
    for (std::size_t n : {8u, 16u, 32u, 64u}) {
      RngStream rng(107, 100 + n);
      InstanceSpec spec;
      spec.generator = Generator::random_distance;
      spec.n = n;
      const auto d = std::get<DistanceOracle>(generate(spec, rng));
      MedianOptions options;
      options.variant = MeanVariant::mean2;
      const auto r = median(d, rng, options);
      ns.push_back(static_cast<double>(n));
      qs.push_back(static_cast<double>(r.dist_queries) / std::log2(static_cast<double>(n)));
    }
    const double slope = loglog_slope(ns, qs);
    report(7, "median (mean2) dist-query exponent over log N in [0.9,1.3]", slope >= 0.9 && slope <= 1.3,
           fmt("exponent %.4f", slope));
  }
}

void backend_equivalence() {
  double worst = 0.0;
  for (std::size_t s = 0; s <= 8; ++s) {
    const auto sv = statevector_outcome_distribution(CountingOperator(marks_first(8, s)), 16);
    const auto cf = pe_outcome_distribution(SubspaceAEProblem::make(static_cast<double>(s) / 8.0, 16));
    double tv = 0.0;
    for (std::size_t y = 0; y < sv.size(); ++y) tv += std::abs(sv[y] - cf[y]);
    worst = std::max(worst, 0.5 * tv);
  }
  report(8, "statevector and subspace outcome laws agree (TV <= 1e-9)", worst <= 1e-9, fmt("max TV %.3g", worst));
}

void regime_comparison() {
  const std::size_t n = 256;
  const RealOracle half(std::vector<double>(n, 0.5));
  const auto t = static_cast<std::uint64_t>(16 * std::ceil(2.0 * kPi * std::sqrt(static_cast<double>(n))));
  RngStream rng(109, 0);
  const int trials = 10000;
  int ok = 0;
  for (int i = 0; i < trials; ++i) ok += std::abs(mean1(half, t, rng).estimate - 0.5) < 0.5 / std::sqrt(static_cast<double>(n));
  const double freq = static_cast<double>(ok) / trials;
  report(9, "mean1 beats m/sqrt(N) in >= 95% of runs (N=256, t=1616)", t == 1616 && freq >= 0.95,
         fmt("freq %.4f", freq));

  const double b1 = mean2_error_bound(RealOracle(std::vector<double>(n, 0.5), 1));
  const double b4 = mean2_error_bound(RealOracle(std::vector<double>(n, 0.5), 4));
  const double b8 = mean2_error_bound(RealOracle(std::vector<double>(n, 0.5), 8));
  report(9, "mean2 bound independent of ell for F = 1/2", b1 == b4 && b4 == b8, fmt("bound %.6f", b1));
}

}  // namespace

int main() {
  counting_bound();
  finish_criterion(1);
  counting_zero();
  finish_criterion(2);
  mean1_behaviour();
  finish_criterion(3);
  mean2_behaviour();
  finish_criterion(4);
  majority_behaviour();
  finish_criterion(5);
  minimum_behaviour();
  finish_criterion(6);
  median_behaviour();
  finish_criterion(7);
  backend_equivalence();
  finish_criterion(8);
  regime_comparison();
  finish_criterion(9);
  std::printf("%s: %d failing check(s)\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
