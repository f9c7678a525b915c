#pragma once

#include <qmean/errors.hpp>
#include <qmean/oracle.hpp>
#include <qmean/rng.hpp>
#include <qmean/simcore.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qmean {

enum class Backend { subspace, statevector };

// ---------------------------------------------------------------------------
// Amplitude estimation and counting

/// 2 pi sqrt(a(1-a)) / t + pi^2 / t^2.
inline double ae_error_bound(double a, double t) {
  const double pi = std::numbers::pi;
  return 2.0 * pi * std::sqrt(std::max(0.0, a * (1.0 - a))) / t + pi * pi / (t * t);
}

/// 2 pi sqrt(s(N-s)) / t + pi^2 N / t^2.
inline double counting_error_bound(double s, double n, double t) {
  const double pi = std::numbers::pi;
  return 2.0 * pi * std::sqrt(std::max(0.0, s * (n - s))) / t + pi * pi * n / (t * t);
}

/// F-queries of one amplitude-estimation run with a phase register of size M:
/// one A to prepare, then M - 1 Grover iterations of A, A^-1 and S_chi each.
inline std::uint64_t ae_query_cost(std::uint64_t queries_per_a, std::uint64_t queries_per_reflection,
                                   std::uint64_t M) {
  return (M - 1) * (2 * queries_per_a + queries_per_reflection) + queries_per_a;
}

/// Repeatable amplitude estimation on a fixed problem. The outcome law is
/// computed once (closed form or full statevector); each `sample` is one run
/// and charges the problem's counter the run's query cost.
template <AmplitudeProblem P>
class AmplitudeEstimator {
 public:
  AmplitudeEstimator(P problem, std::uint64_t t, Backend backend = Backend::subspace)
      : problem_(std::move(problem)),
        M_(phase_register_size(t)),
        cost_(ae_query_cost(problem_.queries_per_a(), problem_.queries_per_reflection(), M_)),
        sampler_(distribution_for(problem_, M_, backend)) {}

  AEOutcome sample(RngStream& rng) const {
    const std::uint64_t y = sampler_.draw(rng);
    problem_.counter_ptr()->charge(cost_);
    return AEOutcome{outcome_to_estimate(y, M_), y, M_ - 1, M_, cost_};
  }

  [[nodiscard]] std::uint64_t M() const { return M_; }
  [[nodiscard]] std::uint64_t effective_t() const { return M_ - 1; }
  [[nodiscard]] std::uint64_t queries_per_run() const { return cost_; }
  [[nodiscard]] const P& problem() const { return problem_; }

 private:
  static std::vector<double> distribution_for(const P& problem, std::uint64_t M, Backend backend) {
    if (backend == Backend::statevector) {
      // Simulated on a scratch counter; runs are charged by the cost model.
      return statevector_outcome_distribution(problem.with_counter(make_counter()), M);
    }
    return pe_outcome_distribution(SubspaceAEProblem::make(problem.amplitude(), M));
  }

  P problem_;
  std::uint64_t M_;
  std::uint64_t cost_;
  OutcomeSampler sampler_;
};

template <AmplitudeProblem P>
AEOutcome amplitude_estimation(const P& problem, std::uint64_t t, RngStream& rng,
                               Backend backend = Backend::subspace) {
  return AmplitudeEstimator<P>(problem, t, backend).sample(rng);
}

/// Amplitude estimation on a bare amplitude a, with no oracle behind it.
inline AEOutcome amplitude_estimation(double a, std::uint64_t t, RngStream& rng) {
  return phase_estimation_sample(SubspaceAEProblem::make(a, phase_register_size(t)), rng);
}

struct CountResult {
  std::uint64_t estimate = 0;
  AEOutcome ae;
};

namespace detail {

inline std::uint64_t count_from_amplitude(double a_tilde, std::size_t n) {
  // llround rounds halves away from zero.
  const auto s = std::llround(static_cast<double>(n) * a_tilde);
  return static_cast<std::uint64_t>(std::clamp<long long>(s, 0, static_cast<long long>(n)));
}

}  // namespace detail

/// Approximate number of marked points: round(N * a~) where a~ estimates s/N.
/// Costs M - 1 evaluations of the predicate.
inline CountResult count(const BooleanOracle& pred, std::uint64_t t, RngStream& rng,
                         Backend backend = Backend::subspace) {
  const auto ae = amplitude_estimation(CountingOperator(pred), t, rng, backend);
  return CountResult{detail::count_from_amplitude(ae.estimate, pred.size()), ae};
}

/// `count` as a re-sampleable estimator with its outcome law cached. Its
/// error radius is the counting bound at the worst case s = N/2, which holds
/// for every s.
inline StochasticEstimator count_estimator(const BooleanOracle& pred, std::uint64_t t,
                                           Backend backend = Backend::subspace) {
  auto ae = std::make_shared<const AmplitudeEstimator<CountingOperator>>(CountingOperator(pred), t,
                                                                         backend);
  const std::size_t n = pred.size();
  const auto eff_t = static_cast<double>(ae->effective_t());
  StochasticEstimator est;
  est.sample = [ae, n](std::size_t, RngStream& rng) {
    return static_cast<double>(detail::count_from_amplitude(ae->sample(rng).estimate, n));
  };
  est.cost_per_sample = ae->queries_per_run();
  est.delta = counting_error_bound(static_cast<double>(n) / 2.0, static_cast<double>(n), eff_t);
  return est;
}

// ---------------------------------------------------------------------------
// Search

struct SearchOptions {
  double c0 = 9.0;            ///< hard cap c0 * sqrt(N) on total queries
  double lambda = 6.0 / 5.0;  ///< growth of the iteration-count range per failed round
  std::optional<std::uint64_t> max_queries;  ///< tighter cap, if any
};

struct SearchResult {
  std::optional<std::size_t> found;
  std::uint64_t f_queries = 0;
};

/// Search with an unknown number of solutions. Each round draws an iteration
/// count j uniformly from {0..min(ceil(lambda^r), ceil(sqrt N))} for round r,
/// runs j Grover iterations (j queries), measures, and checks the measured
/// point (one query). Returns void once the next round would exceed the cap.
inline SearchResult grover_search(const BooleanOracle& pred, RngStream& rng,
                                  const SearchOptions& options = {}) {
  const std::size_t n = pred.size();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  std::uint64_t cap = static_cast<std::uint64_t>(std::floor(options.c0 * sqrt_n));
  if (options.max_queries) cap = std::min(cap, *options.max_queries);

  const auto marked = pred.marked_indices();
  const std::size_t s = marked.size();
  const double theta = std::asin(std::sqrt(static_cast<double>(s) / static_cast<double>(n)));
  const auto range_cap = static_cast<std::uint64_t>(std::ceil(sqrt_n));

  SearchResult result;
  double scale = 1.0;
  while (true) {
    const auto upper = std::min(static_cast<std::uint64_t>(std::ceil(scale)), range_cap);
    const std::uint64_t iterations = rng.between(0, upper);
    if (result.f_queries + iterations + 1 > cap) break;
    pred.counter().charge(iterations);
    result.f_queries += iterations;

    const double amp = std::sin((2.0 * static_cast<double>(iterations) + 1.0) * theta);
    std::size_t x = 0;
    if (s == n || (s > 0 && rng.uniform() < amp * amp)) {
      x = marked[rng.below(s)];
    } else {
      do {
        x = rng.below(n);
      } while (pred.peek(x));
    }
    result.f_queries += 1;
    if (pred.query(x)) {
      result.found = x;
      return result;
    }
    scale *= options.lambda;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Minimum finding

/// Anything with N points, an uncharged value read for the simulator, and a
/// counter that pays for comparisons.
template <class S>
concept ValueSource = requires(const S& s, std::size_t i) {
  { s.size() } -> std::convertible_to<std::size_t>;
  { s.peek(i) } -> std::convertible_to<double>;
  { s.counter_ptr() } -> std::convertible_to<CounterPtr>;
};

struct MinimumOptions {
  double c1 = 22.5;  ///< total budget c1 * sqrt(N) queries
  SearchOptions search;
};

struct MinResult {
  std::size_t index = 0;
  double value = 0.0;
  std::uint64_t f_queries = 0;
};

/// Threshold search: keep the best point seen, search for strictly better
/// points (equal values at lower indices count as better), and stop when the
/// budget is spent. Ties resolve to the lowest index.
template <ValueSource S>
MinResult find_minimum(const S& f, RngStream& rng, const MinimumOptions& options = {}) {
  const std::size_t n = f.size();
  if (n == 0) throw ValidationError("find_minimum needs at least one point");
  const auto budget = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::floor(options.c1 * std::sqrt(static_cast<double>(n)))));
  const CounterPtr counter = f.counter_ptr();

  MinResult best;
  best.index = rng.below(n);
  counter->charge();
  best.value = f.peek(best.index);
  best.f_queries = 1;

  while (best.f_queries < budget) {
    const std::size_t idx = best.index;
    const double val = best.value;
    const auto below = BooleanOracle::from_predicate(
        n,
        [&](std::size_t x) {
          const double v = f.peek(x);
          return v < val || (v == val && x < idx);
        },
        counter);
    SearchOptions search = options.search;
    search.max_queries = budget - best.f_queries;
    const SearchResult r = grover_search(below, rng, search);
    best.f_queries += r.f_queries;
    if (r.found) {
      best.index = *r.found;
      best.value = f.peek(best.index);
    } else if (r.f_queries == 0) {
      break;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Majority boosting

/// D(p||q) in bits.
inline double kl_divergence_bits(double p, double q) {
  if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0)) {
    throw ValidationError("kl_divergence_bits needs 0 < p, q < 1");
  }
  return p * std::log2(p / q) + (1.0 - p) * std::log2((1.0 - p) / (1.0 - q));
}

/// k = ceil(lg n / D(3/5 || 2/3)).
inline std::uint64_t repetitions_for(std::uint64_t n) {
  if (n < 2) throw ValidationError("repetitions_for needs n >= 2, got " + std::to_string(n));
  static const double d = kl_divergence_bits(3.0 / 5.0, 2.0 / 3.0);
  return static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(n)) / d));
}

enum class MajorityMode {
  interval,  ///< midpoint of a width-2*delta window holding >= 3/5 of the samples, else 0
  median,    ///< lower sample median; needs no delta
};

namespace detail {

inline double interval_vote(std::vector<double>& samples, double delta) {
  std::sort(samples.begin(), samples.end());
  const std::size_t k = samples.size();
  const std::size_t need = (3 * k + 4) / 5;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < k; ++lo) {
    hi = std::max(hi, lo);
    while (hi < k && samples[hi] - samples[lo] <= 2.0 * delta) ++hi;
    if (hi - lo >= need) return samples[lo] + delta;
  }
  return 0.0;
}

inline double median_vote(std::vector<double>& samples) {
  const auto mid = samples.begin() + static_cast<std::ptrdiff_t>((samples.size() - 1) / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  return *mid;
}

}  // namespace detail

/// B_n: each evaluation draws repetitions_for(n) samples of `base` at the
/// same index and votes. Interval mode lands within 2*delta of the truth with
/// probability >= 1 - 1/n; median mode lands within delta.
inline StochasticEstimator majority_boost(StochasticEstimator base, std::uint64_t n,
                                          MajorityMode mode = MajorityMode::median) {
  if (mode == MajorityMode::interval && !base.delta) {
    throw ConfigurationError("interval majority needs the base estimator's error radius");
  }
  const std::uint64_t k = repetitions_for(n);
  StochasticEstimator boosted;
  boosted.cost_per_sample = k * base.cost_per_sample;
  if (base.delta) boosted.delta = mode == MajorityMode::interval ? 2.0 * *base.delta : *base.delta;
  const auto delta = base.delta.value_or(0.0);
  boosted.sample = [inner = std::move(base.sample), k, mode, delta](std::size_t index,
                                                                    RngStream& rng) {
    std::vector<double> samples(k);
    for (auto& s : samples) s = inner(index, rng);
    return mode == MajorityMode::interval ? detail::interval_vote(samples, delta)
                                          : detail::median_vote(samples);
  };
  return boosted;
}

}  // namespace qmean
