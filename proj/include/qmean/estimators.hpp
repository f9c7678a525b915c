#pragma once

#include <qmean/errors.hpp>
#include <qmean/oracle.hpp>
#include <qmean/primitives.hpp>
#include <qmean/rng.hpp>
#include <qmean/simcore.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace qmean {

enum class MeanVariant { mean1, mean2 };

struct MeanEstimate {
  double estimate = 0.0;
  /// A-posteriori bound: the variant's error formula evaluated at the estimate.
  double bound = 0.0;
  std::uint64_t f_queries = 0;
  MeanVariant variant = MeanVariant::mean1;
  std::uint64_t effective_t = 0;  ///< mean1: AE iterations; mean2: per-count iterations
  std::uint64_t M = 0;
  unsigned ell = 0;      ///< mean2 only
  std::uint64_t n = 0;   ///< mean2 majority parameter
};

// ---------------------------------------------------------------------------
// mean1: amplitude estimation on A = A'(H (x) Id)

inline double mean1_error_bound(double m, std::uint64_t t) {
  if (!(m >= 0.0 && m <= 1.0)) throw ValidationError("mean m must lie in [0,1]");
  if (t < 1) throw ValidationError("t must be positive");
  return ae_error_bound(m, static_cast<double>(t));
}

/// 4(M-1) + 2 evaluations of F.
inline std::uint64_t mean1_query_cost(std::uint64_t t) {
  return ae_query_cost(2, 0, phase_register_size(t));
}

inline MeanEstimate mean1(const RealOracle& oracle, std::uint64_t t, RngStream& rng,
                          Backend backend = Backend::subspace) {
  const auto ae = amplitude_estimation(MeanOperator(oracle), t, rng, backend);
  MeanEstimate out;
  out.estimate = ae.estimate;
  out.bound = mean1_error_bound(ae.estimate, ae.effective_t);
  out.f_queries = ae.f_queries;
  out.variant = MeanVariant::mean1;
  out.effective_t = ae.effective_t;
  out.M = ae.M;
  return out;
}

/// mean1 as a re-sampleable estimator. Its radius is the error bound at the
/// maximizer m = 1/2, so it holds for any F.
inline StochasticEstimator mean1_estimator(const RealOracle& oracle, std::uint64_t t,
                                           Backend backend = Backend::subspace) {
  auto ae = std::make_shared<const AmplitudeEstimator<MeanOperator>>(MeanOperator(oracle), t, backend);
  StochasticEstimator est;
  est.sample = [ae](std::size_t, RngStream& rng) { return ae->sample(rng).estimate; };
  est.cost_per_sample = ae->queries_per_run();
  est.delta = ae_error_bound(0.5, static_cast<double>(ae->effective_t()));
  return est;
}

// ---------------------------------------------------------------------------
// mean2: boosted counts of each bit plane

/// ceil(5 pi sqrt(N)).
inline std::uint64_t mean2_count_iterations(std::size_t n) {
  return static_cast<std::uint64_t>(std::ceil(5.0 * std::numbers::pi * std::sqrt(static_cast<double>(n))));
}

/// ceil(3 ell / 2).
inline std::uint64_t mean2_majority_n(unsigned ell) { return (3ULL * ell + 1) / 2; }

/// ell * repetitions_for(ceil(3 ell / 2)) * (M_c - 1).
inline std::uint64_t mean2_query_cost(std::size_t n, unsigned ell) {
  const std::uint64_t M = phase_register_size(mean2_count_iterations(n));
  return ell * repetitions_for(mean2_majority_n(ell)) * (M - 1);
}

/// (1/N) sum_i sqrt(m_i) 2^-i with m_i = sum_x F_i(x). Reads the table
/// directly; nothing is charged.
inline double mean2_error_bound(const RealOracle& oracle) {
  if (!oracle.fixed_point()) {
    throw ConfigurationError("mean2_error_bound needs an oracle with ell bits of precision");
  }
  const unsigned ell = oracle.ell();
  std::vector<double> ones(ell, 0.0);
  for (std::size_t x = 0; x < oracle.size(); ++x) {
    const auto bits = encode_fixed_point(oracle.peek(x), ell);
    for (unsigned i = 0; i < ell; ++i) ones[i] += bits[i];
  }
  double bound = 0.0;
  for (unsigned i = 0; i < ell; ++i) bound += std::sqrt(ones[i]) * std::ldexp(1.0, -static_cast<int>(i + 1));
  return bound / static_cast<double>(oracle.size());
}

struct Mean2Options {
  MajorityMode mode = MajorityMode::median;
  Backend backend = Backend::subspace;
};

/// Re-sampleable mean2. Per-bit count estimators are built once and shared
/// by every sample.
inline StochasticEstimator mean2_estimator(const RealOracle& oracle, const Mean2Options& options = {}) {
  if (!oracle.fixed_point()) {
    throw ConfigurationError("mean2 needs an oracle with ell bits of precision");
  }
  const unsigned ell = oracle.ell();
  const std::size_t n = oracle.size();
  const std::uint64_t t_c = mean2_count_iterations(n);
  const std::uint64_t majority_n = mean2_majority_n(ell);

  auto columns = std::make_shared<std::vector<StochasticEstimator>>();
  std::uint64_t cost = 0;
  for (unsigned i = 1; i <= ell; ++i) {
    columns->push_back(majority_boost(count_estimator(bit_oracle(oracle, i), t_c, options.backend),
                                      majority_n, options.mode));
    cost += columns->back().cost_per_sample;
  }

  StochasticEstimator est;
  est.cost_per_sample = cost;
  est.sample = [columns, n](std::size_t index, RngStream& rng) {
    double sum = 0.0;
    for (std::size_t i = 0; i < columns->size(); ++i) {
      const double m_i = std::clamp((*columns)[i].sample(index, rng), 0.0, static_cast<double>(n));
      sum += m_i * std::ldexp(1.0, -static_cast<int>(i + 1));
    }
    return sum / static_cast<double>(n);
  };
  return est;
}

inline MeanEstimate mean2(const RealOracle& oracle, RngStream& rng, const Mean2Options& options = {}) {
  if (!oracle.fixed_point()) {
    throw ConfigurationError("mean2 needs an oracle with ell bits of precision");
  }
  const unsigned ell = oracle.ell();
  const std::size_t n = oracle.size();
  const std::uint64_t t_c = mean2_count_iterations(n);
  const std::uint64_t majority_n = mean2_majority_n(ell);
  const std::uint64_t before = oracle.counter().tally();

  MeanEstimate out;
  double sum = 0.0;
  double bound = 0.0;
  for (unsigned i = 1; i <= ell; ++i) {
    auto column = majority_boost(count_estimator(bit_oracle(oracle, i), t_c, options.backend),
                                 majority_n, options.mode);
    const double m_i = std::clamp(column.sample(0, rng), 0.0, static_cast<double>(n));
    const double weight = std::ldexp(1.0, -static_cast<int>(i));
    sum += m_i * weight;
    bound += std::sqrt(m_i) * weight;
  }
  out.estimate = sum / static_cast<double>(n);
  out.bound = bound / static_cast<double>(n);
  out.f_queries = oracle.counter().tally() - before;
  out.variant = MeanVariant::mean2;
  out.M = phase_register_size(t_c);
  out.effective_t = out.M - 1;
  out.ell = ell;
  out.n = majority_n;
  return out;
}

// ---------------------------------------------------------------------------
// Median of a point set under a black-box distance

struct MedianOptions {
  MeanVariant variant = MeanVariant::mean1;
  std::uint64_t t = 255;  ///< mean1 iterations
  unsigned ell = 8;       ///< mean2 precision; rows are rounded to ell bits
  MajorityMode mode = MajorityMode::median;
  Backend backend = Backend::subspace;
  MinimumOptions minimum;
};

struct MedianResult {
  std::size_t index = 0;
  double estimated_row_mean = 0.0;
  std::uint64_t dist_queries = 0;
  std::uint64_t minimum_queries = 0;  ///< evaluations of the boosted row-mean oracle
  std::uint64_t queries_per_row_mean = 0;
};

/// dist-queries of one evaluation of the boosted row-mean oracle.
inline std::uint64_t median_row_mean_cost(std::size_t n, const MedianOptions& options) {
  const std::uint64_t per_mean = options.variant == MeanVariant::mean1
                                     ? mean1_query_cost(options.t)
                                     : mean2_query_cost(n, options.ell);
  return repetitions_for(static_cast<std::uint64_t>(n) * n) * per_mean;
}

namespace detail {

// d~_i = majority(mean(F_i), n = N^2), one boosted sample per row drawn on
// first access and reused afterwards.
class MemoizedRowMeans {
 public:
  MemoizedRowMeans(const DistanceOracle& dist, const MedianOptions& options, RngStream rng)
      : dist_(dist), options_(options), rng_(std::move(rng)), memo_(dist.size()),
        counter_(make_counter()) {}

  [[nodiscard]] std::size_t size() const { return memo_.size(); }
  [[nodiscard]] const CounterPtr& counter_ptr() const { return counter_; }

  double peek(std::size_t i) const {
    if (!memo_[i]) memo_[i] = boosted_row(i).sample(i, rng_);
    return *memo_[i];
  }

  [[nodiscard]] std::size_t evaluated() const {
    return static_cast<std::size_t>(std::count_if(memo_.begin(), memo_.end(),
                                                  [](const auto& v) { return v.has_value(); }));
  }

 private:
  StochasticEstimator boosted_row(std::size_t i) const {
    const auto row = dist_.row(i);
    StochasticEstimator base;
    if (options_.variant == MeanVariant::mean1) {
      base = mean1_estimator(RealOracle(std::vector<double>(row.begin(), row.end())), options_.t,
                             options_.backend);
    } else {
      base = mean2_estimator(RealOracle::quantized(row, options_.ell),
                             Mean2Options{options_.mode, options_.backend});
    }
    if (options_.mode == MajorityMode::interval && !base.delta) {
      throw ConfigurationError("interval majority is unavailable for mean2 row means");
    }
    const std::uint64_t n = static_cast<std::uint64_t>(dist_.size()) * dist_.size();
    return majority_boost(std::move(base), n, options_.mode);
  }

  const DistanceOracle& dist_;
  MedianOptions options_;
  mutable RngStream rng_;
  mutable std::vector<std::optional<double>> memo_;
  CounterPtr counter_;
};

}  // namespace detail

/// Point minimizing the average distance to all points: minimum finding over
/// the boosted row-mean estimates. Each comparison evaluates one boosted row
/// mean, so dist is charged minimum_queries * median_row_mean_cost.
inline MedianResult median(const DistanceOracle& dist, RngStream& rng, const MedianOptions& options = {}) {
  const std::size_t n = dist.size();
  if (n == 1) return MedianResult{0, dist.peek(0, 0), 0, 0, 0};
  if (options.variant == MeanVariant::mean2 && options.mode == MajorityMode::interval) {
    throw ConfigurationError("interval majority is unavailable for mean2 row means");
  }

  detail::MemoizedRowMeans row_means(dist, options, rng.split());
  const MinResult best = find_minimum(row_means, rng, options.minimum);

  MedianResult out;
  out.index = best.index;
  out.estimated_row_mean = best.value;
  out.minimum_queries = best.f_queries;
  out.queries_per_row_mean = median_row_mean_cost(n, options);
  out.dist_queries = out.minimum_queries * out.queries_per_row_mean;
  dist.counter().charge(out.dist_queries);
  return out;
}

}  // namespace qmean
