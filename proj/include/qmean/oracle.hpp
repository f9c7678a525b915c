#pragma once

#include <qmean/errors.hpp>
#include <qmean/rng.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qmean {

/// Number of black-box evaluations charged so far. Only ever grows.
class QueryCounter {
 public:
  void charge(std::uint64_t queries = 1) { tally_ += queries; }
  [[nodiscard]] std::uint64_t tally() const { return tally_; }

 private:
  std::uint64_t tally_ = 0;
};

using CounterPtr = std::shared_ptr<QueryCounter>;

inline CounterPtr make_counter() { return std::make_shared<QueryCounter>(); }

inline bool is_power_of_two(std::size_t n) { return std::has_single_bit(n); }

inline constexpr unsigned kMaxFixedPointBits = 52;

// ---------------------------------------------------------------------------
// Fixed-point encoding

/// Bits b_1..b_ell (element 0 holds b_1) with sum b_i 2^-i equal to v rounded
/// to nearest-even at ell bits. 1.0, and anything that rounds up to 1.0, is
/// encoded as all ones.
inline std::vector<std::uint8_t> encode_fixed_point(double v, unsigned ell) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError("fixed-point value " + std::to_string(v) + " outside [0,1]");
  }
  if (ell < 1 || ell > kMaxFixedPointBits) {
    throw ValidationError("ell must lie in [1," + std::to_string(kMaxFixedPointBits) + "], got " +
                          std::to_string(ell));
  }
  const std::uint64_t top = std::uint64_t{1} << ell;
  // nearbyint honours the default round-to-nearest-even mode.
  auto scaled = static_cast<std::uint64_t>(std::nearbyint(std::ldexp(v, static_cast<int>(ell))));
  if (scaled >= top) scaled = top - 1;
  std::vector<std::uint8_t> bits(ell);
  for (unsigned i = 0; i < ell; ++i) {
    bits[i] = static_cast<std::uint8_t>((scaled >> (ell - 1 - i)) & 1U);
  }
  return bits;
}

inline double decode_fixed_point(std::span<const std::uint8_t> bits) {
  double v = 0.0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0) v += std::ldexp(1.0, -static_cast<int>(i + 1));
  }
  return v;
}

/// Value actually seen through the bit planes: v quantized, with 1 -> 1 - 2^-ell.
inline double quantize_fixed_point(double v, unsigned ell) {
  const auto bits = encode_fixed_point(v, ell);
  return decode_fixed_point(bits);
}

inline bool representable_fixed_point(double v, unsigned ell) {
  if (v == 1.0) return true;
  const double scaled = std::ldexp(v, static_cast<int>(ell));
  return scaled == std::floor(scaled);
}

// ---------------------------------------------------------------------------
// Oracles

/// A function {0..N-1} -> {0,1} behind a query counter.
class BooleanOracle {
 public:
  explicit BooleanOracle(std::vector<std::uint8_t> marks, CounterPtr counter = make_counter())
      : marks_(std::make_shared<const std::vector<std::uint8_t>>(normalize(std::move(marks)))),
        counter_(std::move(counter)) {
    if (marks_->empty()) throw ValidationError("boolean oracle needs at least one point");
  }

  static BooleanOracle from_predicate(std::size_t n, const std::function<bool(std::size_t)>& pred,
                                      CounterPtr counter = make_counter()) {
    std::vector<std::uint8_t> marks(n);
    for (std::size_t x = 0; x < n; ++x) marks[x] = pred(x) ? 1 : 0;
    return BooleanOracle(std::move(marks), std::move(counter));
  }

  [[nodiscard]] std::size_t size() const { return marks_->size(); }

  bool query(std::size_t x) const {
    check_index(x);
    counter_->charge();
    return (*marks_)[x] != 0;
  }

  /// Uncharged read, for simulators and test oracles.
  [[nodiscard]] bool peek(std::size_t x) const { return (*marks_)[x] != 0; }

  [[nodiscard]] std::size_t marked_count() const {
    return static_cast<std::size_t>(std::count(marks_->begin(), marks_->end(), std::uint8_t{1}));
  }

  [[nodiscard]] std::vector<std::size_t> marked_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t x = 0; x < marks_->size(); ++x) {
      if ((*marks_)[x] != 0) out.push_back(x);
    }
    return out;
  }

  [[nodiscard]] QueryCounter& counter() const { return *counter_; }
  [[nodiscard]] const CounterPtr& counter_ptr() const { return counter_; }

 private:
  static std::vector<std::uint8_t> normalize(std::vector<std::uint8_t> marks) {
    for (auto& m : marks) m = m != 0 ? 1 : 0;
    return marks;
  }

  void check_index(std::size_t x) const {
    if (x >= marks_->size()) {
      throw ValidationError("query index " + std::to_string(x) + " out of range [0," +
                            std::to_string(marks_->size()) + ")");
    }
  }

  std::shared_ptr<const std::vector<std::uint8_t>> marks_;
  CounterPtr counter_;
};

/// F : {0..N-1} -> [0,1] with N a power of two.
///
/// With ell > 0 every value is exactly an ell-bit binary fraction (or 1.0);
/// ell == 0 is arbitrary-precision mode, usable by mean1 only.
class RealOracle {
 public:
  static constexpr unsigned kArbitraryPrecision = 0;

  explicit RealOracle(std::vector<double> values, unsigned ell = kArbitraryPrecision,
                      CounterPtr counter = make_counter())
      : values_(std::make_shared<const std::vector<double>>(std::move(values))),
        ell_(ell),
        counter_(std::move(counter)) {
    validate();
  }

  /// Rounds every value to ell bits first.
  static RealOracle quantized(std::span<const double> values, unsigned ell) {
    std::vector<double> q;
    q.reserve(values.size());
    for (std::size_t x = 0; x < values.size(); ++x) {
      if (!(values[x] >= 0.0 && values[x] <= 1.0)) {
        throw ValidationError("values[" + std::to_string(x) + "] = " + std::to_string(values[x]) +
                              " outside [0,1]");
      }
      q.push_back(values[x] == 1.0 ? 1.0 : round_to_bits(values[x], ell));
    }
    return RealOracle(std::move(q), ell);
  }

  [[nodiscard]] std::size_t size() const { return values_->size(); }
  [[nodiscard]] unsigned ell() const { return ell_; }
  [[nodiscard]] bool fixed_point() const { return ell_ != kArbitraryPrecision; }

  double query(std::size_t x) const {
    if (x >= size()) {
      throw ValidationError("query index " + std::to_string(x) + " out of range [0," +
                            std::to_string(size()) + ")");
    }
    counter_->charge();
    return (*values_)[x];
  }

  [[nodiscard]] double peek(std::size_t x) const { return (*values_)[x]; }
  [[nodiscard]] std::span<const double> values() const { return *values_; }

  [[nodiscard]] QueryCounter& counter() const { return *counter_; }
  [[nodiscard]] const CounterPtr& counter_ptr() const { return counter_; }

  /// Same table, new counter. Each trial should run on its own copy.
  [[nodiscard]] RealOracle with_fresh_counter() const { return with_counter(make_counter()); }
  [[nodiscard]] RealOracle with_counter(CounterPtr counter) const {
    RealOracle copy = *this;
    copy.counter_ = std::move(counter);
    return copy;
  }

 private:
  static double round_to_bits(double v, unsigned ell) {
    const double scaled = std::nearbyint(std::ldexp(v, static_cast<int>(ell)));
    return std::min(1.0, std::ldexp(scaled, -static_cast<int>(ell)));
  }

  void validate() const {
    if (values_->empty() || !is_power_of_two(values_->size())) {
      throw ValidationError("values: length " + std::to_string(values_->size()) +
                            " is not a power of two");
    }
    if (ell_ > kMaxFixedPointBits) {
      throw ValidationError("ell: " + std::to_string(ell_) + " exceeds " +
                            std::to_string(kMaxFixedPointBits));
    }
    for (std::size_t x = 0; x < values_->size(); ++x) {
      const double v = (*values_)[x];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("values[" + std::to_string(x) + "] = " + std::to_string(v) +
                              " outside [0,1]");
      }
      if (fixed_point() && !representable_fixed_point(v, ell_)) {
        throw ValidationError("values[" + std::to_string(x) + "] = " + std::to_string(v) +
                              " is not an " + std::to_string(ell_) + "-bit binary fraction");
      }
    }
  }

  std::shared_ptr<const std::vector<double>> values_;
  unsigned ell_;
  CounterPtr counter_;
};

/// The i-th bit plane F_i of a fixed-point oracle, 1 <= i <= ell.
/// Evaluating a bit costs one evaluation of F, charged to the parent's counter.
inline BooleanOracle bit_oracle(const RealOracle& oracle, unsigned i) {
  if (!oracle.fixed_point()) {
    throw ConfigurationError("bit_oracle needs an oracle with ell bits of precision");
  }
  if (i < 1 || i > oracle.ell()) {
    throw ValidationError("bit index " + std::to_string(i) + " outside [1," +
                          std::to_string(oracle.ell()) + "]");
  }
  std::vector<std::uint8_t> marks(oracle.size());
  for (std::size_t x = 0; x < oracle.size(); ++x) {
    marks[x] = encode_fixed_point(oracle.peek(x), oracle.ell())[i - 1];
  }
  return BooleanOracle(std::move(marks), oracle.counter_ptr());
}

/// dist : {0..N-1}^2 -> [0,1], dense row-major. No symmetry or metric assumptions.
class DistanceOracle {
 public:
  DistanceOracle(std::size_t n, std::vector<double> table, CounterPtr counter = make_counter())
      : n_(n), table_(std::make_shared<const std::vector<double>>(std::move(table))),
        counter_(std::move(counter)) {
    if (n_ == 0 || !is_power_of_two(n_)) {
      throw ValidationError("n: " + std::to_string(n_) + " is not a power of two");
    }
    if (table_->size() != n_ * n_) {
      throw ValidationError("rows: expected " + std::to_string(n_ * n_) + " entries, got " +
                            std::to_string(table_->size()));
    }
    for (std::size_t k = 0; k < table_->size(); ++k) {
      const double v = (*table_)[k];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("rows[" + std::to_string(k / n_) + "][" + std::to_string(k % n_) +
                              "] = " + std::to_string(v) + " outside [0,1]");
      }
    }
  }

  [[nodiscard]] std::size_t size() const { return n_; }

  double query(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) {
      throw ValidationError("distance query (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of range");
    }
    counter_->charge();
    return (*table_)[i * n_ + j];
  }

  [[nodiscard]] double peek(std::size_t i, std::size_t j) const { return (*table_)[i * n_ + j]; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return std::span<const double>(*table_).subspan(i * n_, n_);
  }

  /// d_i = (1/N) sum_j dist(i,j). Test-oracle accessor; not charged.
  [[nodiscard]] double row_mean(std::size_t i) const {
    double sum = 0.0;
    for (double v : row(i)) sum += v;
    return sum / static_cast<double>(n_);
  }

  [[nodiscard]] double min_row_mean() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) best = std::min(best, row_mean(i));
    return best;
  }

  [[nodiscard]] QueryCounter& counter() const { return *counter_; }
  [[nodiscard]] const CounterPtr& counter_ptr() const { return counter_; }
  [[nodiscard]] DistanceOracle with_fresh_counter() const {
    DistanceOracle copy = *this;
    copy.counter_ = make_counter();
    return copy;
  }

 private:
  std::size_t n_;
  std::shared_ptr<const std::vector<double>> table_;
  CounterPtr counter_;
};

/// Arbitrary real-valued table with a counter, for minimum finding over
/// ranges that are not [0,1] or sizes that are not powers of two.
class TabulatedFunction {
 public:
  explicit TabulatedFunction(std::vector<double> values, CounterPtr counter = make_counter())
      : values_(std::move(values)), counter_(std::move(counter)) {
    if (values_.empty()) throw ValidationError("tabulated function needs at least one point");
  }

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double peek(std::size_t x) const { return values_[x]; }
  [[nodiscard]] QueryCounter& counter() const { return *counter_; }
  [[nodiscard]] const CounterPtr& counter_ptr() const { return counter_; }

 private:
  std::vector<double> values_;
  CounterPtr counter_;
};

/// A randomized approximator of some function value at an index. Each call of
/// `sample` charges `cost_per_sample` queries to whatever counter it wraps.
struct StochasticEstimator {
  std::function<double(std::size_t index, RngStream& rng)> sample;
  std::uint64_t cost_per_sample = 0;
  std::optional<double> delta;
};

}  // namespace qmean
