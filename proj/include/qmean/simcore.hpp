#pragma once

#include <qmean/errors.hpp>
#include <qmean/oracle.hpp>
#include <qmean/rng.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qmean {

using Amplitude = std::complex<double>;

/// Pure state over a power-of-two number of basis states.
class Statevector {
 public:
  /// |0>.
  explicit Statevector(std::size_t dimension) : amplitudes_(dimension) {
    if (dimension == 0 || !is_power_of_two(dimension)) {
      throw ConfigurationError("statevector dimension " + std::to_string(dimension) +
                               " is not a power of two");
    }
    amplitudes_[0] = 1.0;
  }

  explicit Statevector(std::vector<Amplitude> amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.empty() || !is_power_of_two(amplitudes_.size())) {
      throw ConfigurationError("statevector dimension " + std::to_string(amplitudes_.size()) +
                               " is not a power of two");
    }
  }

  [[nodiscard]] std::size_t dimension() const { return amplitudes_.size(); }
  [[nodiscard]] std::span<Amplitude> amplitudes() { return amplitudes_; }
  [[nodiscard]] std::span<const Amplitude> amplitudes() const { return amplitudes_; }
  const Amplitude& operator[](std::size_t i) const { return amplitudes_[i]; }

  [[nodiscard]] double norm_squared() const {
    double s = 0.0;
    for (const auto& c : amplitudes_) s += std::norm(c);
    return s;
  }

  /// <this|other>
  [[nodiscard]] Amplitude inner(const Statevector& other) const {
    Amplitude s = 0.0;
    for (std::size_t i = 0; i < amplitudes_.size(); ++i) s += std::conj(amplitudes_[i]) * other[i];
    return s;
  }

 private:
  std::vector<Amplitude> amplitudes_;
};

// ---------------------------------------------------------------------------
// Closed-form (two-dimensional invariant subspace) backend

/// Smallest power of two M with M - 1 >= t. The effective iteration count is M - 1.
inline std::uint64_t phase_register_size(std::uint64_t t) {
  if (t < 1) throw ConfigurationError("iteration count t must be positive");
  std::uint64_t m = 2;
  while (m - 1 < t) m <<= 1;
  return m;
}

/// Amplitude-estimation instance reduced to its invariant plane: a = sin^2(theta_a).
struct SubspaceAEProblem {
  double a = 0.0;
  double theta_a = 0.0;
  std::uint64_t M = 2;

  static SubspaceAEProblem make(double a, std::uint64_t M) {
    if (!(a >= -1e-12 && a <= 1.0 + 1e-12)) {
      throw ValidationError("amplitude a = " + std::to_string(a) + " outside [0,1]");
    }
    if (M < 2 || !is_power_of_two(M)) {
      throw ConfigurationError("phase register size M = " + std::to_string(M) +
                               " is not a power of two >= 2");
    }
    a = std::clamp(a, 0.0, 1.0);
    return SubspaceAEProblem{a, std::asin(std::sqrt(a)), M};
  }
};

struct AEOutcome {
  double estimate = 0.0;  ///< sin^2(pi y / M)
  std::uint64_t y = 0;
  std::uint64_t effective_t = 0;  ///< M - 1 Grover applications
  std::uint64_t M = 0;
  std::uint64_t f_queries = 0;
};

namespace detail {

// Fejer-kernel weight of outcome y when the eigenphase is mw/M turns.
inline double fejer_weight(std::uint64_t y, double mw, std::uint64_t M) {
  const double m = static_cast<double>(M);
  double d = static_cast<double>(y) - mw;
  d -= m * std::floor(d / m + 0.5);  // wrap to [-M/2, M/2)
  if (d == 0.0) return 1.0;
  // sin^2(pi d) reduced by the nearest integer keeps on-grid numerators at exactly 0.
  const double num = std::sin(std::numbers::pi * (d - std::nearbyint(d)));
  const double den = std::sin(std::numbers::pi * d / m);
  return (num * num) / (m * m * den * den);
}

}  // namespace detail

/// Exact law of the phase-estimation outcome y in {0..M-1}:
/// p(y) = (W(y; w) + W(y; 1 - w)) / 2 with w = theta_a / pi.
inline std::vector<double> pe_outcome_distribution(const SubspaceAEProblem& problem) {
  const std::uint64_t M = problem.M;
  const double mw = static_cast<double>(M) * problem.theta_a / std::numbers::pi;
  const double mw_conj = static_cast<double>(M) - mw;
  std::vector<double> p(M);
  for (std::uint64_t y = 0; y < M; ++y) {
    p[y] = 0.5 * (detail::fejer_weight(y, mw, M) + detail::fejer_weight(y, mw_conj, M));
  }
  return p;
}

/// Inverse-CDF sampler over a fixed outcome distribution.
class OutcomeSampler {
 public:
  explicit OutcomeSampler(std::span<const double> probabilities)
      : cdf_(probabilities.size()) {
    if (probabilities.empty()) throw ConfigurationError("empty outcome distribution");
    std::partial_sum(probabilities.begin(), probabilities.end(), cdf_.begin());
  }

  std::uint64_t draw(RngStream& rng) const {
    const double u = rng.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto y = static_cast<std::uint64_t>(it - cdf_.begin());
    return std::min<std::uint64_t>(y, cdf_.size() - 1);
  }

  [[nodiscard]] std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

inline double outcome_to_estimate(std::uint64_t y, std::uint64_t M) {
  const double s = std::sin(std::numbers::pi * static_cast<double>(y) / static_cast<double>(M));
  return s * s;
}

/// One amplitude-estimation run in the closed-form backend. Charges nothing;
/// f_queries is left at 0 for the caller's cost model.
inline AEOutcome phase_estimation_sample(const SubspaceAEProblem& problem, RngStream& rng) {
  const auto dist = pe_outcome_distribution(problem);
  const std::uint64_t y = OutcomeSampler(dist).draw(rng);
  return AEOutcome{outcome_to_estimate(y, problem.M), y, problem.M - 1, problem.M, 0};
}

// ---------------------------------------------------------------------------
// Operators for the statevector backend

/// A problem for amplitude estimation: a state-preparation operator A, a
/// good-subspace predicate, and the oracle queries each costs.
template <class P>
concept AmplitudeProblem = requires(const P& p, std::span<Amplitude> v, std::size_t i) {
  { p.dimension() } -> std::convertible_to<std::size_t>;
  { p.amplitude() } -> std::convertible_to<double>;
  { p.is_good(i) } -> std::convertible_to<bool>;
  p.apply_a(v);
  p.apply_a_inverse(v);
  p.reflect_good(v);
  { p.queries_per_a() } -> std::convertible_to<std::uint64_t>;
  { p.queries_per_reflection() } -> std::convertible_to<std::uint64_t>;
  { p.counter_ptr() } -> std::convertible_to<CounterPtr>;
  { p.with_counter(CounterPtr{}) } -> std::same_as<P>;
};

namespace detail {

// Normalized Walsh-Hadamard over `n` points laid out at `offset + stride * x`.
inline void hadamard_transform(std::span<Amplitude> v, std::size_t n, std::size_t stride,
                               std::size_t offset) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t base = 0; base < n; base += 2 * h) {
      for (std::size_t x = base; x < base + h; ++x) {
        Amplitude& lo = v[offset + stride * x];
        Amplitude& hi = v[offset + stride * (x + h)];
        const Amplitude a = lo;
        const Amplitude b = hi;
        lo = a + b;
        hi = a - b;
      }
    }
  }
  for (std::size_t x = 0; x < n; ++x) v[offset + stride * x] *= scale;
}

}  // namespace detail

/// A = A' (H^{lg N} (x) Id) with A'|x>|0> = |x>(sqrt(1-F(x))|0> + sqrt(F(x))|1>).
/// Basis index of (x, flag) is 2x + flag; good states have flag = 1.
/// One application of A or its inverse costs two evaluations of F; the
/// flag-copy operator touches no F output.
class MeanOperator {
 public:
  explicit MeanOperator(const RealOracle& oracle)
      : oracle_(oracle), cos_(oracle.size()), sin_(oracle.size()) {
    for (std::size_t x = 0; x < oracle.size(); ++x) {
      const double f = oracle.peek(x);
      cos_[x] = std::sqrt(1.0 - f);
      sin_[x] = std::sqrt(f);
    }
  }

  [[nodiscard]] std::size_t points() const { return oracle_.size(); }
  [[nodiscard]] std::size_t dimension() const { return 2 * oracle_.size(); }

  /// a = mean of F, read off the table for the closed-form backend.
  [[nodiscard]] double amplitude() const {
    double s = 0.0;
    for (double v : oracle_.values()) s += v;
    return s / static_cast<double>(oracle_.size());
  }

  [[nodiscard]] bool is_good(std::size_t basis) const { return (basis & 1U) != 0; }

  void apply_a(std::span<Amplitude> v) const {
    check(v);
    for (std::size_t flag = 0; flag < 2; ++flag) detail::hadamard_transform(v, points(), 2, flag);
    rotate(v, +1.0);
    oracle_.counter().charge(queries_per_a());
  }

  void apply_a_inverse(std::span<Amplitude> v) const {
    check(v);
    rotate(v, -1.0);
    for (std::size_t flag = 0; flag < 2; ++flag) detail::hadamard_transform(v, points(), 2, flag);
    oracle_.counter().charge(queries_per_a());
  }

  void reflect_good(std::span<Amplitude> v) const {
    check(v);
    for (std::size_t x = 0; x < points(); ++x) v[2 * x + 1] = -v[2 * x + 1];
  }

  [[nodiscard]] std::uint64_t queries_per_a() const { return 2; }
  [[nodiscard]] std::uint64_t queries_per_reflection() const { return 0; }
  [[nodiscard]] const CounterPtr& counter_ptr() const { return oracle_.counter_ptr(); }

  [[nodiscard]] MeanOperator with_counter(CounterPtr counter) const {
    MeanOperator copy = *this;
    copy.oracle_ = oracle_.with_counter(std::move(counter));
    return copy;
  }

 private:
  void check(std::span<Amplitude> v) const {
    if (v.size() != dimension()) {
      throw ConfigurationError("state dimension " + std::to_string(v.size()) +
                               " does not match operator dimension " +
                               std::to_string(dimension()));
    }
  }

  void rotate(std::span<Amplitude> v, double sign) const {
    for (std::size_t x = 0; x < points(); ++x) {
      const Amplitude v0 = v[2 * x];
      const Amplitude v1 = v[2 * x + 1];
      const double c = cos_[x];
      const double s = sign * sin_[x];
      v[2 * x] = c * v0 - s * v1;
      v[2 * x + 1] = s * v0 + c * v1;
    }
  }

  RealOracle oracle_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// Counting: A = H^{lg N}, good states are the marked x. A is oracle-free;
/// every reflection about the marked set costs one evaluation of F.
class CountingOperator {
 public:
  explicit CountingOperator(const BooleanOracle& oracle) : oracle_(oracle) {
    if (!is_power_of_two(oracle.size())) {
      throw ConfigurationError("counting needs N a power of two, got " +
                               std::to_string(oracle.size()));
    }
  }

  [[nodiscard]] std::size_t dimension() const { return oracle_.size(); }

  [[nodiscard]] double amplitude() const {
    return static_cast<double>(oracle_.marked_count()) / static_cast<double>(oracle_.size());
  }

  [[nodiscard]] bool is_good(std::size_t basis) const { return oracle_.peek(basis); }

  void apply_a(std::span<Amplitude> v) const {
    check(v);
    detail::hadamard_transform(v, v.size(), 1, 0);
  }
  void apply_a_inverse(std::span<Amplitude> v) const { apply_a(v); }

  void reflect_good(std::span<Amplitude> v) const {
    check(v);
    for (std::size_t x = 0; x < v.size(); ++x) {
      if (oracle_.peek(x)) v[x] = -v[x];
    }
    oracle_.counter().charge(queries_per_reflection());
  }

  [[nodiscard]] std::uint64_t queries_per_a() const { return 0; }
  [[nodiscard]] std::uint64_t queries_per_reflection() const { return 1; }
  [[nodiscard]] const CounterPtr& counter_ptr() const { return oracle_.counter_ptr(); }

  [[nodiscard]] CountingOperator with_counter(CounterPtr counter) const {
    return CountingOperator(BooleanOracle::from_predicate(
        oracle_.size(), [this](std::size_t x) { return oracle_.peek(x); }, std::move(counter)));
  }

 private:
  void check(std::span<Amplitude> v) const {
    if (v.size() != dimension()) {
      throw ConfigurationError("state dimension " + std::to_string(v.size()) +
                               " does not match operator dimension " +
                               std::to_string(dimension()));
    }
  }

  BooleanOracle oracle_;
};

/// A|0> for the mean operator of `oracle`. Charges one application of A.
inline Statevector build_mean_operator(const RealOracle& oracle) {
  const MeanOperator op(oracle);
  Statevector state(op.dimension());
  op.apply_a(state.amplitudes());
  return state;
}

/// Q = -A S_0 A^-1 S_chi, with S_0 and S_chi the sign flips of |0> and of the
/// good subspace.
template <AmplitudeProblem P>
void grover_iterate(std::span<Amplitude> v, const P& problem) {
  problem.reflect_good(v);
  problem.apply_a_inverse(v);
  v[0] = -v[0];
  problem.apply_a(v);
  for (auto& c : v) c = -c;
}

template <AmplitudeProblem P>
void grover_iterate(Statevector& state, const P& problem) {
  grover_iterate(state.amplitudes(), problem);
}

// ---------------------------------------------------------------------------
// Full statevector backend

inline constexpr std::size_t kStatevectorBudget = std::size_t{1} << 24;

/// Inverse quantum Fourier transform on a register of v.size() = 2^m
/// amplitudes (little-endian qubits), as a circuit of Hadamards and
/// controlled phases: out(k) = M^-1/2 sum_y exp(-2 pi i y k / M) v(y).
inline void inverse_qft(std::span<Amplitude> v) {
  const std::size_t M = v.size();
  const int m = std::countr_zero(M);
  for (std::size_t y = 0; y < M; ++y) {
    std::size_t r = 0;
    for (int b = 0; b < m; ++b) r |= ((y >> b) & 1U) << (m - 1 - b);
    if (r > y) std::swap(v[y], v[r]);
  }
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (int j = 0; j < m; ++j) {
    const std::size_t target = std::size_t{1} << j;
    for (int l = 0; l < j; ++l) {
      const std::size_t control = std::size_t{1} << l;
      const Amplitude phase = std::polar(1.0, -std::numbers::pi / static_cast<double>(1ULL << (j - l)));
      for (std::size_t y = 0; y < M; ++y) {
        if ((y & target) && (y & control)) v[y] *= phase;
      }
    }
    for (std::size_t y = 0; y < M; ++y) {
      if (y & target) continue;
      const Amplitude a = v[y];
      const Amplitude b = v[y | target];
      v[y] = (a + b) * inv_sqrt2;
      v[y | target] = (a - b) * inv_sqrt2;
    }
  }
}

/// Outcome law of phase estimation on Q, computed by simulating the whole
/// circuit: uniform phase register, controlled powers of Q, inverse QFT.
/// Charges the problem's counter for every application of A, A^-1 and S_chi.
template <AmplitudeProblem P>
std::vector<double> statevector_outcome_distribution(const P& problem, std::uint64_t M) {
  if (M < 2 || !is_power_of_two(M)) {
    throw ConfigurationError("phase register size M = " + std::to_string(M) +
                             " is not a power of two >= 2");
  }
  const std::size_t dim = problem.dimension();
  if (dim > kStatevectorBudget / M) {
    throw ConfigurationError("statevector backend needs dimension * M <= 2^24, got " +
                             std::to_string(dim) + " * " + std::to_string(M));
  }

  // Row y holds Q^y A|0>: the system conditioned on phase-register value y.
  std::vector<Amplitude> joint(dim * M);
  auto row = [&](std::uint64_t y) { return std::span<Amplitude>(joint).subspan(y * dim, dim); };
  row(0)[0] = 1.0;
  problem.apply_a(row(0));
  for (std::uint64_t y = 1; y < M; ++y) {
    std::copy_n(row(y - 1).begin(), dim, row(y).begin());
    grover_iterate(row(y), problem);
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(M));
  std::vector<double> p(M, 0.0);
  std::vector<Amplitude> column(M);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::uint64_t y = 0; y < M; ++y) column[y] = joint[y * dim + c] * scale;
    inverse_qft(column);
    for (std::uint64_t k = 0; k < M; ++k) p[k] += std::norm(column[k]);
  }
  return p;
}

/// One amplitude-estimation run on the full statevector.
template <AmplitudeProblem P>
AEOutcome statevector_ae(const P& problem, std::uint64_t t, RngStream& rng) {
  const std::uint64_t M = phase_register_size(t);
  const std::uint64_t before = problem.counter_ptr()->tally();
  const auto dist = statevector_outcome_distribution(problem, M);
  const std::uint64_t y = OutcomeSampler(dist).draw(rng);
  return AEOutcome{outcome_to_estimate(y, M), y, M - 1, M, problem.counter_ptr()->tally() - before};
}

}  // namespace qmean
