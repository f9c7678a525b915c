#pragma once

#include <qmean/errors.hpp>
#include <qmean/estimators.hpp>
#include <qmean/instance_io.hpp>
#include <qmean/oracle.hpp>
#include <qmean/primitives.hpp>
#include <qmean/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace qmean {

// ---------------------------------------------------------------------------
// Classical baselines. None of these charge a counter unless stated.

inline double exact_mean(const RealOracle& oracle) {
  double sum = 0.0;
  for (double v : oracle.values()) sum += v;
  return sum / static_cast<double>(oracle.size());
}

/// Mean of the values as the bit planes see them (1.0 reads as 1 - 2^-ell).
inline double encoded_mean(const RealOracle& oracle) {
  if (!oracle.fixed_point()) return exact_mean(oracle);
  double sum = 0.0;
  for (double v : oracle.values()) sum += quantize_fixed_point(v, oracle.ell());
  return sum / static_cast<double>(oracle.size());
}

/// Naive O(N^2) medoid scan; ties go to the lowest index.
inline std::pair<std::size_t, double> exact_median(const DistanceOracle& dist) {
  std::size_t best = 0;
  double best_mean = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double d = dist.row_mean(i);
    if (d < best_mean) {
      best = i;
      best_mean = d;
    }
  }
  return {best, best_mean};
}

enum class Sampling { with_replacement, without_replacement };

/// Mean of q uniformly drawn queries. Charges q queries.
inline double classical_sample_mean(const RealOracle& oracle, std::uint64_t q, RngStream& rng,
                                    Sampling sampling = Sampling::with_replacement) {
  if (q < 1) throw ValidationError("sample count q must be positive");
  const std::size_t n = oracle.size();
  double sum = 0.0;
  if (sampling == Sampling::with_replacement) {
    for (std::uint64_t i = 0; i < q; ++i) sum += oracle.query(rng.below(n));
  } else {
    if (q > n) throw ValidationError("cannot draw more than N samples without replacement");
    std::vector<std::size_t> idx(n);
    for (std::size_t x = 0; x < n; ++x) idx[x] = x;
    for (std::uint64_t i = 0; i < q; ++i) {
      std::swap(idx[i], idx[i + rng.below(n - i)]);
      sum += oracle.query(idx[i]);
    }
  }
  return sum / static_cast<double>(q);
}

// ---------------------------------------------------------------------------
// Instance generators

enum class Generator { constant, uniform_random, boolean_density, close_pair, permutation, random_distance };

inline Generator parse_generator(const std::string& name) {
  if (name == "constant") return Generator::constant;
  if (name == "uniform-random") return Generator::uniform_random;
  if (name == "boolean-density") return Generator::boolean_density;
  if (name == "close-pair") return Generator::close_pair;
  if (name == "permutation") return Generator::permutation;
  if (name == "random-distance") return Generator::random_distance;
  throw ValidationError("kind: unknown generator '" + name + "'");
}

struct InstanceSpec {
  Generator generator = Generator::constant;
  std::size_t n = 0;
  unsigned ell = 0;                    ///< 0: arbitrary precision
  double value = 0.0;                  ///< constant
  std::size_t density = 0;             ///< boolean-density: number of ones
  double delta = 0.5;                  ///< close-pair distance
  std::optional<std::size_t> p, q;     ///< close-pair points, default 0 and N-1
};

namespace detail {

inline std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t x = 0; x < n; ++x) idx[x] = x;
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

}  // namespace detail

inline Instance generate(const InstanceSpec& spec, RngStream& rng) {
  const std::size_t n = spec.n;
  if (n == 0 || !is_power_of_two(n)) {
    throw ValidationError("n: " + std::to_string(n) + " is not a power of two");
  }
  switch (spec.generator) {
    case Generator::constant: {
      if (!(spec.value >= 0.0 && spec.value <= 1.0)) throw ValidationError("value: outside [0,1]");
      return RealOracle(std::vector<double>(n, spec.value), spec.ell);
    }
    case Generator::uniform_random: {
      std::vector<double> values(n);
      for (auto& v : values) {
        v = spec.ell == 0 ? rng.uniform()
                          : std::ldexp(static_cast<double>(rng.below(std::uint64_t{1} << spec.ell)),
                                       -static_cast<int>(spec.ell));
      }
      return RealOracle(std::move(values), spec.ell);
    }
    case Generator::boolean_density: {
      if (spec.density > n) throw ValidationError("density: more ones than points");
      std::vector<double> values(n, 0.0);
      const auto idx = detail::shuffled_indices(n, rng);
      for (std::size_t i = 0; i < spec.density; ++i) values[idx[i]] = 1.0;
      return RealOracle(std::move(values), 1);
    }
    case Generator::permutation: {
      const unsigned ell = std::max(1, std::countr_zero(n));
      const auto idx = detail::shuffled_indices(n, rng);
      std::vector<double> values(n);
      for (std::size_t x = 0; x < n; ++x) {
        values[x] = static_cast<double>(idx[x]) / static_cast<double>(n);
      }
      return RealOracle(std::move(values), ell);
    }
    case Generator::close_pair: {
      if (n < 2) throw ValidationError("n: close-pair needs at least two points");
      if (!(spec.delta >= 0.0 && spec.delta < 1.0)) throw ValidationError("delta: must lie in [0,1)");
      const std::size_t p = spec.p.value_or(0);
      const std::size_t q = spec.q.value_or(n - 1);
      if (p >= n || q >= n || p == q) throw ValidationError("p, q: need two distinct points below n");
      std::vector<double> table(n * n, 1.0);
      for (std::size_t i = 0; i < n; ++i) table[i * n + i] = 0.0;
      table[p * n + q] = spec.delta;
      table[q * n + p] = spec.delta;
      return DistanceOracle(n, std::move(table));
    }
    case Generator::random_distance: {
      std::vector<double> table(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const double d = rng.uniform();
          table[i * n + j] = d;
          table[j * n + i] = d;
        }
      }
      return DistanceOracle(n, std::move(table));
    }
  }
  throw ValidationError("kind: unknown generator");
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentRecord {
  std::uint64_t trial = 0;
  std::string algorithm;
  std::uint64_t t = 0;  ///< effective t
  std::uint64_t M = 0;
  unsigned ell = 0;
  std::uint64_t n = 0;  ///< majority parameter
  double estimate = 0.0;
  double truth = 0.0;
  double abs_error = 0.0;
  double bound = 0.0;
  bool within_bound = false;
  std::uint64_t queries = 0;
  std::uint64_t seed = 0;
};

enum class Algorithm { mean1, mean2, count, search, minimum, median };

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "mean1") return Algorithm::mean1;
  if (name == "mean2") return Algorithm::mean2;
  if (name == "count") return Algorithm::count;
  if (name == "search") return Algorithm::search;
  if (name == "minimum") return Algorithm::minimum;
  if (name == "median") return Algorithm::median;
  throw ValidationError("algorithm: unknown algorithm '" + name + "'");
}

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::mean1: return "mean1";
    case Algorithm::mean2: return "mean2";
    case Algorithm::count: return "count";
    case Algorithm::search: return "search";
    case Algorithm::minimum: return "minimum";
    case Algorithm::median: return "median";
  }
  return "?";
}

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::mean1;
  Instance instance = RealOracle(std::vector<double>{0.0});
  std::vector<std::uint64_t> t_values{63};
  std::vector<unsigned> ell_values;  ///< empty: the instance's own ell
  MeanVariant variant = MeanVariant::mean1;
  MajorityMode mode = MajorityMode::median;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  Backend backend = Backend::subspace;
  MinimumOptions minimum;
};

namespace detail {

inline const RealOracle& require_real(const ExperimentConfig& config) {
  const auto* real = std::get_if<RealOracle>(&config.instance);
  if (!real) {
    throw ValidationError("oracle: " + algorithm_name(config.algorithm) + " needs a real instance");
  }
  return *real;
}

inline BooleanOracle require_boolean(const RealOracle& real) {
  std::vector<std::uint8_t> marks(real.size());
  for (std::size_t x = 0; x < real.size(); ++x) {
    const double v = real.peek(x);
    if (v != 0.0 && v != 1.0) {
      throw ValidationError("values[" + std::to_string(x) + "]: Boolean instance needs 0 or 1");
    }
    marks[x] = v == 1.0 ? 1 : 0;
  }
  return BooleanOracle(std::move(marks));
}

inline void finish(ExperimentRecord& r) {
  r.abs_error = std::abs(r.estimate - r.truth);
  r.within_bound = r.abs_error <= r.bound;
}

inline ExperimentRecord run_trial(const ExperimentConfig& config, std::uint64_t t,
                                  std::optional<unsigned> ell, std::uint64_t trial) {
  RngStream rng(config.seed, trial);
  ExperimentRecord r;
  r.trial = trial;
  r.algorithm = algorithm_name(config.algorithm);
  r.seed = config.seed;

  switch (config.algorithm) {
    case Algorithm::mean1: {
      const RealOracle oracle = require_real(config).with_fresh_counter();
      const MeanEstimate est = mean1(oracle, t, rng, config.backend);
      r.t = est.effective_t;
      r.M = est.M;
      r.ell = oracle.ell();
      r.estimate = est.estimate;
      r.truth = exact_mean(oracle);
      r.bound = mean1_error_bound(r.truth, r.t);
      r.queries = oracle.counter().tally();
      break;
    }
    case Algorithm::mean2: {
      const RealOracle& base = require_real(config);
      const unsigned bits = ell.value_or(base.ell());
      if (bits == 0) throw ConfigurationError("ell: mean2 needs a bit precision (--ell)");
      const RealOracle oracle =
          bits == base.ell() ? base.with_fresh_counter() : RealOracle::quantized(base.values(), bits);
      const MeanEstimate est = mean2(oracle, rng, Mean2Options{config.mode, config.backend});
      r.t = est.effective_t;
      r.M = est.M;
      r.ell = bits;
      r.n = est.n;
      r.estimate = est.estimate;
      r.truth = encoded_mean(oracle);
      r.bound = mean2_error_bound(oracle);
      r.queries = oracle.counter().tally();
      break;
    }
    case Algorithm::count: {
      const BooleanOracle pred = require_boolean(require_real(config));
      const CountResult c = count(pred, t, rng, config.backend);
      const auto s = static_cast<double>(pred.marked_count());
      r.t = c.ae.effective_t;
      r.M = c.ae.M;
      r.estimate = static_cast<double>(c.estimate);
      r.truth = s;
      r.bound = counting_error_bound(s, static_cast<double>(pred.size()), static_cast<double>(r.t));
      r.queries = pred.counter().tally();
      break;
    }
    case Algorithm::search: {
      if (config.backend != Backend::subspace) {
        throw ConfigurationError("backend: search runs on the subspace backend only");
      }
      const BooleanOracle pred = require_boolean(require_real(config));
      const SearchResult res = grover_search(pred, rng, config.minimum.search);
      r.estimate = res.found ? 1.0 : 0.0;
      r.truth = pred.marked_count() > 0 ? 1.0 : 0.0;
      r.bound = 0.0;
      r.queries = pred.counter().tally();
      break;
    }
    case Algorithm::minimum: {
      if (config.backend != Backend::subspace) {
        throw ConfigurationError("backend: minimum runs on the subspace backend only");
      }
      const RealOracle oracle = require_real(config).with_fresh_counter();
      const MinResult res = find_minimum(oracle, rng, config.minimum);
      r.ell = oracle.ell();
      r.estimate = res.value;
      r.truth = *std::min_element(oracle.values().begin(), oracle.values().end());
      r.bound = 0.0;
      r.queries = oracle.counter().tally();
      break;
    }
    case Algorithm::median: {
      const auto* dist_ptr = std::get_if<DistanceOracle>(&config.instance);
      if (!dist_ptr) throw ValidationError("oracle: median needs a distance instance");
      const DistanceOracle dist = dist_ptr->with_fresh_counter();
      MedianOptions options;
      options.variant = config.variant;
      options.t = t;
      options.ell = ell.value_or(8);
      options.mode = config.mode;
      options.backend = config.backend;
      options.minimum = config.minimum;
      const MedianResult res = median(dist, rng, options);
      const auto [best, d_min] = exact_median(dist);
      r.n = static_cast<std::uint64_t>(dist.size()) * dist.size();
      if (config.variant == MeanVariant::mean1) {
        r.M = phase_register_size(t);
        r.t = r.M - 1;
        r.bound = mean1_error_bound(d_min, r.t);
      } else {
        r.M = phase_register_size(mean2_count_iterations(dist.size()));
        r.t = r.M - 1;
        r.ell = options.ell;
        r.bound = mean2_error_bound(RealOracle::quantized(dist.row(best), options.ell));
      }
      r.estimate = dist.row_mean(res.index);
      r.truth = d_min;
      r.queries = dist.counter().tally();
      break;
    }
  }
  finish(r);
  return r;
}

}  // namespace detail

/// One record per (t, ell, trial), ordered by parameter point then trial id.
/// Trial k always runs on RngStream(seed, k).
inline std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config) {
  if (config.t_values.empty()) throw ValidationError("t: at least one value required");
  for (auto t : config.t_values) {
    if (t < 1) throw ValidationError("t: must be positive");
  }
  std::vector<std::optional<unsigned>> ells;
  if (config.ell_values.empty()) {
    ells.emplace_back();
  } else {
    for (auto e : config.ell_values) {
      if (e < 1 || e > kMaxFixedPointBits) throw ValidationError("ell: outside [1,52]");
      ells.emplace_back(e);
    }
  }

  std::vector<ExperimentRecord> records;
  records.reserve(config.trials * config.t_values.size() * ells.size());
  for (auto t : config.t_values) {
    for (const auto& ell : ells) {
      for (std::uint64_t trial = 0; trial < config.trials; ++trial) {
        records.push_back(detail::run_trial(config, t, ell, trial));
      }
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Output

inline constexpr const char* kCsvHeader =
    "trial,algorithm,t,M,ell,n,estimate,truth,abs_error,bound,within_bound,queries,seed";

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.trial << ',' << r.algorithm << ',' << r.t << ',' << r.M << ',' << r.ell << ',' << r.n
        << ',' << format_double(r.estimate) << ',' << format_double(r.truth) << ','
        << format_double(r.abs_error) << ',' << format_double(r.bound) << ','
        << (r.within_bound ? 1 : 0) << ',' << r.queries << ',' << r.seed << '\n';
  }
}

inline nlohmann::json records_to_json(const std::vector<ExperimentRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"trial", r.trial},       {"algorithm", r.algorithm}, {"t", r.t},
                   {"M", r.M},               {"ell", r.ell},             {"n", r.n},
                   {"estimate", r.estimate}, {"truth", r.truth},         {"abs_error", r.abs_error},
                   {"bound", r.bound},       {"within_bound", r.within_bound},
                   {"queries", r.queries},   {"seed", r.seed}});
  }
  return arr;
}

inline void write_json(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << records_to_json(records).dump(1) << '\n';
}

namespace detail {

template <class T>
T parse_field(const std::string& text, const std::string& field, std::size_t line) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ValidationError("line " + std::to_string(line) + ": bad " + field + " '" + text + "'");
  }
  return value;
}

}  // namespace detail

/// Reads records written by write_csv or write_json.
inline std::vector<ExperimentRecord> read_records(std::istream& in) {
  std::vector<ExperimentRecord> records;
  const int first = in.peek();
  if (first == '[') {
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("malformed JSON records: ") + e.what());
    }
    for (const auto& o : arr) {
      ExperimentRecord r;
      r.trial = o.at("trial").get<std::uint64_t>();
      r.algorithm = o.at("algorithm").get<std::string>();
      r.t = o.at("t").get<std::uint64_t>();
      r.M = o.at("M").get<std::uint64_t>();
      r.ell = o.at("ell").get<unsigned>();
      r.n = o.at("n").get<std::uint64_t>();
      r.estimate = o.at("estimate").get<double>();
      r.truth = o.at("truth").get<double>();
      r.abs_error = o.at("abs_error").get<double>();
      r.bound = o.at("bound").get<double>();
      r.within_bound = o.at("within_bound").get<bool>();
      r.queries = o.at("queries").get<std::uint64_t>();
      r.seed = o.at("seed").get<std::uint64_t>();
      records.push_back(std::move(r));
    }
    return records;
  }

  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ValidationError("records: missing or unexpected CSV header");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 13) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected 13 fields");
    }
    ExperimentRecord r;
    r.trial = detail::parse_field<std::uint64_t>(f[0], "trial", lineno);
    r.algorithm = f[1];
    r.t = detail::parse_field<std::uint64_t>(f[2], "t", lineno);
    r.M = detail::parse_field<std::uint64_t>(f[3], "M", lineno);
    r.ell = detail::parse_field<unsigned>(f[4], "ell", lineno);
    r.n = detail::parse_field<std::uint64_t>(f[5], "n", lineno);
    r.estimate = detail::parse_field<double>(f[6], "estimate", lineno);
    r.truth = detail::parse_field<double>(f[7], "truth", lineno);
    r.abs_error = detail::parse_field<double>(f[8], "abs_error", lineno);
    r.bound = detail::parse_field<double>(f[9], "bound", lineno);
    r.within_bound = detail::parse_field<int>(f[10], "within_bound", lineno) != 0;
    r.queries = detail::parse_field<std::uint64_t>(f[11], "queries", lineno);
    r.seed = detail::parse_field<std::uint64_t>(f[12], "seed", lineno);
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Summaries

enum class SummaryCheck { bound_freq, slope, success_rate };

inline SummaryCheck parse_check(const std::string& name) {
  if (name == "bound-freq") return SummaryCheck::bound_freq;
  if (name == "slope") return SummaryCheck::slope;
  if (name == "success-rate") return SummaryCheck::success_rate;
  throw ValidationError("check: unknown summary '" + name + "'");
}

struct GroupSummary {
  std::string algorithm;
  std::uint64_t t = 0, M = 0, n = 0;
  unsigned ell = 0;
  std::size_t trials = 0;
  double value = 0.0;  ///< bound-satisfaction or exact-success frequency
  double median_abs_error = 0.0;
};

using GroupKey = std::tuple<std::string, std::uint64_t, std::uint64_t, unsigned, std::uint64_t>;

inline std::vector<GroupSummary> summarize_groups(const std::vector<ExperimentRecord>& records,
                                                  SummaryCheck check) {
  std::map<GroupKey, std::vector<const ExperimentRecord*>> groups;
  for (const auto& r : records) groups[{r.algorithm, r.t, r.M, r.ell, r.n}].push_back(&r);

  std::vector<GroupSummary> out;
  for (const auto& [key, rs] : groups) {
    GroupSummary g;
    std::tie(g.algorithm, g.t, g.M, g.ell, g.n) = key;
    g.trials = rs.size();
    std::size_t hits = 0;
    std::vector<double> errors;
    for (const auto* r : rs) {
      hits += check == SummaryCheck::success_rate ? (r->abs_error == 0.0) : r->within_bound;
      errors.push_back(r->abs_error);
    }
    g.value = static_cast<double>(hits) / static_cast<double>(rs.size());
    const auto mid = errors.begin() + static_cast<std::ptrdiff_t>(errors.size() / 2);
    std::nth_element(errors.begin(), mid, errors.end());
    g.median_abs_error = *mid;
    out.push_back(g);
  }
  return out;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Human-readable report for the `summarize` subcommand.
inline std::string summarize(const std::vector<ExperimentRecord>& records, SummaryCheck check) {
  const auto groups = summarize_groups(records, check);
  std::ostringstream out;
  if (check == SummaryCheck::slope) {
    std::vector<double> ts, errs;
    for (const auto& g : groups) {
      if (g.median_abs_error > 0.0) {
        ts.push_back(static_cast<double>(g.t));
        errs.push_back(g.median_abs_error);
      }
      out << "t=" << g.t << " median_abs_error=" << format_double(g.median_abs_error) << '\n';
    }
    if (ts.size() >= 2) {
      out << "slope=" << format_double(loglog_slope(ts, errs)) << " points=" << ts.size() << '\n';
    } else {
      out << "slope=nan points=" << ts.size() << '\n';
    }
    return out.str();
  }
  const char* label = check == SummaryCheck::bound_freq ? "bound_freq" : "success_rate";
  for (const auto& g : groups) {
    out << "algorithm=" << g.algorithm << " t=" << g.t << " M=" << g.M << " ell=" << g.ell
        << " n=" << g.n << " trials=" << g.trials << ' ' << label << '=' << format_double(g.value)
        << '\n';
  }
  return out.str();
}

}  // namespace qmean
