// qmean: generate instances, run seeded experiments, summarize the records.
//
//   qmean gen --kind close-pair --n 16 --delta 0.5 --out pair.json
//   qmean run median --oracle pair.json --t 255 --trials 1000 --seed 7 --out median.csv
//   qmean summarize --in median.csv --check success-rate
//
// Exit codes: 0 success, 2 invalid input or configuration, 1 anything else.

#include <qmean/qmean.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitValidation = 2;

struct GenArgs {
  std::string kind;
  std::size_t n = 0;
  unsigned ell = 0;
  double value = 0.0;
  std::size_t density = 0;
  double delta = 0.5;
  std::optional<std::size_t> p, q;
  std::uint64_t seed = 0;
  std::string out;
};

struct RunArgs {
  std::string algorithm;
  std::string oracle;
  std::vector<std::uint64_t> t{63};
  std::vector<unsigned> ell;
  std::string variant = "mean1";
  std::string mode = "median";
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::string backend = "subspace";
  std::string format = "csv";
  std::string out = "-";
  double c0 = 9.0;
  double c1 = 22.5;
};

struct SummarizeArgs {
  std::string in;
  std::string check;
};

template <class Fn>
void with_output(const std::string& path, Fn&& write) {
  if (path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
}

void run_gen(const GenArgs& a) {
  qmean::InstanceSpec spec;
  spec.generator = qmean::parse_generator(a.kind);
  spec.n = a.n;
  spec.ell = a.ell;
  spec.value = a.value;
  spec.density = a.density;
  spec.delta = a.delta;
  spec.p = a.p;
  spec.q = a.q;
  qmean::RngStream rng(a.seed, 0);
  const auto instance = qmean::generate(spec, rng);
  with_output(a.out, [&](std::ostream& os) { os << qmean::instance_to_json(instance).dump() << '\n'; });
}

void run_run(const RunArgs& a) {
  qmean::ExperimentConfig config;
  config.algorithm = qmean::parse_algorithm(a.algorithm);
  config.instance = qmean::load_instance(a.oracle);
  config.t_values = a.t;
  config.ell_values = a.ell;
  config.variant = a.variant == "mean2" ? qmean::MeanVariant::mean2 : qmean::MeanVariant::mean1;
  config.mode = a.mode == "interval" ? qmean::MajorityMode::interval : qmean::MajorityMode::median;
  config.trials = a.trials;
  config.seed = a.seed;
  config.backend = a.backend == "statevector" ? qmean::Backend::statevector : qmean::Backend::subspace;
  config.minimum.c1 = a.c1;
  config.minimum.search.c0 = a.c0;

  const auto records = qmean::run_experiment(config);
  with_output(a.out, [&](std::ostream& os) {
    if (a.format == "json") {
      qmean::write_json(os, records);
    } else {
      qmean::write_csv(os, records);
    }
  });
}

void run_summarize(const SummarizeArgs& a) {
  std::ifstream in(a.in);
  if (!in) throw qmean::ValidationError("in: cannot open " + a.in);
  const auto records = qmean::read_records(in);
  std::cout << qmean::summarize(records, qmean::parse_check(a.check));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-model simulation of quantum mean and median estimation"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a JSON instance file");
  gen_cmd->add_option("--kind", gen.kind, "constant | uniform-random | boolean-density | "
                                          "close-pair | permutation | random-distance")
      ->required();
  gen_cmd->add_option("--n", gen.n, "Number of points (power of two)")->required();
  gen_cmd->add_option("--ell", gen.ell, "Bits of precision (0: arbitrary)");
  gen_cmd->add_option("--value", gen.value, "constant: the value");
  gen_cmd->add_option("--density", gen.density, "boolean-density: number of ones");
  gen_cmd->add_option("--delta", gen.delta, "close-pair: distance of the close pair");
  gen_cmd->add_option("--p", gen.p, "close-pair: first point (default 0)");
  gen_cmd->add_option("--q", gen.q, "close-pair: second point (default N-1)");
  gen_cmd->add_option("--seed", gen.seed, "Seed for random generators");
  gen_cmd->add_option("--out", gen.out, "Output path, - for stdout")->required();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run seeded trials and emit one record per trial");
  run_cmd->add_option("algorithm", run.algorithm, "mean1 | mean2 | count | search | minimum | median")
      ->required()
      ->check(CLI::IsMember({"mean1", "mean2", "count", "search", "minimum", "median"}));
  run_cmd->add_option("--oracle", run.oracle, "Instance file")->required();
  run_cmd->add_option("--t", run.t, "Iteration count(s); several values form a sweep");
  run_cmd->add_option("--ell", run.ell, "Bit precision(s) for mean2 / median with mean2");
  run_cmd->add_option("--variant", run.variant, "Mean estimator inside median")
      ->check(CLI::IsMember({"mean1", "mean2"}));
  run_cmd->add_option("--mode", run.mode, "Majority vote")->check(CLI::IsMember({"interval", "median"}));
  run_cmd->add_option("--trials", run.trials, "Trials per parameter point")->required();
  run_cmd->add_option("--seed", run.seed, "Base seed; trial k uses stream k")->required();
  run_cmd->add_option("--backend", run.backend, "Amplitude-estimation simulator")
      ->check(CLI::IsMember({"subspace", "statevector"}));
  run_cmd->add_option("--format", run.format, "Record format")->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_option("--out", run.out, "Output path, - for stdout");
  run_cmd->add_option("--c0", run.c0, "Search cap factor: c0 * sqrt(N) queries");
  run_cmd->add_option("--c1", run.c1, "Minimum-finding budget factor: c1 * sqrt(N) queries");

  SummarizeArgs sum;
  auto* sum_cmd = app.add_subcommand("summarize", "Aggregate records from `run`");
  sum_cmd->add_option("--in", sum.in, "CSV or JSON records")->required();
  sum_cmd->add_option("--check", sum.check, "bound-freq | slope | success-rate")
      ->required()
      ->check(CLI::IsMember({"bound-freq", "slope", "success-rate"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*gen_cmd) run_gen(gen);
    if (*run_cmd) run_run(run);
    if (*sum_cmd) run_summarize(sum);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
