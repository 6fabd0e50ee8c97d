// Command-line front end: grid runs, oracle certification, synthetic data and
// exact-posterior demos.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "abstain_al/harness.hpp"
#include "abstain_al/oracle.hpp"

using namespace abstain_al;

namespace {

int cmd_run(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw Error("io_error", "cannot open " + config_path);
  std::stringstream text;
  text << in.rdbuf();
  std::istringstream parse(text.str());
  const ExperimentConfig config = parse_config(parse);

  const GridResult result = run_grid(config, threads_from_env());
  for (const std::string& path : write_results(config, text.str(), result)) std::cout << "wrote " << path << '\n';
  write_aggregate_csv(std::cout, result);
  for (const CellError& e : result.errors) {
    std::cerr << "cell " << e.policy << " fraction=" << e.fraction << " seed=" << e.seed << " failed: " << e.message
              << '\n';
  }
  return result.errors.empty() ? 0 : 3;
}

int cmd_certify(const CertificationOptions& options, const std::string& out_path) {
  const CertificationReport report = certify_bounds(options);
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw Error("io_error", "cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  for (const CertificationRecord& r : report.records) out << to_json(r) << '\n';

  std::cerr << "trials=" << report.records.size() << " avg_failures=" << report.avg_failures
            << " worst_failures=" << report.worst_failures << " min_avg_ratio=" << report.min_avg_ratio
            << " min_worst_ratio=" << report.min_worst_ratio << '\n';
  return report.avg_failures + report.worst_failures == 0 ? 0 : 2;
}

int cmd_synth(const std::string& out_path, const SyntheticSpec& spec) {
  const auto [train, test] = make_two_gaussians(spec);
  std::ofstream tr(out_path);
  if (!tr) throw Error("io_error", "cannot write " + out_path);
  write_dataset(tr, train);
  std::cout << "wrote " << out_path << " (" << train.size() << " examples)\n";
  if (!test.empty()) {
    const std::string test_path = out_path + ".test";
    std::ofstream te(test_path);
    if (!te) throw Error("io_error", "cannot write " + test_path);
    write_dataset(te, test);
    std::cout << "wrote " << test_path << " (" << test.size() << " examples)\n";
  }
  return 0;
}

int cmd_demo_finite(const std::string& instance_path, const std::string& policy_name, int budget,
                    std::uint64_t seed) {
  const FiniteBelief instance = read_instance_file(instance_path);
  RateFn known = [&instance](const Example& x) { return estimated_rate(instance, x.index); };
  const RunTrace trace = run_finite_demo(instance, parse_policy(policy_name, known), budget, seed);
  std::cout << "iteration,example,feedback,accuracy\n";
  for (const QueryRecord& r : trace.records) {
    std::cout << r.iteration << ',' << r.example << ',' << r.feedback.value << ',' << r.test_accuracy << '\n';
  }
  std::cout << "auac," << auac(trace.accuracies()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning with abstention feedback"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment grid from a config file");
  run->add_option("--config", config_path, "key = value config file")->required();

  CertificationOptions cert;
  std::string cert_out;
  auto* certify = app.add_subcommand("certify", "Check the (1 - 1/e) bounds on random enumerable instances");
  certify->add_option("--pool", cert.pool, "pool size")->check(CLI::Range(1, 8));
  certify->add_option("--budget", cert.budget, "queries per policy")->check(CLI::Range(0, kMaxOracleBudget));
  certify->add_option("--trials", cert.trials, "random instances")->check(CLI::NonNegativeNumber);
  certify->add_option("--seed", cert.seed, "base seed");
  certify->add_option("--labels", cert.labels, "label count")->check(CLI::Range(2, 4));
  certify->add_option("--hypotheses", cert.max_hypotheses, "max |H|")->check(CLI::PositiveNumber);
  certify->add_option("--rates", cert.max_rates, "max |R|")->check(CLI::PositiveNumber);
  certify->add_option("--out", cert_out, "JSON-lines report path (default stdout)");

  std::string synth_out;
  SyntheticSpec synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic two-Gaussian dataset");
  synth_cmd->add_option("--out", synth_out, "train file; the test split goes to <out>.test")->required();
  synth_cmd->add_option("--n", synth.train_targets, "target training examples")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--dim", synth.dimension, "feature dimension")->check(CLI::Range(2, 1 << 20));
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--redundant", synth.train_redundant, "redundant training examples")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--n-test", synth.test, "test examples")->check(CLI::NonNegativeNumber);

  std::string instance_path;
  std::string demo_policy = "ala";
  int demo_budget = 0;
  std::uint64_t demo_seed = 0;
  auto* demo = app.add_subcommand("demo-finite", "Exact-posterior run on a finite instance file");
  demo->add_option("--instance", instance_path, "instance file")->required();
  demo->add_option("--policy", demo_policy, "pl, alg, ala, alw, ala-known, alw-known");
  demo->add_option("--budget", demo_budget, "queries (default: whole pool)");
  demo->add_option("--seed", demo_seed, "seed for the hidden truth and PL");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path);
    if (*certify) return cmd_certify(cert, cert_out);
    if (*synth_cmd) return cmd_synth(synth_out, synth);
    if (*demo) {
      if (demo_budget <= 0) demo_budget = static_cast<int>(read_instance_file(instance_path).pool_size());
      return cmd_demo_finite(instance_path, demo_policy, demo_budget, demo_seed);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
