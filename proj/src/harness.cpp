#include "abstain_al/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "abstain_al/map_models.hpp"
#include "abstain_al/oracle.hpp"

namespace abstain_al {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_number(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset relabel(const Dataset& data, int labels) {
  return Dataset(LabelSpace(labels), data.examples());
}

}  // namespace

Dataset parse_dataset(std::istream& in, std::optional<int> num_labels) {
  std::vector<Example> examples;
  std::string line;
  int line_no = 0;
  Label max_label = 2;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    auto fail = [&](const std::string& what) {
      throw Error("bad_dataset", "line " + std::to_string(line_no) + ": " + what);
    };

    std::istringstream ls(body);
    std::string label_tok;
    ls >> label_tok;
    Label label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(label_tok, &used);
      if (used != label_tok.size()) fail("bad label '" + label_tok + "'");
    } catch (const std::logic_error&) {
      fail("bad label '" + label_tok + "'");
    }
    if (label != kRedundant && label < 1) fail("label must be -1 or >= 1");
    max_label = std::max(max_label, label);

    std::vector<std::pair<Index, double>> entries;
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) fail("expected <idx>:<val>, got '" + tok + "'");
      Index idx = 0;
      double val = 0.0;
      try {
        std::size_t used = 0;
        idx = std::stoll(tok.substr(0, colon), &used);
        if (used != colon) fail("bad feature index in '" + tok + "'");
        const std::string vs = tok.substr(colon + 1);
        val = std::stod(vs, &used);
        if (used != vs.size()) fail("bad feature value in '" + tok + "'");
      } catch (const std::logic_error&) {
        fail("bad feature '" + tok + "'");
      }
      if (idx < 0) fail("negative feature index");
      if (!std::isfinite(val)) fail("non-finite feature value");
      if (!entries.empty() && idx <= entries.back().first) fail("feature indices must be strictly increasing");
      entries.emplace_back(idx, val);
    }

    Example ex;
    ex.true_label = label;
    const Index dim = entries.empty() ? 0 : entries.back().first + 1;
    ex.features.resize(dim);
    ex.features.reserve(static_cast<Index>(entries.size()));
    for (const auto& [idx, val] : entries) ex.features.insertBack(idx) = val;
    examples.push_back(std::move(ex));
  }
  const int labels = num_labels.value_or(max_label);
  if (max_label > labels) throw Error("bad_dataset", "label " + std::to_string(max_label) + " exceeds label count");
  return Dataset(LabelSpace(labels), std::move(examples));
}

Dataset load_dataset(const std::string& path, std::optional<int> num_labels) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path);
  return parse_dataset(in, num_labels);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  for (const Example& ex : data.examples()) {
    out << ex.true_label;
    for (SparseFeatures::InnerIterator it(ex.features); it; ++it) {
      out << ' ' << it.index() << ':' << format_number("%.17g", it.value());
    }
    out << '\n';
  }
}

double auac(std::span<const double> accuracies) {
  if (accuracies.empty()) throw Error("bad_input", "empty accuracy curve");
  return 100.0 * std::accumulate(accuracies.begin(), accuracies.end(), 0.0) /
         static_cast<double>(accuracies.size());
}

std::pair<Dataset, Dataset> make_two_gaussians(const SyntheticSpec& spec) {
  if (spec.dimension < 2) throw Error("bad_input", "synthetic data needs at least two dimensions");
  if (spec.train_targets < 0 || spec.train_redundant < 0 || spec.test < 0) {
    throw Error("bad_input", "synthetic counts must be non-negative");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  auto draw = [&](Label label) {
    Example ex;
    ex.true_label = label;
    ex.features.resize(spec.dimension);
    for (int j = 0; j < spec.dimension; ++j) {
      double v = noise(rng);
      if (j == 0 && label != kRedundant) v += (label == 2 ? 0.5 : -0.5) * spec.separation;
      if (j == 1 && label == kRedundant) v += spec.redundant_offset;
      ex.features.insertBack(j) = v;
    }
    return ex;
  };

  std::vector<Example> train;
  for (int i = 0; i < spec.train_targets; ++i) train.push_back(draw(coin(rng) ? 2 : 1));
  for (int i = 0; i < spec.train_redundant; ++i) train.push_back(draw(kRedundant));
  std::vector<Example> test;
  for (int i = 0; i < spec.test; ++i) test.push_back(draw(coin(rng) ? 2 : 1));
  return {Dataset(LabelSpace(2), std::move(train)), Dataset(LabelSpace(2), std::move(test))};
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  SyntheticSpec synth;
  bool use_synth = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    auto fail = [&](const std::string& what) {
      throw Error("bad_config", "line " + std::to_string(line_no) + ": " + what);
    };
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));

    auto as_double = [&]() {
      try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size() && std::isfinite(v)) return v;
      } catch (const std::logic_error&) {
      }
      fail("'" + key + "' needs a number");
      return 0.0;
    };
    auto as_int = [&]() {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used == value.size()) return v;
      } catch (const std::logic_error&) {
      }
      fail("'" + key + "' needs an integer");
      return 0LL;
    };
    auto positive = [&](double v) {
      if (!(v > 0)) fail("'" + key + "' must be positive");
      return v;
    };

    if (key == "train") {
      cfg.train_path = value;
    } else if (key == "test") {
      cfg.test_path = value;
    } else if (key == "redundant") {
      cfg.redundant_path = value;
    } else if (key == "synthetic") {
      if (value != "true" && value != "false") fail("'synthetic' must be true or false");
      use_synth = value == "true";
    } else if (key == "synthetic_train") {
      synth.train_targets = static_cast<int>(as_int());
    } else if (key == "synthetic_redundant") {
      synth.train_redundant = static_cast<int>(as_int());
    } else if (key == "synthetic_test") {
      synth.test = static_cast<int>(as_int());
    } else if (key == "synthetic_dim") {
      synth.dimension = static_cast<int>(as_int());
    } else if (key == "synthetic_seed") {
      synth.seed = static_cast<std::uint64_t>(as_int());
    } else if (key == "synthetic_separation") {
      synth.separation = positive(as_double());
    } else if (key == "synthetic_redundant_offset") {
      synth.redundant_offset = as_double();
    } else if (key == "policies") {
      cfg.policies = split_list(value);
      for (const std::string& p : cfg.policies) parse_policy(p, [](const Example&) { return 0.0; });
    } else if (key == "scenario") {
      try {
        cfg.scenario = parse_scenario(value);
      } catch (const Error& e) {
        fail(e.what());
      }
    } else if (key == "abstention_fraction" || key == "abstention_fractions") {
      cfg.fractions.clear();
      for (const std::string& f : split_list(value)) {
        std::size_t used = 0;
        double q = -1.0;
        try {
          q = std::stod(f, &used);
        } catch (const std::logic_error&) {
        }
        if (used != f.size() || !(q >= 0.0 && q <= 1.0)) fail("fractions must be numbers in [0, 1]");
        cfg.fractions.push_back(q);
      }
    } else if (key == "budget") {
      cfg.budget = static_cast<int>(as_int());
      if (cfg.budget < 1) fail("budget must be at least 1");
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const std::string& s : split_list(value)) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
          v = std::stoull(s, &used);
        } catch (const std::logic_error&) {
        }
        if (used != s.size() || s.empty()) fail("seeds must be non-negative integers");
        cfg.seeds.push_back(v);
      }
    } else if (key == "pool_size") {
      cfg.pool_size = static_cast<int>(as_int());
      if (cfg.pool_size < 0) fail("pool_size must be non-negative");
    } else if (key == "label_sigma2") {
      cfg.label_prior_variance = positive(as_double());
    } else if (key == "abstain_sigma2") {
      cfg.abstain_prior_variance = positive(as_double());
    } else if (key == "generator_sigma2") {
      cfg.generator_prior_variance = positive(as_double());
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "write_curves") {
      if (value != "true" && value != "false") fail("'write_curves' must be true or false");
      cfg.write_curves = value == "true";
    } else if (key == "belief") {
      if (value != "plugin" && value != "finite") fail("'belief' must be plugin or finite");
      cfg.belief = value;
    } else if (key == "instance") {
      cfg.instance_path = value;
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (use_synth) cfg.synthetic = synth;
  if (cfg.policies.empty()) throw Error("bad_config", "no policies");
  if (cfg.fractions.empty()) throw Error("bad_config", "no abstention fractions");
  if (cfg.seeds.empty()) throw Error("bad_config", "no seeds");
  if (cfg.belief == "finite") {
    if (cfg.instance_path.empty()) throw Error("bad_config", "belief = finite needs 'instance'");
  } else if (cfg.train_path.empty() && !cfg.synthetic) {
    throw Error("bad_config", "give 'train' (and 'test') or set synthetic = true");
  } else if (!cfg.train_path.empty() && cfg.test_path.empty()) {
    throw Error("bad_config", "'train' needs a matching 'test'");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path);
  return parse_config(in);
}

Dataset assemble_pool(const Dataset& train, const Dataset* redundant, ScenarioKind scenario, double fraction,
                      int pool_size, std::uint64_t seed) {
  std::vector<Example> targets;
  std::vector<Example> extras;
  for (const Example& ex : train.examples()) (ex.redundant() ? extras : targets).push_back(ex);
  if (redundant) {
    for (const Example& ex : redundant->examples()) {
      if (ex.redundant()) extras.push_back(ex);
    }
  }

  std::mt19937_64 rng(seed);
  const Index m = pool_size > 0 ? pool_size : static_cast<Index>(targets.size());
  Index n_redundant = 0;
  if (scenario == ScenarioKind::unrelated) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("bad_input", "abstention fraction must be in [0, 1]");
    n_redundant = std::min<Index>(m, static_cast<Index>(std::ceil(fraction * static_cast<double>(m) - 1e-9)));
  }
  const Index n_targets = m - n_redundant;
  if (n_targets > static_cast<Index>(targets.size())) {
    throw Error("bad_input", "pool needs " + std::to_string(n_targets) + " target examples, have " +
                                 std::to_string(targets.size()));
  }
  if (n_redundant > static_cast<Index>(extras.size())) {
    throw Error("bad_input", "pool needs " + std::to_string(n_redundant) + " redundant examples, have " +
                                 std::to_string(extras.size()));
  }

  std::shuffle(targets.begin(), targets.end(), rng);
  std::shuffle(extras.begin(), extras.end(), rng);
  std::vector<Example> pool(targets.begin(), targets.begin() + n_targets);
  pool.insert(pool.end(), extras.begin(), extras.begin() + n_redundant);
  std::shuffle(pool.begin(), pool.end(), rng);
  return Dataset(train.labels(), std::move(pool));
}

RunTrace run_finite_demo(const FiniteBelief& instance, const Policy& policy, int budget, std::uint64_t seed) {
  const InducedPrior induced = induce(instance);
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::discrete_distribution<Index> draw_f(induced.qf.data(), induced.qf.data() + induced.qf.size());
  std::discrete_distribution<Index> draw_k(induced.qk.data(), induced.qk.data() + induced.qk.size());
  const Index f = draw_f(rng);
  const Index k = draw_k(rng);

  std::vector<Example> examples(static_cast<std::size_t>(instance.pool_size()));
  std::vector<Label> answers;
  for (Index x = 0; x < instance.pool_size(); ++x) {
    examples[static_cast<std::size_t>(x)].true_label = induced.label_of(f, x);
    answers.push_back(induced.feedback(f, k, x));
  }
  const Dataset pool(LabelSpace(instance.num_labels()), std::move(examples));
  return run_active_learning(policy, SimulatedLabeler(std::move(answers)), pool, budget, instance, pool,
                             derive_seed(seed, 3), "finite")
      .trace;
}

namespace {

struct Inputs {
  std::optional<Dataset> train;
  std::optional<Dataset> test;
  std::optional<Dataset> redundant;
  std::optional<FiniteBelief> instance;
};

Inputs load_inputs(const ExperimentConfig& cfg) {
  Inputs in;
  if (cfg.belief == "finite") {
    in.instance = read_instance_file(cfg.instance_path);
    return in;
  }
  if (!cfg.train_path.empty()) {
    Dataset train = load_dataset(cfg.train_path);
    Dataset test = load_dataset(cfg.test_path);
    std::optional<Dataset> redundant;
    int labels = std::max(train.labels().size(), test.labels().size());
    if (!cfg.redundant_path.empty()) {
      redundant = load_dataset(cfg.redundant_path);
      labels = std::max(labels, redundant->labels().size());
      in.redundant = relabel(*redundant, labels);
    }
    in.train = relabel(train, labels);
    in.test = relabel(test, labels).without_redundant();
  } else {
    auto [train, test] = make_two_gaussians(*cfg.synthetic);
    in.train = std::move(train);
    in.test = test.without_redundant();
  }
  return in;
}

struct Cell {
  std::size_t fraction;
  std::size_t policy;
  std::size_t seed;
};

ResultRow run_cell(const ExperimentConfig& cfg, const Inputs& in, const Cell& cell) {
  const std::string& policy_name = cfg.policies[cell.policy];
  const double fraction = cfg.fractions[cell.fraction];
  const std::uint64_t seed = cfg.seeds[cell.seed];
  ResultRow row{policy_name, cfg.belief == "finite" ? "finite" : scenario_name(cfg.scenario), fraction, seed, 0.0, {}};

  RunTrace trace;
  if (cfg.belief == "finite") {
    RateFn known;
    if (policy_needs_known_rate(policy_name)) {
      const FiniteBelief& inst = *in.instance;
      known = [&inst](const Example& x) { return estimated_rate(inst, x.index); };
    }
    trace = run_finite_demo(*in.instance, parse_policy(policy_name, known), cfg.budget, seed);
  } else {
    const Dataset pool = assemble_pool(*in.train, in.redundant ? &*in.redundant : nullptr, cfg.scenario, fraction,
                                       cfg.pool_size, derive_seed(seed, 1));
    const Scenario scenario{cfg.scenario, fraction, cfg.generator_prior_variance, derive_seed(seed, 2)};
    const SimulatedLabeler labeler = make_labeler(pool, scenario);
    const Index dim = std::max(pool.dimension(), in.test->dimension());

    RateFn known;
    if (policy_needs_known_rate(policy_name)) {
      std::vector<BinarySample> pattern;
      const std::vector<int> z = labeler.abstention_pattern();
      for (Index i = 0; i < pool.size(); ++i) pattern.push_back({pool[i].features, z[static_cast<std::size_t>(i)]});
      known = fixed_rate_estimator(pattern, dim, cfg.abstain_prior_variance);
    }
    const PluginBelief prior(pool.labels(), dim, cfg.label_prior_variance, cfg.abstain_prior_variance);
    trace = run_active_learning(parse_policy(policy_name, known), labeler, pool, cfg.budget, prior, *in.test,
                                derive_seed(seed, 3), scenario_name(cfg.scenario))
                .trace;
  }
  row.curve = trace.accuracies();
  row.auac = auac(row.curve);
  return row;
}

}  // namespace

int threads_from_env() {
  const char* v = std::getenv("ABSTAIN_AL_THREADS");
  if (!v || !*v) return 0;
  try {
    return std::max(0, std::stoi(v));
  } catch (const std::logic_error&) {
    throw Error("bad_config", "ABSTAIN_AL_THREADS must be an integer");
  }
}

GridResult run_grid(const ExperimentConfig& config, int threads) {
  const Inputs inputs = load_inputs(config);

  std::vector<Cell> cells;
  for (std::size_t f = 0; f < config.fractions.size(); ++f) {
    for (std::size_t p = 0; p < config.policies.size(); ++p) {
      for (std::size_t s = 0; s < config.seeds.size(); ++s) cells.push_back({f, p, s});
    }
  }
  std::vector<std::optional<ResultRow>> rows(cells.size());
  std::vector<std::string> failures(cells.size());

  auto work = [&](std::size_t i) {
    try {
      rows[i] = run_cell(config, inputs, cells[i]);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) work(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  GridResult result;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> groups;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (rows[i]) {
      groups[{cells[i].fraction, cells[i].policy}].push_back(rows[i]->auac);
      result.rows.push_back(std::move(*rows[i]));
    } else {
      result.errors.push_back({config.policies[cells[i].policy], config.fractions[cells[i].fraction],
                               config.seeds[cells[i].seed], failures[i]});
    }
  }
  const std::string scen = config.belief == "finite" ? "finite" : scenario_name(config.scenario);
  for (const auto& [key, values] : groups) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    result.aggregates.push_back({config.policies[key.second], scen, config.fractions[key.first], mean,
                                 values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0,
                                 static_cast<int>(values.size())});
  }
  return result;
}

void write_rows_csv(std::ostream& out, const GridResult& result) {
  out << "policy,scenario,fraction,seed,auac\n";
  for (const ResultRow& r : result.rows) {
    out << r.policy << ',' << r.scenario << ',' << format_number("%.6g", r.fraction) << ',' << r.seed << ','
        << format_number("%.6f", r.auac) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const GridResult& result) {
  out << "policy,scenario,fraction,mean_auac,stddev_auac\n";
  for (const AggregateRow& a : result.aggregates) {
    out << a.policy << ',' << a.scenario << ',' << format_number("%.6g", a.fraction) << ','
        << format_number("%.6f", a.mean_auac) << ',' << format_number("%.6f", a.stddev_auac) << '\n';
  }
}

void write_curves_csv(std::ostream& out, const GridResult& result) {
  out << "policy,scenario,fraction,seed,query,accuracy\n";
  for (const ResultRow& r : result.rows) {
    for (std::size_t i = 0; i < r.curve.size(); ++i) {
      out << r.policy << ',' << r.scenario << ',' << format_number("%.6g", r.fraction) << ',' << r.seed << ','
          << (i + 1) << ',' << format_number("%.6f", r.curve[i]) << '\n';
    }
  }
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> write_results(const ExperimentConfig& config, const std::string& config_text,
                                       const GridResult& result) {
  std::vector<std::string> written;
  auto emit = [&](const std::string& path, auto&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io_error", "cannot write " + path);
    writer(out);
    written.push_back(path);
  };
  emit(config.output + ".csv", [&](std::ostream& o) { write_rows_csv(o, result); });
  emit(config.output + "_summary.csv", [&](std::ostream& o) { write_aggregate_csv(o, result); });
  if (config.write_curves) emit(config.output + "_curves.csv", [&](std::ostream& o) { write_curves_csv(o, result); });

  nlohmann::ordered_json manifest;
  manifest["config"] = config_text;
  manifest["config_hash"] = content_hash(config_text);
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  for (const std::string* p : {&config.train_path, &config.test_path, &config.redundant_path, &config.instance_path}) {
    if (!p->empty()) inputs[*p] = content_hash(read_file(*p));
  }
  manifest["inputs"] = inputs;
  manifest["rows"] = result.rows.size();
  manifest["aggregates"] = result.aggregates.size();
  nlohmann::ordered_json errors = nlohmann::ordered_json::array();
  for (const CellError& e : result.errors) {
    errors.push_back({{"policy", e.policy}, {"fraction", e.fraction}, {"seed", e.seed}, {"message", e.message}});
  }
  manifest["errors"] = errors;
  manifest["outputs"] = written;
  emit(config.output + "_manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
  return written;
}

}  // namespace abstain_al
