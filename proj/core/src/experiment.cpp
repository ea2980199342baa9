#include "qasync/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qasync/async_engine.hpp"
#include "qasync/errors.hpp"
#include "qasync/serialization.hpp"
#include "qasync/sweep.hpp"

namespace qasync {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---- config parsing ---------------------------------------------------------

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ConfigurationError(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
T get(const json& obj, const char* key, const char* where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string(where) + "." + key + ": " + e.what());
  }
}

template <class T>
void get_opt(const json& obj, const char* key, const char* where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "quadratic") return ProblemKind::quadratic;
  if (s == "nonconvex_smooth") return ProblemKind::nonconvex_smooth;
  if (s == "convex_lipschitz") return ProblemKind::convex_lipschitz;
  throw ConfigurationError("problem.kind: unknown problem '" + s + "'");
}

ProblemSpec parse_problem(const json& j) {
  if (!j.is_object()) throw ConfigurationError("problem must be an object");
  reject_unknown(j, {"kind", "dimension", "beta", "G", "D", "sigma", "w1_scale", "w1", "F",
                     "D_tuning", "metric"},
                 "problem");
  ProblemSpec p;
  p.kind = problem_kind_from_string(get<std::string>(j, "kind", "problem"));
  if (p.kind == ProblemKind::convex_lipschitz) p.w1_scale = -1.0;  // resolved below
  get_opt(j, "dimension", "problem", p.dimension);
  get_opt(j, "beta", "problem", p.beta);
  get_opt(j, "G", "problem", p.G);
  get_opt(j, "D", "problem", p.D);
  get_opt(j, "sigma", "problem", p.sigma);
  get_opt(j, "w1_scale", "problem", p.w1_scale);
  if (p.w1_scale < 0.0) p.w1_scale = 0.5 * p.D;
  if (j.contains("w1")) p.w1 = get<std::vector<double>>(j, "w1", "problem");
  if (j.contains("F")) p.F = get<double>(j, "F", "problem");
  if (j.contains("D_tuning")) p.D_tuning = get<double>(j, "D_tuning", "problem");
  if (j.contains("metric")) {
    const auto m = get<std::string>(j, "metric", "problem");
    if (m == "grad_sq") p.metric = MetricKind::grad_sq;
    else if (m == "suboptimality") p.metric = MetricKind::suboptimality;
    else throw ConfigurationError("problem.metric: expected grad_sq or suboptimality");
  }
  if (p.dimension < 1) throw ConfigurationError("problem.dimension must be >= 1");
  if (!(p.sigma >= 0.0)) throw ConfigurationError("problem.sigma must be >= 0");
  if (p.w1 && static_cast<int>(p.w1->size()) != p.dimension)
    throw ConfigurationError("problem.w1 length must equal dimension");
  return p;
}

DelaySpec parse_delays(const json& j) {
  if (!j.is_object()) throw ConfigurationError("delays must be an object");
  reject_unknown(j, {"model", "tau", "tau_max", "n", "machines", "base_rate", "fast_probability",
                     "slow_multiplier", "path", "values"},
                 "delays");
  DelaySpec d;
  d.model = get<std::string>(j, "model", "delays");
  get_opt(j, "tau", "delays", d.tau);
  get_opt(j, "tau_max", "delays", d.tau_max);
  get_opt(j, "n", "delays", d.n);
  get_opt(j, "machines", "delays", d.machines);
  get_opt(j, "base_rate", "delays", d.base_rate);
  get_opt(j, "fast_probability", "delays", d.fast_probability);
  get_opt(j, "slow_multiplier", "delays", d.slow_multiplier);
  get_opt(j, "path", "delays", d.path);
  get_opt(j, "values", "delays", d.values);
  static const std::set<std::string> models{"zero", "constant", "staircase", "half_outlier",
                                            "one_fast_machine", "workers", "file", "inline"};
  if (!models.count(d.model)) throw ConfigurationError("delays.model: unknown model '" + d.model + "'");
  if (d.model == "file" && d.path.empty()) throw ConfigurationError("delays.path required");
  return d;
}

MethodSpec parse_method(const json& j, std::size_t index) {
  if (!j.is_object()) throw ConfigurationError("methods entries must be objects");
  reject_unknown(j, {"id", "type", "eta", "inner", "q", "tau_hat_q", "B", "strictness", "setting"},
                 "method");
  MethodSpec m;
  const auto type = get<std::string>(j, "type", "method");
  if (type == "vanilla_async_sgd" || type == "vanilla") m.type = MethodType::vanilla_async_sgd;
  else if (type == "algorithm1") m.type = MethodType::algorithm1;
  else if (type == "algorithm2") m.type = MethodType::algorithm2;
  else throw ConfigurationError("method.type: unknown type '" + type + "'");
  m.id = j.contains("id") ? get<std::string>(j, "id", "method") : type + std::to_string(index + 1);
  get_opt(j, "eta", "method", m.eta);
  get_opt(j, "q", "method", m.q);
  if (j.contains("inner")) m.inner = inner_method_from_string(get<std::string>(j, "inner", "method"));
  if (j.contains("tau_hat_q") && !j.at("tau_hat_q").is_null()) {
    if (j.at("tau_hat_q").is_string()) {
      if (j.at("tau_hat_q").get<std::string>() != "auto")
        throw ConfigurationError("method.tau_hat_q: expected an integer or \"auto\"");
    } else {
      m.tau_hat_q = get<Delay>(j, "tau_hat_q", "method");
    }
  }
  if (j.contains("B")) {
    if (j.at("B").is_array()) m.batches = get<std::vector<std::int64_t>>(j, "B", "method");
    else m.batches = {get<std::int64_t>(j, "B", "method")};
  }
  if (j.contains("strictness"))
    m.strictness = strictness_from_string(get<std::string>(j, "strictness", "method"));
  if (j.contains("setting"))
    m.setting = rate_setting_from_string(get<std::string>(j, "setting", "method"));
  if (!(m.q > 0.0 && m.q <= 1.0)) throw ConfigurationError("method.q must lie in (0, 1]");
  if (!(m.eta > 0.0)) throw ConfigurationError("method.eta must be positive");
  for (auto b : m.batches)
    if (b < 1) throw ConfigurationError("method.B entries must be >= 1");
  return m;
}

// ---- building blocks ---------------------------------------------------------

Problem build_problem(const ProblemSpec& p) {
  switch (p.kind) {
    case ProblemKind::quadratic:
      return make_quadratic(p.dimension, p.beta);
    case ProblemKind::nonconvex_smooth:
      return make_nonconvex_smooth(p.dimension, p.beta);
    case ProblemKind::convex_lipschitz:
      return make_convex_lipschitz(p.dimension, p.G, p.D);
  }
  throw ConfigurationError("unknown problem kind");
}

Vector initial_point(const ProblemSpec& p) {
  if (p.w1) return Eigen::Map<const Vector>(p.w1->data(), static_cast<Eigen::Index>(p.w1->size()));
  Vector w = Vector::Zero(p.dimension);
  w[0] = p.w1_scale;
  return w;
}

MetricKind default_metric(const ProblemSpec& p) {
  if (p.metric) return *p.metric;
  return p.kind == ProblemKind::nonconvex_smooth ? MetricKind::grad_sq : MetricKind::suboptimality;
}

double metric_value(MetricKind kind, const Problem& problem, const Vector& w) {
  return kind == MetricKind::grad_sq ? problem.gradient(w).squaredNorm()
                                     : problem.suboptimality(w);
}

RateSetting setting_of(InnerMethod m) {
  switch (m) {
    case InnerMethod::sgd_nonconvex:
      return RateSetting::nonconvex_sgd;
    case InnerMethod::sgd_convex_smooth:
      return RateSetting::sgd_convex_smooth;
    case InnerMethod::psgd_convex_lipschitz:
      return RateSetting::psgd_convex_lipschitz;
    case InnerMethod::acsa:
      return RateSetting::acsa_convex_smooth;
  }
  return RateSetting::nonconvex_sgd;
}

bool seed_dependent(const DelaySpec& d) { return d.model == "workers"; }

Round resolve_horizon(const ExperimentConfig& c) {
  const DelaySpec& d = c.delays;
  std::optional<Round> fixed;
  if (d.model == "one_fast_machine") fixed = d.n + d.machines - 1;
  if (d.model == "inline") fixed = static_cast<Round>(d.values.size());
  if (d.model == "file") fixed = load_delays(d.path).horizon();
  if (fixed) {
    if (c.T && *c.T != *fixed)
      throw ConfigurationError("T = " + std::to_string(*c.T) + " disagrees with the delay model (" +
                               std::to_string(*fixed) + ")");
    return *fixed;
  }
  if (!c.T) throw ConfigurationError("T is required for delay model '" + d.model + "'");
  return *c.T;
}

DelaySequence build_delays(const DelaySpec& d, Round T, std::uint64_t seed) {
  if (d.model == "zero") return DelaySequence(std::vector<Delay>(static_cast<std::size_t>(T), 0));
  if (d.model == "constant") return constant_delay(T, d.tau);
  if (d.model == "staircase") return staircase_adversarial(T, d.tau_max);
  if (d.model == "half_outlier") return half_outlier(T);
  if (d.model == "one_fast_machine") return one_fast_machine(d.n, d.machines);
  if (d.model == "inline") return DelaySequence(d.values);
  if (d.model == "file") return load_delays(d.path);
  WorkerSchedule s;
  s.workers = d.machines;
  s.base_rate = d.base_rate;
  s.fast_probability = d.fast_probability;
  s.slow_multiplier = d.slow_multiplier;
  s.seed = seed;
  return simulate_workers(T, s);
}

struct Resolved {
  Problem problem;
  Vector w1;
  RateConstants constants;
  TuningConstants tuning;
  MetricKind metric;
};

Resolved resolve(const ProblemSpec& p) {
  Problem problem = build_problem(p);
  Vector w1 = initial_point(p);
  if (!problem.domain().contains(w1)) throw ConfigurationError("problem.w1 lies outside the domain");
  RateConstants c;
  c.sigma = p.sigma;
  c.beta = problem.smoothness.value_or(0.0);
  c.G = problem.lipschitz.value_or(0.0);
  const double f_star = problem.optimal_value.value_or(0.0);
  c.F = p.F.value_or(problem.value(w1) - f_star);
  if (p.D_tuning) {
    c.D = *p.D_tuning;
  } else if (p.kind == ProblemKind::convex_lipschitz) {
    c.D = p.D;
  } else {
    const Vector w_star = problem.minimizer.value_or(Vector::Zero(p.dimension));
    c.D = (w1 - w_star).norm();
  }
  TuningConstants t;
  if (c.beta > 0.0) t.beta = c.beta;
  if (c.G > 0.0) t.G = c.G;
  t.F = c.F;
  t.D = c.D;
  return {std::move(problem), std::move(w1), c, t, default_metric(p)};
}

struct CellSpec {
  std::size_t method_index;
  std::optional<std::int64_t> batch;
  std::uint64_t seed;
  std::string label;
};

CellResult run_cell(const ExperimentConfig& cfg, Round T, const CellSpec& cell) {
  const MethodSpec& m = cfg.methods[cell.method_index];
  CellResult r;
  r.seed = cell.seed;
  r.method = cell.label;
  r.method_id = m.id;
  r.batch = cell.batch;
  r.T = T;
  try {
    Resolved res = resolve(cfg.problem);
    const std::uint64_t stream = mix(cfg.base_seed, cell.seed);
    const DelaySequence delays = build_delays(cfg.delays, T, mix(stream, 0xde1a));
    const DelayStats stats = compute_stats(delays);
    r.tau_avg = stats.tau_avg();
    r.tau_med = stats.tau_med();
    r.tau_max = stats.tau_max();
    GradientOracle oracle(res.problem, cfg.problem.sigma, stream);
    const std::uint64_t algo_seed = mix(stream, 0xa160);

    Vector output;
    RoundLog log;
    switch (m.type) {
      case MethodType::vanilla_async_sgd: {
        VanillaAsyncSgd sgd(res.w1, m.eta);
        RunResult rr = run(sgd, oracle, delays);
        output = std::move(rr.output);
        log = std::move(rr.log);
        break;
      }
      case MethodType::algorithm1: {
        MiniBatchConfig mc;
        mc.q = m.q;
        mc.tau_hat_q = m.tau_hat_q ? *m.tau_hat_q : stats.quantile(m.q);
        mc.batch_override = cell.batch;
        mc.strictness = m.strictness;
        const MiniBatchSchedule sched = derive_schedule(T, mc, cfg.problem.sigma);
        const RateSetting setting = setting_of(m.inner);
        RateConstants bc = res.constants;
        bc.sigma = sched.sigma_eff;
        r.bound_value = base_rate(setting, bc, sched.K).value;
        auto factory = tuned_factory(m.inner, res.problem, res.w1, sched.sigma_eff, res.tuning,
                                     algo_seed);
        MiniBatchResult mr = run_algorithm1(factory, mc, oracle, delays);
        output = std::move(mr.output);
        log = std::move(mr.log);
        if (!mr.diagnostics.completed) {
          r.status = "incomplete";
          r.error = diagnostics_to_json(mr.diagnostics);
        }
        break;
      }
      case MethodType::algorithm2: {
        const SweepSchedule schedule(m.setting, res.constants);
        r.bound_value = quantile_bound_envelope(m.setting, stats, res.constants).value;
        SweepResult sr = run_algorithm2(schedule, res.problem, oracle, delays, res.w1, algo_seed,
                                        m.strictness);
        output = std::move(sr.final_output);
        log = std::move(sr.log);
        break;
      }
    }
    r.final_metric = metric_value(res.metric, res.problem, output);
    r.used = log.used;
    r.discarded = log.discarded;
    if (cfg.record_rounds) {
      std::ostringstream os;
      write_round_log_csv(os, log);
      r.rounds_csv = os.str();
    }
  } catch (const ScheduleError& e) {
    r.status = "schedule_error";
    r.error = e.what();
  } catch (const ConfigurationError&) {
    throw;
  } catch (const std::exception& e) {
    r.status = "error";
    r.error = e.what();
  }
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
  reject_unknown(j, {"name", "T", "seeds", "base_seed", "threads", "record_rounds", "problem",
                     "delays", "methods"},
                 "config");
  ExperimentConfig c;
  get_opt(j, "name", "config", c.name);
  if (j.contains("T")) c.T = get<Round>(j, "T", "config");
  if (!j.contains("seeds")) throw ConfigurationError("config.seeds is required");
  if (j.at("seeds").is_array()) {
    c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", "config");
  } else {
    const auto n = get<std::int64_t>(j, "seeds", "config");
    if (n < 1) throw ConfigurationError("config.seeds count must be >= 1");
    for (std::int64_t s = 0; s < n; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (c.seeds.empty()) throw ConfigurationError("config.seeds must be nonempty");
  get_opt(j, "base_seed", "config", c.base_seed);
  get_opt(j, "threads", "config", c.threads);
  get_opt(j, "record_rounds", "config", c.record_rounds);
  if (!j.contains("problem")) throw ConfigurationError("config.problem is required");
  c.problem = parse_problem(j.at("problem"));
  c.delays = j.contains("delays") ? parse_delays(j.at("delays")) : DelaySpec{};
  if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty())
    throw ConfigurationError("config.methods must be a nonempty array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.at("methods").size(); ++i) {
    c.methods.push_back(parse_method(j.at("methods")[i], i));
    if (!ids.insert(c.methods.back().id).second)
      throw ConfigurationError("duplicate method id '" + c.methods.back().id + "'");
  }
  if (const char* env = std::getenv("ASYNC_OPT_SEED"); env && *env) {
    try {
      std::size_t pos = 0;
      c.base_seed = std::stoull(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigurationError(std::string("ASYNC_OPT_SEED is not an unsigned integer: ") + env);
    }
  }

  // Resolve everything that can fail before any cell runs.
  try {
    const Round T = resolve_horizon(c);
    if (T < 1) throw ConfigurationError("T must be >= 1");
    if (!seed_dependent(c.delays)) build_delays(c.delays, T, 0);
    const Resolved res = resolve(c.problem);
    for (const MethodSpec& m : c.methods) {
      if (m.type == MethodType::algorithm2) validate_constants(m.setting, res.constants);
    }
  } catch (const ParameterError& e) {
    throw ConfigurationError(e.what());
  } catch (const ProtocolError& e) {
    throw ConfigurationError(e.what());
  } catch (const DomainError& e) {
    throw ConfigurationError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  // Relative delay files resolve against the config's directory.
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("delays") && j["delays"].is_object() &&
      j["delays"].contains("path") && j["delays"]["path"].is_string()) {
    std::filesystem::path p = j["delays"]["path"].get<std::string>();
    if (p.is_relative()) j["delays"]["path"] = (std::filesystem::path(path).parent_path() / p).string();
  }
  return parse_config(j.dump());
}

bool ExperimentReport::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.status == "ok" || c.status == "incomplete"; });
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const Round T = resolve_horizon(config);
  std::vector<CellSpec> specs;
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    const MethodSpec& m = config.methods[mi];
    std::vector<std::optional<std::int64_t>> batches;
    if (m.type == MethodType::algorithm1 && !m.batches.empty()) {
      for (auto b : m.batches) batches.emplace_back(b);
    } else {
      batches.emplace_back(std::nullopt);
    }
    for (const auto& b : batches) {
      const std::string label =
          (b && m.batches.size() > 1) ? m.id + "[B=" + std::to_string(*b) + "]" : m.id;
      for (std::uint64_t s : config.seeds) specs.push_back({mi, b, s, label});
    }
  }

  std::vector<CellResult> cells(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        cells[i] = run_cell(config, T, specs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned n_threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                          : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max<std::size_t>(1, specs.size())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentReport report;
  report.name = config.name;
  report.cells = std::move(cells);
  // Ordered reduction over the cell list.
  for (const CellResult& c : report.cells) {
    auto it = std::find_if(report.summaries.begin(), report.summaries.end(),
                           [&](const MethodSummary& s) { return s.method == c.method; });
    if (it == report.summaries.end()) {
      report.summaries.push_back({c.method, c.method_id, c.batch, 0, 0, 0.0, 0.0, std::nullopt});
      it = std::prev(report.summaries.end());
    }
    ++it->runs;
    if (!c.final_metric) ++it->failures;
  }
  for (MethodSummary& s : report.summaries) {
    std::vector<double> values, bounds;
    for (const CellResult& c : report.cells) {
      if (c.method != s.method) continue;
      if (c.final_metric) values.push_back(*c.final_metric);
      if (c.bound_value) bounds.push_back(*c.bound_value);
    }
    if (!values.empty()) {
      double sum = 0.0;
      for (double v : values) sum += v;
      s.mean = sum / static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean) * (v - s.mean);
      s.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    } else {
      s.mean = std::numeric_limits<double>::quiet_NaN();
    }
    if (!bounds.empty()) {
      double sum = 0.0;
      for (double v : bounds) sum += v;
      s.bound_value = sum / static_cast<double>(bounds.size());
    }
  }
  return report;
}

std::string metrics_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "seed,method,T,final_metric,used,discarded,tau_avg,tau_med,tau_max,bound_value\n";
  for (const CellResult& c : report.cells) {
    os << c.seed << ',' << c.method << ',' << c.T << ','
       << (c.final_metric ? fmt(*c.final_metric) : "") << ',' << c.used << ','
       << c.discarded << ',' << fmt(c.tau_avg) << ',' << c.tau_med << ',' << c.tau_max << ','
       << (c.bound_value ? fmt(*c.bound_value) : "") << '\n';
  }
  return os.str();
}

std::string summary_json(const ExperimentReport& report) {
  json j;
  j["name"] = report.name;
  j["ok"] = report.all_ok();
  json methods = json::array();
  for (const MethodSummary& s : report.summaries) {
    json m{{"method", s.method}, {"id", s.method_id}, {"runs", s.runs}, {"failures", s.failures}};
    if (s.batch) m["B"] = *s.batch;
    if (std::isfinite(s.mean)) {
      m["mean"] = s.mean;
      m["std"] = s.stddev;
    } else {
      m["mean"] = nullptr;
      m["std"] = nullptr;
    }
    m["bound_value"] = s.bound_value ? json(*s.bound_value) : json(nullptr);
    methods.push_back(m);
  }
  j["methods"] = methods;
  json errors = json::array();
  for (const CellResult& c : report.cells) {
    if (c.status == "ok") continue;
    errors.push_back({{"method", c.method}, {"seed", c.seed}, {"status", c.status}, {"message", c.error}});
  }
  j["errors"] = errors;
  return j.dump(2);
}

std::string batch_sweep_csv(const ExperimentReport& report) {
  std::set<std::int64_t> columns;
  std::vector<std::string> ids;
  for (const MethodSummary& s : report.summaries) {
    if (!s.batch) continue;
    columns.insert(*s.batch);
    if (std::find(ids.begin(), ids.end(), s.method_id) == ids.end()) ids.push_back(s.method_id);
  }
  if (ids.empty()) return {};
  std::ostringstream os;
  os << "method,stat";
  for (auto b : columns) os << ",B=" << b;
  os << '\n';
  for (const std::string& id : ids) {
    for (const char* stat : {"mean", "std"}) {
      os << id << ',' << stat;
      for (auto b : columns) {
        os << ',';
        for (const MethodSummary& s : report.summaries) {
          if (s.method_id == id && s.batch && *s.batch == b && std::isfinite(s.mean))
            os << fmt(std::string(stat) == "mean" ? s.mean : s.stddev);
        }
      }
      os << '\n';
    }
  }
  return os.str();
}

void write_artifacts(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(base / name);
    if (!out) throw ConfigurationError("cannot write " + (base / name).string());
    out << content;
  };
  write("metrics.csv", metrics_csv(report));
  write("summary.json", summary_json(report) + "\n");
  const std::string sweep = batch_sweep_csv(report);
  if (!sweep.empty()) write("bsweep.csv", sweep);
  for (const CellResult& c : report.cells) {
    if (c.rounds_csv.empty()) continue;
    write("rounds_" + safe_name(c.method) + "_s" + std::to_string(c.seed) + ".csv", c.rounds_csv);
  }
}

}  // namespace qasync
