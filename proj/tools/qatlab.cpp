// qatlab: command-line driver for the quantizer, surrogate, Fourier, statistics,
// training and benchmark modules.
//
// Every subcommand writes CSV (to --out, or stdout) preceded by `# key = value`
// lines echoing the resolved configuration, and a short summary (stdout when
// --out is given, stderr otherwise).
//
// Exit status: 0 success, 1 verification failure, 2 usage or IO error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "qatlab/bench.hpp"
#include "qatlab/io.hpp"
#include "qatlab/quantizer.hpp"
#include "qatlab/rotation_fourier.hpp"
#include "qatlab/stats.hpp"
#include "qatlab/surrogates.hpp"
#include "qatlab/train.hpp"
#include "qatlab/verify.hpp"

namespace {

using namespace qatlab;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

struct Flag {
  std::string key;
  std::string fallback;
  std::string help;
};

/// One subcommand: its flags, the raw values CLI11 fills in, and the handler.
struct Command {
  std::string name;
  std::string description;
  std::vector<Flag> flags;
  std::function<int(const RunConfig&, std::ostream& csv, std::ostream& summary)> run;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  std::string out_path;
};

std::string flag_name(const std::string& key) {
  std::string s = "--" + key;
  for (char& ch : s)
    if (ch == '_') ch = '-';
  return s;
}

/// defaults < config file < command line
RunConfig resolve(const Command& cmd) {
  RunConfig cfg;
  for (const Flag& f : cmd.flags) cfg.set(f.key, f.fallback);
  if (!cmd.config_path.empty()) {
    for (const auto& [k, v] : parse_config_file(cmd.config_path)) {
      if (k == "command") {
        if (v != cmd.name) throw IoError("config file is for command '" + v + "', not '" + cmd.name + "'");
        continue;
      }
      if (!cfg.has(k)) throw IoError("unknown config key '" + k + "' for " + cmd.name);
      cfg.set(k, v);
    }
  }
  for (const auto& [k, opt] : cmd.options)
    if (opt->count() > 0) cfg.set(k, cmd.raw.at(k));
  cfg.set("command", cmd.name);
  return cfg;
}

SurrogateSpec surrogate_from(const RunConfig& cfg) {
  const std::string& kind = cfg.get("surrogate");
  if (kind == "ste") return SurrogateSpec::ste();
  if (kind == "dsq") return SurrogateSpec::dsq(cfg.get_double("alpha"));
  if (kind == "rdfs") {
    const double a = cfg.get_double("amplitude");
    const int m = static_cast<int>(cfg.get_int("order"));
    return cfg.has("ablation") && cfg.get_bool("ablation") ? SurrogateSpec::rdfs_ablation(a, m)
                                                           : SurrogateSpec::rdfs(a, m);
  }
  throw DomainError("--surrogate must be one of ste, rdfs, dsq; got '" + kind + "'");
}

Rounding rounding_from(const std::string& s) {
  if (s == "half_to_even") return Rounding::half_to_even;
  if (s == "half_away_from_zero") return Rounding::half_away_from_zero;
  throw DomainError("--rounding must be half_to_even or half_away_from_zero");
}

std::string param_of(const SurrogateSpec& spec) {
  switch (spec.kind()) {
    case SurrogateKind::rdfs: return format_number(spec.as_rdfs().amplitude);
    case SurrogateKind::dsq: return format_number(spec.as_dsq().alpha);
    case SurrogateKind::ste: break;
  }
  return "0";
}

// --- quantize ---------------------------------------------------------------

int run_quantize(const RunConfig& cfg, std::ostream& csv, std::ostream& summary) {
  NumericInput in;
  if (const std::string& path = cfg.get("input"); !path.empty()) {
    in = parse_numbers(read_file(path));
  } else {
    Rng rng(cfg.get_uint("seed"));
    const std::uint64_t n = cfg.get_uint("n");
    for (std::uint64_t i = 0; i < n; ++i) {
      const double v = rng.uniform(-4.0, 4.0);
      in.tokens.push_back(format_number(v));
      in.values.push_back(v);
    }
  }
  QuantConfig q = QuantConfig::make(static_cast<int>(cfg.get_int("bits")), cfg.get_bool("signed"), 1.0,
                                    cfg.get_int("zero_point"), rounding_from(cfg.get("rounding")));
  if (cfg.get("scale") == "auto") {
    q = q.with_scale(compute_scale(Tensor::vector(in.values.empty() ? std::vector<double>{0.0} : in.values), q));
  } else {
    q = q.with_scale(cfg.get_double("scale"));
  }

  csv << "x,x_q_int,x_dequant\n";
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < in.values.size(); ++i) {
    const std::int64_t level = quantize(in.values[i], q);
    if (!in_clip_range(in.values[i], q)) ++clipped;
    csv << in.tokens[i] << ',' << level << ',' << format_real(dequantize(level, q)) << '\n';
  }
  summary << "quantized " << in.values.size() << " values, bits=" << q.bits << " scale=" << format_number(q.scale)
          << " levels=[" << q.q_min << ", " << q.q_max << "], clipped=" << clipped << '\n';
  return kExitOk;
}

// --- surrogate-eval ---------------------------------------------------------

int run_surrogate_eval(const RunConfig& cfg, std::ostream& csv, std::ostream& summary) {
  const SurrogateSpec spec = surrogate_from(cfg);
  const QuantConfig q = QuantConfig::make(static_cast<int>(cfg.get_int("bits")), true, cfg.get_double("scale"));
  const double from = cfg.get_double("from");
  const double to = cfg.get_double("to");
  const std::int64_t points = cfg.get_int("points");
  if (points < 2 || !(from < to)) throw DomainError("surrogate-eval needs --points >= 2 and --from < --to");

  std::vector<double> xs(static_cast<std::size_t>(points));
  for (std::size_t i = 0; i < xs.size(); ++i)
    xs[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(points - 1);
  const Tensor x = Tensor::vector(xs);
  const Tensor g = surrogate_multipliers(x, q, spec);

  csv << "x,x_q,grad_multiplier\n";
  double g_min = g[0], g_max = g[0];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    csv << format_number(xs[i]) << ',' << format_number(fake_quant(xs[i], q)) << ',' << format_number(g[i]) << '\n';
    g_min = std::min(g_min, g[i]);
    g_max = std::max(g_max, g[i]);
  }
  summary << spec.label() << ": multiplier range [" << format_number(g_min) << ", " << format_number(g_max)
          << "] over " << points << " points\n";
  return kExitOk;
}

// --- fourier ----------------------------------------------------------------

int run_fourier(const RunConfig& cfg, std::ostream& csv, std::ostream& summary) {
  const std::int64_t degree = cfg.get_int("order");
  if (degree < 0) throw DomainError("--order must be >= 0");
  const double vanilla = cfg.get_double("vanilla_amplitude");
  const auto f = fourier_coefficients(zigzag, static_cast<std::size_t>(degree), kZigzagPeriod);

  csv << "k,a_k,b_k,b_k_closed,l2_error_partial_sum\n";
  for (std::int64_t k = 0; k <= degree; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const double a = k == 0 ? f.a0() : f.a()[uk - 1];
    const double b = k == 0 ? 0.0 : f.b()[uk - 1];
    const double closed = k == 0 ? 0.0 : zigzag_sine_coefficient(uk, vanilla);
    csv << k << ',' << format_number(a) << ',' << format_number(b) << ',' << format_number(closed) << ','
        << format_number(l2_error(zigzag, f.truncated(uk), kZigzagPeriod)) << '\n';
  }
  summary << "zigzag series to degree " << degree << "; ||f|| = "
          << format_number(l2_error(zigzag, TrigPolynomial::constant(0.0, kZigzagPeriod), kZigzagPeriod)) << '\n';
  return kExitOk;
}

// --- verify -----------------------------------------------------------------

int run_verify(const RunConfig& cfg, std::ostream& csv, std::ostream& summary) {
  const std::string& theorem = cfg.get("theorem");
  std::vector<CheckResult> checks;
  if (theorem == "fourier") {
    FourierVerifyOptions opt;
    opt.vanilla_amplitude = cfg.get_double("vanilla_amplitude");
    opt.competitors = cfg.get_uint("competitors");
    opt.seed = cfg.get_uint("seed");
    checks = verify_fourier(opt);
  } else if (theorem == "stats") {
    StatsVerifyOptions opt;
    opt.samples = cfg.get_uint("samples");
    opt.seed = cfg.get_uint("seed");
    opt.workers = static_cast<unsigned>(cfg.get_uint("workers"));
    checks = verify_stats(opt);
  } else {
    throw DomainError("--theorem must be fourier or stats");
  }
  print_checks(csv, checks);
  std::size_t failed = 0;
  for (const auto& c : checks) failed += c.passed ? 0 : 1;
  summary << theorem << ": " << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  for (const auto& c : checks)
    if (!c.passed) summary << "FAIL " << c.name << ": measured " << c.measured << ", expected " << c.expected << '\n';
  return failed == 0 ? kExitOk : kExitVerifyFailed;
}

// --- stats ------------------------------------------------------------------

int run_stats(const RunConfig& cfg, std::ostream& csv, std::ostream& summary) {
  const SurrogateSpec spec = surrogate_from(cfg);
  const StatsReport r =
      monte_carlo_stats(spec, cfg.get_double("l"), cfg.get_double("u"), cfg.get_uint("samples"),
                        cfg.get_uint("seed"), static_cast<int>(cfg.get_int("bits")),
                        static_cast<unsigned>(cfg.get_uint("workers")));
  csv << "method,param,l,u,expectation_closed,variance_closed,expectation_mc,variance_mc,mc_samples,mc_stderr_mean,"
         "seed\n";
  csv << to_string(spec.kind()) << ',' << param_of(spec) << ',' << format_number(r.l) << ',' << format_number(r.u)
      << ',' << (r.expectation_closed ? format_number(*r.expectation_closed) : "") << ','
      << (r.variance_closed ? (r.variance_closed->is_infinite() ? "inf" : format_number(r.variance_closed->value()))
                            : "")
      << ',' << format_number(r.expectation_mc) << ',' << format_number(r.variance_mc) << ',' << r.mc_samples << ','
      << format_number(r.mc_stderr_mean) << ',' << r.seed << '\n';
  summary << spec.label() << ": E_mc=" << format_number(r.expectation_mc) << " Var_mc=" << format_number(r.variance_mc);
  if (r.expectation_closed) {
    summary << " | E_closed=" << format_number(*r.expectation_closed)
            << " Var_closed=" << r.variance_closed->to_string();
  } else {
    summary << " | no closed form";
  }
  summary << '\n';
  return kExitOk;
}

// --- train ------------------------------------------------------------------

int run_train(const RunConfig& cfg, std::ostream& csv, std::ostream& summary) {
  TrainConfig tc;
  tc.bits = static_cast<int>(cfg.get_int("bits"));
  tc.quant_on = cfg.get_bool("quant");
  tc.surrogate = surrogate_from(cfg);
  tc.steps = cfg.get_uint("steps");
  tc.batch_size = cfg.get_uint("batch_size");
  tc.learning_rate = cfg.get_double("lr");
  tc.seed = cfg.get_uint("seed");
  const std::string& ds = cfg.get("dataset");
  if (ds == "linear_synth") {
    tc.dataset = DatasetKind::linear_synth;
  } else if (ds == "sine_synth") {
    tc.dataset = DatasetKind::sine_synth;
  } else {
    throw DomainError("--dataset must be linear_synth or sine_synth");
  }
  tc.log_every = cfg.get_uint("log_every");
  tc.dims.d_hidden = cfg.get_uint("hidden");
  tc.train_samples = cfg.get_uint("samples");
  tc.noise_sigma = cfg.get_double("noise");
  if (tc.dims.d_hidden == 0 || tc.train_samples == 0) throw DomainError("--hidden and --samples must be >= 1");

  const TrainLog log = train(tc);
  csv << "step,loss,grad_norm,lr\n";
  for (const auto& row : log.rows) {
    csv << row.step << ',' << format_number(row.loss) << ',' << format_number(row.grad_norm) << ','
        << format_number(row.lr) << '\n';
  }
  if (log.failed) {
    summary << "training stopped at step " << log.failure_step << ": non-finite loss or gradient\n";
  } else {
    summary << tc.surrogate.label() << ": final full-dataset loss " << format_number(log.final_loss) << " after "
            << tc.steps << " steps\n";
  }
  return kExitOk;
}

// --- bench ------------------------------------------------------------------

int run_bench(const RunConfig& cfg, std::ostream& csv, std::ostream& summary) {
  const std::size_t n = cfg.get_uint("n");
  const std::size_t repeats = cfg.get_uint("repeats");
  const std::uint64_t seed = cfg.get_uint("seed");
  const SurrogateSpec specs[] = {SurrogateSpec::ste(),
                                 SurrogateSpec::rdfs(cfg.get_double("amplitude"), static_cast<int>(cfg.get_int("order"))),
                                 SurrogateSpec::dsq(cfg.get_double("alpha"))};
  std::vector<BenchResult> results;
  for (const auto& spec : specs) results.push_back(bench_surrogate(spec, n, repeats, seed));

  csv << "label,n_elems,repeats,median_ns,p10_ns,p90_ns,workspace_bytes,host_descriptor\n";
  for (const auto& r : results) {
    csv << r.label << ',' << r.n_elems << ',' << r.repeats << ',' << format_number(r.median_ns) << ','
        << format_number(r.p10_ns) << ',' << format_number(r.p90_ns) << ',' << r.workspace_bytes << ',' << r.host
        << '\n';
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "median ns: ste %.0f, rdfs %.0f, dsq %.0f; dsq/rdfs = %.2fx; pinned=%s\n",
                results[0].median_ns, results[1].median_ns, results[2].median_ns,
                results[2].median_ns / results[1].median_ns, results[0].pinned ? "yes" : "no");
  summary << buf;
  return kExitOk;
}

// ---------------------------------------------------------------------------

std::vector<Flag> surrogate_flags(const std::string& kind) {
  return {{"surrogate", kind, "backward rule: ste | rdfs | dsq"},
          {"amplitude", "0.21", "RDFS amplitude A"},
          {"order", "0", "RDFS truncation order M"},
          {"alpha", "0.5", "DSQ sharpness alpha in (0, 1)"},
          {"ablation", "false", "allow RDFS amplitudes up to 2*sqrt(2)/pi^2"}};
}

std::vector<Flag> concat(std::vector<Flag> a, const std::vector<Flag>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<std::unique_ptr<Command>> make_commands() {
  std::vector<std::unique_ptr<Command>> cmds;
  auto add = [&](std::string name, std::string description, std::vector<Flag> flags, auto fn) {
    auto c = std::make_unique<Command>();
    c->name = std::move(name);
    c->description = std::move(description);
    c->flags = std::move(flags);
    c->run = fn;
    cmds.push_back(std::move(c));
  };

  add("quantize", "fake-quantize numbers and print integer codes",
      {{"bits", "3", "bitwidth in [2, 8]"},
       {"signed", "true", "signed integer range"},
       {"scale", "1", "step size, or 'auto' for the max-abs scale of the input"},
       {"zero_point", "0", "integer zero point"},
       {"rounding", "half_to_even", "half_to_even | half_away_from_zero"},
       {"input", "", "whitespace-separated numbers; random values when empty"},
       {"n", "16", "count of random values when no input is given"},
       {"seed", "0", "seed for random values"}},
      run_quantize);
  add("surrogate-eval", "tabulate a surrogate gradient multiplier over a grid",
      concat(surrogate_flags("rdfs"), {{"bits", "3", "bitwidth in [2, 8]"},
                                       {"scale", "1", "quantizer step size"},
                                       {"from", "-4", "first x"},
                                       {"to", "4", "last x"},
                                       {"points", "81", "grid size"}}),
      run_surrogate_eval);
  add("fourier", "zigzag Fourier coefficients and partial-sum errors",
      {{"order", "5", "highest harmonic"},
       {"vanilla_amplitude", format_number(kVanillaAmplitude), "reference amplitude for the closed-form column"}},
      run_fourier);
  add("verify", "run the numerical checks for the Fourier or statistics results",
      {{"theorem", "fourier", "fourier | stats"},
       {"samples", "1000000", "Monte Carlo samples per case"},
       {"seed", "0", "base seed"},
       {"workers", "0", "Monte Carlo threads (0 = all cores)"},
       {"competitors", "1000", "random competitors per degree"},
       {"vanilla_amplitude", format_number(kVanillaAmplitude), "expected zigzag amplitude"}},
      run_verify);
  add("stats", "Monte Carlo and closed-form gradient statistics",
      concat(surrogate_flags("rdfs"), {{"l", "-1", "clip range lower bound"},
                                       {"u", "1", "clip range upper bound"},
                                       {"bits", "3", "bitwidth; the range holds 2^bits - 1 intervals"},
                                       {"samples", "1000000", "Monte Carlo samples"},
                                       {"seed", "0", "base seed"},
                                       {"workers", "0", "threads (0 = all cores); results do not depend on it"}}),
      run_stats);
  add("train", "train a small quantized MLP and log loss and gradient norm",
      concat(surrogate_flags("rdfs"), {{"bits", "3", "weight bitwidth"},
                                       {"quant", "true", "fake-quantize weights in the forward pass"},
                                       {"steps", "2000", "SGD steps"},
                                       {"batch_size", "32", "minibatch size"},
                                       {"lr", "0.05", "learning rate"},
                                       {"seed", "0", "run seed"},
                                       {"dataset", "linear_synth", "linear_synth | sine_synth"},
                                       {"log_every", "1", "log interval in steps"},
                                       {"hidden", "32", "hidden width"},
                                       {"samples", "512", "training set size"},
                                       {"noise", "0.01", "target noise sigma"}}),
      run_train);
  add("bench", "time the STE, RDFS and DSQ backward kernels",
      {{"n", "1000000", "elements per tensor"},
       {"repeats", "20", "timed passes per rule"},
       {"seed", "0", "input seed"},
       {"amplitude", "0.21", "RDFS amplitude"},
       {"order", "0", "RDFS order"},
       {"alpha", "0.5", "DSQ alpha"}},
      run_bench);
  return cmds;
}

int execute(Command& cmd) {
  const RunConfig cfg = resolve(cmd);
  std::ofstream file;
  std::ostringstream body;
  std::ostream* summary = &std::cerr;
  if (!cmd.out_path.empty()) {
    file.open(cmd.out_path, std::ios::binary);
    if (!file) throw IoError("cannot write '" + cmd.out_path + "'");
    summary = &std::cout;
  }
  const int status = cmd.run(cfg, body, *summary);

  std::ostream& out = cmd.out_path.empty() ? static_cast<std::ostream&>(std::cout) : file;
  cfg.write_header(out);
  out << body.str();
  out.flush();
  if (!out) throw IoError("write failed");
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qatlab: quantization-aware training surrogates, statistics and benchmarks"};
  app.require_subcommand(1);
  auto commands = make_commands();
  for (auto& cmd : commands) {
    cmd->app = app.add_subcommand(cmd->name, cmd->description);
    for (const Flag& f : cmd->flags) {
      std::string help = f.help;
      if (!f.fallback.empty()) help += " [default: " + f.fallback + "]";
      cmd->options[f.key] = cmd->app->add_option(flag_name(f.key), cmd->raw[f.key], help);
    }
    cmd->app->add_option("--config", cmd->config_path, "flat key = value file; command-line flags override it");
    cmd->app->add_option("--out", cmd->out_path, "CSV output path (default: stdout)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (auto& cmd : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      return execute(*cmd);
    } catch (const std::exception& e) {
      std::cerr << "qatlab " << cmd->name << ": error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  return kExitUsage;
}
