#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cotlearn/cotlearn.hpp"

using namespace cotlearn;

namespace {

constexpr int kOk = 0;
constexpr int kInvariant = 1;
constexpr int kInput = 2;

std::ostream* open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return &std::cout;
  file.open(path);
  if (!file) throw InputError("cannot write '" + path + "'");
  return &file;
}

TMSpec load_tm(const std::string& path) {
  auto in = detail::open_in(path);
  return read_tm(in);
}

// ---- generate ------------------------------------------------------------------

struct GenerateArgs {
  std::string tm, threshold, lookup, bits, input, prompt;
  std::optional<std::size_t> steps;
  bool final_only = false;
};

template <class G>
int emit_chain(const G& g, const Alphabet& a, const TokenSeq& x, std::size_t steps, bool final_only) {
  if (final_only) {
    std::cout << a.name(e2e(g, x, steps)) << '\n';
  } else {
    std::cout << format_sequence(cot(g, x, steps), a) << '\n';
  }
  return kOk;
}

int run_generate(const GenerateArgs& o) {
  const int sources = !o.tm.empty() + !o.threshold.empty() + !o.lookup.empty();
  if (sources != 1) throw InputError("give exactly one of --tm, --threshold, --lookup");
  if (!o.input.empty() && !o.prompt.empty()) throw InputError("give --input or --prompt, not both");
  if (!o.tm.empty()) {
    TMSpec spec = load_tm(o.tm);
    auto alpha = tm_alphabet(spec.states);
    TokenSeq x = o.prompt.empty() ? pre(parse_bits(o.input)) : parse_sequence(o.prompt, *alpha);
    const std::size_t steps = o.steps.value_or(spec.steps);
    return emit_chain(make_tm_generator(spec), *alpha, x, steps, o.final_only);
  }
  const Alphabet bin = Alphabet::binary();
  const std::string text = o.prompt.empty() ? o.input : o.prompt;
  std::vector<int> bits = parse_bits(text);
  TokenSeq x(bits.begin(), bits.end());
  if (!o.threshold.empty()) {
    auto in = detail::open_in(o.threshold);
    ThresholdFile f = read_threshold(in);
    if (!o.steps && !f.steps) throw InputError("--T is required when the threshold file has no T= line");
    return emit_chain(f.predictor, bin, x, o.steps ? *o.steps : *f.steps, o.final_only);
  }
  LookupFamilyLearner fam(LookupFamily::parse(o.lookup));
  std::vector<int> b = parse_bits(o.bits);
  if (b.size() != fam.family->bits()) {
    throw InputError("--bits needs " + std::to_string(fam.family->bits()) + " bits for " + fam.name());
  }
  LookupMember g{fam.family, std::vector<std::uint8_t>(b.begin(), b.end())};
  if (!o.steps) throw InputError("--T is required");
  return emit_chain(g, bin, x, *o.steps, o.final_only);
}

// ---- learn ---------------------------------------------------------------------

struct LearnArgs {
  std::string family, mode = "cot", data, output;
  std::size_t steps = 1;
};

void write_hypothesis(std::ostream& os, const TMGenerator& g, std::size_t steps) {
  TMSpec spec = *g.spec;
  spec.steps = steps;
  write_tm(os, spec);
}
void write_hypothesis(std::ostream& os, const LinearThreshold& g, std::size_t) { write_threshold(os, g); }
void write_hypothesis(std::ostream& os, const SparseLinearThreshold& g, std::size_t) {
  write_threshold(os, g.dense());
}
void write_hypothesis(std::ostream& os, const LookupMember& g, std::size_t) {
  os << g.family->name() << ' ' << g.bit_string() << '\n';
}

template <class Family>
int learn_with(const Family& fam, const Alphabet& a, const LearnArgs& o) {
  auto in = detail::open_in(o.data);
  std::ofstream file;
  std::ostream* out = nullptr;
  if (parse_mode(o.mode) == Mode::cot) {
    CoTDataset s = read_cot_dataset(in, a, o.steps);
    auto h = cons_cot(s, [&](const PrefixDataset& p) { return fam.cons(p); });
    out = open_out(o.output, file);
    write_hypothesis(*out, h, o.steps);
  } else {
    E2EDataset s = read_e2e_dataset(in, a, o.steps);
    auto h = cons_e2e(s, fam);
    out = open_out(o.output, file);
    write_hypothesis(*out, h, o.steps);
  }
  return kOk;
}

int run_learn(const LearnArgs& o) {
  auto [kind, params] = detail::split_family(o.family);
  auto need = [&](const char* key) {
    auto it = params.find(key);
    if (it == params.end()) throw InputError("family '" + o.family + "' needs " + key + "=...");
    return it->second;
  };
  if (kind == "tm") {
    TMFamily fam{static_cast<int>(need("S"))};
    return learn_with(fam, *tm_alphabet(fam.states), o);
  }
  if (kind == "lin") return learn_with(LinearThresholdFamily{need("d")}, Alphabet::binary(), o);
  if (kind == "sparse") return learn_with(SparseThresholdFamily{need("d"), need("k")}, Alphabet::binary(), o);
  return learn_with(LookupFamilyLearner(LookupFamily::parse(o.family)), Alphabet::binary(), o);
}

// ---- compile-circuit ---------------------------------------------------------------

struct CompileArgs {
  std::string circuit, output, compiled;
  bool verify = false;
};

int report(const VerificationReport& rep) {
  if (rep.ok()) {
    std::cout << "OK " << rep.inputs_passed << '/' << rep.inputs_total << " inputs\n";
    return kOk;
  }
  std::size_t shown = 0;
  for (const auto& v : rep.violations) {
    if (shown++ == 10) {
      std::cout << "... " << rep.violations.size() - 10 << " more\n";
      break;
    }
    std::cout << describe(v) << '\n';
  }
  std::cout << "FAIL " << rep.inputs_passed << '/' << rep.inputs_total << " inputs\n";
  return kInvariant;
}

int run_compile(const CompileArgs& o) {
  auto in = detail::open_in(o.circuit);
  ThresholdCircuit c = read_circuit(in);
  if (!o.compiled.empty()) {
    auto kin = detail::open_in(o.compiled);
    ThresholdFile f = read_threshold(kin);
    if (!f.steps) throw InputError("compiled file lacks a T= line");
    return report(verify_compilation(c, f.predictor, *f.steps));
  }
  CompiledThreshold k = compile(normalize_circuit(c));
  if (o.verify) {
    // Check first so a guard refusal leaves no output behind.
    VerificationReport rep = verify_compilation(c, k);
    std::ofstream file;
    write_compiled(*open_out(o.output, file), k);
    return report(rep);
  }
  std::ofstream file;
  write_compiled(*open_out(o.output, file), k);
  return kOk;
}

// ---- simulate-tm ---------------------------------------------------------------------

struct SimulateArgs {
  std::string tm, input, via = "direct";
  bool check = false, trace = false;
  std::size_t random = 0;
  int states = 3;
  std::size_t steps = 10;
  std::size_t max_len = 6;
  std::uint64_t seed = 1;
};

int via_output(const TMSpec& spec, const std::vector<int>& w, const std::string& via) {
  if (via == "direct") return simulate_tm(spec, w).output;
  if (via == "autoregressive") {
    return post(TMToken::decode(e2e(make_tm_generator(spec), pre(w), spec.steps)));
  }
  if (via == "attention") {
    return post(TMToken::decode(e2e(make_attention_tm_generator(spec), pre(w), spec.steps)));
  }
  throw InputError("--via must be direct, autoregressive or attention");
}

// Output bits plus full per-step agreement of the two generated chains with
// the reference trace.
bool all_vias_agree(const TMSpec& spec, const std::vector<int>& w, std::string* why) {
  TMRun run = simulate_tm(spec, w);
  TokenSeq x = pre(w);
  TokenSeq a = cot(make_tm_generator(spec), x, spec.steps);
  TokenSeq b = cot(make_attention_tm_generator(spec), x, spec.steps);
  for (std::size_t t = 0; t < spec.steps; ++t) {
    const TMStep& s = run.trace.steps[t];
    const Token want = TMToken{s.state, s.write, s.move}.encode();
    if (a[x.size() + t] != want || b[x.size() + t] != want) {
      *why = "step " + std::to_string(t + 1) + " differs";
      return false;
    }
  }
  const int pa = post(TMToken::decode(a.back()));
  const int pb = post(TMToken::decode(b.back()));
  if (pa != run.output || pb != run.output) {
    *why = "outputs direct=" + std::to_string(run.output) + " autoregressive=" + std::to_string(pa) +
           " attention=" + std::to_string(pb);
    return false;
  }
  return true;
}

std::vector<std::vector<int>> all_inputs(std::size_t max_len) {
  std::vector<std::vector<int>> out;
  for (std::size_t l = 0; l <= max_len; ++l) {
    for (std::size_t m = 0; m < (std::size_t{1} << l); ++m) {
      std::vector<int> w(l);
      for (std::size_t j = 0; j < l; ++j) w[j] = static_cast<int>((m >> (l - 1 - j)) & 1U);
      out.push_back(std::move(w));
    }
  }
  return out;
}

int run_simulate(const SimulateArgs& o) {
  if (o.random > 0) {
    if (o.states < 1 || o.steps < 1) throw InputError("--states and --steps must be >= 1");
    std::mt19937_64 rng(o.seed);
    const auto inputs = all_inputs(o.max_len);
    std::size_t runs = 0, bad = 0;
    for (std::size_t k = 0; k < o.random; ++k) {
      TMSpec spec = random_tm_spec(o.states, o.steps, rng);
      for (const auto& w : inputs) {
        std::string why;
        ++runs;
        if (!all_vias_agree(spec, w, &why)) {
          if (++bad <= 10) std::cout << "machine " << k << " input " << detail::bits_string(w) << ": " << why << '\n';
        }
      }
    }
    std::cout << (bad ? "FAIL " : "OK ") << o.random << " machines, " << runs << " runs, " << bad
              << " disagreements\n";
    return bad ? kInvariant : kOk;
  }
  if (o.tm.empty()) throw InputError("a TM file is required unless --random is given");
  TMSpec spec = load_tm(o.tm);
  std::vector<int> w = parse_bits(o.input);
  if (o.trace) {
    TMRun run = simulate_tm(spec, w);
    std::cout << "t\tstate\tread\twrite\tmove\thead\n";
    for (std::size_t t = 0; t < run.trace.steps.size(); ++t) {
      const TMStep& s = run.trace.steps[t];
      std::cout << (t + 1) << '\t' << s.state << '\t' << symbol_name(s.read) << '\t' << symbol_name(s.write) << '\t'
                << (s.move > 0 ? "+1" : std::to_string(s.move)) << '\t' << s.head << '\n';
    }
  }
  if (o.check) {
    std::string why;
    if (!all_vias_agree(spec, w, &why)) {
      std::cout << "DISAGREE " << why << '\n';
      return kInvariant;
    }
  }
  std::cout << via_output(spec, w, o.via) << '\n';
  return kOk;
}

// ---- vcdim -----------------------------------------------------------------------------

struct VcArgs {
  std::string family, mode = "base";
  std::optional<std::size_t> steps;
  std::size_t cap = 20;
};

int run_vcdim(const VcArgs& o) {
  LookupFamilyLearner fam(LookupFamily::parse(o.family));
  std::size_t steps = 0;
  if (o.mode == "e2e") {
    if (o.steps) steps = *o.steps;
    else if (fam.family->kind() == LookupFamily::Kind::e1) steps = fam.family->T();
    else throw InputError("--T is required for e2e mode on " + fam.name());
    if (steps == 0) throw InputError("--T must be >= 1");
  } else if (o.mode != "base") {
    throw InputError("--mode must be base or e2e");
  }
  std::cout << vcdim_bruteforce(fam, default_pool(*fam.family, o.cap), steps) << '\n';
  return kOk;
}

// ---- experiment -------------------------------------------------------------------------

struct ExperimentArgs {
  std::string config, output;
  std::optional<std::uint64_t> seed;
};

int run_experiment_cmd(const ExperimentArgs& o) {
  auto in = detail::open_in(o.config);
  auto kv = read_key_values(in);
  if (o.seed) kv["seed"] = std::to_string(*o.seed);
  if (!o.output.empty()) kv["output"] = o.output;
  ExperimentConfig cfg = ExperimentConfig::from_key_values(kv);
  auto rows = run_experiment(cfg, worker_count());
  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << kCsvHeader << '\n';
    for (const auto& r : rows) std::cout << to_csv(r) << '\n';
    print_summary(std::cerr, summarize(rows));
  } else {
    append_csv(cfg.output, rows);
    print_summary(std::cout, summarize(rows));
  }
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  if (failed) std::cerr << failed << " of " << rows.size() << " rows failed\n";
  return failed ? kInvariant : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autoregressive chain-of-thought generation and learning toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Print the chain produced by a generator");
  g->add_option("--tm", gen.tm, "TM transition-table file");
  g->add_option("--threshold", gen.threshold, "linear threshold file");
  g->add_option("--lookup", gen.lookup, "lookup family spec, e.g. e1:D=2,T=4");
  g->add_option("--bits", gen.bits, "lookup member bits");
  g->add_option("--input", gen.input, "input bits (wrapped by Pre for TMs)");
  g->add_option("--prompt", gen.prompt, "raw comma-separated prompt tokens");
  g->add_option("--T", gen.steps, "number of generation steps");
  g->add_flag("--e2e", gen.final_only, "print only the final token");

  LearnArgs learn;
  auto* l = app.add_subcommand("learn", "Fit a consistent member to a dataset");
  l->add_option("--family", learn.family, "tm:S=3, lin:d=4, sparse:d=4,k=2, e1:D=2,T=3, ldim:D=3, collapse:D=4")
      ->required();
  l->add_option("--mode", learn.mode, "cot or e2e");
  l->add_option("--data", learn.data, "dataset file")->required();
  l->add_option("--T", learn.steps, "chain length")->required();
  l->add_option("--output", learn.output, "hypothesis file (default stdout)");

  CompileArgs comp;
  auto* c = app.add_subcommand("compile-circuit", "Compile a threshold circuit into one iterated threshold");
  c->add_option("circuit", comp.circuit, "circuit file")->required();
  c->add_option("--output", comp.output, "compiled file (default stdout)");
  c->add_flag("--verify", comp.verify, "exhaustively verify the compilation");
  c->add_option("--compiled", comp.compiled, "verify this compiled file instead of compiling");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate-tm", "Run a Turing machine");
  s->add_option("tm", sim.tm, "TM file");
  s->add_option("--input", sim.input, "input bits");
  s->add_option("--via", sim.via, "direct, autoregressive or attention");
  s->add_flag("--check", sim.check, "run every via and compare");
  s->add_flag("--trace", sim.trace, "print the step trace");
  s->add_option("--random", sim.random, "check this many random machines on all short inputs");
  s->add_option("--states", sim.states, "states of random machines");
  s->add_option("--steps", sim.steps, "steps of random machines");
  s->add_option("--max-len", sim.max_len, "longest input for --random");
  s->add_option("--seed", sim.seed, "seed for --random");

  VcArgs vc;
  auto* v = app.add_subcommand("vcdim", "Brute-force VC dimension of a lookup family");
  v->add_option("family", vc.family, "e1:D=2,T=2, ldim:D=3 or collapse:D=4")->required();
  v->add_option("--mode", vc.mode, "base or e2e");
  v->add_option("--T", vc.steps, "steps for e2e mode");
  v->add_option("--pool", vc.cap, "candidate pool size (at most 20)");

  ExperimentArgs ex;
  auto* e = app.add_subcommand("experiment", "Run a sample-complexity grid");
  e->add_option("config", ex.config, "key=value config file")->required();
  e->add_option("--output", ex.output, "CSV path (overrides the config)");
  e->add_option("--seed", ex.seed, "seed (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kInput;
  }

  try {
    if (*g) return run_generate(gen);
    if (*l) return run_learn(learn);
    if (*c) return run_compile(comp);
    if (*s) return run_simulate(sim);
    if (*v) return run_vcdim(vc);
    if (*e) return run_experiment_cmd(ex);
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInput;
  } catch (const NotRealizable& err) {
    std::cerr << "not realizable: " << err.what() << '\n';
    return kInvariant;
  } catch (const InvariantViolation& err) {
    std::cerr << "invariant violated: " << err.what() << '\n';
    return kInvariant;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInvariant;
  }
  return kInput;
}
