#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <limits>
#include <random>
#include <set>
#include <tuple>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cotlearn/errors.hpp"
#include "cotlearn/io.hpp"
#include "cotlearn/learning.hpp"
#include "cotlearn/linthresh.hpp"
#include "cotlearn/lookup.hpp"
#include "cotlearn/rational.hpp"
#include "cotlearn/turing.hpp"

namespace cotlearn {

namespace detail {
inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) out.push_back(parse_count(item, what));
  return out;
}

// "e1:D=3" or "e1:D=3,T=4" -> kind and key/value map.
inline std::pair<std::string, std::map<std::string, std::size_t>> split_family(const std::string& spec) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  std::map<std::string, std::size_t> kv;
  if (colon != std::string::npos) {
    for (const auto& item : split_list(spec.substr(colon + 1))) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw InputError("bad family parameter '" + item + "'");
      kv[item.substr(0, eq)] = parse_count(item.substr(eq + 1), "family parameter");
    }
  }
  return {kind, kv};
}
}  // namespace detail

// Flat key=value configuration:
//   family=e1:D=3   modes=cot,e2e   T=2,4,8   m=0,4,8   trials=50   seed=1
//   eval_n=1000     output=out.csv  input_len=6         record_timing=0
struct ExperimentConfig {
  std::string family;
  std::vector<Mode> modes{Mode::cot};
  std::vector<std::size_t> steps;
  std::vector<std::size_t> sizes;
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::size_t eval_n = 1000;
  std::string output;
  std::size_t input_len = 6;
  bool record_timing = false;

  static ExperimentConfig from_key_values(const std::map<std::string, std::string>& kv) {
    ExperimentConfig c;
    static const std::set<std::string> known{"family", "mode", "modes", "T", "m", "trials", "seed",
                                             "eval_n", "output", "input_len", "record_timing"};
    for (const auto& [k, v] : kv) {
      if (!known.count(k)) throw InputError("unknown config key '" + k + "'");
    }
    auto get = [&](const char* k) -> std::optional<std::string> {
      auto it = kv.find(k);
      if (it == kv.end()) return std::nullopt;
      return it->second;
    };
    if (auto v = get("family")) c.family = *v;
    if (get("mode") && get("modes")) throw InputError("give either mode or modes, not both");
    if (auto v = get("mode") ? get("mode") : get("modes")) {
      c.modes.clear();
      for (const auto& m : detail::split_list(*v)) c.modes.push_back(parse_mode(m));
    }
    if (auto v = get("T")) c.steps = detail::parse_size_list(*v, "T");
    if (auto v = get("m")) c.sizes = detail::parse_size_list(*v, "m");
    if (auto v = get("trials")) c.trials = detail::parse_count(*v, "trials");
    if (auto v = get("seed")) c.seed = detail::parse_count(*v, "seed");
    if (auto v = get("eval_n")) c.eval_n = detail::parse_count(*v, "eval_n");
    if (auto v = get("output")) c.output = *v;
    if (auto v = get("input_len")) c.input_len = detail::parse_count(*v, "input_len");
    if (auto v = get("record_timing")) c.record_timing = detail::parse_count(*v, "record_timing") != 0;
    auto [kind, params] = detail::split_family(c.family);
    if (c.steps.empty() && params.count("T")) c.steps = {params.at("T")};
    c.validate();
    return c;
  }

  void validate() const {
    if (family.empty()) throw InputError("config needs family=...");
    if (modes.empty()) throw InputError("config needs at least one mode");
    if (steps.empty()) throw InputError("config needs T=...");
    for (auto t : steps)
      if (t == 0) throw InputError("T values must be >= 1");
    if (sizes.empty()) throw InputError("config needs m=...");
    for (std::size_t i = 1; i < sizes.size(); ++i)
      if (sizes[i] <= sizes[i - 1]) throw InputError("sample sizes m must be strictly increasing");
    if (trials < 1) throw InputError("trials must be >= 1");
    auto [kind, params] = detail::split_family(family);
    if (kind == "e1" && params.count("T") && (steps.size() != 1 || steps[0] != params.at("T"))) {
      throw InputError("family fixes T=" + std::to_string(params.at("T")) + " but the T list differs");
    }
  }
};

struct ResultRow {
  std::string family;
  Mode mode = Mode::cot;
  std::size_t steps = 0;
  std::size_t m = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::optional<Rational> error;
  double wall_ms = 0;
  std::string status = "ok";
};

inline const char* kCsvHeader = "family,mode,T,m,trial,seed,error,error_exact,wall_ms,status";

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string to_csv(const ResultRow& r) {
  std::ostringstream os;
  os << csv_quote(r.family) << ',' << mode_name(r.mode) << ',' << r.steps << ',' << r.m << ',' << r.trial << ','
     << r.seed << ',';
  if (r.error) os << to_decimal(*r.error, 6) << ',' << r.error->get_num() << '/' << r.error->get_den();
  else os << ',';
  std::ostringstream ms;
  ms.setf(std::ios::fixed);
  ms.precision(3);
  ms << r.wall_ms;
  os << ',' << ms.str() << ',' << csv_quote(r.status);
  return os.str();
}

// Appends rows; the header is written only when the file is new or empty.
inline void append_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  namespace fs = std::filesystem;
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw InputError("cannot write '" + path + "'");
  if (fresh) out << kCsvHeader << '\n';
  for (const auto& r : rows) out << to_csv(r) << '\n';
}

// ---- one trial for any supported family ----------------------------------------------

namespace detail {

inline std::string family_with_steps(const std::string& spec, std::size_t steps) {
  auto [kind, params] = split_family(spec);
  if (kind == "e1" && !params.count("T")) return spec + ",T=" + std::to_string(steps);
  return spec;
}

template <class Family, class G, class D>
ResultRow run_cell(const Family& fam, const G& f_star, const D& dist, const std::string& family, Mode mode,
                   std::size_t steps, std::size_t m, std::size_t trial, std::uint64_t seed, std::size_t eval_n,
                   bool timing) {
  ResultRow row{family, mode, steps, m, trial, seed, std::nullopt, 0, "ok"};
  auto t0 = std::chrono::steady_clock::now();
  TrialResult r = pac_trial(fam, f_star, dist, m, steps, mode, eval_n, seed);
  auto t1 = std::chrono::steady_clock::now();
  row.error = r.error;
  if (timing) row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return row;
}

}  // namespace detail

inline ResultRow run_experiment_cell(const ExperimentConfig& cfg, std::size_t steps, Mode mode, std::size_t m,
                                     std::size_t trial) {
  const std::string family = detail::family_with_steps(cfg.family, steps);
  const std::uint64_t seed = derive_seed(cfg.seed, trial);
  std::mt19937_64 target_rng(derive_seed(seed, 1));
  try {
    auto [kind, params] = detail::split_family(family);
    if (kind == "e1" || kind == "ldim" || kind == "collapse") {
      LookupFamilyLearner fam(LookupFamily::parse(family));
      LookupMember f_star{fam.family, std::vector<std::uint8_t>(fam.family->bits())};
      std::uniform_int_distribution<int> bit(0, 1);
      for (auto& b : f_star.b) b = static_cast<std::uint8_t>(bit(target_rng));
      UniformPoints dist{fam.family->points()};
      return detail::run_cell(fam, f_star, dist, family, mode, steps, m, trial, seed, cfg.eval_n,
                              cfg.record_timing);
    }
    if (kind == "tm") {
      if (!params.count("S") || params.size() != 1) throw InputError("tm family spec is 'tm:S=<states>'");
      TMFamily fam{static_cast<int>(params.at("S"))};
      TMGenerator f_star = make_tm_generator(random_tm_spec(fam.states, steps, target_rng));
      BitStrings dist{0, cfg.input_len, true};
      return detail::run_cell(fam, f_star, dist, family, mode, steps, m, trial, seed, cfg.eval_n,
                              cfg.record_timing);
    }
    if (kind == "lin") {
      if (!params.count("d") || params.size() != 1) throw InputError("lin family spec is 'lin:d=<window>'");
      LinearThresholdFamily fam{params.at("d")};
      std::uniform_int_distribution<int> wd(-3, 3);
      LinearThreshold f_star{std::vector<Rational>(fam.d), Rational(wd(target_rng)) + Rational(1, 2)};
      for (auto& w : f_star.w) w = wd(target_rng);
      BitStrings dist{1, cfg.input_len, false};
      return detail::run_cell(fam, f_star, dist, family, mode, steps, m, trial, seed, cfg.eval_n,
                              cfg.record_timing);
    }
    throw InputError("unknown family '" + kind + "'");
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    return ResultRow{family, mode, steps, m, trial, seed, std::nullopt, 0, std::string("error: ") + e.what()};
  }
}

inline std::size_t worker_count() {
  if (const char* env = std::getenv("COTLEARN_WORKERS")) {
    try {
      std::size_t n = std::stoul(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw InputError("COTLEARN_WORKERS must be a positive integer");
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

// Rows ordered by (T, mode, m, trial) regardless of worker scheduling.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1) {
  cfg.validate();
  struct Cell {
    std::size_t steps;
    Mode mode;
    std::size_t m;
    std::size_t trial;
  };
  std::vector<Cell> cells;
  for (auto t : cfg.steps)
    for (auto mode : cfg.modes)
      for (auto m : cfg.sizes)
        for (std::size_t k = 0; k < cfg.trials; ++k) cells.push_back({t, mode, m, k});
  // Surface configuration errors before spawning workers.
  (void)run_experiment_cell(cfg, cells.front().steps, cells.front().mode, 0, 0);

  std::vector<ResultRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      rows[i] = run_experiment_cell(cfg, c.steps, c.mode, c.m, c.trial);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return rows;
}

// ---- summaries ----------------------------------------------------------------------

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw InputError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

struct CellSummary {
  std::size_t steps;
  Mode mode;
  std::size_t m;
  double median_error;
  std::size_t failures;
};

struct FirstZeroSummary {
  std::size_t steps;
  Mode mode;
  // Median over trials of the smallest grid m with zero error; +inf when more
  // than half the trials never reach zero.
  double median_first_zero;
};

struct ExperimentSummary {
  std::vector<CellSummary> cells;
  std::vector<FirstZeroSummary> first_zero;
};

inline ExperimentSummary summarize(const std::vector<ResultRow>& rows) {
  ExperimentSummary s;
  std::map<std::tuple<std::size_t, int, std::size_t>, std::vector<const ResultRow*>> by_cell;
  std::map<std::tuple<std::size_t, int, std::size_t>, double> first_zero;  // (T, mode, trial)
  for (const auto& r : rows) {
    by_cell[{r.steps, static_cast<int>(r.mode), r.m}].push_back(&r);
    auto key = std::make_tuple(r.steps, static_cast<int>(r.mode), r.trial);
    auto it = first_zero.try_emplace(key, std::numeric_limits<double>::infinity()).first;
    if (r.error && *r.error == 0) it->second = std::min(it->second, static_cast<double>(r.m));
  }
  for (const auto& [key, list] : by_cell) {
    std::vector<double> errs;
    std::size_t fails = 0;
    for (const ResultRow* r : list) {
      if (r->error) errs.push_back(r->error->get_d());
      else ++fails;
    }
    s.cells.push_back({std::get<0>(key), static_cast<Mode>(std::get<1>(key)), std::get<2>(key),
                       errs.empty() ? std::numeric_limits<double>::quiet_NaN() : median_of(errs), fails});
  }
  std::map<std::pair<std::size_t, int>, std::vector<double>> fz;
  for (const auto& [key, m] : first_zero) fz[{std::get<0>(key), std::get<1>(key)}].push_back(m);
  for (const auto& [key, v] : fz) s.first_zero.push_back({key.first, static_cast<Mode>(key.second), median_of(v)});
  return s;
}

inline void print_summary(std::ostream& os, const ExperimentSummary& s) {
  os << "T\tmode\tm\tmedian_error\tfailed\n";
  for (const auto& c : s.cells) {
    os << c.steps << '\t' << mode_name(c.mode) << '\t' << c.m << '\t' << c.median_error << '\t' << c.failures
       << '\n';
  }
  os << "T\tmode\tmedian_first_zero_m\n";
  for (const auto& f : s.first_zero) os << f.steps << '\t' << mode_name(f.mode) << '\t' << f.median_first_zero << '\n';
}

}  // namespace cotlearn
