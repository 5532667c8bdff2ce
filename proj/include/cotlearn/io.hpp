#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotlearn/circuit.hpp"
#include "cotlearn/datasets.hpp"
#include "cotlearn/errors.hpp"
#include "cotlearn/linthresh.hpp"
#include "cotlearn/rational.hpp"
#include "cotlearn/turing.hpp"

namespace cotlearn {

namespace detail {

// Non-empty lines with '#' comments stripped, paired with 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> content_lines(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::string t = trim(line);
    if (!t.empty()) out.emplace_back(no, std::move(t));
  }
  return out;
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

inline std::size_t parse_count(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw InputError(std::string("expected a non-negative integer for ") + what + ", got '" + s + "'");
  }
  try {
    return std::stoul(s);
  } catch (const std::out_of_range&) {
    throw InputError(std::string("value for ") + what + " is too large");
  }
}

inline int parse_move(const std::string& s) {
  if (s == "-1") return -1;
  if (s == "0") return 0;
  if (s == "+1" || s == "1") return 1;
  throw InputError("move must be -1, 0 or +1, got '" + s + "'");
}

inline std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

// ---- Turing machines ---------------------------------------------------------------
//
//   S T
//   s r -> s' a b      (3S lines, r in {0,1,_}, a in {0,1}, b in {-1,0,+1})

inline TMSpec read_tm(std::istream& in) {
  auto lines = detail::content_lines(in);
  if (lines.empty()) throw InputError("TM file is empty");
  auto head = detail::words(lines[0].second);
  if (head.size() != 2) throw InputError(detail::where(lines[0].first) + "header must be 'S T'");
  TMSpec spec;
  spec.states = static_cast<int>(detail::parse_count(head[0], "S"));
  spec.steps = detail::parse_count(head[1], "T");
  if (spec.states < 1) throw InputError("S must be >= 1");
  if (spec.steps < 1) throw InputError("T must be >= 1");
  spec.table.assign(static_cast<std::size_t>(3 * spec.states), TMToken{});
  std::vector<bool> seen(spec.table.size(), false);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [no, text] = lines[k];
    auto w = detail::words(text);
    if (w.size() != 6 || w[2] != "->") {
      throw InputError(detail::where(no) + "expected 's r -> s2 a b', got '" + text + "'");
    }
    try {
      const int s = static_cast<int>(detail::parse_count(w[0], "state"));
      const TapeSymbol r = parse_symbol(w[1]);
      const int s2 = static_cast<int>(detail::parse_count(w[3], "next state"));
      const TapeSymbol a = parse_symbol(w[4]);
      const int b = detail::parse_move(w[5]);
      if (s < 1 || s > spec.states || s2 < 1 || s2 > spec.states) throw InputError("state out of range");
      if (a == TapeSymbol::blank) throw InputError("a transition may only write 0 or 1");
      const std::size_t idx = static_cast<std::size_t>((s - 1) * 3 + static_cast<int>(r));
      if (seen[idx]) throw InputError("duplicate transition");
      seen[idx] = true;
      spec.table[idx] = {s2, a, b};
    } catch (const InputError& e) {
      throw InputError(detail::where(no) + e.what());
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw InputError("missing transition for state " + std::to_string(i / 3 + 1) + " reading " +
                       symbol_name(static_cast<TapeSymbol>(i % 3)));
    }
  }
  spec.validate();
  return spec;
}

inline void write_tm(std::ostream& os, const TMSpec& spec) {
  os << spec.states << ' ' << spec.steps << '\n';
  for (int s = 1; s <= spec.states; ++s) {
    for (int r = 0; r < 3; ++r) {
      const TMToken& x = spec.rule(s, static_cast<TapeSymbol>(r));
      os << s << ' ' << symbol_name(static_cast<TapeSymbol>(r)) << " -> " << x.state << ' ' << symbol_name(x.symb)
         << ' ' << (x.move > 0 ? "+1" : std::to_string(x.move)) << '\n';
    }
  }
}

// ---- linear thresholds -----------------------------------------------------------
//
//   d b w_1 ... w_d        (exact fractions)
//   T=...                  (compiled thresholds only)

struct ThresholdFile {
  LinearThreshold predictor;
  std::optional<std::size_t> steps;
};

inline ThresholdFile read_threshold(std::istream& in) {
  auto lines = detail::content_lines(in);
  if (lines.empty()) throw InputError("threshold file is empty");
  ThresholdFile out;
  auto w = detail::words(lines[0].second);
  if (w.size() < 2) throw InputError(detail::where(lines[0].first) + "expected 'd b w_1 ... w_d'");
  const std::size_t d = detail::parse_count(w[0], "d");
  if (w.size() != d + 2) {
    throw InputError(detail::where(lines[0].first) + "expected " + std::to_string(d) + " weights, got " +
                     std::to_string(w.size() - 2));
  }
  out.predictor.b = parse_rational(w[1]);
  for (std::size_t j = 0; j < d; ++j) out.predictor.w.push_back(parse_rational(w[j + 2]));
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [no, text] = lines[k];
    if (text.rfind("T=", 0) != 0 || out.steps) throw InputError(detail::where(no) + "unexpected '" + text + "'");
    out.steps = detail::parse_count(text.substr(2), "T");
  }
  return out;
}

inline void write_threshold(std::ostream& os, const LinearThreshold& f) {
  os << f.w.size() << ' ' << f.b;
  for (const auto& x : f.w) os << ' ' << x;
  os << '\n';
}

inline void write_compiled(std::ostream& os, const CompiledThreshold& k) {
  write_threshold(os, k.predictor);
  os << "T=" << k.steps << '\n';
}

// ---- circuits ------------------------------------------------------------------------
//
//   n s L
//   l i : w_1 ... w_p [bias=frac]     p = n + sum of earlier layer widths

inline ThresholdCircuit read_circuit(std::istream& in) {
  auto lines = detail::content_lines(in);
  if (lines.empty()) throw InputError("circuit file is empty");
  auto head = detail::words(lines[0].second);
  if (head.size() != 3) throw InputError(detail::where(lines[0].first) + "header must be 'n s L'");
  const std::size_t n = detail::parse_count(head[0], "n");
  const std::size_t s = detail::parse_count(head[1], "s");
  const std::size_t L = detail::parse_count(head[2], "L");
  if (n == 0 || s == 0 || L == 0) throw InputError("n, s and L must be positive");

  std::vector<std::map<std::size_t, std::pair<std::size_t, Gate>>> by_layer(L);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [no, text] = lines[k];
    auto w = detail::words(text);
    if (w.size() < 3 || w[2] != ":") throw InputError(detail::where(no) + "expected 'l i : weights'");
    try {
      const std::size_t l = detail::parse_count(w[0], "layer");
      const std::size_t i = detail::parse_count(w[1], "gate");
      if (l < 1 || l > L) throw InputError("layer index out of range");
      if (i < 1 || i > s) throw InputError("gate index exceeds s");
      Gate g;
      for (std::size_t j = 3; j < w.size(); ++j) {
        if (w[j].rfind("bias=", 0) == 0) {
          if (j + 1 != w.size()) throw InputError("bias must come last");
          g.bias = parse_rational(w[j].substr(5));
        } else {
          g.weights.push_back(parse_rational(w[j]));
        }
      }
      if (!by_layer[l - 1].emplace(i, std::make_pair(no, std::move(g))).second) throw InputError("duplicate gate");
    } catch (const InputError& e) {
      throw InputError(detail::where(no) + e.what());
    }
  }
  ThresholdCircuit c;
  c.inputs = n;
  for (std::size_t l = 0; l < L; ++l) {
    if (by_layer[l].empty()) throw InputError("layer " + std::to_string(l + 1) + " has no gates");
    std::vector<Gate> layer;
    std::size_t expect = 1;
    for (auto& [i, entry] : by_layer[l]) {
      if (i != expect++) throw InputError("layer " + std::to_string(l + 1) + " gate indices must be 1..w");
      layer.push_back(std::move(entry.second));
    }
    c.layers.push_back(std::move(layer));
    const std::size_t fan = c.fan_in(l);
    for (const auto& [i, entry] : by_layer[l]) {
      if (c.layers[l][i - 1].weights.size() != fan) {
        throw InputError(detail::where(entry.first) + "gate needs " + std::to_string(fan) + " weights, got " +
                         std::to_string(c.layers[l][i - 1].weights.size()));
      }
    }
  }
  c.validate();
  return c;
}

inline void write_circuit(std::ostream& os, const ThresholdCircuit& c) {
  if (!c.fixed_inputs.empty()) throw InputError("circuits with fixed inputs have no file form");
  os << c.inputs << ' ' << c.max_width() << ' ' << c.depth() << '\n';
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    for (std::size_t i = 0; i < c.layers[l].size(); ++i) {
      const Gate& g = c.layers[l][i];
      os << (l + 1) << ' ' << (i + 1) << " :";
      for (const auto& x : g.weights) os << ' ' << x;
      if (g.bias != 0) os << " bias=" << g.bias;
      os << '\n';
    }
  }
}

// ---- datasets -------------------------------------------------------------------------

inline CoTDataset read_cot_dataset(std::istream& in, const Alphabet& a, std::size_t steps) {
  CoTDataset s{{}, steps};
  for (const auto& [no, text] : detail::content_lines(in)) {
    try {
      s.chains.push_back(parse_sequence(text, a));
    } catch (const InputError& e) {
      throw InputError(detail::where(no) + e.what());
    }
  }
  s.validate();
  return s;
}

// "sequence<TAB>label"; an empty prompt is written as just "<TAB>label".
inline E2EDataset read_e2e_dataset(std::istream& in, const Alphabet& a, std::size_t steps) {
  E2EDataset s{{}, steps};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError(detail::where(no) + "expected 'sequence<TAB>label'");
    try {
      s.examples.push_back({parse_sequence(line.substr(0, tab), a), a.index_of(trim(line.substr(tab + 1)))});
    } catch (const InputError& e) {
      throw InputError(detail::where(no) + e.what());
    }
  }
  return s;
}

// ---- key=value config ---------------------------------------------------------------

inline std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  for (const auto& [no, text] : detail::content_lines(in)) {
    auto eq = text.find('=');
    if (eq == std::string::npos) throw InputError(detail::where(no) + "expected key=value");
    std::string key = trim(text.substr(0, eq));
    if (key.empty()) throw InputError(detail::where(no) + "empty key");
    if (!kv.emplace(key, trim(text.substr(eq + 1))).second) throw InputError(detail::where(no) + "duplicate key");
  }
  return kv;
}

}  // namespace cotlearn
