#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cotlearn/errors.hpp"
#include "cotlearn/linthresh.hpp"
#include "cotlearn/rational.hpp"
#include "cotlearn/seqcore.hpp"

namespace cotlearn {

struct Gate {
  std::vector<Rational> weights;  // inputs, then every gate of earlier layers in order
  Rational bias;
  bool operator==(const Gate&) const = default;
};

// Layered threshold circuit. `fixed_inputs` is a constant tail appended to every
// external input (a folded bias contributes a 1, the dummy input a 0).
struct ThresholdCircuit {
  std::size_t inputs = 0;
  std::vector<std::vector<Gate>> layers;
  std::vector<int> fixed_inputs;

  std::size_t depth() const { return layers.size(); }
  std::size_t external_inputs() const { return inputs - fixed_inputs.size(); }
  std::size_t max_width() const {
    std::size_t s = 0;
    for (const auto& l : layers) s = std::max(s, l.size());
    return s;
  }
  std::size_t fan_in(std::size_t layer) const {
    std::size_t p = inputs;
    for (std::size_t l = 0; l < layer; ++l) p += layers[l].size();
    return p;
  }

  void validate() const {
    if (inputs == 0) throw InputError("circuit needs at least one input");
    if (fixed_inputs.size() > inputs) throw InputError("more fixed inputs than inputs");
    if (layers.empty()) throw InputError("circuit needs at least one layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].empty()) throw InputError("circuit layer " + std::to_string(l + 1) + " is empty");
      for (const Gate& g : layers[l]) {
        if (g.weights.size() != fan_in(l)) {
          throw InputError("gate in layer " + std::to_string(l + 1) + " has " + std::to_string(g.weights.size()) +
                           " weights, expected " + std::to_string(fan_in(l)));
        }
      }
    }
    for (int b : fixed_inputs) {
      if (b != 0 && b != 1) throw InputError("fixed inputs must be bits");
    }
  }
  bool operator==(const ThresholdCircuit&) const = default;
};

// Values of every gate, layer by layer, on the full input (external ++ fixed).
inline std::vector<std::vector<int>> gate_values_full(const ThresholdCircuit& c, const std::vector<int>& full) {
  if (full.size() != c.inputs) throw InputError("circuit input size mismatch");
  std::vector<int> vals(full);
  std::vector<std::vector<int>> out;
  for (const auto& layer : c.layers) {
    std::vector<int> lv;
    for (const Gate& g : layer) {
      Rational s = g.bias;
      for (std::size_t j = 0; j < g.weights.size(); ++j) {
        if (vals[j]) s += g.weights[j];
      }
      lv.push_back(s >= 0 ? 1 : 0);
    }
    vals.insert(vals.end(), lv.begin(), lv.end());
    out.push_back(std::move(lv));
  }
  return out;
}

inline std::vector<int> full_input(const ThresholdCircuit& c, const std::vector<int>& x) {
  if (x.size() != c.external_inputs()) {
    throw InputError("circuit expects " + std::to_string(c.external_inputs()) + " input bits, got " +
                     std::to_string(x.size()));
  }
  for (int b : x) {
    if (b != 0 && b != 1) throw InputError("circuit inputs must be bits");
  }
  std::vector<int> full(x);
  full.insert(full.end(), c.fixed_inputs.begin(), c.fixed_inputs.end());
  return full;
}

inline std::vector<std::vector<int>> gate_values(const ThresholdCircuit& c, const std::vector<int>& x) {
  return gate_values_full(c, full_input(c, x));
}

inline int eval_circuit(const ThresholdCircuit& c, const std::vector<int>& x) {
  return gate_values(c, x).back().back();
}

// Uniform width, no biases, zero weight on the last input, and the last gate of
// every non-final layer feeds nothing.
inline bool is_normalized(const ThresholdCircuit& c) {
  c.validate();
  const std::size_t s = c.layers.front().size();
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    if (c.layers[l].size() != s) return false;
    for (const Gate& g : c.layers[l]) {
      if (g.bias != 0) return false;
      if (g.weights[c.inputs - 1] != 0) return false;
      for (std::size_t prev = 0; prev < l; ++prev) {
        if (g.weights[c.fan_in(prev) + s - 1] != 0) return false;
      }
    }
  }
  return true;
}

// Folds biases into a constant-1 input, appends a zero dummy input, and pads
// every layer to width s+1. Padding goes after the real gates except in the
// last layer, where it goes first so the output gate stays last.
inline ThresholdCircuit normalize_circuit(const ThresholdCircuit& c) {
  if (is_normalized(c)) return c;
  bool has_bias = false;
  for (const auto& layer : c.layers)
    for (const Gate& g : layer) has_bias = has_bias || g.bias != 0;

  const std::size_t n0 = c.inputs;
  const std::size_t n = n0 + (has_bias ? 1 : 0) + 1;
  const std::size_t s = c.max_width() + 1;
  const std::size_t L = c.layers.size();

  ThresholdCircuit out;
  out.inputs = n;
  out.fixed_inputs = c.fixed_inputs;
  if (has_bias) out.fixed_inputs.push_back(1);
  out.fixed_inputs.push_back(0);

  auto slot = [&](std::size_t l, std::size_t j) {
    return l + 1 == L ? s - c.layers[l].size() + j : j;
  };
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t fan = n + l * s;
    std::vector<Gate> layer(s, Gate{std::vector<Rational>(fan), Rational(0)});
    for (std::size_t j = 0; j < c.layers[l].size(); ++j) {
      const Gate& g = c.layers[l][j];
      Gate& ng = layer[slot(l, j)];
      for (std::size_t k = 0; k < n0; ++k) ng.weights[k] = g.weights[k];
      if (has_bias) ng.weights[n0] = g.bias;
      std::size_t off = n0;
      for (std::size_t prev = 0; prev < l; ++prev) {
        for (std::size_t q = 0; q < c.layers[prev].size(); ++q) {
          ng.weights[n + prev * s + slot(prev, q)] = g.weights[off + q];
        }
        off += c.layers[prev].size();
      }
    }
    out.layers.push_back(std::move(layer));
  }
  if (!is_normalized(out)) throw InvariantViolation("normalisation did not produce a normalised circuit");
  return out;
}

// phi(x) = 1, 0^(T-1), x.
inline TokenSeq feature_map(const std::vector<int>& x, std::size_t steps) {
  if (steps == 0) throw InputError("feature map needs T >= 1");
  TokenSeq out{1};
  out.resize(steps, 0);
  for (int b : x) {
    if (b != 0 && b != 1) throw InputError("feature map expects bits");
    out.push_back(static_cast<Token>(b));
  }
  return out;
}

struct CompiledThreshold {
  LinearThreshold predictor;  // b = 0
  std::size_t steps = 0;      // T
  std::size_t dim = 0;        // d = |w|
  std::size_t inputs = 0;     // n of the normalised circuit
  std::size_t width = 0;      // s
  std::size_t depth = 0;      // L
  std::vector<std::size_t> tilde_p;                 // p~_1..p~_L
  std::vector<std::vector<std::size_t>> output_times;  // t_li, [l][i]
  Rational gate_bound;        // B
  std::vector<int> fixed_inputs;

  std::set<std::size_t> output_time_set() const {
    std::set<std::size_t> s;
    for (const auto& row : output_times) s.insert(row.begin(), row.end());
    return s;
  }
};

inline CompiledThreshold compile(const ThresholdCircuit& c) {
  if (!is_normalized(c)) throw InputError("compile expects a normalised circuit");
  const std::size_t n = c.inputs;
  const std::size_t s = c.layers.front().size();
  const std::size_t L = c.layers.size();

  CompiledThreshold k;
  k.inputs = n;
  k.width = s;
  k.depth = L;
  k.fixed_inputs = c.fixed_inputs;
  k.tilde_p.push_back(n);
  for (std::size_t l = 1; l < L; ++l) k.tilde_p.push_back((s + 1) * k.tilde_p.back());

  Rational norm = 0;
  std::vector<std::vector<Rational>> v_layers;  // v_1..v_L
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<std::vector<Rational>> tilde(s);
    for (std::size_t i = 0; i < s; ++i) {
      const Gate& g = c.layers[l][i];
      for (const Rational& x : g.weights) norm += abs(x);
      auto& tw = tilde[i];
      tw.assign(g.weights.begin(), g.weights.begin() + static_cast<long>(n));
      for (std::size_t prev = 0; prev < l; ++prev) {
        for (std::size_t j = 0; j < s; ++j) {
          tw.insert(tw.end(), k.tilde_p[prev] - 1, Rational(0));
          tw.push_back(g.weights[n + prev * s + j]);
        }
      }
      if (tw.size() != k.tilde_p[l]) throw InvariantViolation("embedded gate has the wrong length");
    }
    std::vector<Rational> vl;
    for (std::size_t i = s; i-- > 0;) vl.insert(vl.end(), tilde[i].begin(), tilde[i].end());
    v_layers.push_back(std::move(vl));
  }

  std::size_t T = 0;
  for (const auto& vl : v_layers) T += vl.size();
  k.steps = T;

  for (std::size_t l = 0; l < L; ++l) {
    std::vector<std::size_t> row;
    for (std::size_t i = 1; i <= s; ++i) {
      row.push_back(l == 0 ? n * i : k.output_times[l - 1].back() + i * k.tilde_p[l]);
    }
    k.output_times.push_back(std::move(row));
  }
  if (k.output_times.back().back() != T) throw InvariantViolation("final output time differs from T");

  k.gate_bound = 1 + norm;
  const auto times = k.output_time_set();
  std::vector<Rational> w(T);
  for (std::size_t t = 1; t <= T; ++t) w[T - t] = times.count(t) ? Rational(0) : -k.gate_bound;
  for (std::size_t l = L; l-- > 0;) w.insert(w.end(), v_layers[l].begin(), v_layers[l].end());
  w.insert(w.end(), n - 1, Rational(0));
  k.dim = w.size();
  k.predictor = LinearThreshold{std::move(w), Rational(0)};
  return k;
}

struct CompilationViolation {
  std::vector<int> input;
  std::size_t time = 0;  // 0 for the final-answer check
  std::string what;
};

struct VerificationReport {
  std::size_t inputs_checked = 0;
  std::size_t inputs_total = 0;
  std::size_t inputs_passed = 0;
  std::vector<CompilationViolation> violations;
  bool ok() const { return violations.empty(); }
};

namespace detail {
inline std::string bits_string(const std::vector<int>& x) {
  std::string s;
  for (int b : x) s += static_cast<char>('0' + b);
  return s.empty() ? "(empty)" : s;
}
}  // namespace detail

// Exhaustive check over {0,1}^n of the original circuit: (a) final answer,
// (b) gate values at their output times, (c) zeros elsewhere with the
// pre-threshold sum at most -1.
inline VerificationReport verify_compilation(const ThresholdCircuit& c, const CompiledThreshold& k) {
  const std::size_t n_ext = c.external_inputs();
  if (n_ext > 12) throw GuardExceeded("verify_compilation enumerates {0,1}^n and needs n <= 12");
  const ThresholdCircuit norm = normalize_circuit(c);
  VerificationReport rep;
  rep.inputs_total = std::size_t{1} << n_ext;
  if (norm.inputs != k.inputs || norm.layers.size() != k.depth || norm.layers.front().size() != k.width ||
      norm.fixed_inputs != k.fixed_inputs) {
    rep.violations.push_back({{}, 0, "compiled shape does not match the normalised circuit"});
    return rep;
  }
  const auto times = k.output_time_set();
  for (std::size_t mask = 0; mask < rep.inputs_total; ++mask) {
    std::vector<int> x(n_ext);
    for (std::size_t j = 0; j < n_ext; ++j) x[j] = static_cast<int>((mask >> (n_ext - 1 - j)) & 1U);
    const auto full = full_input(norm, x);
    const auto gates = gate_values_full(norm, full);
    TokenSeq z = feature_map(full, k.steps);
    const std::size_t base = z.size();
    const std::size_t before = rep.violations.size();
    for (std::size_t t = 1; t <= k.steps; ++t) {
      Rational score = k.predictor.score(z);
      Token y = score >= 0 ? 1 : 0;
      z.push_back(y);
      if (!times.count(t)) {
        if (y != 0) rep.violations.push_back({x, t, "gated step emitted 1"});
        else if (score > -1) rep.violations.push_back({x, t, "gated step has pre-threshold sum above -1"});
      }
    }
    for (std::size_t l = 0; l < k.depth; ++l) {
      for (std::size_t i = 0; i < k.width; ++i) {
        const std::size_t t = k.output_times[l][i];
        if (static_cast<int>(z[base + t - 1]) != gates[l][i]) {
          rep.violations.push_back({x, t, "gate (" + std::to_string(l + 1) + "," + std::to_string(i + 1) +
                                              ") value mismatch"});
        }
      }
    }
    if (static_cast<int>(z.back()) != eval_circuit(c, x)) {
      rep.violations.push_back({x, 0, "final answer differs from the circuit"});
    }
    ++rep.inputs_checked;
    if (rep.violations.size() == before) ++rep.inputs_passed;
  }
  return rep;
}

// Variant for a predictor loaded from disk: the schedule is recomputed from c.
inline VerificationReport verify_compilation(const ThresholdCircuit& c, const LinearThreshold& predictor,
                                             std::size_t steps) {
  CompiledThreshold k = compile(normalize_circuit(c));
  if (k.steps != steps) {
    VerificationReport rep;
    rep.inputs_total = std::size_t{1} << c.external_inputs();
    rep.violations.push_back({{}, 0, "T=" + std::to_string(steps) + " but the circuit needs T=" +
                                         std::to_string(k.steps)});
    return rep;
  }
  k.predictor = predictor;
  k.dim = predictor.w.size();
  return verify_compilation(c, k);
}

inline std::string describe(const CompilationViolation& v) {
  return "x=" + detail::bits_string(v.input) + (v.time ? " t=" + std::to_string(v.time) : " final") + ": " + v.what;
}

// Random layered circuit with widths in [1, s] (last layer width >= 1),
// integer weights in [-3, 3] and optional integer biases.
inline ThresholdCircuit random_circuit(std::size_t n, std::size_t s, std::size_t L, std::mt19937_64& rng,
                                       bool with_bias = false) {
  std::uniform_int_distribution<std::size_t> width(1, s);
  std::uniform_int_distribution<int> weight(-3, 3);
  ThresholdCircuit c;
  c.inputs = n;
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t w = width(rng);
    const std::size_t fan = c.fan_in(l);
    std::vector<Gate> layer;
    for (std::size_t i = 0; i < w; ++i) {
      Gate g{std::vector<Rational>(fan), Rational(0)};
      for (auto& x : g.weights) x = weight(rng);
      if (with_bias) g.bias = weight(rng);
      layer.push_back(std::move(g));
    }
    c.layers.push_back(std::move(layer));
  }
  return c;
}

}  // namespace cotlearn
