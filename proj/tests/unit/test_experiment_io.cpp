#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cotlearn/cotlearn.hpp"

using namespace cotlearn;

namespace {
std::map<std::string, std::string> kv(const std::string& text) {
  std::istringstream in(text);
  return read_key_values(in);
}
}  // namespace

TEST(Config, ParsesAndValidates) {
  auto c = ExperimentConfig::from_key_values(kv("family=e1:D=3\nmodes=cot,e2e\nT=2,4\nm=1,2,3\ntrials=2\n"));
  EXPECT_EQ(c.modes.size(), 2u);
  EXPECT_EQ(c.steps, (std::vector<std::size_t>{2, 4}));
  EXPECT_THROW(ExperimentConfig::from_key_values(kv("family=e1:D=3\nT=2\nm=3,3\n")), InputError);
  EXPECT_THROW(ExperimentConfig::from_key_values(kv("family=e1:D=3\nT=2\nm=1\ntrials=0\n")), InputError);
  EXPECT_THROW(ExperimentConfig::from_key_values(kv("family=e1:D=3\nT=2\nm=1\ncolour=red\n")), InputError);
  EXPECT_THROW(kv("a=1\na=2\n"), InputError);
  auto fixed = ExperimentConfig::from_key_values(kv("family=e1:D=2,T=3\nm=4\n"));
  EXPECT_EQ(fixed.steps, (std::vector<std::size_t>{3}));
}

TEST(Experiment, SingleCellGivesOneRow) {
  auto c = ExperimentConfig::from_key_values(kv("family=e1:D=2\nT=2\nm=3\ntrials=1\nseed=4\n"));
  auto rows = run_experiment(c, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].family, "e1:D=2,T=2");
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_EQ(rows[0].wall_ms, 0);
}

TEST(Experiment, RowsAreIdenticalAcrossWorkerCounts) {
  auto c = ExperimentConfig::from_key_values(
      kv("family=e1:D=2\nmodes=cot,e2e\nT=2,3\nm=0,2,5,9\ntrials=3\nseed=11\n"));
  auto a = run_experiment(c, 1);
  auto b = run_experiment(c, 3);
  ASSERT_EQ(a.size(), 2u * 2u * 4u * 3u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_csv(a[i]), to_csv(b[i]));
  std::set<std::tuple<std::string, int, std::size_t, std::size_t, std::size_t>> keys;
  for (const auto& r : a) keys.insert({r.family, int(r.mode), r.steps, r.m, r.trial});
  EXPECT_EQ(keys.size(), a.size());
  auto s = summarize(a);
  EXPECT_EQ(s.cells.size(), 2u * 2u * 4u);
  EXPECT_EQ(s.first_zero.size(), 4u);
}

TEST(Experiment, CsvAppendsWithSingleHeader) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "cotlearn_rows_test.csv";
  fs::remove(p);
  ResultRow r{"tm:S=2", Mode::cot, 4, 10, 0, 9, Rational(1, 3), 0, "ok"};
  append_csv(p.string(), {r});
  append_csv(p.string(), {r});
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], kCsvHeader);
  EXPECT_EQ(lines[1], "tm:S=2,cot,4,10,0,9,0.333333,1/3,0.000,ok");
  fs::remove(p);
  ResultRow bad{"e1:D=2,T=2", Mode::e2e, 2, 1, 0, 1, std::nullopt, 0, "error: x, y"};
  EXPECT_EQ(to_csv(bad), "\"e1:D=2,T=2\",e2e,2,1,0,1,,,0.000,\"error: x, y\"");
}

TEST(Experiment, TuringAndThresholdFamiliesRun) {
  auto tm = ExperimentConfig::from_key_values(kv("family=tm:S=2\nT=6\nm=30\ninput_len=4\nseed=2\n"));
  auto rows = run_experiment(tm, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].status, "ok");
  auto lin = ExperimentConfig::from_key_values(kv("family=lin:d=3\nT=4\nm=5\ninput_len=5\nseed=2\n"));
  EXPECT_EQ(run_experiment(lin, 1)[0].status, "ok");
  auto e2e_tm = ExperimentConfig::from_key_values(kv("family=tm:S=2\nmode=e2e\nT=6\nm=3\n"));
  EXPECT_THROW(run_experiment(e2e_tm, 1), InputError);
}

TEST(FileFormats, TuringMachineRoundTrip) {
  std::istringstream in("# comment\n1 3\n1 0 -> 1 1 +1\n1 1 -> 1 0 -1\n1 ⊔ -> 1 1 0\n");
  TMSpec s = read_tm(in);
  EXPECT_EQ(s.steps, 3u);
  std::ostringstream out;
  write_tm(out, s);
  std::istringstream back(out.str());
  EXPECT_EQ(read_tm(back), s);
  EXPECT_NE(out.str().find("1 _ -> 1 1 0"), std::string::npos);
  std::istringstream bad("1 3\n1 0 -> 1 1 +1\n1 1 -> 1 0\n1 _ -> 1 1 0\n");
  EXPECT_THROW(read_tm(bad), InputError);
  std::istringstream missing("1 3\n1 0 -> 1 1 +1\n");
  EXPECT_THROW(read_tm(missing), InputError);
}

TEST(FileFormats, CircuitAndThresholdRoundTrip) {
  std::istringstream in("2 2 2\n1 1 : 1 1 bias=-2\n1 2 : 1 -1\n2 1 : 0 0 1 1 bias=-1/2\n");
  ThresholdCircuit c = read_circuit(in);
  EXPECT_EQ(eval_circuit(c, {1, 1}), 1);
  EXPECT_EQ(eval_circuit(c, {0, 1}), 0);
  std::ostringstream out;
  write_circuit(out, c);
  std::istringstream back(out.str());
  ThresholdCircuit d = read_circuit(back);
  for (int m = 0; m < 4; ++m) EXPECT_EQ(eval_circuit(d, {m >> 1, m & 1}), eval_circuit(c, {m >> 1, m & 1}));
  std::istringstream wrong("1 1 1\n1 1 : 1 2\n");
  EXPECT_THROW(read_circuit(wrong), InputError);

  CompiledThreshold k = compile(normalize_circuit(c));
  std::ostringstream ks;
  write_compiled(ks, k);
  std::istringstream kin(ks.str());
  ThresholdFile f = read_threshold(kin);
  ASSERT_TRUE(f.steps);
  EXPECT_EQ(*f.steps, k.steps);
  EXPECT_EQ(f.predictor.w, k.predictor.w);
  EXPECT_TRUE(verify_compilation(c, f.predictor, *f.steps).ok());
}

TEST(FileFormats, Datasets) {
  auto alpha = tm_alphabet(1);
  std::istringstream cot_in("1:_:+1,1:0:+1,1:1:+1\n");
  CoTDataset s = read_cot_dataset(cot_in, *alpha, 1);
  ASSERT_EQ(s.chains.size(), 1u);
  std::istringstream short_in("1:_:+1\n");
  EXPECT_THROW(read_cot_dataset(short_in, *alpha, 1), InputError);
  std::istringstream e2e_in("0,1\t1\n\t0\n");
  E2EDataset e = read_e2e_dataset(e2e_in, Alphabet::binary(), 2);
  ASSERT_EQ(e.examples.size(), 2u);
  EXPECT_TRUE(e.examples[1].input.empty());
}
