// Copyright 2026 The ramsemcom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ramsemcom/harness/compare.hpp"
#include "ramsemcom/harness/config.hpp"
#include "ramsemcom/harness/experiment.hpp"

namespace ramsemcom::harness {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("ramsemcom_" + name)) {
    fs::remove_all(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ExperimentConfig small(const std::string& policy, std::size_t episodes = 20) {
  auto r = parse_config("policy = " + policy + "\nseeds = 0..1\nepisodes = " + std::to_string(episodes) + "\n");
  EXPECT_TRUE(r.ok());
  return r.config;
}

RunResult run_to(const ExperimentConfig& c, const fs::path& dir, unsigned jobs = 1) {
  RunOptions opt;
  opt.out_dir = dir;
  opt.jobs = jobs;
  return run_experiment(c, opt);
}

TEST(Config, EmptyFileGivesDefaults) {
  const auto r = parse_config("");
  ASSERT_TRUE(r.ok());
  const auto& c = r.config;
  EXPECT_EQ(c.env.agents, 3u);
  EXPECT_EQ(c.env.k_max, 4u);
  EXPECT_EQ(c.env.max_rounds, 15u);
  EXPECT_EQ(c.seeds.size(), 20u);
  EXPECT_EQ(c.eval_episodes, 10u);
  EXPECT_EQ(c.window, 10u);
  EXPECT_DOUBLE_EQ(c.env.channel.snr_db, 15.0);
  EXPECT_DOUBLE_EQ(c.ppo.lr, 3e-4);
  EXPECT_EQ(c.dqn.target_sync, 200u);
  const auto echo = echo_config(c);
  EXPECT_NE(echo.find("k_max = 4\n"), std::string::npos);
  EXPECT_NE(echo.find("seeds = 0..19\n"), std::string::npos);
  EXPECT_NE(echo.find("channel.fading.enabled = false\n"), std::string::npos);
}

TEST(Config, NegativeKMaxNamesKeyAndConstraint) {
  const auto r = parse_config("k_max = -1\n");
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(mentions(r.errors, "k_max: must be >= 0"));
}

TEST(Config, ResolutionIsIdempotent) {
  for (const char* text : {"", "policy = dqn\nseeds = 3,5,9\n[channel]\nsnr_db = 10\n", "k_max = 2\nagents = 4\n"}) {
    const auto first = parse_config(text);
    ASSERT_TRUE(first.ok()) << text;
    const auto echo = echo_config(first.config);
    const auto second = parse_config(echo);
    ASSERT_TRUE(second.ok());
    EXPECT_EQ(echo_config(second.config), echo);
  }
}

TEST(Config, ReportsEveryProblem) {
  const auto r = parse_config(
      "agents = 0\n"
      "k_max = abc\n"
      "no_such_key = 1\n"
      "this line is broken\n"
      "[channel\n"
      "policy = sarsa\n"
      "scene.theta = 2\n");
  EXPECT_TRUE(mentions(r.errors, "agents: must be >= 1"));
  EXPECT_TRUE(mentions(r.errors, "k_max: expected an integer"));
  EXPECT_TRUE(mentions(r.errors, "no_such_key: unknown key"));
  EXPECT_TRUE(mentions(r.errors, "line 4, column 1"));
  EXPECT_TRUE(mentions(r.errors, "line 5, column 1: unterminated section header"));
  EXPECT_TRUE(mentions(r.errors, "policy: unknown policy 'sarsa'"));
  EXPECT_TRUE(mentions(r.errors, "scene.theta: must be in (0, 1]"));
  EXPECT_GE(r.errors.size(), 7u);
}

TEST(Config, SectionsAndFlatKeysAreEquivalent) {
  const auto a = parse_config("[channel.fading]\nenabled = true\nrange_db = 3\n[dqn]\nhidden = 32,32\n");
  const auto b = parse_config("channel.fading.enabled = true\nchannel.fading.range_db = 3\ndqn.hidden = 32, 32\n");
  ASSERT_TRUE(a.ok());
  ASSERT_TRUE(b.ok());
  EXPECT_EQ(echo_config(a.config), echo_config(b.config));
  EXPECT_EQ(a.config.dqn.hidden, (std::vector<std::size_t>{32, 32}));
}

TEST(Config, DuplicateKeysAndOversizedActionSpaces) {
  EXPECT_TRUE(mentions(parse_config("k_max = 2\nk_max = 3\n").errors, "line 2, column 1: duplicate key 'k_max'"));
  EXPECT_TRUE(mentions(parse_config("agents = 5\n").errors, "exceeds action_cap"));
}

TEST(Config, OverridesWinOverTheFile) {
  const auto r = parse_config("policy = dqn\nseeds = 0..19\n", {{"seeds", "4..6"}, {"policy", "heuristic"}});
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.config.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
  EXPECT_EQ(r.config.policy, "heuristic");
}

TEST(Config, FixedZeroIsNoRetrieval) {
  const auto r = parse_config("policy = fixed_k\nfixed_k = 0\n");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.config.policy, "no_retrieval");
}

TEST(Run, CsvSchemaIsFixed) {
  TempDir dir("schema");
  run_to(small("heuristic", 3), dir.path());
  std::ifstream train(dir.path() / "train.csv"), eval(dir.path() / "eval.csv"), summary(dir.path() / "summary.csv");
  std::string line;
  std::getline(train, line);
  EXPECT_EQ(line, "run_id,seed,episode,round,policy,reward,cumulative_tasks,bits_spent,budget_bits,k");
  std::getline(train, line);
  EXPECT_EQ(line.rfind("heuristic-s0,0,0,1,heuristic,", 0), 0u) << line;
  std::getline(eval, line);
  EXPECT_EQ(line, "run_id,seed,episode,round,policy,reward,cumulative_tasks,bits_spent,budget_bits,k");
  std::getline(summary, line);
  EXPECT_EQ(line, "seed,final_window_reward,eval_mean_return,tasks_completed,tasks_total,rounds_to_complete");
}

TEST(Run, RepeatedRunsAreByteIdentical) {
  TempDir a("det_a"), b("det_b");
  const auto c = small("random_k", 15);
  run_to(c, a.path(), 1);
  run_to(c, b.path(), 2);
  for (const char* f : {"train.csv", "eval.csv", "summary.csv", "summary.txt", "config.txt"})
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
}

TEST(Run, FixedZeroAndNoRetrievalWriteIdenticalMetrics) {
  TempDir a("fixed0"), b("noret");
  auto fixed = parse_config("policy = fixed_k\nfixed_k = 0\nseeds = 3\nepisodes = 5\n").config;
  auto none = parse_config("policy = no_retrieval\nseeds = 3\nepisodes = 5\n").config;
  run_to(fixed, a.path());
  run_to(none, b.path());
  for (const char* f : {"train.csv", "eval.csv", "summary.csv"}) EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f));
}

TEST(Run, NoRetrievalCompletesNothingAndHasAConstantTrace) {
  TempDir dir("noret_trace");
  const auto result = run_to(small("no_retrieval", 12), dir.path());
  for (const auto& s : result.seeds) {
    EXPECT_LE(s.tasks_completed, 1u);
    EXPECT_EQ(s.tasks_total, 30u);
    EXPECT_EQ(s.rounds_to_complete, 16u);
    EXPECT_NEAR(s.final_window_reward, -0.28, 1e-12);
  }
  const auto run = load_run(dir.path());
  for (const auto& [seed, returns] : run.returns)
    for (double r : returns) EXPECT_EQ(r, returns.front());
}

TEST(Run, LearnedCheckpointsReplayForEvaluation) {
  TempDir train("ckpt_train"), replay("ckpt_replay");
  auto c = small("ppo", 30);
  run_to(c, train.path());
  ASSERT_TRUE(fs::exists(train.path() / "checkpoint_s0.rlck"));
  ASSERT_TRUE(fs::exists(train.path() / "checkpoint_s1.rlck"));
  RunOptions opt;
  opt.out_dir = replay.path();
  opt.checkpoint_dir = train.path();
  const auto r = run_experiment(c, opt);
  EXPECT_EQ(slurp(train.path() / "eval.csv"), slurp(replay.path() / "eval.csv"));
  EXPECT_TRUE(std::isnan(r.seeds[0].final_window_reward));

  auto wrong = c;
  wrong.env.k_max = 3;
  opt.out_dir = replay.path() / "wrong";
  EXPECT_THROW(run_experiment(wrong, opt), ConfigurationError);
}

TEST(Run, UnwritableOutputIsAnIoError) {
  RunOptions opt;
  opt.out_dir = "/proc/ramsemcom_cannot_write_here";
  EXPECT_THROW(run_experiment(small("heuristic", 1), opt), IoError);
}

TEST(Compare, RunAgainstItselfHasZeroDeltas) {
  TempDir dir("self"), out("self_out");
  run_to(small("heuristic", 12), dir.path());
  const auto cmp = compare_runs({load_run(dir.path()), load_run(dir.path())});
  ASSERT_EQ(cmp.policies.size(), 2u);
  EXPECT_EQ(cmp.policies[0].final_window.mean, cmp.policies[1].final_window.mean);
  EXPECT_EQ(cmp.policies[0].mean_returns, cmp.policies[1].mean_returns);
  EXPECT_EQ(cmp.policies[1].label, "heuristic_2");
  write_comparison(cmp, out.path());
  const auto table = slurp(out.path() / "comparison.txt");
  EXPECT_NE(table.find("+0.0000"), std::string::npos) << table;
  const auto curves = slurp(out.path() / "reward_curves.csv");
  EXPECT_EQ(curves.substr(0, curves.find('\n')), "episode,heuristic_raw,heuristic_w10,heuristic_2_raw,heuristic_2_w10");
}

TEST(Compare, DifferentSnrIsRefusedNamingTheKey) {
  TempDir a("snr_a"), b("snr_b");
  auto c1 = small("heuristic", 2);
  auto c2 = c1;
  c2.env.channel.snr_db = 10.0;
  run_to(c1, a.path());
  run_to(c2, b.path());
  try {
    compare_runs({load_run(a.path()), load_run(b.path())});
    FAIL() << "expected refusal";
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("channel.snr_db"), std::string::npos) << e.what();
  }
}

TEST(Compare, OrderingAndCompletionChecks) {
  TempDir h("ord_h"), n("ord_n");
  run_to(small("heuristic", 12), h.path());
  run_to(small("no_retrieval", 12), n.path());
  const auto cmp = compare_runs({load_run(h.path()), load_run(n.path())});
  ASSERT_EQ(cmp.ordering.size(), 1u);
  EXPECT_TRUE(cmp.ordering[0].pass) << cmp.ordering[0].text;
  ASSERT_EQ(cmp.completion.size(), 1u);
  EXPECT_TRUE(cmp.completion[0].pass) << cmp.completion[0].text;
  EXPECT_TRUE(cmp.all_pass());
  EXPECT_EQ(cmp.policies[0].mean_completion.size(), 15u);
}

TEST(Compare, OnlySharedSeedsAreUsed) {
  TempDir a("seeds_a"), b("seeds_b");
  auto c1 = parse_config("policy = heuristic\nseeds = 0..3\nepisodes = 3\n").config;
  auto c2 = parse_config("policy = random_k\nseeds = 2..5\nepisodes = 3\n").config;
  run_to(c1, a.path());
  run_to(c2, b.path());
  const auto cmp = compare_runs({load_run(a.path()), load_run(b.path())});
  EXPECT_EQ(cmp.seeds, (std::vector<std::uint64_t>{2, 3}));
}

TEST(Stats, WindowAndTrailingMeans) {
  EXPECT_DOUBLE_EQ(final_window_mean({1, 2, 3, 4}, 2), 3.5);
  EXPECT_DOUBLE_EQ(final_window_mean({1, 2}, 10), 1.5);
  EXPECT_EQ(trailing_mean({2, 4, 6, 8}, 2), (std::vector<double>{2, 3, 5, 7}));
  const auto s = describe({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.sd, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(s.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}

}  // namespace
}  // namespace ramsemcom::harness
