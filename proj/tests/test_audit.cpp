#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "prism/audit/config.hpp"
#include "prism/audit/manifest.hpp"
#include "prism/audit/pipeline.hpp"
#include "prism/codec.hpp"
#include "prism/errors.hpp"
#include "prism/rng.hpp"

using namespace prism;
using namespace prism::audit;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = PRISM_FIXTURES_DIR;

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::path(PRISM_TEST_WORKDIR) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

RunConfig minimal() { return load_config(kFixtures / "minimal.ini"); }

}  // namespace

TEST(Config, DefaultsAreValid) {
  EXPECT_NO_THROW(default_config().validate());
  EXPECT_NO_THROW(minimal().validate());
}

TEST(Config, FormatParseRoundTrip) {
  for (const RunConfig& c : {default_config(), minimal()}) {
    const std::string text = format_config(c);
    EXPECT_EQ(format_config(parse_config(text)), text);
  }
}

TEST(Config, FixtureValuesAreRead) {
  const RunConfig c = minimal();
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.corpus.n_docs, 400u);
  EXPECT_EQ(c.dims.hidden, 16);
  EXPECT_EQ(c.reference_hidden, 24);
  EXPECT_EQ(c.cpt.suspect_repeats, 2);
  EXPECT_EQ(c.cpt.base_docs, 50u);
  EXPECT_EQ(c.distill.train.lr, 0.3);
  EXPECT_EQ(c.test.resamples, 200u);
  // Untouched keys keep their defaults.
  EXPECT_EQ(c.distill.lambda, default_config().distill.lambda);
}

TEST(Config, SeedDrivesEveryStage) {
  RunConfig c = default_config();
  c.apply_seed(99);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.corpus.seed, 99u);
  EXPECT_EQ(c.test.seed, 99u);
  EXPECT_EQ(c.pretrain.seed, derive_seed(99, stream_id("pretrain")));
  EXPECT_NE(c.pretrain.seed, c.cpt.train.seed);
  EXPECT_NE(c.cpt.train.seed, c.distill.train.seed);
}

TEST(Config, UnknownKeyReportsLine) {
  try {
    load_config(kFixtures / "bad_key.ini");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 5);
    EXPECT_NE(std::string(e.what()).find("lamda"), std::string::npos);
    EXPECT_NE(e.path().find("bad_key.ini"), std::string::npos);
  }
}

TEST(Config, MalformedInputIsRejected) {
  const auto line_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("[run]\nseed = x\n"), 2);
  EXPECT_EQ(line_of("[nope]\n"), 1);
  EXPECT_EQ(line_of("[test]\nalpha = 0.1\nalpha = 0.2\n"), 3);
  EXPECT_EQ(line_of("seed = 1\n"), 1);
  EXPECT_EQ(line_of("[score]\nkind = bogus\n"), 2);
  EXPECT_EQ(line_of("[test]\nalpha = 2\n"), 0);
  EXPECT_EQ(line_of("# comment\n[run] \nseed = 3 # inline\n"), -1);
}

TEST(Manifest, DetectsTampering) {
  const fs::path root = work_dir("manifest");
  fs::create_directories(root);
  Manifest m(root, minimal());
  codec::write_file(root / "a.txt", "hello");
  m.record("a.txt", {{"k", "v"}});
  m.save();
  const Manifest back = Manifest::load(root);
  EXPECT_EQ(back.artifacts(), m.artifacts());
  EXPECT_EQ(back.run_id(), Manifest::run_id_for(minimal()));
  EXPECT_FALSE(back.verify_all());
  EXPECT_EQ(back.artifacts().at("a.txt").sha256,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
  codec::write_file(root / "a.txt", "hellO");
  EXPECT_THROW(back.verified("a.txt"), DataError);
  EXPECT_TRUE(back.verify_all());
  EXPECT_THROW(back.verified("missing.txt"), DataError);
  EXPECT_THROW(Manifest::load(root / "nowhere"), DataError);
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    run_ = new fs::path(work_dir("pipeline"));
    summary_ = new SimulationSummary(simulate(minimal(), *run_));
    for (Target t : {Target::Clean, Target::Member}) distill(minimal(), *run_, t);
  }
  static void TearDownTestSuite() {
    delete run_;
    delete summary_;
  }
  static fs::path* run_;
  static SimulationSummary* summary_;
};
fs::path* Pipeline::run_ = nullptr;
SimulationSummary* Pipeline::summary_ = nullptr;

TEST_F(Pipeline, SimulationWritesRecordedArtifacts) {
  const Manifest m = Manifest::load(*run_);
  for (const char* split : {"base", "suspect", "heldout"}) EXPECT_TRUE(m.has(corpus_path(split)));
  for (const std::string model : {std::string(kReference), target_model(Target::Clean),
                                  target_model(Target::Member), distilled_model(Target::Clean),
                                  distilled_model(Target::Member)})
    EXPECT_TRUE(m.has(model_path(model))) << model;
  EXPECT_FALSE(m.verify_all());
  EXPECT_EQ(m.artifacts().at(model_path(distilled_model(Target::Member))).params.at("teacher"),
            target_model(Target::Member));
  EXPECT_EQ(summary_->suspect_docs, 50u);
  EXPECT_EQ(summary_->base_docs, 300u);
  // Continued pretraining lowers the member target's loss on the suspect set.
  EXPECT_LT(summary_->ce_member_suspect, summary_->ce_clean_suspect);
}

TEST_F(Pipeline, TestComposesFromStoredScores) {
  const RunConfig c = minimal();
  const TestOutcome out = run_test(c, *run_, Target::Member);
  const ScoreVector r = score(c, *run_, kReference, "suspect");
  const ScoreVector t = score(c, *run_, target_model(Target::Member), "suspect");
  const ScoreVector d = score(c, *run_, distilled_model(Target::Member), "suspect");
  const TestReport direct = bootstrap_test(r, t, d, c.test);
  EXPECT_EQ(out.report.deltas, direct.deltas);
  EXPECT_EQ(out.report.p_value, direct.p_value);
  EXPECT_EQ(out.report.n_docs, 50u);

  const std::string stem = "reports/test-member." + c.score.tag() + ".spearman";
  const Manifest m = Manifest::load(*run_);
  for (const char* ext : {".txt", ".json", ".deltas.csv"}) EXPECT_TRUE(m.has(stem + ext)) << ext;
  const std::string csv = codec::read_file(*run_ / (stem + ".deltas.csv"));
  EXPECT_EQ(csv.rfind("b,delta\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 201);
}

TEST_F(Pipeline, ScoresMatchStoredStats) {
  const RunConfig c = minimal();
  const ScoreVector v = score(c, *run_, kReference, "heldout");
  const ScoreVector again = score_pstats(*run_ / stats_path(kReference, "heldout"), c.score);
  EXPECT_TRUE(std::ranges::equal(v.entries(), again.entries()));
}

TEST_F(Pipeline, TamperedModelIsRefused) {
  const fs::path copy = work_dir("pipeline-tampered");
  fs::copy(*run_, copy, fs::copy_options::recursive);
  {
    std::ofstream f(copy / model_path(kReference), std::ios::app);
    f << "# extra\n";
  }
  EXPECT_THROW(score(minimal(), copy, kReference, "suspect"), DataError);
}

TEST_F(Pipeline, SweepAndReportsHaveExpectedShape) {
  const RunConfig c = minimal();
  const auto rows = sweep(c, *run_, SweepAxis::K, {10, 50});
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& row : rows) {
    EXPECT_NEAR(row.delta_hat, row.rho_rt - row.rho_dt, 1e-12);
    EXPECT_EQ(row.n_docs, 50u);
  }
  const std::string csv = format_sweep_csv(SweepAxis::K, rows);
  EXPECT_EQ(csv.rfind("k,target,n_docs,rho_rt,rho_dt,delta_hat,p_value,verdict\n", 0), 0u);

  const auto gaps = compare_scores(c, *run_);
  ASSERT_EQ(gaps.size(), 4u);
  for (const auto& g : gaps) EXPECT_NEAR(g.gap, g.rho_clean - g.rho_member, 1e-12);

  const RankAnalysis a = rank_analysis(c, *run_);
  EXPECT_EQ(a.rows.size(), 50u);
  EXPECT_EQ(a.decile_mean_delta.size(), 10u);
}

TEST(Subsample, IsSortedDistinctAndSeeded) {
  const auto a = subsample_indices(5, 100, 30);
  ASSERT_EQ(a.size(), 30u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  EXPECT_LT(a.back(), 100u);
  EXPECT_EQ(subsample_indices(5, 100, 30), a);
  EXPECT_NE(subsample_indices(6, 100, 30), a);
  EXPECT_THROW(subsample_indices(5, 10, 11), UsageError);
}
