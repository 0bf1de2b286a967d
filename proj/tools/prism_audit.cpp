// prism-audit: command-line front end for the run-directory pipeline.
//
// Exit codes: 0 success, 1 usage or config error, 2 data or validation error,
// 3 statistical degeneracy.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "prism/audit/config.hpp"
#include "prism/audit/pipeline.hpp"
#include "prism/errors.hpp"
#include "prism/ingest.hpp"
#include "prism/version.hpp"

namespace fs = std::filesystem;
using namespace prism;
using namespace prism::audit;

namespace {

struct Options {
  std::string command;
  std::string config;
  std::string run = "prism-run";
  std::optional<std::uint64_t> seed;
  std::optional<double> k;
  std::optional<std::string> metric;
  std::optional<std::size_t> b;
  std::optional<double> alpha;
  std::optional<std::string> score_kind;
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<unsigned> threads;
  std::string target = "both";
  std::string model = "all";
  std::string dataset = "suspect";
  std::string pstats;
  std::string out;
  std::string scores_r, scores_t, scores_d;
  std::string axis = "k";
  std::string grid;
};

RunConfig resolve(const Options& o) {
  RunConfig c = load_config(o.config);
  if (o.seed) c.apply_seed(*o.seed);
  if (o.k) c.score.k_percent = *o.k;
  if (o.metric) c.test.metric = parse_rank_metric(*o.metric);
  if (o.b) c.test.resamples = *o.b;
  if (o.alpha) c.test.alpha = *o.alpha;
  if (o.score_kind) c.score.kind = parse_score_kind(*o.score_kind);
  if (o.lambda) c.distill.lambda = *o.lambda;
  if (o.tau) c.distill.tau = *o.tau;
  if (o.threads) c.test.threads = *o.threads;
  c.validate();
  return c;
}

std::vector<Target> targets(const std::string& s) {
  if (s == "both") return {Target::Clean, Target::Member};
  return {parse_target(s)};
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("invalid grid value '" + item + "'");
    }
  }
  return out;
}

int cmd_simulate(const Options& o) {
  const RunConfig c = resolve(o);
  const SimulationSummary s = simulate(c, o.run);
  std::printf("run          %s (%s)\n", o.run.c_str(), Manifest::run_id_for(c).c_str());
  std::printf("corpus       base %zu docs / %zu tokens, suspect %zu, heldout %zu\n", s.base_docs,
              s.base_tokens, s.suspect_docs, s.heldout_docs);
  std::printf("cpt          %zu tokens, %zu from suspect\n", s.cpt_tokens, s.cpt_suspect_tokens);
  std::printf("suspect CE   clean %.4f  member %.4f  (member on heldout %.4f)\n", s.ce_clean_suspect,
              s.ce_member_suspect, s.ce_member_heldout);
  return 0;
}

int cmd_distill(const Options& o) {
  const RunConfig c = resolve(o);
  for (Target t : targets(o.target)) {
    distill(c, o.run, t);
    std::printf("%s  lambda %g  tau %g\n", model_path(distilled_model(t)).c_str(), c.distill.lambda,
                c.distill.tau);
  }
  return 0;
}

int cmd_score(const Options& o) {
  const RunConfig c = resolve(o);
  if (!o.pstats.empty()) {
    const ScoreVector v = score_pstats(o.pstats, c.score, o.out);
    std::printf("%s  %zu docs  %s\n", c.score.tag().c_str(), v.size(),
                o.out.empty() ? "(not written)" : o.out.c_str());
    return 0;
  }
  std::vector<std::string> models;
  if (o.model == "all") {
    const Manifest m = Manifest::load(o.run);
    for (std::string name : {std::string(kReference), target_model(Target::Clean), target_model(Target::Member),
                             distilled_model(Target::Clean), distilled_model(Target::Member)})
      if (m.has(model_path(name))) models.push_back(name);
  } else {
    models.push_back(o.model);
  }
  for (const auto& name : models) {
    const ScoreVector v = score(c, o.run, name, o.dataset);
    std::printf("%s  %zu docs\n", scores_path(name, o.dataset, c.score).c_str(), v.size());
  }
  return 0;
}

int cmd_test(const Options& o) {
  const RunConfig c = resolve(o);
  ScoreOverrides ov;
  if (!o.scores_r.empty()) ov.reference = o.scores_r;
  if (!o.scores_t.empty()) ov.target = o.scores_t;
  if (!o.scores_d.empty()) ov.distilled = o.scores_d;
  const auto ts = targets(o.target);
  if ((ov.target || ov.distilled) && ts.size() > 1)
    throw UsageError("--scores-t/--scores-d need a single --target");
  bool first = true;
  for (Target t : ts) {
    if (!first) std::printf("\n");
    first = false;
    std::fputs(format_test_text(run_test(c, o.run, t, ov)).c_str(), stdout);
  }
  return 0;
}

int cmd_sweep(const Options& o) {
  const RunConfig c = resolve(o);
  const SweepAxis axis = parse_sweep_axis(o.axis);
  const auto grid = o.grid.empty() ? default_grid(axis) : parse_grid(o.grid);
  const auto rows = sweep(c, o.run, axis, grid);
  std::fputs(format_sweep_csv(axis, rows).c_str(), stdout);
  return 0;
}

int cmd_compare(const Options& o) {
  const RunConfig c = resolve(o);
  std::fputs(format_compare_text(compare_scores(c, o.run), c.test.metric).c_str(), stdout);
  return 0;
}

int cmd_rank(const Options& o) {
  const RunConfig c = resolve(o);
  std::fputs(format_rank_text(rank_analysis(c, o.run)).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-membership audit by rank correlation of Min-K%++ scores"};
  app.set_version_flag("--version", std::string(prism::version()));
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* s) {
    s->add_option("--config", o.config, "run configuration file")->required();
    s->add_option("--run", o.run, "run directory")->capture_default_str();
    s->add_option("--seed", o.seed, "master seed (overrides [run] seed)");
    s->add_option("--k", o.k, "K percent for Min-K% and Min-K%++");
    s->add_option("--metric", o.metric, "spearman or kendall");
    s->add_option("--b", o.b, "bootstrap resamples");
    s->add_option("--alpha", o.alpha, "significance level");
    s->add_option("--score", o.score_kind, "minkpp, mink, loss or compression");
    s->add_option("--threads", o.threads, "bootstrap worker threads");
    s->add_option("--lambda", o.lambda, "distillation weight");
    s->add_option("--tau", o.tau, "distillation temperature");
  };

  auto* sim = app.add_subcommand("simulate", "generate the corpus and train reference and targets");
  auto* dis = app.add_subcommand("distill", "train the distilled reference against a target");
  dis->add_option("--target", o.target, "clean, member or both")->capture_default_str();
  auto* sco = app.add_subcommand("score", "write .pstats and score files");
  sco->add_option("--model", o.model, "model name or 'all'")->capture_default_str();
  sco->add_option("--dataset", o.dataset, "base, suspect or heldout")->capture_default_str();
  sco->add_option("--pstats", o.pstats, "score an external .pstats dump instead of a run model");
  sco->add_option("--out", o.out, "score file to write with --pstats");
  auto* tst = app.add_subcommand("test", "bootstrap non-membership test");
  tst->add_option("--target", o.target, "clean, member or both")->capture_default_str();
  tst->add_option("--scores-r", o.scores_r, "reference score file override");
  tst->add_option("--scores-t", o.scores_t, "target score file override");
  tst->add_option("--scores-d", o.scores_d, "distilled reference score file override");
  auto* swp = app.add_subcommand("sweep", "ablation sweep over one axis");
  swp->add_option("--axis", o.axis, "k, lambda, tau, ndocs or ref-capacity")->capture_default_str();
  swp->add_option("--grid", o.grid, "comma-separated grid values");
  auto* cmp = app.add_subcommand("compare-scores", "correlation gap per score kind");
  auto* rnk = app.add_subcommand("rank-analysis", "per-document rank change after continued pretraining");
  for (auto* s : {sim, dis, sco, tst, swp, cmp, rnk}) common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*dis) return cmd_distill(o);
    if (*sco) return cmd_score(o);
    if (*tst) return cmd_test(o);
    if (*swp) return cmd_sweep(o);
    if (*cmp) return cmd_compare(o);
    if (*rnk) return cmd_rank(o);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "%s\n", format_validation_line(e).c_str());
    return 2;
  } catch (const StatisticalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
