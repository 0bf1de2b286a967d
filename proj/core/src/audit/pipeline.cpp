#include "prism/audit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prism/codec.hpp"
#include "prism/errors.hpp"
#include "prism/ingest.hpp"
#include "prism/lm/training.hpp"
#include "prism/rng.hpp"

namespace prism::audit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::size_t token_count(std::span<const std::vector<int>> docs) {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  return n;
}

DatasetStats model_stats(const lm::TinyLM& model, const std::string& model_id,
                         std::span<const lm::Document> docs, const std::string& dataset) {
  std::vector<DocumentStats> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(lm::score_document(model, d.id, d.tokens));
  return DatasetStats(model_id, dataset, std::move(out));
}

ScoreVector model_scores(const lm::TinyLM& model, const std::string& model_id,
                         std::span<const lm::Document> docs, const std::string& dataset,
                         const ScoreSpec& spec) {
  return score_dataset(model_stats(model, model_id, docs, dataset), spec);
}

std::vector<lm::Document> pick(std::span<const lm::Document> docs, std::span<const std::size_t> idx) {
  std::vector<lm::Document> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(docs[i]);
  return out;
}

std::string fmt(double x) { return codec::format_shortest(x); }

std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string pvalue_text(double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, p < 1e-3 ? "%.1e" : "%.4f", p);
  return buf;
}

// Stats are cached per (model, dataset) and reused while the model digest is unchanged.
DatasetStats cached_stats(Manifest& m, std::string_view model, std::string_view dataset) {
  const std::string model_rel = model_path(model);
  const std::string rel = stats_path(model, dataset);
  const fs::path model_file = m.verified(model_rel);
  const std::string digest = m.artifacts().at(model_rel).sha256;
  if (m.has(rel) && fs::exists(m.path_of(rel))) {
    const auto& rec = m.artifacts().at(rel);
    auto it = rec.params.find("model_sha256");
    if (it != rec.params.end() && it->second == digest && codec::sha256_file(m.path_of(rel)) == rec.sha256)
      return read_dataset_stats(m.path_of(rel));
  }
  const lm::TinyLM lm = lm::load_checkpoint(model_file);
  const auto docs = load_split(m, dataset);
  DatasetStats stats = model_stats(lm, std::string(model), docs, std::string(dataset));
  write_dataset_stats(stats, m.path_of(rel));
  m.record(rel, {{"model_sha256", digest}});
  return stats;
}

ScoreVector stored_scores(Manifest& m, std::string_view model, std::string_view dataset,
                          const ScoreSpec& spec) {
  const DatasetStats stats = cached_stats(m, model, dataset);
  ScoreVector v = score_dataset(stats, spec);
  const std::string rel = scores_path(model, dataset, spec);
  write_score_vector(v, m.path_of(rel));
  m.record(rel, {{"score", spec.tag()}});
  return v;
}

}  // namespace

std::string_view to_string(Target t) { return t == Target::Clean ? "clean" : "member"; }

Target parse_target(std::string_view s) {
  if (s == "clean") return Target::Clean;
  if (s == "member") return Target::Member;
  throw UsageError("unknown target '" + std::string(s) + "' (clean, member)");
}

std::string target_model(Target t) { return "target-" + std::string(to_string(t)); }
std::string distilled_model(Target t) { return "distilled-" + std::string(to_string(t)); }

std::string corpus_path(std::string_view split) { return "corpus/" + std::string(split) + ".tok"; }
std::string model_path(std::string_view model) { return "models/" + std::string(model) + ".ckpt"; }
std::string stats_path(std::string_view model, std::string_view dataset) {
  return "stats/" + std::string(model) + "." + std::string(dataset) + ".pstats";
}
std::string scores_path(std::string_view model, std::string_view dataset, const ScoreSpec& spec) {
  return "scores/" + std::string(model) + "." + std::string(dataset) + "." + spec.tag() + ".jsonl";
}

lm::TinyLM train_reference(const RunConfig& config, std::span<const std::vector<int>> base, int hidden) {
  lm::ModelDims dims = config.dims;
  dims.hidden = hidden;
  dims.embed = config.reference_embed;
  lm::TrainConfig t = config.pretrain;
  if (!config.shared_data_order) t.seed = derive_seed(config.pretrain.seed, stream_id("reference"));
  auto init = lm::TinyLM::init(lm::Vocab::make_default(config.corpus.vocab), dims,
                               derive_seed(config.seed, stream_id("reference-init")));
  return lm::train(std::move(init), base, t).model;
}

namespace {

lm::TinyLM train_clean_target(const RunConfig& config, std::span<const std::vector<int>> base) {
  lm::TrainConfig t = config.pretrain;
  if (!config.shared_data_order) t.seed = derive_seed(config.pretrain.seed, stream_id("target"));
  auto init = lm::TinyLM::init(lm::Vocab::make_default(config.corpus.vocab), config.dims,
                               derive_seed(config.seed, stream_id("target-init")));
  return lm::train(std::move(init), base, t).model;
}

std::vector<std::vector<int>> cpt_corpus(const RunConfig& config, std::span<const std::vector<int>> base,
                                         std::span<const std::vector<int>> suspect) {
  std::vector<std::vector<int>> docs(base.begin(),
                                     base.begin() + std::min(config.cpt.base_docs, base.size()));
  for (int r = 0; r < config.cpt.suspect_repeats; ++r) docs.insert(docs.end(), suspect.begin(), suspect.end());
  return docs;
}

}  // namespace

lm::TinyLM continued_pretraining(const RunConfig& config, const lm::TinyLM& clean,
                                 std::span<const std::vector<int>> base,
                                 std::span<const std::vector<int>> suspect) {
  const auto docs = cpt_corpus(config, base, suspect);
  return lm::train(clean, docs, config.cpt.train).model;
}

SimulationSummary simulate(const RunConfig& config, const fs::path& run) {
  config.validate();
  Manifest m(run, config);
  codec::write_file(run / "config.ini", m.config_text());
  m.record("config.ini");

  Stopwatch total;
  const lm::Corpus corpus = lm::generate_corpus(config.corpus);
  for (auto [name, docs] : {std::pair<const char*, const std::vector<lm::Document>*>{"base", &corpus.base},
                            {"suspect", &corpus.suspect},
                            {"heldout", &corpus.heldout}}) {
    lm::write_documents(*docs, m.path_of(corpus_path(name)));
    m.record(corpus_path(name));
  }
  const auto base = lm::token_lists(corpus.base);
  const auto suspect = lm::token_lists(corpus.suspect);
  const auto heldout = lm::token_lists(corpus.heldout);

  Stopwatch sw;
  const lm::TinyLM reference = train_reference(config, base, config.reference_hidden);
  m.add_timing("train_reference", sw.seconds());
  sw = Stopwatch{};
  const lm::TinyLM clean = train_clean_target(config, base);
  m.add_timing("train_target_clean", sw.seconds());
  sw = Stopwatch{};
  const lm::TinyLM member = continued_pretraining(config, clean, base, suspect);
  m.add_timing("train_target_member", sw.seconds());

  lm::save_checkpoint(reference, m.path_of(model_path(kReference)));
  m.record(model_path(kReference), {{"hidden", std::to_string(config.reference_hidden)}});
  lm::save_checkpoint(clean, m.path_of(model_path(target_model(Target::Clean))));
  m.record(model_path(target_model(Target::Clean)), {{"hidden", std::to_string(config.dims.hidden)}});
  lm::save_checkpoint(member, m.path_of(model_path(target_model(Target::Member))));
  m.record(model_path(target_model(Target::Member)),
           {{"hidden", std::to_string(config.dims.hidden)},
            {"suspect_repeats", std::to_string(config.cpt.suspect_repeats)}});
  m.add_timing("simulate", total.seconds());
  m.save();

  SimulationSummary s;
  s.base_docs = corpus.base.size();
  s.suspect_docs = corpus.suspect.size();
  s.heldout_docs = corpus.heldout.size();
  s.base_tokens = token_count(base);
  const auto cpt = cpt_corpus(config, base, suspect);
  s.cpt_tokens = token_count(cpt) * static_cast<std::size_t>(config.cpt.train.epochs);
  s.cpt_suspect_tokens = token_count(suspect) * static_cast<std::size_t>(config.cpt.suspect_repeats) *
                         static_cast<std::size_t>(config.cpt.train.epochs);
  s.ce_clean_suspect = lm::ce_loss(clean, suspect);
  s.ce_member_suspect = lm::ce_loss(member, suspect);
  s.ce_member_heldout = lm::ce_loss(member, heldout);
  return s;
}

lm::TinyLM load_model(const Manifest& m, std::string_view model) {
  return lm::load_checkpoint(m.verified(model_path(model)));
}

std::vector<lm::Document> load_split(const Manifest& m, std::string_view split) {
  if (split != "base" && split != "suspect" && split != "heldout")
    throw UsageError("unknown dataset '" + std::string(split) + "' (base, suspect, heldout)");
  return lm::read_documents(m.verified(corpus_path(split)));
}

lm::TinyLM distill(const RunConfig& config, const fs::path& run, Target target) {
  config.distill.validate();
  Manifest m = Manifest::load(run);
  const lm::TinyLM reference = load_model(m, kReference);
  const lm::TinyLM teacher = load_model(m, target_model(target));
  const auto suspect = lm::token_lists(load_split(m, "suspect"));
  Stopwatch sw;
  lm::TinyLM d = lm::distill_reference(reference, teacher, suspect, config.distill).model;
  m.add_timing("distill_" + std::string(to_string(target)), sw.seconds());
  const std::string rel = model_path(distilled_model(target));
  lm::save_checkpoint(d, m.path_of(rel));
  m.record(rel, {{"lambda", fmt(config.distill.lambda)},
                 {"tau", fmt(config.distill.tau)},
                 {"lr", fmt(config.distill.train.lr)},
                 {"epochs", std::to_string(config.distill.train.epochs)},
                 {"seed", std::to_string(config.distill.train.seed)},
                 {"teacher", target_model(target)}});
  m.save();
  return d;
}

ScoreVector score(const RunConfig& config, const fs::path& run, std::string_view model,
                  std::string_view dataset) {
  config.score.validate();
  Manifest m = Manifest::load(run);
  if (!m.has(model_path(model)))
    throw DataError("model '" + std::string(model) + "' is not in the run" +
                    (model.starts_with("distilled") ? "; run `distill` first" : ""));
  ScoreVector v = stored_scores(m, model, dataset, config.score);
  m.save();
  return v;
}

ScoreVector score_pstats(const fs::path& pstats, const ScoreSpec& spec, const fs::path& out) {
  ScoreVector v = score_dataset(read_dataset_stats(pstats), spec);
  if (!out.empty()) write_score_vector(v, out);
  return v;
}

TestOutcome test_scores(const ScoreVector& ref, const ScoreVector& target, const ScoreVector& distilled,
                        const TestConfig& config, Target which) {
  const std::vector<ScoreVector> in{ref, target, distilled};
  const auto aligned = align_scores(in);
  TestOutcome out;
  out.target = which;
  out.dataset = target.dataset_id();
  out.spec = target.spec();
  out.report = bootstrap_test(aligned[0], aligned[1], aligned[2], config);
  // Non-membership shows as target scores that are less member-like than the distilled ones.
  const bool member_high = (out.spec.kind == ScoreKind::MinKpp || out.spec.kind == ScoreKind::MinK) &&
                           out.spec.sign == SignConvention::PaperOriginal;
  const Alternative alt = member_high ? Alternative::Less : Alternative::Greater;
  try {
    out.paired = paired_t_test(aligned[1], aligned[2], alt);
    out.paired_verdict =
        out.paired->p_value < config.alpha ? Verdict::NonMemberEvidence : Verdict::Inconclusive;
  } catch (const StatisticalError& e) {
    out.paired_note = e.what();
  }
  return out;
}

TestOutcome run_test(const RunConfig& config, const fs::path& run, Target target,
                     const ScoreOverrides& overrides) {
  config.test.validate();
  config.score.validate();
  Manifest m = Manifest::load(run);
  auto get = [&](const std::optional<fs::path>& path, const std::string& model) {
    if (path) return read_score_vector(*path);
    if (!m.has(model_path(model)))
      throw DataError("model '" + model + "' is not in the run" +
                      (model.starts_with("distilled") ? "; run `distill` first" : ""));
    return stored_scores(m, model, "suspect", config.score);
  };
  const ScoreVector r = get(overrides.reference, kReference);
  const ScoreVector t = get(overrides.target, target_model(target));
  const ScoreVector d = get(overrides.distilled, distilled_model(target));
  TestOutcome out = test_scores(r, t, d, config.test, target);

  const std::string stem = "reports/test-" + std::string(to_string(target)) + "." + config.score.tag() +
                           "." + std::string(to_string(config.test.metric));
  codec::write_file(m.path_of(stem + ".txt"), format_test_text(out));
  codec::write_file(m.path_of(stem + ".json"), format_test_json(out));
  codec::write_file(m.path_of(stem + ".deltas.csv"), format_deltas_csv(out.report));
  for (const char* ext : {".txt", ".json", ".deltas.csv"}) m.record(stem + ext);
  m.save();
  return out;
}

std::string format_test_text(const TestOutcome& t) {
  const TestReport& r = t.report;
  std::ostringstream o;
  auto line = [&o](const char* key, const std::string& value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-14s", key);
    o << buf << value << '\n';
  };
  line("target", std::string(to_string(t.target)));
  line("dataset", t.dataset);
  line("score", t.spec.tag());
  line("metric", std::string(to_string(r.config.metric)));
  line("n_docs", std::to_string(r.n_docs));
  line("rho_RT", fixed(r.rho_rt));
  line("rho_DT", fixed(r.rho_dt));
  line("delta_hat", fixed(r.delta_hat));
  char ci[96];
  std::snprintf(ci, sizeof ci, "[%.6f, %.6f] at %g", r.ci_low, r.ci_high, r.config.ci_level);
  line("delta_ci", ci);
  line("p_value", pvalue_text(r.p_value) + " (" + std::to_string(r.non_positive) + " of " +
                      std::to_string(r.deltas.size()) + " resamples <= 0)");
  line("alpha", fmt(r.config.alpha));
  line("redraws", std::to_string(r.redraw_count));
  line("rng", r.rng + " seed " + std::to_string(r.config.seed));
  line("verdict", std::string(to_string(r.verdict)));
  if (t.paired) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "t=%.4f df=%g p=%s (%s)", t.paired->t_stat, t.paired->df,
                  pvalue_text(t.paired->p_value).c_str(), std::string(to_string(t.paired_verdict)).c_str());
    line("paired_t", buf);
  } else {
    line("paired_t", "unavailable: " + t.paired_note);
  }
  return o.str();
}

std::string format_test_json(const TestOutcome& t) {
  const TestReport& r = t.report;
  json j;
  j["target"] = to_string(t.target);
  j["dataset"] = t.dataset;
  j["score"] = {{"kind", to_string(t.spec.kind)},
                {"k_percent", t.spec.k_percent},
                {"sign", to_string(t.spec.sign)},
                {"sigma_floor", t.spec.sigma_floor},
                {"tag", t.spec.tag()}};
  j["config"] = {{"resamples", r.config.resamples}, {"alpha", r.config.alpha},
                 {"seed", r.config.seed},           {"metric", to_string(r.config.metric)},
                 {"max_redraws", r.config.max_redraws}, {"ci_level", r.config.ci_level}};
  j["rng"] = r.rng;
  j["n_docs"] = r.n_docs;
  j["rho_rt"] = r.rho_rt;
  j["rho_dt"] = r.rho_dt;
  j["delta_hat"] = r.delta_hat;
  j["p_value"] = r.p_value;
  j["non_positive"] = r.non_positive;
  j["ci"] = {r.ci_low, r.ci_high};
  j["redraw_count"] = r.redraw_count;
  j["verdict"] = to_string(r.verdict);
  if (t.paired) {
    j["paired_t"] = {{"t", t.paired->t_stat},
                     {"df", t.paired->df},
                     {"p_value", t.paired->p_value},
                     {"verdict", to_string(t.paired_verdict)}};
  } else {
    j["paired_t"] = {{"error", t.paired_note}};
  }
  return j.dump(2) + "\n";
}

std::string format_deltas_csv(const TestReport& r) {
  std::string out = "b,delta\n";
  for (std::size_t b = 0; b < r.deltas.size(); ++b)
    out += std::to_string(b + 1) + "," + fmt(r.deltas[b]) + "\n";
  return out;
}

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::K: return "k";
    case SweepAxis::Lambda: return "lambda";
    case SweepAxis::Tau: return "tau";
    case SweepAxis::NDocs: return "ndocs";
    case SweepAxis::RefCapacity: return "ref-capacity";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "k" || s == "K") return SweepAxis::K;
  if (s == "lambda") return SweepAxis::Lambda;
  if (s == "tau") return SweepAxis::Tau;
  if (s == "ndocs") return SweepAxis::NDocs;
  if (s == "ref-capacity" || s == "refcapacity") return SweepAxis::RefCapacity;
  throw UsageError("unknown sweep axis '" + std::string(s) + "' (k, lambda, tau, ndocs, ref-capacity)");
}

std::vector<double> default_grid(SweepAxis a) {
  switch (a) {
    case SweepAxis::K: return {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    case SweepAxis::Lambda: return {0, 0.1, 0.3, 0.5, 0.7, 0.9, 1};
    case SweepAxis::Tau: return {0.5, 1, 2, 4, 8};
    case SweepAxis::NDocs: return {300, 250, 200, 150, 100};
    case SweepAxis::RefCapacity: return {16, 32, 64, 128};
  }
  return {};
}

std::vector<std::size_t> subsample_indices(std::uint64_t seed, std::size_t total, std::size_t n) {
  if (n > total) throw UsageError("cannot subsample " + std::to_string(n) + " of " + std::to_string(total));
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  SplitMix64 gen(derive_seed(seed, stream_id("subsample")));
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + gen.below(total - i)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

void check_grid(SweepAxis axis, std::span<const double> grid) {
  if (grid.empty()) throw UsageError("sweep grid is empty");
  for (double v : grid) {
    bool ok = std::isfinite(v);
    switch (axis) {
      case SweepAxis::K: ok = ok && v > 0 && v <= 100; break;
      case SweepAxis::Lambda: ok = ok && v >= 0 && v <= 1; break;
      case SweepAxis::Tau: ok = ok && v > 0; break;
      case SweepAxis::NDocs:
      case SweepAxis::RefCapacity: ok = ok && v >= 1 && v == std::floor(v); break;
    }
    if (!ok) throw UsageError("invalid " + std::string(to_string(axis)) + " grid value " + fmt(v));
  }
}

}  // namespace

std::vector<SweepRow> sweep(const RunConfig& config, const fs::path& run, SweepAxis axis,
                            std::vector<double> grid) {
  check_grid(axis, grid);
  config.validate();
  Manifest m = Manifest::load(run);
  const lm::TinyLM reference = load_model(m, kReference);
  const lm::TinyLM targets[2] = {load_model(m, target_model(Target::Clean)),
                                 load_model(m, target_model(Target::Member))};
  const auto suspect = load_split(m, "suspect");
  const auto suspect_tokens = lm::token_lists(suspect);

  std::vector<SweepRow> rows;
  auto add_row = [&](double value, Target t, const ScoreVector& r, const ScoreVector& tv,
                     const ScoreVector& d) {
    const TestReport rep = bootstrap_test(r, tv, d, config.test);
    rows.push_back({value, t, rep.n_docs, rep.rho_rt, rep.rho_dt, rep.delta_hat, rep.p_value, rep.verdict});
  };

  if (axis == SweepAxis::K) {
    const lm::TinyLM distilled[2] = {load_model(m, distilled_model(Target::Clean)),
                                     load_model(m, distilled_model(Target::Member))};
    const DatasetStats rs = model_stats(reference, kReference, suspect, "suspect");
    for (double k : grid) {
      ScoreSpec spec = config.score;
      spec.k_percent = k;
      const ScoreVector r = score_dataset(rs, spec);
      for (Target t : {Target::Clean, Target::Member}) {
        const int i = static_cast<int>(t);
        add_row(k, t, r, model_scores(targets[i], target_model(t), suspect, "suspect", spec),
                model_scores(distilled[i], distilled_model(t), suspect, "suspect", spec));
      }
    }
  } else if (axis == SweepAxis::Lambda || axis == SweepAxis::Tau) {
    const ScoreVector r = model_scores(reference, kReference, suspect, "suspect", config.score);
    const ScoreVector tv[2] = {
        model_scores(targets[0], target_model(Target::Clean), suspect, "suspect", config.score),
        model_scores(targets[1], target_model(Target::Member), suspect, "suspect", config.score)};
    for (double v : grid) {
      lm::DistillConfig dc = config.distill;
      (axis == SweepAxis::Lambda ? dc.lambda : dc.tau) = v;
      for (Target t : {Target::Clean, Target::Member}) {
        const int i = static_cast<int>(t);
        const auto d = lm::distill_reference(reference, targets[i], suspect_tokens, dc).model;
        add_row(v, t, r, tv[i], model_scores(d, distilled_model(t), suspect, "suspect", config.score));
      }
    }
  } else if (axis == SweepAxis::NDocs) {
    for (double v : grid) {
      const auto idx = subsample_indices(config.seed, suspect.size(), static_cast<std::size_t>(v));
      const auto sub = pick(suspect, idx);
      const auto sub_tokens = lm::token_lists(sub);
      const ScoreVector r = model_scores(reference, kReference, sub, "suspect", config.score);
      for (Target t : {Target::Clean, Target::Member}) {
        const int i = static_cast<int>(t);
        const auto d = lm::distill_reference(reference, targets[i], sub_tokens, config.distill).model;
        add_row(v, t, r, model_scores(targets[i], target_model(t), sub, "suspect", config.score),
                model_scores(d, distilled_model(t), sub, "suspect", config.score));
      }
    }
  } else {
    const auto base = lm::token_lists(load_split(m, "base"));
    for (double v : grid) {
      const lm::TinyLM ref = train_reference(config, base, static_cast<int>(v));
      const ScoreVector r = model_scores(ref, kReference, suspect, "suspect", config.score);
      for (Target t : {Target::Clean, Target::Member}) {
        const int i = static_cast<int>(t);
        const auto d = lm::distill_reference(ref, targets[i], suspect_tokens, config.distill).model;
        add_row(v, t, r, model_scores(targets[i], target_model(t), suspect, "suspect", config.score),
                model_scores(d, distilled_model(t), suspect, "suspect", config.score));
      }
    }
  }

  const std::string rel = "sweeps/" + std::string(to_string(axis)) + "." + config.score.tag() + "." +
                          std::string(to_string(config.test.metric)) + ".csv";
  codec::write_file(m.path_of(rel), format_sweep_csv(axis, rows));
  m.record(rel);
  m.save();
  return rows;
}

std::string format_sweep_csv(SweepAxis axis, std::span<const SweepRow> rows) {
  std::string out = std::string(to_string(axis)) + ",target,n_docs,rho_rt,rho_dt,delta_hat,p_value,verdict\n";
  for (const auto& r : rows)
    out += fmt(r.value) + "," + std::string(to_string(r.target)) + "," + std::to_string(r.n_docs) + "," +
           fmt(r.rho_rt) + "," + fmt(r.rho_dt) + "," + fmt(r.delta_hat) + "," + fmt(r.p_value) + "," +
           std::string(to_string(r.verdict)) + "\n";
  return out;
}

std::vector<ScoreGapRow> compare_scores(const RunConfig& config, const fs::path& run) {
  config.validate();
  Manifest m = Manifest::load(run);
  std::vector<ScoreGapRow> rows;
  for (ScoreKind kind : {ScoreKind::Loss, ScoreKind::Compression, ScoreKind::MinK, ScoreKind::MinKpp}) {
    ScoreSpec spec = config.score;
    spec.kind = kind;
    const ScoreVector r = stored_scores(m, kReference, "suspect", spec);
    const ScoreVector c = stored_scores(m, target_model(Target::Clean), "suspect", spec);
    const ScoreVector mem = stored_scores(m, target_model(Target::Member), "suspect", spec);
    const auto a = align_scores(std::vector<ScoreVector>{r, c, mem});
    ScoreGapRow row;
    row.spec = spec;
    row.rho_clean = rank_correlation(config.test.metric, a[0].values(), a[1].values());
    row.rho_member = rank_correlation(config.test.metric, a[0].values(), a[2].values());
    row.gap = row.rho_clean - row.rho_member;
    rows.push_back(row);
  }
  codec::write_file(m.path_of("reports/compare-scores.csv"), format_compare_csv(rows, config.test.metric));
  codec::write_file(m.path_of("reports/compare-scores.txt"), format_compare_text(rows, config.test.metric));
  m.record("reports/compare-scores.csv");
  m.record("reports/compare-scores.txt");
  m.save();
  return rows;
}

std::string format_compare_csv(std::span<const ScoreGapRow> rows, RankMetric metric) {
  std::string out = "score,metric,rho_ref_clean,rho_ref_member,gap\n";
  for (const auto& r : rows)
    out += r.spec.tag() + "," + std::string(to_string(metric)) + "," + fmt(r.rho_clean) + "," +
           fmt(r.rho_member) + "," + fmt(r.gap) + "\n";
  return out;
}

std::string format_compare_text(std::span<const ScoreGapRow> rows, RankMetric metric) {
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-22s %12s %12s %10s\n", "score", "rho(R,clean)", "rho(R,member)", "gap");
  o << buf;
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].gap > rows[best].gap) best = i;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-22s %12.6f %12.6f %10.6f%s\n", rows[i].spec.tag().c_str(),
                  rows[i].rho_clean, rows[i].rho_member, rows[i].gap, i == best ? "  <- largest" : "");
    o << buf;
  }
  o << "metric: " << to_string(metric) << '\n';
  return o.str();
}

RankAnalysis rank_analysis(const RunConfig& config, const fs::path& run) {
  config.score.validate();
  Manifest m = Manifest::load(run);
  ScoreSpec spec = config.score;
  spec.sign = SignConvention::SurprisalPositive;
  const ScoreVector before = stored_scores(m, target_model(Target::Clean), "suspect", spec);
  const ScoreVector after = stored_scores(m, target_model(Target::Member), "suspect", spec);
  RankAnalysis a;
  a.rows = rank_delta(before, after);
  const std::size_t n = a.rows.size();
  for (std::size_t d = 0; d < 10; ++d) {
    const std::size_t lo = d * n / 10, hi = (d + 1) * n / 10;
    double sum = 0;
    for (std::size_t i = lo; i < hi; ++i) sum += a.rows[i].delta;
    a.decile_mean_delta.push_back(hi > lo ? sum / static_cast<double>(hi - lo) : 0.0);
  }
  codec::write_file(m.path_of("reports/rank-delta.csv"), format_rank_delta_csv(a.rows));
  codec::write_file(m.path_of("reports/rank-delta.txt"), format_rank_text(a));
  m.record("reports/rank-delta.csv");
  m.record("reports/rank-delta.txt");
  m.save();
  return a;
}

std::string format_rank_text(const RankAnalysis& a) {
  std::ostringstream o;
  o << "documents " << a.rows.size() << "\n";
  o << "mean rank change (member - clean) by clean-target surprisal decile, low to high\n";
  char buf[64];
  for (std::size_t d = 0; d < a.decile_mean_delta.size(); ++d) {
    std::snprintf(buf, sizeof buf, "decile %2zu  %+.2f\n", d + 1, a.decile_mean_delta[d]);
    o << buf;
  }
  return o.str();
}

}  // namespace prism::audit
