#include "prism/audit/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "prism/codec.hpp"
#include "prism/errors.hpp"
#include "prism/rng.hpp"

namespace prism::audit {

namespace {

struct Field {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

using Table = std::vector<std::pair<std::string, std::vector<std::pair<std::string, Field>>>>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) throw UsageError("invalid number '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw UsageError("invalid boolean '" + v + "'");
}

Field real(double& x) {
  return {[&x](const std::string& v) { x = parse_number<double>(v); },
          [&x] { return codec::format_shortest(x); }};
}

template <class I>
Field integer(I& x) {
  return {[&x](const std::string& v) { x = parse_number<I>(v); },
          [&x] { return std::to_string(x); }};
}

Field boolean(bool& x) {
  return {[&x](const std::string& v) { x = parse_bool(v); },
          [&x] { return std::string(x ? "true" : "false"); }};
}

Field optimizer(lm::Optimizer& o) {
  return {[&o](const std::string& v) {
            if (v == "sgd") o = lm::Optimizer::SGD;
            else if (v == "sgd-momentum") o = lm::Optimizer::SGDMomentum;
            else throw UsageError("unknown optimizer '" + v + "' (sgd, sgd-momentum)");
          },
          [&o] { return std::string(o == lm::Optimizer::SGD ? "sgd" : "sgd-momentum"); }};
}

void add_train(std::vector<std::pair<std::string, Field>>& s, lm::TrainConfig& t) {
  s.emplace_back("lr", real(t.lr));
  s.emplace_back("batch_size", integer(t.batch_size));
  s.emplace_back("epochs", integer(t.epochs));
  s.emplace_back("optimizer", optimizer(t.optimizer));
  s.emplace_back("momentum", real(t.momentum));
  s.emplace_back("grad_clip", real(t.grad_clip));
  s.emplace_back("warmup_fraction", real(t.warmup_fraction));
  s.emplace_back("cosine_decay", boolean(t.cosine_decay));
}

Table table(RunConfig& c) {
  Table t;
  t.push_back({"run", {{"seed", integer(c.seed)}}});

  auto& co = t.emplace_back("corpus", std::vector<std::pair<std::string, Field>>{}).second;
  co.emplace_back("vocab", integer(c.corpus.vocab));
  co.emplace_back("n_docs", integer(c.corpus.n_docs));
  co.emplace_back("min_len", integer(c.corpus.min_len));
  co.emplace_back("max_len", integer(c.corpus.max_len));
  co.emplace_back("source_sharpness", real(c.corpus.source_sharpness));
  co.emplace_back("temp_min", real(c.corpus.temp_min));
  co.emplace_back("temp_max", real(c.corpus.temp_max));
  co.emplace_back("frac_base", real(c.corpus.frac_base));
  co.emplace_back("frac_suspect", real(c.corpus.frac_suspect));
  co.emplace_back("frac_heldout", real(c.corpus.frac_heldout));

  auto& mo = t.emplace_back("model", std::vector<std::pair<std::string, Field>>{}).second;
  mo.emplace_back("context", integer(c.dims.context));
  mo.emplace_back("embed", integer(c.dims.embed));
  mo.emplace_back("hidden", integer(c.dims.hidden));
  mo.emplace_back("reference_hidden", integer(c.reference_hidden));
  mo.emplace_back("reference_embed", integer(c.reference_embed));

  auto& pr = t.emplace_back("pretrain", std::vector<std::pair<std::string, Field>>{}).second;
  add_train(pr, c.pretrain);
  pr.emplace_back("shared_data_order", boolean(c.shared_data_order));

  auto& cp = t.emplace_back("cpt", std::vector<std::pair<std::string, Field>>{}).second;
  add_train(cp, c.cpt.train);
  cp.emplace_back("suspect_repeats", integer(c.cpt.suspect_repeats));
  cp.emplace_back("base_docs", integer(c.cpt.base_docs));

  auto& di = t.emplace_back("distill", std::vector<std::pair<std::string, Field>>{}).second;
  di.emplace_back("lambda", real(c.distill.lambda));
  di.emplace_back("tau", real(c.distill.tau));
  add_train(di, c.distill.train);

  auto& sc = t.emplace_back("score", std::vector<std::pair<std::string, Field>>{}).second;
  sc.emplace_back("kind", Field{[&c](const std::string& v) { c.score.kind = parse_score_kind(v); },
                                [&c] { return std::string(to_string(c.score.kind)); }});
  sc.emplace_back("k", real(c.score.k_percent));
  sc.emplace_back("sign", Field{[&c](const std::string& v) { c.score.sign = parse_sign_convention(v); },
                                [&c] { return std::string(to_string(c.score.sign)); }});
  sc.emplace_back("sigma_floor", real(c.score.sigma_floor));

  auto& te = t.emplace_back("test", std::vector<std::pair<std::string, Field>>{}).second;
  te.emplace_back("resamples", integer(c.test.resamples));
  te.emplace_back("alpha", real(c.test.alpha));
  te.emplace_back("metric", Field{[&c](const std::string& v) { c.test.metric = parse_rank_metric(v); },
                                  [&c] { return std::string(to_string(c.test.metric)); }});
  te.emplace_back("max_redraws", integer(c.test.max_redraws));
  te.emplace_back("ci_level", real(c.test.ci_level));
  te.emplace_back("threads", integer(c.test.threads));
  return t;
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t master) {
  seed = master;
  corpus.seed = master;
  test.seed = master;
  pretrain.seed = derive_seed(master, stream_id("pretrain"));
  cpt.train.seed = derive_seed(master, stream_id("cpt"));
  distill.train.seed = derive_seed(master, stream_id("distill"));
}

void RunConfig::validate() const {
  corpus.validate(dims.context);
  if (dims.context < 1 || dims.embed < 1 || dims.hidden < 1 || reference_hidden < 1 ||
      reference_embed < 1)
    throw UsageError("model dimensions must be positive");
  pretrain.validate();
  cpt.train.validate();
  if (cpt.suspect_repeats < 1) throw UsageError("cpt.suspect_repeats must be >= 1");
  distill.validate();
  score.validate();
  test.validate();
}

RunConfig default_config() {
  RunConfig c;
  c.corpus.n_docs = 8000;
  c.corpus.min_len = 16;
  c.corpus.max_len = 32;
  c.corpus.frac_suspect = 0.0375;
  c.corpus.frac_heldout = 0.0375;
  c.corpus.frac_base = 0.925;
  c.pretrain = lm::TrainConfig{.lr = 0.1, .batch_size = 16, .epochs = 12};
  c.distill.train.lr = 1.0;
  c.apply_seed(c.seed);
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig c = default_config();
  bool seed_set = false;
  auto t = table(c);
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(origin, line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      bool known = false;
      for (auto& [name, _] : t) known = known || name == section;
      if (!known) throw ConfigError(origin, line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin, line_no, "expected 'key = value'");
    if (section.empty()) throw ConfigError(origin, line_no, "key outside of any section");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    const std::string full = section + "." + key;
    if (!seen.insert(full).second) throw ConfigError(origin, line_no, "duplicate key " + full);
    Field* field = nullptr;
    for (auto& [name, fields] : t)
      if (name == section)
        for (auto& [k, f] : fields)
          if (k == key) field = &f;
    if (!field) throw ConfigError(origin, line_no, "unknown key " + full);
    try {
      field->set(value);
    } catch (const UsageError& e) {
      throw ConfigError(origin, line_no, full + ": " + e.what());
    }
    seed_set = seed_set || full == "run.seed";
  }
  if (seed_set) c.apply_seed(c.seed);
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw ConfigError(origin, 0, e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = codec::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(path.string(), 0, e.what());
  }
  return parse_config(text, path.string());
}

std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> config_entries(
    const RunConfig& c) {
  RunConfig copy = c;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> out;
  for (auto& [name, fields] : table(copy)) {
    auto& sec = out.emplace_back(name, std::vector<std::pair<std::string, std::string>>{}).second;
    for (auto& [k, f] : fields) sec.emplace_back(k, f.get());
  }
  return out;
}

std::string format_config(const RunConfig& c) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [name, fields] : config_entries(c)) {
    if (!first) out << '\n';
    first = false;
    out << '[' << name << "]\n";
    for (const auto& [k, v] : fields) out << k << " = " << v << '\n';
  }
  return out.str();
}

}  // namespace prism::audit
