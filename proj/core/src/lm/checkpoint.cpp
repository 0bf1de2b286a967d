#include <sstream>

#include <nlohmann/json.hpp>

#include "prism/codec.hpp"
#include "prism/lm/tiny_lm.hpp"

namespace prism::lm {
namespace {

constexpr std::string_view kMagic = "prism-tinylm";
constexpr int kVersion = 1;

template <typename M>
void write_block(std::string& out, std::string_view name, const M& m) {
  out += std::string(name) + ' ' + std::to_string(m.rows()) + ' ' + std::to_string(m.cols()) + '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += codec::format_double(m(i, j));
    }
    out += '\n';
  }
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::string next_line() {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of checkpoint");
    ++line_no_;
    return line;
  }

  template <typename M>
  void read_block(std::string_view name, M& m, Eigen::Index rows, Eigen::Index cols) {
    std::istringstream hdr(next_line());
    std::string got;
    Eigen::Index r = 0, c = 0;
    if (!(hdr >> got >> r >> c) || got != name || r != rows || c != cols)
      fail("expected block '" + std::string(name) + "' of shape " + std::to_string(rows) + "x" +
           std::to_string(cols));
    m.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const std::string line = next_line();
      const char* p = line.c_str();
      for (Eigen::Index j = 0; j < cols; ++j) {
        char* end = nullptr;
        m(i, j) = std::strtod(p, &end);
        if (end == p) fail("bad number in block '" + std::string(name) + "'");
        p = end;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError("checkpoint line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

}  // namespace

std::string format_checkpoint(const TinyLM& model) {
  std::string out = std::string(kMagic) + ' ' + std::to_string(kVersion) + '\n';
  out += "vocab " + std::to_string(model.vocab_size()) + '\n';
  for (const auto& s : model.vocab().symbols()) out += nlohmann::json(s).dump() + '\n';
  const auto& d = model.dims();
  out += "dims " + std::to_string(d.context) + ' ' + std::to_string(d.embed) + ' ' +
         std::to_string(d.hidden) + '\n';
  const auto& p = model.params();
  write_block(out, "embed", p.embed);
  write_block(out, "w1", p.w1);
  write_block(out, "b1", p.b1);
  write_block(out, "w2", p.w2);
  write_block(out, "b2", p.b2);
  out += "end\n";
  return out;
}

TinyLM parse_checkpoint(const std::string& text) {
  Reader r(text);
  {
    std::istringstream hdr(r.next_line());
    std::string magic;
    int version = 0;
    if (!(hdr >> magic >> version) || magic != kMagic) r.fail("not a tiny-LM checkpoint");
    if (version != kVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  }
  int V = 0;
  {
    std::istringstream ls(r.next_line());
    std::string tag;
    if (!(ls >> tag >> V) || tag != "vocab" || V < 2) r.fail("bad vocab line");
  }
  std::vector<std::string> symbols;
  for (int i = 0; i < V; ++i) {
    try {
      symbols.push_back(nlohmann::json::parse(r.next_line()).get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      r.fail(std::string("bad vocabulary symbol: ") + e.what());
    }
  }
  ModelDims dims;
  {
    std::istringstream ls(r.next_line());
    std::string tag;
    if (!(ls >> tag >> dims.context >> dims.embed >> dims.hidden) || tag != "dims")
      r.fail("bad dims line");
  }
  const Eigen::Index cd = static_cast<Eigen::Index>(dims.context) * dims.embed;
  Parameters p;
  r.read_block("embed", p.embed, V, dims.embed);
  r.read_block("w1", p.w1, dims.hidden, cd);
  r.read_block("b1", p.b1, dims.hidden, 1);
  r.read_block("w2", p.w2, V, dims.hidden);
  r.read_block("b2", p.b2, V, 1);
  if (r.next_line() != "end") r.fail("missing end marker");
  return TinyLM(Vocab(std::move(symbols)), dims, std::move(p));
}

void save_checkpoint(const TinyLM& model, const std::filesystem::path& path) {
  codec::write_file(path, format_checkpoint(model));
}

TinyLM load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(codec::read_file(path));
}

}  // namespace prism::lm
