#include "prism/ingest.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "prism/codec.hpp"
#include "prism/errors.hpp"

using namespace prism;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = PRISM_FIXTURES_DIR;

DatasetStats random_dataset(std::mt19937_64& gen, std::size_t n_docs) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<DocumentStats> docs;
  for (std::size_t i = 0; i < n_docs; ++i) {
    std::vector<TokenStat> t;
    const std::size_t n = 1 + gen() % 40;
    for (std::size_t k = 0; k < n; ++k) {
      const double mu = -10 * u(gen);
      t.emplace_back(-std::exp(8 * u(gen) - 6), mu, u(gen) < 0.05 ? 0.0 : u(gen) / 3);
    }
    std::optional<std::string> raw;
    if (gen() % 2) {
      std::string s(1 + gen() % 30, '\0');
      for (auto& ch : s) ch = static_cast<char>(gen() & 0xff);
      raw = s;
    }
    docs.emplace_back("doc-" + std::to_string(i), std::move(t), raw);
  }
  return DatasetStats("model", "set", std::move(docs));
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(TokenStat, Invariants) {
  EXPECT_NO_THROW(TokenStat(-0.0, 0.0, 0.0));
  EXPECT_THROW(TokenStat(0.1, -1, 1), ValidationError);
  EXPECT_THROW(TokenStat(-1, 0.5, 1), ValidationError);
  EXPECT_THROW(TokenStat(-1, -1, -0.1), ValidationError);
  EXPECT_THROW(TokenStat(std::nan(""), -1, 1), ValidationError);
  EXPECT_THROW(TokenStat(-1, -std::numeric_limits<double>::infinity(), 1), ValidationError);
  try {
    TokenStat(-1, -1, -0.1);
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "sigma");
  }
}

TEST(DocumentStats, Invariants) {
  EXPECT_THROW(DocumentStats("", {TokenStat(-1, -1, 1)}), ValidationError);
  EXPECT_THROW(DocumentStats("a", {}), ValidationError);
  const DocumentStats d("a", {TokenStat(-1, -1, 1)});
  EXPECT_THROW(DatasetStats("m", "d", {d, d}), ValidationError);
  EXPECT_THROW(DatasetStats("m", "d", {}), ValidationError);
}

TEST(Pstats, FixtureRoundTripsByteForByte) {
  const std::string text = codec::read_file(kFixtures / "three_docs.pstats");
  const DatasetStats ds = parse_dataset_stats(text);
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.model_id(), "reference");
  EXPECT_EQ(ds.docs()[0].doc_id(), "d0001");
  EXPECT_EQ(ds.docs()[0].raw_bytes(), std::optional<std::string>("ab"));
  EXPECT_FALSE(ds.docs()[1].raw_bytes().has_value());
  EXPECT_EQ(ds.docs()[2].tokens()[1], TokenStat(-4, -2.5, 1));
  EXPECT_EQ(format_dataset_stats(ds), text);
}

TEST(Pstats, NegativeSigmaNamesDocAndField) {
  try {
    read_dataset_stats(kFixtures / "bad_sigma.pstats");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.doc_id(), "d0002");
    EXPECT_EQ(e.field(), "sigma");
    EXPECT_EQ(format_validation_line(e).rfind("ERROR 3 d0002 sigma ", 0), 0u);
  }
}

TEST(Pstats, MalformedLinesCarryLineNumbers) {
  const std::string header = R"({"format":"pstats","version":1,"model_id":"m","dataset_id":"d"})";
  auto line_of = [](const std::string& text) {
    try {
      parse_dataset_stats(text);
    } catch (const ValidationError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of(header + "\n{\"doc_id\":\"a\",\"n_tokens\":1,\"tokens\":[[-1,-1,1]]}\n{oops\n"), 3);
  EXPECT_EQ(line_of(header + "\n{\"doc_id\":\"a\",\"n_tokens\":2,\"tokens\":[[-1,-1,1]]}\n"), 2);
  EXPECT_EQ(line_of("{\"doc_id\":\"a\",\"n_tokens\":1,\"tokens\":[[-1,-1,1]]}\n"), 1);
  EXPECT_EQ(line_of(header + "\n"), 1);
}

TEST(Pstats, ZeroTokenDocumentRefused) {
  const std::string text = R"({"format":"pstats","version":1,"model_id":"m","dataset_id":"d"})"
                           "\n"
                           R"({"doc_id":"a","n_tokens":0,"tokens":[]})"
                           "\n";
  EXPECT_THROW(parse_dataset_stats(text), ValidationError);
}

TEST(Pstats, RandomDatasetsRoundTripBitExact) {
  std::mt19937_64 gen(41);
  const DatasetStats ds = random_dataset(gen, 1000);
  const auto path = fs::temp_directory_path() / "prism_roundtrip.pstats";
  write_dataset_stats(ds, path);
  const DatasetStats back = read_dataset_stats(path);
  fs::remove(path);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto a = ds.docs()[i].tokens(), b = back.docs()[i].tokens();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      ASSERT_TRUE(bit_equal(a[k].logp_true(), b[k].logp_true()));
      ASSERT_TRUE(bit_equal(a[k].mu(), b[k].mu()));
      ASSERT_TRUE(bit_equal(a[k].sigma(), b[k].sigma()));
    }
  }
  EXPECT_EQ(back, ds);
}

TEST(Align, CanonicalOrderAndMissing) {
  std::vector<DocumentStats> a, b;
  for (int i = 1; i <= 500; ++i) a.emplace_back("id" + std::to_string(i), std::vector{TokenStat(-1, -1, 1)});
  for (int i = 750; i >= 251; --i) b.emplace_back("id" + std::to_string(i), std::vector{TokenStat(-1, -1, 1)});
  const DatasetStats da("m", "a", a), db("m", "b", b);
  const Alignment al = align_by_doc_id(da, db);
  EXPECT_EQ(al.ids.size(), 250u);
  EXPECT_TRUE(std::is_sorted(al.ids.begin(), al.ids.end()));
  EXPECT_EQ(al.missing_in_b.size(), 250u);
  EXPECT_EQ(al.missing_in_a.size(), 250u);
  for (std::size_t i = 0; i < al.ids.size(); ++i) {
    EXPECT_EQ(da.docs()[al.index_a[i]].doc_id(), al.ids[i]);
    EXPECT_EQ(db.docs()[al.index_b[i]].doc_id(), al.ids[i]);
  }
  EXPECT_EQ(align_by_doc_id(db, da).ids, al.ids);
}

TEST(Align, SameIdsDifferentOrder) {
  const std::vector<std::string> a{"c", "a", "b"}, b{"b", "c", "a"};
  const Alignment al = align_ids(a, b);
  EXPECT_EQ(al.ids, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(al.missing_in_a.empty());
}

TEST(Align, DisjointIsAnError) {
  const std::vector<std::string> a{"a"}, b{"b"};
  EXPECT_THROW(align_ids(a, b), DataError);
}
