#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "rcgen/rng.hpp"
#include "rcgen/vocab.hpp"

using namespace rcgen;

TEST_CASE("build_vocab assigns ids to content then special tokens") {
  const Vocabulary v = Vocabulary::build({{"a", "b"}, {"b", "c"}});
  CHECK(v.size() == 7);
  CHECK(v.content_count() == 3);
  CHECK(v.id_of("a") == 0);
  CHECK(v.id_of("b") == 1);
  CHECK(v.id_of("c") == 2);
  CHECK(v.pad() == 3);
  CHECK(v.bos() == 4);
  CHECK(v.eos() == 5);
  CHECK(v.answer_delim() == 6);
}

TEST_CASE("build_vocab rejects degenerate corpora") {
  CHECK_THROWS(Vocabulary::build({}));
  CHECK_THROWS(Vocabulary::build({{}}));
  CHECK_THROWS(Vocabulary::build({{"<pad>"}}));
}

TEST_CASE("build_vocab over many sequences counts distinct symbols") {
  // 50 sequences cycling over 26 symbols.
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> seq;
    for (int j = 0; j < 10; ++j) {
      seq.push_back(std::string(1, static_cast<char>('a' + (i * 10 + j) % 26)));
    }
    corpus.push_back(seq);
  }
  CHECK(Vocabulary::build(corpus).size() == 26 + 4);
}

TEST_CASE("control token registration") {
  Vocabulary v = Vocabulary::build({{"a"}});
  SUBCASE("three rationale rewards at K=5 plus correctness at K=2 gives 17") {
    const ControlTokenTable table = v.register_control_tokens(
        {{"plausibility", 5}, {"consistency", 5}, {"diversity", 5}, {"correctness", 2}});
    CHECK(table.size() == 17);
    CHECK(v.size() == 1 + 4 + 17);
    // No two entries share an id, and control ids are disjoint from the rest.
    std::set<TokenId> ids;
    for (const auto& name : table.reward_order()) {
      for (int bin = 1; bin <= table.bins(name); ++bin) {
        const TokenId id = table.token(name, bin);
        CHECK(v.is_control(id));
        CHECK_FALSE(v.is_content(id));
        ids.insert(id);
      }
    }
    CHECK(ids.size() == 17);
    CHECK(v.token_of(table.token("plausibility", 1)) == "<R=plausibility:1>");
  }
  SUBCASE("minimal single reward") {
    const ControlTokenTable table = v.register_control_tokens({{"div", 2}});
    CHECK(table.size() == 2);
  }
  SUBCASE("duplicate reward names rejected") {
    CHECK_THROWS(v.register_control_tokens({{"div", 2}, {"div", 3}}));
  }
  SUBCASE("fewer than 2 bins rejected") {
    CHECK_THROWS(v.register_control_tokens({{"div", 1}}));
  }
}

TEST_CASE("encode and decode") {
  const Vocabulary v = Vocabulary::build({{"a", "b", "c"}});
  CHECK(v.encode({"a"}) == std::vector<TokenId>{0});
  CHECK(v.decode({0}) == std::vector<std::string>{"a"});
  CHECK_THROWS(v.encode({"zz"}));
  CHECK_THROWS(v.decode({99}));
  CHECK_THROWS(v.decode({-1}));
}

TEST_CASE("decode of encode is the identity on random content sequences") {
  std::vector<std::vector<std::string>> corpus(1);
  for (int i = 0; i < 20; ++i) corpus[0].push_back("tok" + std::to_string(i));
  const Vocabulary v = Vocabulary::build(corpus);
  Rng rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> seq;
    const int len = static_cast<int>(rng.uniform_int(30));
    for (int i = 0; i < len; ++i) {
      seq.push_back("tok" + std::to_string(rng.uniform_int(20)));
    }
    CHECK(v.decode(v.encode(seq)) == seq);
  }
}

TEST_CASE("vocabulary json round-trip keeps ids stable") {
  Vocabulary v = Vocabulary::build({{"x", "y", "z"}});
  v.register_control_tokens({{"diversity", 3}, {"correctness", 2}});
  const Vocabulary w = Vocabulary::from_json(v.to_json());
  CHECK(w.size() == v.size());
  for (TokenId id = 0; id < v.size(); ++id) {
    CHECK(w.token_of(id) == v.token_of(id));
  }
  CHECK(w.control_table().token("diversity", 2) ==
        v.control_table().token("diversity", 2));
  CHECK(w.to_json() == v.to_json());
}
