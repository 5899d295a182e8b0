#include <algorithm>
#include <set>

#include "../support/fixtures.hpp"
#include "../support/reference.hpp"
#include "doctest.h"
#include "repairbench/errors.hpp"
#include "repairbench/grammar.hpp"

using namespace repairbench;
using namespace repairbench::grammar;
using fixtures::utt;

namespace {

const Grammar& G() { return default_grammar(); }

SemanticGoal goal(Task t, std::optional<Color> c, std::optional<Shape> s) {
  SemanticGoal g;
  g.task = t;
  g.object.color = c;
  g.object.shape = s;
  return g;
}

// Agreement of a parsed description with the reference meaning on every
// attribute combination.
bool same_extension(const ObjectDescription& d, const ref::RefMeaning& m) {
  for (Color c : kAllColors) {
    for (Shape s : kAllShapes) {
      if (d.matches(c, s) != ref::satisfies(m, static_cast<int>(c), static_cast<int>(s))) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("default lexicon word lists") {
  const auto lex = Lexicon::defaults();
  for (std::size_t i = 0; i < kNumColors; ++i) {
    CHECK(lex.colors[i] == ref::kColors[i]);
    CHECK(lex.rare_color_synonyms[i] == ref::kRareColors[i]);
  }
  for (std::size_t s = 0; s < kNumShapes; ++s) CHECK(lex.shapes[s] == ref::kShapes[s]);
  for (std::size_t t = 0; t < kNumTasks; ++t) CHECK(lex.task_verbs[t] == ref::kVerbs[t]);
  CHECK(lex.excuses == std::vector<std::string>{"sorry", "excuse me", "no i meant", "pardon"});
  CHECK(lex.negation_word == "not");
  CHECK(lex.edit_word == "actually");
  CHECK(lex.article == "the");
}

TEST_CASE("lexicon validation rejects overlapping words") {
  auto lex = Lexicon::defaults();
  lex.rare_color_synonyms[0] = "blue";
  CHECK_THROWS_AS(lex.validate(), ConfigError);
  lex = Lexicon::defaults();
  lex.shapes[1].push_back("cube");
  CHECK_THROWS_AS(lex.validate(), ConfigError);
}

TEST_CASE("lexicon from JSON keeps defaults for absent keys") {
  const auto lex = Lexicon::from_json_text(R"({"edit_word":"rather"})");
  CHECK(lex.edit_word == "rather");
  CHECK(lex.negation_word == "not");
  CHECK_THROWS_AS(Lexicon::from_json_text(R"({"colours":[]})"), ConfigError);
  CHECK_THROWS_AS(Lexicon::from_json_text("{"), ConfigError);
}

TEST_CASE("generate_instruction examples") {
  CHECK(G().generate_instruction(goal(Task::grasp, {}, Shape::cube), NounForm::shape_only, {}).text() ==
        "grasp the cube");
  CHECK(G().generate_instruction(goal(Task::reach, Color::red, Shape::cube), NounForm::color_shape, {}).text() ==
        "reach the red cube");
  CHECK(G().generate_instruction(goal(Task::push, Color::blue, {}), NounForm::color_only, {}).text() ==
        "push the blue object");
  SynonymChoice syn;
  syn.verb = 2;
  syn.shape = 1;
  CHECK(G().generate_instruction(goal(Task::lift, Color::cyan, Shape::cylinder), NounForm::color_shape, syn).text() ==
        "hoist the cyan barrel");
}

TEST_CASE("generate_instruction rejects a form that does not fit the goal") {
  CHECK_THROWS_AS(G().generate_instruction(goal(Task::reach, Color::red, {}), NounForm::shape_only, {}),
                  ContractViolation);
  CHECK_THROWS_AS(G().generate_instruction(goal(Task::reach, Color::red, Shape::cube), NounForm::color_only, {}),
                  ContractViolation);
  SynonymChoice syn;
  syn.verb = 3;
  CHECK_THROWS_AS(G().generate_instruction(goal(Task::reach, {}, Shape::cube), NounForm::shape_only, syn),
                  ContractViolation);
}

TEST_CASE("generate_correction examples") {
  ObjectDescription blue_cuboid;
  blue_cuboid.color = Color::blue;
  blue_cuboid.shape = Shape::cuboid;
  CHECK(G().generate_correction(blue_cuboid, Beginning::excuse(0), NounForm::color_shape, {}).text() ==
        "sorry the blue cuboid");

  ObjectDescription not_red;
  not_red.negated_colors.set(index_of(Color::red));
  CHECK(G().generate_correction(not_red, Beginning::negation(), NounForm::color_only, {}).text() ==
        "not the red object");

  ObjectDescription green_cube;
  green_cube.color = Color::green;
  green_cube.shape = Shape::cube;
  CHECK(G().generate_correction(green_cube, Beginning::edit(), NounForm::color_shape, {}).text() ==
        "actually the green cube");
  CHECK(G().generate_correction(green_cube, Beginning::excuse(2), NounForm::color_shape, {}).tokens.size() == 6);
}

TEST_CASE("generate_correction contract") {
  CHECK_THROWS_AS(G().generate_correction({}, Beginning::edit(), NounForm::color_only, {}), ContractViolation);
  ObjectDescription red;
  red.color = Color::red;
  CHECK_THROWS_AS(G().generate_correction(red, Beginning::negation(), NounForm::color_only, {}), ContractViolation);
  ObjectDescription not_red;
  not_red.negated_colors.set(0);
  CHECK_THROWS_AS(G().generate_correction(not_red, Beginning::edit(), NounForm::color_only, {}), ContractViolation);
}

TEST_CASE("extend_goal concatenates") {
  CHECK(extend_goal(utt("grasp the cube"), utt("actually the green cube")).text() ==
        "grasp the cube actually the green cube");
  CHECK(extend_goal(utt("reach the red cube"), Utterance{}).text() == "reach the red cube");
  CHECK(extend_goal(utt("reach the red cuboid"), utt("not the red object")).text() ==
        "reach the red cuboid not the red object");
}

TEST_CASE("parse examples") {
  auto p = G().parse(utt("reach the red cube"));
  CHECK(p.combined == goal(Task::reach, Color::red, Shape::cube));
  CHECK_FALSE(p.correction.has_value());

  p = G().parse(utt("grasp the cube actually the green cube"));
  CHECK(p.instruction == goal(Task::grasp, {}, Shape::cube));
  REQUIRE(p.correction.has_value());
  CHECK(p.correction->color == Color::green);
  CHECK(p.correction->shape == Shape::cube);
  CHECK(p.combined == goal(Task::grasp, Color::green, Shape::cube));

  p = G().parse(utt("reach the azure cuboid"));
  CHECK(p.combined.task == Task::reach);
  CHECK(p.combined.object.color_unknown);
  CHECK_FALSE(p.combined.object.color.has_value());
  CHECK(p.combined.object.shape == Shape::cuboid);
}

TEST_CASE("merge rules") {
  // instruction correction: the color is replaced, the shape retained
  auto p = G().parse(utt("reach the red cuboid actually the blue object"));
  CHECK(p.combined.object.color == Color::blue);
  CHECK(p.combined.object.shape == Shape::cuboid);
  // common ground: the unknown color is refined
  p = G().parse(utt("reach the azure cuboid actually the blue object"));
  CHECK(p.combined.object.color == Color::blue);
  CHECK_FALSE(p.combined.object.color_unknown);
  // negation only excludes, and drops a contradicted instruction attribute
  p = G().parse(utt("grasp the cube not the red object"));
  CHECK(p.combined.object.shape == Shape::cube);
  CHECK(p.combined.object.negated_colors.test(index_of(Color::red)));
  CHECK(p.combined.object.matches(Color::green, Shape::cube));
  CHECK_FALSE(p.combined.object.matches(Color::red, Shape::cube));
  CHECK_FALSE(p.combined.object.matches(Color::green, Shape::cuboid));
  p = G().parse(utt("reach the red cuboid not the red object"));
  CHECK_FALSE(p.combined.object.color.has_value());
  CHECK(p.combined.object.matches(Color::blue, Shape::cuboid));
}

TEST_CASE("parse errors carry the offending token index") {
  auto index_of_error = [](const std::string& text) {
    try {
      G().parse(utt(text));
    } catch (const ParseError& e) {
      return static_cast<long>(e.token_index());
    }
    return -1L;
  };
  CHECK(index_of_error("reach teh red cube") == 1);
  CHECK(index_of_error("reach the purple") == 3);
  CHECK(index_of_error("the red cube") == 0);
  CHECK(index_of_error("reach the red cube please") == 4);
  CHECK(index_of_error("reach the red cube sorry the") == 6);
  CHECK(index_of_error("reach the red cube not the blue cube now") == 8);
  CHECK(index_of_error("") == 0);
  // the prose variants "no, not the red" and "sorry, not the red one" are
  // outside the grammar
  CHECK(index_of_error("reach the red cuboid no not the red object") >= 0);
  CHECK(index_of_error("reach the red cuboid sorry not the red one") >= 0);
  CHECK(index_of_error("reach the red cuboid actually the green cube") == -1);
}

TEST_CASE("every instruction choice round-trips and is derivable") {
  const ref::Bnf bnf;
  std::size_t count = 0;
  for (Task t : kAllTasks) {
    for (std::size_t v = 0; v < 3; ++v) {
      for (Color c : kAllColors) {
        for (Shape s : kAllShapes) {
          for (std::size_t syn = 0; syn < 3; ++syn) {
            for (NounForm form : {NounForm::color_shape, NounForm::shape_only, NounForm::color_only}) {
              SemanticGoal g = goal(t, form == NounForm::shape_only ? std::nullopt : std::optional(c),
                                    form == NounForm::color_only ? std::nullopt : std::optional(s));
              const Utterance u = G().generate_instruction(g, form, {v, syn, false});
              const auto parsed = G().parse(u);
              CHECK(parsed.combined == g);
              const auto trees = bnf.parses(u.tokens);
              REQUIRE(trees.size() == 1);
              const auto m = ref::read_meaning(trees.front());
              CHECK(m.task == static_cast<int>(t));
              CHECK(same_extension(parsed.combined.object, m));
              ++count;
            }
          }
        }
      }
    }
  }
  CHECK(count == 4 * 3 * 9 * 3 * 3 * 3);
}

TEST_CASE("reference recognizer rejects near misses") {
  const ref::Bnf bnf;
  CHECK(bnf.accepts(utt("reach the red cube").tokens));
  CHECK(bnf.accepts(utt("take the box no i meant the pink tophat").tokens));
  CHECK_FALSE(bnf.accepts(utt("reach red cube").tokens));
  CHECK_FALSE(bnf.accepts(utt("reach the object").tokens));
  CHECK_FALSE(bnf.accepts(utt("reach the red cube the").tokens));
  CHECK_FALSE(bnf.accepts(utt("reach the red cube not the red object actually the cube").tokens));
}

TEST_CASE("vocabulary is the sorted lexicon plus object and padding") {
  std::set<std::string> words = {"not", "actually", "the", "object"};
  for (const auto& c : ref::kColors) words.insert(c);
  for (const auto& c : ref::kRareColors) words.insert(c);
  for (const auto& s : ref::kShapes) words.insert(s.begin(), s.end());
  for (const auto& v : ref::kVerbs) words.insert(v.begin(), v.end());
  for (const auto& e : ref::kExcuses) words.insert(e.begin(), e.end());
  const auto& vocab = default_vocabulary();
  CHECK(vocab.size() == words.size() + 1);
  CHECK(vocab.size() == 51);
  CHECK(vocab.words().front() == "<pad>");
  std::vector<std::string> sorted(words.begin(), words.end());
  CHECK(std::equal(sorted.begin(), sorted.end(), vocab.words().begin() + 1));
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(vocab.id(sorted[i]) == static_cast<int>(i + 1));
}

TEST_CASE("encode and decode") {
  const auto& vocab = default_vocabulary();
  CHECK(vocab.encode(Utterance{}) == std::vector<int>(12, 0));

  const auto ids = vocab.encode(utt("reach the red cube"));
  REQUIRE(ids.size() == 12);
  CHECK(std::count(ids.begin(), ids.end(), 0) == 8);
  std::set<std::string> all(vocab.words().begin() + 1, vocab.words().end());
  auto rank = [&](const std::string& w) { return static_cast<int>(std::distance(all.begin(), all.find(w))) + 1; };
  CHECK(ids[0] == rank("reach"));
  CHECK(ids[1] == rank("the"));
  CHECK(ids[2] == rank("red"));
  CHECK(ids[3] == rank("cube"));

  CHECK(vocab.decode(vocab.encode(utt("push the blue object"))) == utt("push the blue object"));
  CHECK_THROWS_AS(vocab.encode(utt("reach the mauve cube")), EncodingError);
  CHECK_THROWS_AS(vocab.encode(utt("reach the red cube"), 3), ContractViolation);
}

TEST_CASE("longest extended goal fits the encoding") {
  const auto u = extend_goal(utt("contact the crimson oblong"), utt("no i meant the chestnut barrel"));
  CHECK(u.size() == 10);
  CHECK(u.size() <= kMaxGoalTokens);
  CHECK(default_vocabulary().decode(default_vocabulary().encode(u)) == u);
}
