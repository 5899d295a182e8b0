#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "repairbench/types.hpp"

namespace repairbench {
class Rng;
}

namespace repairbench::grammar {

/// Surface words of the instruction and correction templates.
///
/// Excuses may be multi-word phrases ("excuse me"); they are stored with
/// single spaces and contribute one token per word. An empty entry in
/// rare_color_synonyms means the color has no rare synonym.
struct Lexicon {
  std::array<std::string, kNumColors> colors;
  std::array<std::vector<std::string>, kNumShapes> shapes;
  std::array<std::vector<std::string>, kNumTasks> task_verbs;
  std::vector<std::string> excuses;
  std::string negation_word;
  std::string edit_word;
  std::array<std::string, kNumColors> rare_color_synonyms;
  std::string article;
  std::string object_word;

  static Lexicon defaults();

  /// Parses the JSON lexicon document. Keys mirror the fields above; any
  /// key that is absent keeps its default. Throws ConfigError.
  static Lexicon from_json_text(std::string_view text);
  static Lexicon load(const std::filesystem::path& path);

  /// Throws ConfigError naming the offending key.
  void validate() const;

  /// Every distinct word, each multi-word phrase split into its words.
  std::vector<std::string> words() const;
};

/// Constraints on a target object.
///
/// color_unknown marks a color slot filled by a word the listener cannot
/// ground (a rare synonym); it acts as a wildcard when matching.
struct ObjectDescription {
  std::optional<Color> color;
  bool color_unknown = false;
  std::optional<Shape> shape;
  ColorSet negated_colors;
  ShapeSet negated_shapes;

  bool has_affirmative() const { return color.has_value() || color_unknown || shape.has_value(); }
  bool has_negation() const { return negated_colors.any() || negated_shapes.any(); }
  bool empty() const { return !has_affirmative() && !has_negation(); }

  bool matches(Color c, Shape s) const;

  friend bool operator==(const ObjectDescription&, const ObjectDescription&) = default;
};

struct SemanticGoal {
  Task task = Task::reach;
  ObjectDescription object;

  friend bool operator==(const SemanticGoal&, const SemanticGoal&) = default;
};

/// Merge an instruction with a correction fragment.
///
/// Affirmative correction attributes overwrite the same slot of the
/// instruction (replacing a conflicting value or refining an empty/unknown
/// one). Negated attributes are added to the negated sets and clear an
/// instruction attribute they contradict. Everything else is retained.
ObjectDescription merge(const ObjectDescription& instruction, const ObjectDescription& correction);
SemanticGoal merge(const SemanticGoal& instruction, const ObjectDescription& correction);

struct Utterance {
  std::vector<std::string> tokens;

  /// Tokens joined with single spaces.
  std::string text() const;
  /// Splits on whitespace; lowercases; no other normalization.
  static Utterance from_text(std::string_view text);

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// Longest utterance the extended-instruction grammar can derive is 10
/// tokens; goal encodings are padded to this fixed length.
inline constexpr std::size_t kMaxGoalTokens = 12;

enum class NounForm { color_shape, shape_only, color_only };

struct Beginning {
  enum class Kind { excuse, negation, edit };
  Kind kind = Kind::edit;
  std::size_t excuse_index = 0;

  static Beginning excuse(std::size_t i) { return {Kind::excuse, i}; }
  static Beginning negation() { return {Kind::negation, 0}; }
  static Beginning edit() { return {Kind::edit, 0}; }

  friend bool operator==(const Beginning&, const Beginning&) = default;
};

/// Which synonym to use for each slot.
struct SynonymChoice {
  std::size_t verb = 0;
  std::size_t shape = 0;
  bool rare_color = false;

  friend bool operator==(const SynonymChoice&, const SynonymChoice&) = default;
};

struct ParsedGoal {
  SemanticGoal combined;
  SemanticGoal instruction;
  std::optional<ObjectDescription> correction;
};

/// Generator and parser for the instruction and correction templates:
///
///   EXTENDED    ::= INSTRUCTION [CORRECTION]
///   INSTRUCTION ::= TASKVERB "the" OBJECT
///   CORRECTION  ::= BEGINNING "the" OBJECT
///   OBJECT      ::= COLOR SHAPE | SHAPE | COLOR "object"
///   BEGINNING   ::= EXCUSE | "not" | "actually"
///
/// Immutable after construction; safe to share across threads.
class Grammar {
 public:
  explicit Grammar(Lexicon lexicon);

  const Lexicon& lexicon() const { return lexicon_; }

  Utterance generate_instruction(const SemanticGoal& goal, NounForm form,
                                 const SynonymChoice& synonyms) const;
  Utterance generate_correction(const ObjectDescription& correction, Beginning beginning,
                                NounForm noun_form, const SynonymChoice& synonyms) const;

  /// Throws ParseError carrying the index of the first offending token.
  ParsedGoal parse(const Utterance& utterance) const;

  /// Random synonym indices valid for the given task (and shape if any).
  SynonymChoice sample_synonyms(Task task, std::optional<Shape> shape, Rng& rng) const;

 private:
  enum class WordClass { color, rare_color, shape, verb, article, object, negation, edit };
  struct WordInfo {
    WordClass cls;
    std::size_t value;  // enum index for color/shape/verb
  };

  const WordInfo* classify(const std::string& token) const;
  void append_object(std::vector<std::string>& out, const std::optional<Color>& color,
                     const std::optional<Shape>& shape, NounForm form,
                     const SynonymChoice& synonyms) const;

  Lexicon lexicon_;
  std::unordered_map<std::string, WordInfo> words_;
  std::vector<std::vector<std::string>> excuse_tokens_;
};

/// Shared instance built from Lexicon::defaults().
const Grammar& default_grammar();

Utterance extend_goal(const Utterance& goal, const Utterance& correction);

/// Fixed token encoding: padding at id 0, remaining words in lexicographic
/// order from id 1.
class Vocabulary {
 public:
  static constexpr std::string_view kPadding = "<pad>";

  explicit Vocabulary(const Lexicon& lexicon);

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<int> id(std::string_view word) const;
  const std::string& word(int id) const;

  /// Throws EncodingError on unknown tokens, ContractViolation if the
  /// utterance is longer than max_len.
  std::vector<int> encode(const Utterance& utterance, std::size_t max_len = kMaxGoalTokens) const;
  /// Stops at the first padding id.
  Utterance decode(std::span<const int> ids) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

const Vocabulary& default_vocabulary();

}  // namespace repairbench::grammar
