#include "repairbench/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "repairbench/errors.hpp"
#include "repairbench/rng.hpp"

namespace repairbench::grammar {

bool ObjectDescription::matches(Color c, Shape s) const {
  if (color && *color != c) return false;
  if (shape && *shape != s) return false;
  if (negated_colors.test(index_of(c))) return false;
  if (negated_shapes.test(index_of(s))) return false;
  return true;
}

ObjectDescription merge(const ObjectDescription& instruction, const ObjectDescription& correction) {
  ObjectDescription out = instruction;
  if (correction.color) {
    out.color = correction.color;
    out.color_unknown = false;
    out.negated_colors.reset(index_of(*correction.color));
  }
  if (correction.shape) {
    out.shape = correction.shape;
    out.negated_shapes.reset(index_of(*correction.shape));
  }
  for (Color c : kAllColors) {
    if (!correction.negated_colors.test(index_of(c))) continue;
    out.negated_colors.set(index_of(c));
    if (out.color == c) out.color.reset();
  }
  for (Shape s : kAllShapes) {
    if (!correction.negated_shapes.test(index_of(s))) continue;
    out.negated_shapes.set(index_of(s));
    if (out.shape == s) out.shape.reset();
  }
  return out;
}

SemanticGoal merge(const SemanticGoal& instruction, const ObjectDescription& correction) {
  return {instruction.task, merge(instruction.object, correction)};
}

std::string Utterance::text() const {
  std::string out;
  for (const auto& tok : tokens) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

Utterance Utterance::from_text(std::string_view text) {
  Utterance u;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    for (char& ch : word) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    u.tokens.push_back(std::move(word));
  }
  return u;
}

Utterance extend_goal(const Utterance& goal, const Utterance& correction) {
  Utterance out = goal;
  out.tokens.insert(out.tokens.end(), correction.tokens.begin(), correction.tokens.end());
  return out;
}

Grammar::Grammar(Lexicon lexicon) : lexicon_(std::move(lexicon)) {
  lexicon_.validate();
  for (Color c : kAllColors) {
    words_[lexicon_.colors[index_of(c)]] = {WordClass::color, index_of(c)};
    const auto& rare = lexicon_.rare_color_synonyms[index_of(c)];
    if (!rare.empty()) words_[rare] = {WordClass::rare_color, index_of(c)};
  }
  for (Shape s : kAllShapes) {
    for (const auto& w : lexicon_.shapes[index_of(s)]) words_[w] = {WordClass::shape, index_of(s)};
  }
  for (Task t : kAllTasks) {
    for (const auto& w : lexicon_.task_verbs[index_of(t)]) words_[w] = {WordClass::verb, index_of(t)};
  }
  words_[lexicon_.article] = {WordClass::article, 0};
  words_[lexicon_.object_word] = {WordClass::object, 0};
  words_[lexicon_.negation_word] = {WordClass::negation, 0};
  words_[lexicon_.edit_word] = {WordClass::edit, 0};
  for (const auto& phrase : lexicon_.excuses) excuse_tokens_.push_back(Utterance::from_text(phrase).tokens);
}

const Grammar::WordInfo* Grammar::classify(const std::string& token) const {
  auto it = words_.find(token);
  return it == words_.end() ? nullptr : &it->second;
}

void Grammar::append_object(std::vector<std::string>& out, const std::optional<Color>& color,
                            const std::optional<Shape>& shape, NounForm form,
                            const SynonymChoice& synonyms) const {
  const bool want_color = form != NounForm::shape_only;
  const bool want_shape = form != NounForm::color_only;
  if (want_color != color.has_value() || want_shape != shape.has_value()) {
    throw ContractViolation("noun form does not match the attributes that are set");
  }
  if (color) {
    if (synonyms.rare_color) {
      const auto& rare = lexicon_.rare_color_synonyms[index_of(*color)];
      if (rare.empty()) throw ContractViolation("color has no rare synonym");
      out.push_back(rare);
    } else {
      out.push_back(lexicon_.colors[index_of(*color)]);
    }
  }
  if (shape) {
    const auto& syns = lexicon_.shapes[index_of(*shape)];
    if (synonyms.shape >= syns.size()) throw ContractViolation("shape synonym index out of range");
    out.push_back(syns[synonyms.shape]);
  } else {
    out.push_back(lexicon_.object_word);
  }
}

Utterance Grammar::generate_instruction(const SemanticGoal& goal, NounForm form,
                                        const SynonymChoice& synonyms) const {
  const auto& obj = goal.object;
  if (obj.has_negation() || obj.color_unknown) {
    throw ContractViolation("instructions carry affirmative known attributes only");
  }
  const auto& verbs = lexicon_.task_verbs[index_of(goal.task)];
  if (synonyms.verb >= verbs.size()) throw ContractViolation("verb synonym index out of range");

  Utterance u;
  u.tokens.push_back(verbs[synonyms.verb]);
  u.tokens.push_back(lexicon_.article);
  append_object(u.tokens, obj.color, obj.shape, form, synonyms);
  return u;
}

Utterance Grammar::generate_correction(const ObjectDescription& correction, Beginning beginning,
                                       NounForm noun_form, const SynonymChoice& synonyms) const {
  if (correction.empty()) throw ContractViolation("empty correction fragment");
  if (correction.color_unknown) throw ContractViolation("corrections name known colors only");

  Utterance u;
  std::optional<Color> color;
  std::optional<Shape> shape;
  if (beginning.kind == Beginning::Kind::negation) {
    if (correction.has_affirmative() || !correction.has_negation()) {
      throw ContractViolation("a negation needs negated attributes and nothing else");
    }
    if (correction.negated_colors.count() > 1 || correction.negated_shapes.count() > 1) {
      throw ContractViolation("a negation names at most one color and one shape");
    }
    for (Color c : kAllColors) {
      if (correction.negated_colors.test(index_of(c))) color = c;
    }
    for (Shape s : kAllShapes) {
      if (correction.negated_shapes.test(index_of(s))) shape = s;
    }
    u.tokens.push_back(lexicon_.negation_word);
  } else {
    if (correction.has_negation()) {
      throw ContractViolation("only a negation beginning may carry negated attributes");
    }
    color = correction.color;
    shape = correction.shape;
    if (beginning.kind == Beginning::Kind::edit) {
      u.tokens.push_back(lexicon_.edit_word);
    } else {
      if (beginning.excuse_index >= excuse_tokens_.size()) {
        throw ContractViolation("excuse index out of range");
      }
      const auto& words = excuse_tokens_[beginning.excuse_index];
      u.tokens.insert(u.tokens.end(), words.begin(), words.end());
    }
  }
  u.tokens.push_back(lexicon_.article);
  append_object(u.tokens, color, shape, noun_form, synonyms);
  return u;
}

ParsedGoal Grammar::parse(const Utterance& utterance) const {
  const auto& toks = utterance.tokens;
  const std::size_t n = toks.size();
  std::size_t i = 0;

  auto peek = [&](std::size_t at) -> const WordInfo* { return at < n ? classify(toks[at]) : nullptr; };
  auto fail = [&](const std::string& what, std::size_t at) -> ParseError {
    std::string msg = what + " at token " + std::to_string(at);
    if (at < n) msg += " ('" + toks[at] + "')";
    return ParseError(msg, at);
  };
  auto expect_article = [&] {
    const WordInfo* w = peek(i);
    if (!w || w->cls != WordClass::article) throw fail("expected '" + lexicon_.article + "'", i);
    ++i;
  };
  auto parse_object = [&] {
    ObjectDescription obj;
    const WordInfo* w = peek(i);
    if (w && (w->cls == WordClass::color || w->cls == WordClass::rare_color)) {
      if (w->cls == WordClass::color) {
        obj.color = static_cast<Color>(w->value);
      } else {
        obj.color_unknown = true;
      }
      ++i;
      const WordInfo* next = peek(i);
      if (next && next->cls == WordClass::shape) {
        obj.shape = static_cast<Shape>(next->value);
      } else if (!next || next->cls != WordClass::object) {
        throw fail("expected a shape or '" + lexicon_.object_word + "'", i);
      }
      ++i;
    } else if (w && w->cls == WordClass::shape) {
      obj.shape = static_cast<Shape>(w->value);
      ++i;
    } else {
      throw fail("expected a color or shape", i);
    }
    return obj;
  };

  const WordInfo* verb = peek(0);
  if (!verb || verb->cls != WordClass::verb) throw fail("expected a task verb", 0);
  ParsedGoal out;
  out.instruction.task = static_cast<Task>(verb->value);
  i = 1;
  expect_article();
  out.instruction.object = parse_object();
  out.combined = out.instruction;
  if (i == n) return out;

  bool negated = false;
  const WordInfo* w = peek(i);
  if (w && w->cls == WordClass::negation) {
    negated = true;
    ++i;
  } else if (w && w->cls == WordClass::edit) {
    ++i;
  } else {
    // Longest excuse phrase that matches wins.
    std::size_t best = 0;
    for (const auto& phrase : excuse_tokens_) {
      if (phrase.size() <= best || i + phrase.size() > n) continue;
      if (std::equal(phrase.begin(), phrase.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) {
        best = phrase.size();
      }
    }
    if (best == 0) throw fail("expected end of instruction or a correction", i);
    i += best;
  }
  expect_article();
  ObjectDescription fragment = parse_object();
  if (i != n) throw fail("unexpected token after correction", i);

  if (negated) {
    ObjectDescription neg;
    if (fragment.color) neg.negated_colors.set(index_of(*fragment.color));
    if (fragment.shape) neg.negated_shapes.set(index_of(*fragment.shape));
    fragment = neg;
  }
  out.correction = fragment;
  out.combined = merge(out.instruction, fragment);
  return out;
}

SynonymChoice Grammar::sample_synonyms(Task task, std::optional<Shape> shape, Rng& rng) const {
  SynonymChoice choice;
  choice.verb = rng.index(lexicon_.task_verbs[index_of(task)].size());
  if (shape) choice.shape = rng.index(lexicon_.shapes[index_of(*shape)].size());
  return choice;
}

const Grammar& default_grammar() {
  static const Grammar grammar(Lexicon::defaults());
  return grammar;
}

Vocabulary::Vocabulary(const Lexicon& lexicon) {
  words_.emplace_back(kPadding);
  for (auto& w : lexicon.words()) words_.push_back(std::move(w));
  for (std::size_t i = 1; i < words_.size(); ++i) ids_[words_[i]] = static_cast<int>(i);
}

std::optional<int> Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
    throw EncodingError("token id " + std::to_string(id) + " out of range");
  }
  return words_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const Utterance& utterance, std::size_t max_len) const {
  if (utterance.size() > max_len) {
    throw ContractViolation("utterance has " + std::to_string(utterance.size()) +
                            " tokens, limit is " + std::to_string(max_len));
  }
  std::vector<int> ids(max_len, 0);
  for (std::size_t i = 0; i < utterance.size(); ++i) {
    auto id_opt = id(utterance.tokens[i]);
    if (!id_opt) throw EncodingError("unknown token '" + utterance.tokens[i] + "'");
    ids[i] = *id_opt;
  }
  return ids;
}

Utterance Vocabulary::decode(std::span<const int> ids) const {
  Utterance u;
  for (int id : ids) {
    if (id == 0) break;
    u.tokens.push_back(word(id));
  }
  return u;
}

const Vocabulary& default_vocabulary() {
  static const Vocabulary vocab(default_grammar().lexicon());
  return vocab;
}

}  // namespace repairbench::grammar
