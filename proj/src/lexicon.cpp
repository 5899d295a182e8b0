#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "repairbench/errors.hpp"
#include "repairbench/grammar.hpp"

namespace repairbench::grammar {

namespace {

using nlohmann::json;

std::vector<std::string> split_words(std::string_view phrase) {
  std::vector<std::string> out;
  std::istringstream in{std::string(phrase)};
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

bool is_token(std::string_view w) {
  if (w.empty()) return false;
  for (unsigned char ch : w) {
    if (ch < 0x80 && !std::islower(ch)) return false;
  }
  return true;
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

std::vector<std::string> read_string_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(read_string(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

Lexicon Lexicon::defaults() {
  Lexicon lex;
  lex.colors = {"red", "green", "blue", "yellow", "purple", "orange", "pink", "cyan", "brown"};
  lex.shapes = {std::vector<std::string>{"cube", "box", "block"},
                std::vector<std::string>{"cuboid", "brick", "oblong"},
                std::vector<std::string>{"cylinder", "barrel", "tophat"}};
  // Grasp and lift synonyms are our own choice; the templates only name the
  // reach and push verbs.
  lex.task_verbs = {std::vector<std::string>{"reach", "touch", "contact"},
                    std::vector<std::string>{"push", "move", "shift"},
                    std::vector<std::string>{"grasp", "grip", "take"},
                    std::vector<std::string>{"lift", "raise", "hoist"}};
  lex.excuses = {"sorry", "excuse me", "no i meant", "pardon"};
  lex.negation_word = "not";
  lex.edit_word = "actually";
  lex.rare_color_synonyms = {"crimson", "emerald", "azure",  "amber",   "violet",
                             "tangerine", "rose",  "teal",   "chestnut"};
  lex.article = "the";
  lex.object_word = "object";
  return lex;
}

Lexicon Lexicon::from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("lexicon", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("lexicon", "expected an object");

  Lexicon lex = defaults();
  for (const auto& [key, value] : doc.items()) {
    if (key == "colors") {
      auto list = read_string_list(value, key);
      if (list.size() != kNumColors) throw ConfigError(key, "expected exactly 9 colors");
      std::copy(list.begin(), list.end(), lex.colors.begin());
    } else if (key == "shapes" || key == "task_verbs") {
      if (!value.is_object()) throw ConfigError(key, "expected an object");
      for (const auto& [name, syns] : value.items()) {
        const std::string path = key + "." + name;
        if (key == "shapes") {
          auto shape = shape_from_string(name);
          if (!shape) throw ConfigError(path, "unknown shape class");
          lex.shapes[index_of(*shape)] = read_string_list(syns, path);
        } else {
          auto task = task_from_string(name);
          if (!task) throw ConfigError(path, "unknown task");
          lex.task_verbs[index_of(*task)] = read_string_list(syns, path);
        }
      }
    } else if (key == "excuses") {
      lex.excuses = read_string_list(value, key);
    } else if (key == "negation_word") {
      lex.negation_word = read_string(value, key);
    } else if (key == "edit_word") {
      lex.edit_word = read_string(value, key);
    } else if (key == "article") {
      lex.article = read_string(value, key);
    } else if (key == "object_word") {
      lex.object_word = read_string(value, key);
    } else if (key == "rare_color_synonyms") {
      if (!value.is_object()) throw ConfigError(key, "expected an object");
      lex.rare_color_synonyms = {};
      for (const auto& [name, word] : value.items()) {
        auto color = color_from_string(name);
        if (!color) throw ConfigError(key + "." + name, "unknown color");
        lex.rare_color_synonyms[index_of(*color)] = read_string(word, key + "." + name);
      }
    } else {
      throw ConfigError(key, "unknown lexicon key");
    }
  }
  lex.validate();
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open lexicon file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

void Lexicon::validate() const {
  // word -> key path of its first use; every category must be disjoint
  std::map<std::string, std::string> owner;
  auto claim = [&owner](const std::string& word, const std::string& path) {
    if (!is_token(word)) throw ConfigError(path, "'" + word + "' is not a lowercase word");
    auto [it, inserted] = owner.emplace(word, path);
    if (!inserted) throw ConfigError(path, "'" + word + "' already used by " + it->second);
  };

  for (std::size_t i = 0; i < kNumColors; ++i) {
    claim(colors[i], "colors[" + std::to_string(i) + "]");
  }
  for (Shape s : kAllShapes) {
    const std::string path = "shapes." + std::string(to_string(s));
    if (shapes[index_of(s)].empty()) throw ConfigError(path, "needs at least one synonym");
    for (const auto& w : shapes[index_of(s)]) claim(w, path);
  }
  for (Task t : kAllTasks) {
    const std::string path = "task_verbs." + std::string(to_string(t));
    if (task_verbs[index_of(t)].empty()) throw ConfigError(path, "needs at least one verb");
    for (const auto& w : task_verbs[index_of(t)]) claim(w, path);
  }
  for (Color c : kAllColors) {
    const auto& rare = rare_color_synonyms[index_of(c)];
    if (!rare.empty()) claim(rare, "rare_color_synonyms." + std::string(to_string(c)));
  }
  claim(negation_word, "negation_word");
  claim(edit_word, "edit_word");
  claim(article, "article");
  claim(object_word, "object_word");

  if (excuses.empty()) throw ConfigError("excuses", "needs at least one phrase");
  std::set<std::string> excuse_words;
  std::set<std::vector<std::string>> phrases;
  for (std::size_t i = 0; i < excuses.size(); ++i) {
    const std::string path = "excuses[" + std::to_string(i) + "]";
    auto words = split_words(excuses[i]);
    if (words.empty()) throw ConfigError(path, "empty phrase");
    if (!phrases.insert(words).second) throw ConfigError(path, "duplicate phrase");
    for (const auto& w : words) {
      if (!is_token(w)) throw ConfigError(path, "'" + w + "' is not a lowercase word");
      excuse_words.insert(w);
    }
  }
  for (const auto& w : excuse_words) {
    if (auto it = owner.find(w); it != owner.end()) {
      throw ConfigError("excuses", "'" + w + "' already used by " + it->second);
    }
  }
}

std::vector<std::string> Lexicon::words() const {
  std::set<std::string> all;
  all.insert(colors.begin(), colors.end());
  for (const auto& syns : shapes) all.insert(syns.begin(), syns.end());
  for (const auto& verbs : task_verbs) all.insert(verbs.begin(), verbs.end());
  for (const auto& rare : rare_color_synonyms) {
    if (!rare.empty()) all.insert(rare);
  }
  for (const auto& phrase : excuses) {
    for (auto& w : split_words(phrase)) all.insert(std::move(w));
  }
  all.insert(negation_word);
  all.insert(edit_word);
  all.insert(article);
  all.insert(object_word);
  return {all.begin(), all.end()};
}

}  // namespace repairbench::grammar
