#include "slt/semantic_space.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slt/errors.hpp"
#include "slt/rng.hpp"

namespace slt {

using nlohmann::json;

int LanguageRegistry::register_language(const LanguageTag& tag, std::vector<std::string> tokens) {
  if (has(tag)) throw DataError("language '" + tag.id + "' registered twice");
  if (tokens.empty()) throw EmptyLexicon(tag.id);
  Entry e;
  e.tag = tag;
  e.tokens = std::move(tokens);
  for (int i = 0; i < static_cast<int>(e.tokens.size()); ++i) {
    if (!e.local_of_token.emplace(e.tokens[i], i).second) {
      throw DataError("duplicate token '" + e.tokens[i] + "' in language '" + tag.id + "'");
    }
  }
  index_[tag] = static_cast<int>(languages_.size());
  languages_.push_back(std::move(e));

  // rebuild the id layout: specials, language tokens, then word blocks
  vocab_size_ = kNumSpecials;
  id_to_string_.assign({"<pad>", "<bos>", "<eos>"});
  for (auto& lang : languages_) {
    lang.lang_token_id = vocab_size_++;
    id_to_string_.push_back("<" + lang.tag.id + ">");
  }
  for (auto& lang : languages_) {
    lang.first_word_id = vocab_size_;
    vocab_size_ += static_cast<int>(lang.tokens.size());
    for (const auto& t : lang.tokens) id_to_string_.push_back(t);
  }
  return index_[tag];
}

std::vector<LanguageTag> LanguageRegistry::languages() const {
  std::vector<LanguageTag> out;
  out.reserve(languages_.size());
  for (const auto& e : languages_) out.push_back(e.tag);
  return out;
}

const LanguageRegistry::Entry& LanguageRegistry::entry(const LanguageTag& tag) const {
  auto it = index_.find(tag);
  if (it == index_.end()) throw UnknownLanguage(tag.id);
  return languages_[static_cast<std::size_t>(it->second)];
}

int LanguageRegistry::language_token(const LanguageTag& tag) const {
  return entry(tag).lang_token_id;
}

int LanguageRegistry::token_id(const LanguageTag& tag, const std::string& token) const {
  const Entry& e = entry(tag);
  auto it = e.local_of_token.find(token);
  if (it == e.local_of_token.end()) throw UnknownToken(token, tag.id);
  return e.first_word_id + it->second;
}

const std::string& LanguageRegistry::token_string(int global_id) const {
  if (global_id < 0 || global_id >= vocab_size_) {
    throw DataError("token id " + std::to_string(global_id) + " out of range");
  }
  return id_to_string_[static_cast<std::size_t>(global_id)];
}

bool LanguageRegistry::is_word_token(const LanguageTag& tag, int global_id) const {
  const Entry& e = entry(tag);
  return global_id >= e.first_word_id &&
         global_id < e.first_word_id + static_cast<int>(e.tokens.size());
}

int LanguageRegistry::first_word_id(const LanguageTag& tag) const {
  return entry(tag).first_word_id;
}

const std::vector<std::string>& LanguageRegistry::tokens_of(const LanguageTag& tag) const {
  return entry(tag).tokens;
}

Sentence LanguageRegistry::make_sentence(const LanguageTag& tag,
                                         const std::vector<std::string>& words) const {
  Sentence s;
  s.language = tag;
  s.tokens.reserve(words.size());
  std::string text;
  for (const auto& w : words) {
    s.tokens.push_back(token_id(tag, w));
    if (!text.empty()) text += ' ';
    text += w;
  }
  s.raw_text = std::move(text);
  return s;
}

Sentence LanguageRegistry::tokenize(const LanguageTag& tag, const std::string& text) const {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  if (words.empty()) throw DataError("cannot tokenize empty text for language '" + tag.id + "'");
  return make_sentence(tag, words);
}

std::string LanguageRegistry::detokenize(const std::vector<int>& tokens) const {
  std::string text;
  for (int id : tokens) {
    if (!text.empty()) text += ' ';
    text += token_string(id);
  }
  return text;
}

// --- SpaceConfig ---------------------------------------------------------------

int SpaceConfig::concept_of_token(const LanguageTag& lang, int global_token_id) const {
  auto it = lexicons.find(lang);
  if (it == lexicons.end()) throw UnknownLanguage(lang.id);
  if (!registry.is_word_token(lang, global_token_id)) {
    throw UnknownToken(global_token_id >= 0 && global_token_id < registry.vocab_size()
                           ? registry.token_string(global_token_id)
                           : std::to_string(global_token_id),
                       lang.id);
  }
  const int local = global_token_id - registry.first_word_id(lang);
  return it->second[static_cast<std::size_t>(local)];
}

std::vector<int> SpaceConfig::concept_sequence(const Sentence& sentence) const {
  std::vector<int> out;
  out.reserve(sentence.tokens.size());
  for (int id : sentence.tokens) out.push_back(concept_of_token(sentence.language, id));
  return out;
}

void SpaceConfig::validate(double tol) const {
  if (concept_directions.rows() != concept_count() || concept_directions.cols() != d) {
    throw DimensionMismatch("concept_directions must be |concepts| x d");
  }
  Matrix gram = concept_directions * concept_directions.transpose();
  gram -= Matrix::Identity(concept_count(), concept_count());
  if (gram.cwiseAbs().maxCoeff() > tol) {
    throw ComputeError("concept directions are not orthonormal within tolerance");
  }
  for (const auto& [lang, lex] : lexicons) {
    if (!registry.has(lang)) throw UnknownLanguage(lang.id);
    if (lex.size() != registry.tokens_of(lang).size()) {
      throw DataError("lexicon size mismatch for language '" + lang.id + "'");
    }
    for (int c : lex) {
      if (c < 0 || c >= concept_count()) {
        throw DataError("lexicon of '" + lang.id + "' maps to unknown concept index");
      }
    }
  }
}

Matrix make_concept_directions(int concept_count, int d, std::uint64_t seed) {
  if (concept_count > d) {
    throw ConfigError("semantic dimension d=" + std::to_string(d) + " must be >= concept count " +
                      std::to_string(concept_count));
  }
  RngStream rng = RngStream(seed).fork("concept_directions");
  Matrix m(concept_count, d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.next_normal();
  }
  // modified Gram-Schmidt on rows
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < i; ++k) {
      m.row(i) -= m.row(i).dot(m.row(k)) * m.row(k);
    }
    const double norm = m.row(i).norm();
    if (norm < 1e-9) throw ComputeError("degenerate draw while orthonormalizing directions");
    m.row(i) /= norm;
  }
  return m;
}

SemanticVector embed_text(const Sentence& sentence, const SpaceConfig& cfg) {
  if (sentence.tokens.empty()) throw DataError("cannot embed an empty sentence");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(cfg.concept_count());
  for (int id : sentence.tokens) {
    counts(cfg.concept_of_token(sentence.language, id)) += 1.0;
  }
  counts /= counts.norm();
  SemanticVector v;
  v.values = cfg.concept_directions.transpose() * counts;
  return v;
}

// --- serialization ---------------------------------------------------------------

std::string SpaceConfig::to_json_string() const {
  json langs = json::array();
  for (const auto& tag : registry.languages()) {
    json lex = json::array();
    for (int c : lexicons.at(tag)) lex.push_back(c);
    langs.push_back(
        {{"tag", tag.id}, {"tokens", registry.tokens_of(tag)}, {"lexicon", lex}});
  }
  json proj = json::array();
  for (Eigen::Index i = 0; i < concept_directions.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < concept_directions.cols(); ++j) {
      row.push_back(concept_directions(i, j));
    }
    proj.push_back(row);
  }
  return json{{"d", d}, {"concepts", concepts}, {"languages", langs}, {"projection", proj}}
      .dump();
}

SpaceConfig SpaceConfig::from_json_string(const std::string& text) {
  json j = json::parse(text);
  SpaceConfig cfg;
  cfg.d = j.at("d").get<int>();
  cfg.concepts = j.at("concepts").get<std::vector<std::string>>();
  for (const auto& lang : j.at("languages")) {
    LanguageTag tag{lang.at("tag").get<std::string>()};
    cfg.registry.register_language(tag, lang.at("tokens").get<std::vector<std::string>>());
    cfg.lexicons[tag] = lang.at("lexicon").get<std::vector<int>>();
  }
  const json& proj = j.at("projection");
  cfg.concept_directions.resize(static_cast<Eigen::Index>(proj.size()), cfg.d);
  for (std::size_t i = 0; i < proj.size(); ++i) {
    const auto row = proj[i].get<std::vector<double>>();
    for (std::size_t k = 0; k < row.size(); ++k) {
      cfg.concept_directions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
    }
  }
  cfg.validate();
  return cfg;
}

void save_space(const SpaceConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open space file for writing: " + path.string());
  out << cfg.to_json_string() << "\n";
}

SpaceConfig load_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open space file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return SpaceConfig::from_json_string(ss.str());
}

}  // namespace slt
