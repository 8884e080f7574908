#include "slt/synthetic.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "slt/errors.hpp"

namespace slt {

using nlohmann::json;

std::vector<std::string> SynthSpec::concept_inventory() const {
  std::vector<std::string> out;
  for (const auto& cat : categories) {
    for (const auto& c : cat.concepts) out.push_back(c);
  }
  return out;
}

std::string SynthSpec::token_for(const Language& lang, const std::string& concept_name) const {
  if (!lang.lexicon.empty()) {
    auto it = lang.lexicon.find(concept_name);
    if (it == lang.lexicon.end()) {
      throw DataError("lexicon of '" + lang.tag.id + "' does not cover concept '" + concept_name + "'");
    }
    return it->second;
  }
  return concept_name + lang.suffix;
}

void SynthSpec::validate() const {
  if (languages.size() < 2) throw ConfigError("need at least 2 toy languages");
  if (templates.empty()) throw ConfigError("need at least 1 concept template");
  if (d_s < 1 || d_m < 1 || motif_len < 1) throw ConfigError("d_s, d_m and motif_len must be >= 1");
  if (jitter_std < 0) throw ConfigError("jitter_std must be >= 0");
  if (optional_keep_prob < 0 || optional_keep_prob > 1) {
    throw ConfigError("optional_keep_prob must be in [0,1]");
  }

  std::set<std::string> concept_set;
  std::set<std::string> category_names;
  for (const auto& cat : categories) {
    if (!category_names.insert(cat.name).second) {
      throw ConfigError("category '" + cat.name + "' listed twice");
    }
    if (cat.concepts.empty()) throw ConfigError("category '" + cat.name + "' has no concepts");
    for (const auto& c : cat.concepts) {
      if (!concept_set.insert(c).second) {
        throw ConfigError("concept '" + c + "' appears in more than one category");
      }
    }
  }
  if (concept_set.empty()) throw EmptyLexicon(languages.front().tag.id);

  for (const auto& lang : languages) {
    if (lang.lexicon.empty() && lang.suffix.empty()) throw EmptyLexicon(lang.tag.id);
    if (!lang.lexicon.empty()) {
      for (const auto& c : concept_set) {
        if (lang.lexicon.count(c) == 0) {
          throw DataError("lexicon of '" + lang.tag.id + "' does not cover concept '" + c + "'");
        }
      }
    }
  }

  for (const auto& tpl : templates) {
    if (tpl.empty()) throw ConfigError("empty template");
    bool any_required = false;
    for (const auto& slot : tpl) {
      if (category_names.count(slot.category) == 0) {
        throw ConfigError("template references unknown category '" + slot.category + "'");
      }
      if (!slot.optional) any_required = true;
    }
    if (!any_required) throw ConfigError("every template needs at least one required slot");
  }
}

SynthSpec SynthSpec::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad synth spec json: ") + e.what());
  }
  SynthSpec spec;
  try {
    spec.corpus_id = j.value("corpus_id", spec.corpus_id);
    spec.d = j.value("d", spec.d);
    spec.d_s = j.value("d_s", spec.d_s);
    spec.d_m = j.value("d_m", spec.d_m);
    spec.motif_len = j.value("motif_len", spec.motif_len);
    spec.jitter_std = j.value("jitter_std", spec.jitter_std);
    spec.optional_keep_prob = j.value("optional_keep_prob", spec.optional_keep_prob);
    for (const auto& lang : j.at("languages")) {
      Language l;
      l.tag.id = lang.at("tag").get<std::string>();
      l.suffix = lang.value("suffix", std::string{});
      if (lang.contains("lexicon")) {
        l.lexicon = lang.at("lexicon").get<std::map<std::string, std::string>>();
      }
      spec.languages.push_back(std::move(l));
    }
    for (const auto& cat : j.at("categories")) {
      Category c;
      c.name = cat.at("name").get<std::string>();
      c.concepts = cat.at("concepts").get<std::vector<std::string>>();
      spec.categories.push_back(std::move(c));
    }
    for (const auto& tpl : j.at("templates")) {
      std::vector<Slot> slots;
      for (const auto& slot : tpl) {
        Slot s;
        if (slot.is_string()) {
          s.category = slot.get<std::string>();
        } else {
          s.category = slot.at("category").get<std::string>();
          s.optional = slot.value("optional", false);
        }
        slots.push_back(std::move(s));
      }
      spec.templates.push_back(std::move(slots));
    }
    if (j.contains("splits")) spec.splits = j.at("splits").get<std::map<std::string, int>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad synth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SynthSpec SynthSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synth spec: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

std::string SynthSpec::to_json_string() const {
  json langs = json::array();
  for (const auto& l : languages) {
    json jl{{"tag", l.tag.id}};
    if (!l.suffix.empty()) jl["suffix"] = l.suffix;
    if (!l.lexicon.empty()) jl["lexicon"] = l.lexicon;
    langs.push_back(jl);
  }
  json cats = json::array();
  for (const auto& c : categories) {
    cats.push_back({{"name", c.name}, {"concepts", c.concepts}});
  }
  json tpls = json::array();
  for (const auto& tpl : templates) {
    json jt = json::array();
    for (const auto& s : tpl) jt.push_back({{"category", s.category}, {"optional", s.optional}});
    tpls.push_back(jt);
  }
  return json{{"corpus_id", corpus_id},
              {"d", d},
              {"d_s", d_s},
              {"d_m", d_m},
              {"motif_len", motif_len},
              {"jitter_std", jitter_std},
              {"optional_keep_prob", optional_keep_prob},
              {"languages", langs},
              {"categories", cats},
              {"templates", tpls},
              {"splits", splits}}
      .dump(2);
}

MotifBank draw_motifs(const SynthSpec& spec, std::uint64_t seed) {
  MotifBank bank;
  bank.motif_len = spec.motif_len;
  RngStream base = RngStream(seed).fork("motifs");
  for (const auto& concept_name : spec.concept_inventory()) {
    RngStream rng = base.fork(concept_name);
    Matrix spatial(spec.motif_len, spec.d_s);
    Matrix motion(spec.motif_len, spec.d_m);
    for (Eigen::Index i = 0; i < spatial.rows(); ++i) {
      for (Eigen::Index j = 0; j < spatial.cols(); ++j) spatial(i, j) = rng.next_normal();
    }
    for (Eigen::Index i = 0; i < motion.rows(); ++i) {
      for (Eigen::Index j = 0; j < motion.cols(); ++j) motion(i, j) = rng.next_normal();
    }
    bank.motifs[concept_name] = {std::move(spatial), std::move(motion)};
  }
  return bank;
}

FeatureSequence features_for_concepts(const MotifBank& bank,
                                      const std::vector<std::string>& concepts, double jitter_std,
                                      RngStream& rng) {
  if (concepts.empty()) throw DataError("cannot build features for an empty concept sequence");
  const Eigen::Index t = static_cast<Eigen::Index>(concepts.size()) * bank.motif_len;
  FeatureSequence f;
  Eigen::Index row = 0;
  for (const auto& concept_name : concepts) {
    auto it = bank.motifs.find(concept_name);
    if (it == bank.motifs.end()) throw ConceptWithoutMotif(concept_name);
    const auto& [spatial, motion] = it->second;
    if (row == 0) {
      f.spatial.resize(t, spatial.cols());
      f.motion.resize(t, motion.cols());
    }
    f.spatial.middleRows(row, bank.motif_len) = spatial;
    f.motion.middleRows(row, bank.motif_len) = motion;
    row += bank.motif_len;
  }
  if (jitter_std > 0.0) {
    for (Eigen::Index i = 0; i < f.spatial.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.spatial.cols(); ++j) {
        f.spatial(i, j) += rng.next_normal(jitter_std);
      }
      for (Eigen::Index j = 0; j < f.motion.cols(); ++j) {
        f.motion(i, j) += rng.next_normal(jitter_std);
      }
    }
  }
  return f;
}

SpaceConfig build_space(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  SpaceConfig space;
  space.d = spec.d;
  space.concepts = spec.concept_inventory();
  for (const auto& lang : spec.languages) {
    std::vector<std::string> tokens;
    tokens.reserve(space.concepts.size());
    std::vector<int> lexicon(space.concepts.size());
    for (std::size_t i = 0; i < space.concepts.size(); ++i) {
      tokens.push_back(spec.token_for(lang, space.concepts[i]));
      lexicon[i] = static_cast<int>(i);  // local token index == concept index
    }
    space.registry.register_language(lang.tag, std::move(tokens));
    space.lexicons[lang.tag] = std::move(lexicon);
  }
  space.concept_directions =
      make_concept_directions(space.concept_count(), space.d, RngStream(seed).fork("space").next_u64());
  space.validate();
  return space;
}

namespace {

std::string padded_index(int i) {
  std::string s = std::to_string(i);
  while (s.size() < 6) s.insert(s.begin(), '0');
  return s;
}

std::vector<std::string> draw_concept_sequence(const SynthSpec& spec, RngStream& rng) {
  const auto& tpl = spec.templates[rng.next_below(spec.templates.size())];
  std::vector<std::string> concepts;
  for (const auto& slot : tpl) {
    if (slot.optional && !rng.next_bernoulli(spec.optional_keep_prob)) continue;
    for (const auto& cat : spec.categories) {
      if (cat.name == slot.category) {
        concepts.push_back(cat.concepts[rng.next_below(cat.concepts.size())]);
        break;
      }
    }
  }
  if (concepts.empty()) throw ComputeError("template produced an empty concept sequence");
  return concepts;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed,
                                          const std::filesystem::path& out_dir) {
  spec.validate();
  SyntheticCorpus corpus;
  corpus.space = build_space(spec, seed);
  const MotifBank bank = draw_motifs(spec, seed);

  std::filesystem::create_directories(out_dir / "features");
  save_space(corpus.space, out_dir / "space.json");

  RngStream master = RngStream(seed).fork(spec.corpus_id);
  for (const auto& [split, count] : spec.splits) {
    if (count <= 0) continue;
    CorpusManifest manifest;
    manifest.split = split;
    manifest.dir = out_dir;
    manifest.metadata["corpus_id"] = spec.corpus_id;
    RngStream split_rng = master.fork(split);
    for (int i = 0; i < count; ++i) {
      RngStream sample_rng = split_rng.fork(static_cast<std::uint64_t>(i));
      const std::vector<std::string> concepts = draw_concept_sequence(spec, sample_rng);

      ManifestRecord record;
      record.sample_id = spec.corpus_id + "-" + split + "-" + padded_index(i);
      record.feature_path = "features/" + record.sample_id + ".feat";
      record.split = split;
      record.corpus_id = spec.corpus_id;
      record.targets.origin_language = spec.languages.front().tag;
      for (const auto& lang : spec.languages) {
        std::vector<std::string> words;
        words.reserve(concepts.size());
        for (const auto& c : concepts) words.push_back(spec.token_for(lang, c));
        record.targets.entries.emplace(lang.tag,
                                       corpus.space.registry.make_sentence(lang.tag, words));
      }

      FeatureSequence features =
          features_for_concepts(bank, concepts, spec.jitter_std, sample_rng);
      features.sample_id = record.sample_id;
      write_features(out_dir / record.feature_path, features);
      manifest.records.push_back(std::move(record));
    }
    write_manifest(manifest, out_dir / (split + ".jsonl"));
    corpus.manifests.emplace(split, std::move(manifest));
  }
  return corpus;
}

}  // namespace slt
