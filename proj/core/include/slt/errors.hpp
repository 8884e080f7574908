#pragma once

#include <stdexcept>
#include <string>

namespace slt {

// Error categories map 1:1 onto CLI exit codes (config=2, data=3, runtime=4).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class ComputeError : public std::runtime_error {
 public:
  explicit ComputeError(const std::string& msg) : std::runtime_error(msg) {}
};

// --- data errors -----------------------------------------------------------

class MissingFeatureFile : public DataError {
 public:
  explicit MissingFeatureFile(const std::string& sample_id, const std::string& path)
      : DataError("missing feature file for sample '" + sample_id + "': " + path),
        sample_id(sample_id),
        path(path) {}
  std::string sample_id;
  std::string path;
};

class DuplicateSampleId : public DataError {
 public:
  explicit DuplicateSampleId(const std::string& sample_id)
      : DataError("duplicate sample id '" + sample_id + "'"), sample_id(sample_id) {}
  std::string sample_id;
};

class MalformedRecord : public DataError {
 public:
  MalformedRecord(std::size_t line, const std::string& why)
      : DataError("malformed manifest record at line " + std::to_string(line) + ": " + why),
        line(line) {}
  std::size_t line;
};

class EmptyLexicon : public DataError {
 public:
  explicit EmptyLexicon(const std::string& language)
      : DataError("language '" + language + "' has an empty lexicon"), language(language) {}
  std::string language;
};

class ConceptWithoutMotif : public DataError {
 public:
  explicit ConceptWithoutMotif(const std::string& concept_name)
      : DataError("concept '" + concept_name + "' has no motif"), concept_name(concept_name) {}
  std::string concept_name;
};

class UnknownToken : public DataError {
 public:
  UnknownToken(const std::string& token, const std::string& language)
      : DataError("token '" + token + "' is not in the lexicon of language '" + language + "'"),
        token(token),
        language(language) {}
  std::string token;
  std::string language;
};

class UnknownLanguage : public DataError {
 public:
  explicit UnknownLanguage(const std::string& language)
      : DataError("language '" + language + "' is not registered"), language(language) {}
  std::string language;
};

class UnsupportedLanguage : public DataError {
 public:
  explicit UnsupportedLanguage(const std::string& language)
      : DataError("translation provider does not support language '" + language + "'"),
        language(language) {}
  std::string language;
};

class MissingReference : public DataError {
 public:
  MissingReference(const std::string& sample_id, const std::string& language)
      : DataError("no reference in language '" + language + "' for sample '" + sample_id + "'"),
        sample_id(sample_id),
        language(language) {}
  std::string sample_id;
  std::string language;
};

class EmptyCorpus : public DataError {
 public:
  explicit EmptyCorpus(const std::string& what) : DataError("empty corpus: " + what) {}
};

class LanguageMismatch : public DataError {
 public:
  explicit LanguageMismatch(const std::string& what) : DataError("language mismatch: " + what) {}
};

class EmptyReference : public DataError {
 public:
  EmptyReference() : DataError("reference sentence is empty") {}
};

// --- compute errors ---------------------------------------------------------

class DimensionMismatch : public ComputeError {
 public:
  explicit DimensionMismatch(const std::string& what)
      : ComputeError("dimension mismatch: " + what) {}
};

class ZeroVector : public ComputeError {
 public:
  explicit ZeroVector(const std::string& what) : ComputeError("zero vector: " + what) {}
};

class AllFramesMasked : public ComputeError {
 public:
  AllFramesMasked() : ComputeError("all timesteps are masked; nothing to pool") {}
};

class UnknownTargetName : public ComputeError {
 public:
  explicit UnknownTargetName(const std::string& name)
      : ComputeError("adapter target '" + name + "' does not name a parameter"), name(name) {}
  std::string name;
};

class NonFiniteLoss : public ComputeError {
 public:
  explicit NonFiniteLoss(const std::string& diagnostics)
      : ComputeError("non-finite loss encountered; " + diagnostics) {}
};

}  // namespace slt
