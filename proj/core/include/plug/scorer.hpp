#pragma once

// Treebank evaluation with the CoNLL 2018 shared task alignment: tokens,
// sentences and words are matched by character spans over the
// whitespace-free text, words inside multi-word tokens by an LCS of their
// lowercased forms.

#include <string>
#include <vector>

#include "plug/conllu.hpp"
#include "plug/ner.hpp"

namespace plug::eval {

struct Metric {
  long gold = 0;
  long system = 0;
  long correct = 0;
  long aligned = 0;  // aligned words, for tag and parse metrics

  double precision() const;
  double recall() const;
  double f1() const;
  // Percentages in hundredths, rounded half-up (exact integer arithmetic).
  long precision_hundredths() const;
  long recall_hundredths() const;
  long f1_hundredths() const;
  long aligned_accuracy_hundredths() const;
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"Tokens", "Sentences", "Words",  "UPOS", "XPOS",
                                              "UFeats", "Lemmas",    "UAS",    "LAS"};
  return names;
}

struct ScoreReport {
  std::vector<std::pair<std::string, Metric>> metrics;  // metric_names() order
  bool has_ner = false;
  Metric ner;

  const Metric& at(const std::string& name) const;
  // Aligned plain-text table.
  std::string table() const;
  std::string json() const;
};

struct WordAlignment {
  // (system word index, gold word index), both flattened over the document.
  std::vector<std::pair<int, int>> pairs;
};

// Throws DataError when the two sides do not spell the same characters.
WordAlignment align(const std::vector<conllu::TreebankSentence>& system,
                    const std::vector<conllu::TreebankSentence>& gold);

ScoreReport score(const std::vector<conllu::TreebankSentence>& system,
                  const std::vector<conllu::TreebankSentence>& gold);

// Exact type-and-boundary entity matching, per sentence.
Metric score_ner(const std::vector<std::vector<ner::EntitySpan>>& system,
                 const std::vector<std::vector<ner::EntitySpan>>& gold);

std::string format_hundredths(long value);

}  // namespace plug::eval
