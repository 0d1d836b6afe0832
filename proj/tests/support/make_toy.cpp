// Writes a synthetic treebank and its NER file: make_toy LANG ORDER N SEED OUT_PREFIX
// ORDER is one of svo, sov, vso, ovs.

#include <iostream>
#include <string>

#include "plug/tensor_io.hpp"
#include "toy.hpp"

int main(int argc, char** argv) {
  if (argc != 6) {
    std::cerr << "usage: make_toy LANG ORDER N SEED OUT_PREFIX\n";
    return 1;
  }
  toy::Language lang{.code = argv[1]};
  const std::string order = argv[2];
  if (order == "sov") lang.order = toy::Order::sov;
  else if (order == "vso") lang.order = toy::Order::vso;
  else if (order == "ovs") lang.order = toy::Order::ovs;
  else if (order != "svo") {
    std::cerr << "unknown order '" << order << "'\n";
    return 1;
  }
  const auto corpus = toy::generate(lang, std::stoi(argv[3]), std::stoull(argv[4]));
  const std::string prefix = argv[5];
  plug::io::write_file(prefix + ".conllu", plug::conllu::serialize(corpus.sentences));
  plug::io::write_file(prefix + ".ner", plug::ner::serialize_corpus(corpus.ner));
  return 0;
}
