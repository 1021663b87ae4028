// Command-line front end: vocab, train, parse, unfold, neighbors, toygen, eval.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "raam/analysis.hpp"
#include "raam/corpus.hpp"
#include "raam/error.hpp"
#include "raam/model.hpp"
#include "raam/parser.hpp"
#include "raam/toygrammar.hpp"
#include "raam/training.hpp"
#include "raam/tree.hpp"

using json = nlohmann::ordered_json;
using namespace raam;

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  return out;
}

void check_model_vocab(const Model& model, const Vocab& vocab) {
  if (model.vocab_size() != vocab.size()) {
    throw Error(ErrorKind::Config, "model has " + std::to_string(model.vocab_size()) +
                                       " embedding rows but the vocabulary has " + std::to_string(vocab.size()) +
                                       " entries");
  }
}

// Gold file: one bracketed sentence per line.
std::vector<BracketedSentence> read_gold(const std::string& path) {
  std::vector<BracketedSentence> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_bracketing(line));
      validate(out.back().shape);
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// Maps tokens to ids; unknown tokens become <unk> with a warning.
std::vector<WordId> encode_warn(const Vocab& vocab, const std::vector<std::string>& tokens) {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    const auto id = vocab.find(t);
    if (!id) std::cerr << "raam: warning: '" << t << "' is not in the vocabulary, using " << kUnkToken << '\n';
    ids.push_back(id.value_or(kUnkId));
  }
  return ids;
}

json config_json(const TrainConfig& cfg) {
  json j;
  j["learning_rate"] = cfg.learning_rate;
  j["margin"] = cfg.margin;
  j["recon_weight"] = cfg.recon_weight;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  j["curriculum"] = format_curriculum(cfg.curriculum);
  j["parse"] = cfg.parse.str();
  j["corruptions"] = cfg.corruptions;
  j["random_first_stage"] = cfg.random_first_stage;
  j["heldout_fraction"] = cfg.heldout_fraction;
  j["dim"] = cfg.dim;
  return j;
}

// ---- vocab

struct VocabArgs {
  std::vector<std::string> corpus;
  std::string out;
  std::size_t max_size = 1000;
  std::size_t min_freq = 1;
};

int run_vocab(const VocabArgs& a) {
  std::vector<std::string> tokens;
  for (const auto& path : a.corpus) {
    auto t = read_corpus(path);
    tokens.insert(tokens.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  const Vocab vocab = Vocab::build(tokens, a.max_size, a.min_freq);
  std::ostringstream body;
  vocab.write(body);
  std::string text = body.str();
  // Provenance goes after the two fixed header lines.
  const auto second = text.find('\n', text.find('\n') + 1) + 1;
  text.insert(second, "#raam-config max_size=" + std::to_string(a.max_size) +
                          " min_freq=" + std::to_string(a.min_freq) + " corpus=" + join(a.corpus, ",") + "\n");
  auto out = open_out(a.out);
  out << text;
  if (!out.flush()) throw Error(ErrorKind::Io, "cannot write " + a.out);
  std::cerr << "raam: " << vocab.word_count() << " words from " << tokens.size() << " tokens\n";
  return 0;
}

// ---- train

struct TrainArgs {
  std::string vocab;
  std::vector<std::string> corpus;
  std::string config;
  std::string gold;
  std::string pretrained;
  std::string out;
  std::string report;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> dim;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.dim) cfg.dim = *a.dim;
  if (a.epochs) {
    cfg.epochs = *a.epochs;
    for (auto& st : cfg.curriculum) st.epochs.reset();
  }
  cfg.validate();

  const Vocab vocab = Vocab::load(a.vocab);
  TrainData data;
  for (const auto& path : a.corpus) {
    const auto tokens = read_corpus(path);
    std::vector<WordId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.id_or_unk(t));
    data.streams.push_back(std::move(ids));
  }
  if (!a.gold.empty()) {
    for (auto& g : read_gold(a.gold)) {
      std::vector<WordId> ids;
      for (const auto& t : g.tokens) ids.push_back(vocab.id_or_unk(t));
      data.gold.push_back({std::move(ids), std::move(g.shape)});
    }
  }

  InitOptions init;
  if (!a.pretrained.empty()) init.pretrained = a.pretrained;
  Model model = init_model(cfg.dim, vocab, cfg.seed, init);

  std::ofstream report;
  if (!a.report.empty()) {
    report = open_out(a.report);
    json header;
    header["type"] = "config";
    header["config"] = config_json(cfg);
    header["vocab"] = a.vocab;
    header["corpus"] = a.corpus;
    header["gold"] = a.gold;
    header["pretrained"] = a.pretrained;
    report << header.dump() << '\n' << std::flush;
  }

  save_model(model, a.out);
  TrainCallbacks callbacks;
  callbacks.on_epoch = [&](const EpochReport& r, const Model& m) {
    save_model(m, a.out);
    json line;
    line["type"] = "epoch";
    line["epoch"] = r.epoch;
    line["stage"] = r.stage;
    line["examples"] = r.examples;
    line["rank_loss"] = r.rank_loss;
    line["recon_loss"] = r.recon_loss;
    line["sup_loss"] = r.sup_loss;
    line["heldout_accuracy"] = r.heldout_accuracy ? json(*r.heldout_accuracy) : json(nullptr);
    line["heldout_recon"] = r.heldout_recon ? json(*r.heldout_recon) : json(nullptr);
    line["heldout_f1"] = r.heldout_f1 ? json(*r.heldout_f1) : json(nullptr);
    line["wall_seconds"] = r.wall_seconds;
    if (report.is_open()) report << line.dump() << '\n' << std::flush;
    if (!a.quiet) std::cerr << "raam: " << line.dump() << '\n';
  };
  train(model, data, cfg, callbacks);
  return 0;
}

// ---- parse

struct ParseArgs {
  std::string model;
  std::string vocab;
  std::string strategy = "greedy";
  std::string input;
  bool json_out = false;
};

int run_parse(const ParseArgs& a) {
  const Model model = load_model(a.model);
  const Vocab vocab = Vocab::load(a.vocab);
  check_model_vocab(model, vocab);
  const Strategy strategy = Strategy::parse(a.strategy);

  std::ifstream file;
  if (!a.input.empty()) {
    file.open(a.input);
    if (!file) throw Error(ErrorKind::Io, "cannot open " + a.input);
  }
  std::istream& in = a.input.empty() ? std::cin : file;
  std::string line;
  while (std::getline(in, line)) {
    const auto tokens = tokenize(line);
    if (tokens.empty()) {
      std::cout << (a.json_out ? "{}" : "") << '\n';
      continue;
    }
    const auto ids = encode_warn(vocab, tokens);
    const ParseResult r = parse(ids, model, strategy);
    const std::string text = format_bracketing(r.tree.bracketing(), tokens);
    if (a.json_out) {
      json j;
      j["tokens"] = tokens;
      j["bracketing"] = text;
      j["score"] = r.total_score;
      if (!r.actions.empty()) j["actions"] = format_actions(r.actions);
      std::cout << j.dump() << '\n';
    } else {
      std::cout << text << '\n';
    }
  }
  return 0;
}

// ---- unfold

struct UnfoldArgs {
  std::string model;
  std::string vocab;
  std::string text;
  double threshold = 0.0;
  std::size_t max_depth = 4;
};

int run_unfold(const UnfoldArgs& a) {
  const Model model = load_model(a.model);
  const Vocab vocab = Vocab::load(a.vocab);
  check_model_vocab(model, vocab);
  const auto tokens = tokenize(a.text);
  if (tokens.empty()) throw Error(ErrorKind::Config, "nothing to unfold");
  const auto ids = encode_warn(vocab, tokens);
  const Repr root = sequence_embedding(model, ids);
  const ParseTree tree = unfold(model, root, a.threshold, a.max_depth);
  // Label every leaf with its nearest vocabulary word.
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < tree.leaves; ++k) {
    Eigen::Index best = 0;
    (model.embed.rowwise() - tree.nodes[k].repr.transpose()).rowwise().squaredNorm().minCoeff(&best);
    labels.push_back(vocab.token(static_cast<WordId>(best)));
  }
  std::cout << format_bracketing(tree.bracketing(), labels) << '\n';
  return 0;
}

// ---- neighbors

struct NeighborArgs {
  std::string model;
  std::string vocab;
  std::vector<std::string> queries;
  std::size_t k = 10;
  std::size_t phrase_len = 1;
  std::size_t top_m = 500;
  std::size_t budget = 1'000'000;
  std::string metric = "euclidean";
  bool tsv = false;
};

int run_neighbors(const NeighborArgs& a) {
  const Model model = load_model(a.model);
  const Vocab vocab = Vocab::load(a.vocab);
  check_model_vocab(model, vocab);
  const Metric metric = parse_metric(a.metric);
  std::vector<NeighborTable> tables;
  if (a.phrase_len == 1) {
    for (const auto& q : a.queries) tables.push_back(nearest_words(model, vocab, q, a.k, metric));
  } else {
    std::vector<std::vector<std::string>> queries;
    for (const auto& q : a.queries) queries.push_back(tokenize(q));
    PhraseTableOptions opt;
    opt.length = a.phrase_len;
    opt.top_m = a.top_m;
    opt.k = a.k;
    opt.metric = metric;
    opt.budget = a.budget;
    std::cerr << "raam: embedding " << phrase_candidate_count(a.top_m, a.phrase_len) << " candidates\n";
    tables = phrase_table(model, vocab, queries, opt);
  }
  if (a.tsv) {
    write_table_tsv(std::cout, tables);
  } else {
    write_table_text(std::cout, tables);
  }
  return 0;
}

// ---- toygen

struct ToygenArgs {
  std::string grammar;
  std::size_t sentences = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::string gold_out;
  std::size_t min_len = 4;
  std::size_t max_len = 7;
};

int run_toygen(const ToygenArgs& a) {
  const ToyGrammar grammar = load_grammar(a.grammar);
  GenerateOptions opt;
  opt.min_length = a.min_len;
  opt.max_length = a.max_len;
  const auto corpus = generate_corpus(grammar, a.sentences, a.seed, opt);
  const std::string header = "#raam-toygen grammar=" + a.grammar + " sentences=" + std::to_string(a.sentences) +
                             " seed=" + std::to_string(a.seed) + " min_len=" + std::to_string(a.min_len) +
                             " max_len=" + std::to_string(a.max_len) + "\n";
  auto out = open_out(a.out);
  out << header;
  for (const auto& s : corpus) out << join(s.tokens) << '\n';
  if (!out.flush()) throw Error(ErrorKind::Io, "cannot write " + a.out);
  if (!a.gold_out.empty()) {
    auto gold = open_out(a.gold_out);
    gold << header;
    for (const auto& s : corpus) gold << format_bracketing(s.shape, s.tokens) << '\n';
    if (!gold.flush()) throw Error(ErrorKind::Io, "cannot write " + a.gold_out);
  }
  return 0;
}

// ---- eval

struct EvalArgs {
  std::string model;
  std::string vocab;
  std::string gold;
  std::string pred;
  std::string strategy = "greedy";
  std::size_t pairs = 10000;
  std::size_t length = 5;
  std::uint64_t seed = 1;
  bool random_brackets = false;
};

int run_eval(const EvalArgs& a) {
  const auto gold = read_gold(a.gold);
  if (gold.empty()) throw Error(ErrorKind::Config, "gold file " + a.gold + " has no trees");
  json result;
  result["gold"] = a.gold;
  result["sentences"] = gold.size();

  if (!a.pred.empty()) {
    const auto pred = read_gold(a.pred);
    if (pred.size() != gold.size()) {
      throw Error(ErrorKind::Structure, "prediction file has " + std::to_string(pred.size()) + " trees, gold has " +
                                            std::to_string(gold.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (pred[i].tokens != gold[i].tokens) {
        throw Error(ErrorKind::Structure, "sentence " + std::to_string(i + 1) + " differs between files");
      }
      total += bracket_f1(pred[i].shape, gold[i].shape).f1;
    }
    result["pred"] = a.pred;
    result["f1"] = total / static_cast<double>(gold.size());
  }

  if (!a.model.empty()) {
    if (a.vocab.empty()) throw Error(ErrorKind::Config, "--model needs --vocab");
    const Model model = load_model(a.model);
    const Vocab vocab = Vocab::load(a.vocab);
    check_model_vocab(model, vocab);
    const Strategy strategy = Strategy::parse(a.strategy);
    std::vector<GoldSentence> sentences;
    std::vector<WordId> stream;
    for (const auto& g : gold) {
      std::vector<WordId> ids;
      for (const auto& t : g.tokens) ids.push_back(vocab.id_or_unk(t));
      stream.insert(stream.end(), ids.begin(), ids.end());
      sentences.push_back({std::move(ids), g.shape});
    }
    result["model"] = a.model;
    result["strategy"] = strategy.str();
    if (a.pred.empty()) result["f1"] = bracketing_f1(model, sentences, strategy);
    auto segs = windows(stream, a.length, vocab.size(), OovPolicy::Drop);
    if (segs.size() > a.pairs) segs.resize(a.pairs);
    result["pairs"] = segs.size();
    result["seed"] = a.seed;
    result["random_brackets"] = a.random_brackets;
    result["ranking_accuracy"] =
        segs.empty() ? json(nullptr) : json(ranking_accuracy(model, segs, vocab.size(), strategy, a.seed,
                                                             a.random_brackets));
  }
  if (!result.contains("f1")) throw Error(ErrorKind::Config, "eval needs --model or --pred");
  std::cout << result.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive association model: train, parse and inspect."};
  app.require_subcommand(1);

  VocabArgs va;
  auto* vocab_cmd = app.add_subcommand("vocab", "Build a vocabulary from corpus files");
  vocab_cmd->add_option("corpus", va.corpus, "Corpus files")->required();
  vocab_cmd->add_option("-o,--out", va.out, "Vocabulary file to write")->required();
  vocab_cmd->add_option("--max-size", va.max_size, "Maximum number of words")->capture_default_str();
  vocab_cmd->add_option("--min-freq", va.min_freq, "Minimum word frequency")->capture_default_str();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--vocab", ta.vocab, "Vocabulary file")->required();
  train_cmd->add_option("--corpus", ta.corpus, "Corpus files, each one token stream");
  train_cmd->add_option("--config", ta.config, "Config file (key = value)");
  train_cmd->add_option("--gold", ta.gold, "Gold bracketing file for supervised training");
  train_cmd->add_option("--pretrained", ta.pretrained, "Embedding TSV to initialize W");
  train_cmd->add_option("-o,--out", ta.out, "Model file, rewritten after every epoch")->required();
  train_cmd->add_option("--report", ta.report, "JSON-lines training report");
  train_cmd->add_option("--seed", ta.seed, "Override the config seed");
  train_cmd->add_option("--epochs", ta.epochs, "Epochs for every stage, overriding the config");
  train_cmd->add_option("--dim", ta.dim, "Override the config dimension");
  train_cmd->add_flag("-q,--quiet", ta.quiet, "No per-epoch progress on stderr");

  ParseArgs pa;
  auto* parse_cmd = app.add_subcommand("parse", "Bracket text lines");
  parse_cmd->add_option("--model", pa.model, "Model file")->required();
  parse_cmd->add_option("--vocab", pa.vocab, "Vocabulary file")->required();
  parse_cmd->add_option("--strategy", pa.strategy, "greedy, greedy:any, beam:K or exhaustive")->capture_default_str();
  parse_cmd->add_option("-i,--input", pa.input, "Input file (default stdin)");
  parse_cmd->add_flag("--json", pa.json_out, "JSON lines with scores");

  UnfoldArgs ua;
  auto* unfold_cmd = app.add_subcommand("unfold", "Encode text and unfold its representation");
  unfold_cmd->add_option("--model", ua.model, "Model file")->required();
  unfold_cmd->add_option("--vocab", ua.vocab, "Vocabulary file")->required();
  unfold_cmd->add_option("--text", ua.text, "Text to encode")->required();
  unfold_cmd->add_option("--threshold", ua.threshold, "Minimum saliency to keep splitting")->capture_default_str();
  unfold_cmd->add_option("--max-depth", ua.max_depth, "Maximum depth")->capture_default_str();

  NeighborArgs na;
  auto* nb_cmd = app.add_subcommand("neighbors", "Nearest words or phrases");
  nb_cmd->add_option("--model", na.model, "Model file")->required();
  nb_cmd->add_option("--vocab", na.vocab, "Vocabulary file")->required();
  nb_cmd->add_option("queries", na.queries, "Query words or quoted phrases")->required();
  nb_cmd->add_option("--k", na.k, "Neighbors per query")->capture_default_str();
  nb_cmd->add_option("--phrase-len", na.phrase_len, "Words per sequence")->capture_default_str();
  nb_cmd->add_option("--top-m", na.top_m, "Candidate words for phrases")->capture_default_str();
  nb_cmd->add_option("--budget", na.budget, "Maximum phrase candidates")->capture_default_str();
  nb_cmd->add_option("--metric", na.metric, "euclidean or cosine")->capture_default_str();
  nb_cmd->add_flag("--tsv", na.tsv, "Tab-separated output");

  ToygenArgs ga;
  auto* gen_cmd = app.add_subcommand("toygen", "Generate a corpus from a toy grammar");
  gen_cmd->add_option("--grammar", ga.grammar, "Grammar file")->required();
  gen_cmd->add_option("--sentences", ga.sentences, "Number of sentences")->capture_default_str();
  gen_cmd->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("-o,--out", ga.out, "Corpus file, one sentence per line")->required();
  gen_cmd->add_option("--gold-out", ga.gold_out, "Gold bracketing file");
  gen_cmd->add_option("--min-len", ga.min_len, "Minimum sentence length")->capture_default_str();
  gen_cmd->add_option("--max-len", ga.max_len, "Maximum sentence length")->capture_default_str();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Bracketing F1 and ranking accuracy");
  eval_cmd->add_option("--gold", ea.gold, "Gold bracketing file")->required();
  eval_cmd->add_option("--model", ea.model, "Model file");
  eval_cmd->add_option("--vocab", ea.vocab, "Vocabulary file");
  eval_cmd->add_option("--pred", ea.pred, "Predicted bracketing file, scored instead of the model parses");
  eval_cmd->add_option("--strategy", ea.strategy, "Parse strategy")->capture_default_str();
  eval_cmd->add_option("--pairs", ea.pairs, "Maximum corrupted pairs")->capture_default_str();
  eval_cmd->add_option("--length", ea.length, "Segment length for ranking pairs")->capture_default_str();
  eval_cmd->add_option("--seed", ea.seed, "Corruption seed")->capture_default_str();
  eval_cmd->add_flag("--random-brackets", ea.random_brackets,
                     "Bracket ranking pairs at random instead of parsing them");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*vocab_cmd) return run_vocab(va);
    if (*train_cmd) return run_train(ta);
    if (*parse_cmd) return run_parse(pa);
    if (*unfold_cmd) return run_unfold(ua);
    if (*nb_cmd) return run_neighbors(na);
    if (*gen_cmd) return run_toygen(ga);
    if (*eval_cmd) return run_eval(ea);
  } catch (const Error& e) {
    std::cerr << "raam: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "raam: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
