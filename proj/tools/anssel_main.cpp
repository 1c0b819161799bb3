// anssel: command-line front end for corpus conversion, training,
// evaluation and ad-hoc ranking.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical abort.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anssel/corpus.hpp"
#include "anssel/error.hpp"
#include "anssel/harness.hpp"
#include "anssel/metrics.hpp"
#include "anssel/sampling.hpp"
#include "anssel/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

anssel::Dataset load_dataset(const std::string& path, anssel::Split split) {
  std::vector<std::string> warnings;
  anssel::Dataset d = anssel::load_canonical(path, &warnings);
  print_warnings(warnings);
  d.name = fs::path(path).stem().string();
  d.split = split;
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise answer selection: train, evaluate and rank with a small transformer"};
  app.require_subcommand(1);

  // convert
  auto* convert = app.add_subcommand("convert", "Convert a 4-column TSV corpus to canonical JSONL");
  std::string convert_from = "tsv";
  std::string convert_in, convert_out, convert_note;
  convert->add_option("--from", convert_from, "Input format")->check(CLI::IsMember({"tsv"}));
  convert->add_option("--in", convert_in, "Input TSV")->required();
  convert->add_option("--out", convert_out, "Output JSONL")->required();
  convert->add_option("--note", convert_note, "Header comment, e.g. the label binarization rule");

  // stats
  auto* stats = app.add_subcommand("stats", "Print dataset statistics as JSON");
  std::string stats_in;
  stats->add_option("--in", stats_in, "Canonical JSONL")->required();

  // triples
  auto* triples = app.add_subcommand("triples", "Write training triples as TSV for audit");
  std::string triples_in, triples_out, triples_strategy = "cross_product";
  std::size_t triples_k = 1;
  std::uint64_t triples_seed = 0;
  triples->add_option("--in", triples_in, "Canonical JSONL")->required();
  triples->add_option("--out", triples_out, "Output TSV (stdout when omitted)");
  triples->add_option("--strategy", triples_strategy)
      ->check(CLI::IsMember({"cross_product", "sampled_k"}));
  triples->add_option("--k", triples_k);
  triples->add_option("--seed", triples_seed);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic marker-token corpus");
  anssel::SeparableCorpusOptions synth_opts;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output JSONL")->required();
  synth->add_option("--questions", synth_opts.num_questions);
  synth->add_option("--markers", synth_opts.num_markers);
  synth->add_option("--seed", synth_opts.seed);
  synth->add_option("--prefix", synth_opts.id_prefix, "Question id prefix");

  // train
  auto* trainc = app.add_subcommand("train", "Fine-tune the pairwise scorer");
  std::string train_path, dev_path, config_path, out_dir;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  trainc->add_option("--train", train_path, "Training JSONL")->required();
  trainc->add_option("--dev", dev_path, "Dev JSONL")->required();
  trainc->add_option("--config", config_path, "TrainConfig JSON (defaults when omitted)");
  trainc->add_option("--epochs", epochs, "Overrides num_epochs");
  trainc->add_option("--seed", seed, "Overrides base_seed");
  trainc->add_option("--out-dir", out_dir, "Output directory")->required();
  trainc->add_flag("--quiet", quiet, "No progress output");

  // eval
  auto* evalc = app.add_subcommand("eval", "Compute MRR/MAP on a dataset");
  std::string eval_ckpt, eval_vocab, eval_data, eval_run_file, eval_run_tag = "anssel";
  std::optional<std::string> eval_filter;
  evalc->add_option("--checkpoint", eval_ckpt)->required();
  evalc->add_option("--vocab", eval_vocab)->required();
  evalc->add_option("--data", eval_data)->required();
  evalc->add_option("--filter", eval_filter)
      ->check(CLI::IsMember({"require_positive", "require_both", "keep_all"}));
  evalc->add_option("--run-file", eval_run_file, "Also write a TREC run file");
  evalc->add_option("--run-tag", eval_run_tag);

  // rank
  auto* rankc = app.add_subcommand("rank", "Score and rank ad-hoc candidate answers");
  std::string rank_ckpt, rank_vocab, rank_question, rank_answers;
  rankc->add_option("--checkpoint", rank_ckpt)->required();
  rankc->add_option("--vocab", rank_vocab)->required();
  rankc->add_option("--question", rank_question)->required();
  rankc->add_option("--answers", rank_answers, "File with one candidate answer per line")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*convert) {
      std::ifstream in(convert_in, std::ios::binary);
      if (!in) throw anssel::DataError("cannot open " + convert_in);
      const anssel::Dataset d = anssel::convert_tsv(in);
      anssel::save_canonical(d, convert_out, convert_note);
      std::cerr << "wrote " << d.questions.size() << " questions to " << convert_out << '\n';
    } else if (*stats) {
      const auto d = load_dataset(stats_in, anssel::Split::kTest);
      std::cout << anssel::to_json(anssel::compute_stats(d)).dump(2) << '\n';
    } else if (*triples) {
      const auto d = load_dataset(triples_in, anssel::Split::kTrain);
      anssel::SamplingConfig cfg{anssel::parse_sampling_strategy(triples_strategy), triples_k,
                                 triples_seed};
      const auto set = anssel::generate_triples(d, cfg);
      if (triples_out.empty()) {
        anssel::write_triples_tsv(set.triples, std::cout);
      } else {
        std::ofstream out(triples_out);
        if (!out) throw anssel::DataError("cannot write " + triples_out);
        anssel::write_triples_tsv(set.triples, out);
      }
      std::cerr << set.triples.size() << " triples, " << set.num_degenerate_questions
                << " questions without a positive/negative pair\n";
    } else if (*synth) {
      anssel::save_canonical(anssel::make_separable_corpus(synth_opts), synth_out);
    } else if (*trainc) {
      anssel::TrainConfig cfg;
      if (!config_path.empty()) {
        std::vector<std::string> warnings;
        cfg = anssel::load_train_config(config_path, &warnings);
        print_warnings(warnings);
      }
      if (epochs) cfg.num_epochs = *epochs;
      if (seed) cfg.base_seed = *seed;
      cfg.validate();
      const auto train_set = load_dataset(train_path, anssel::Split::kTrain);
      const auto dev_set = load_dataset(dev_path, anssel::Split::kDev);
      anssel::TrainLogger log;
      if (!quiet) log = [](const std::string& line) { std::cerr << line << '\n'; };
      const auto result = anssel::train<float>(cfg, train_set, dev_set, log);

      anssel::save_run(cfg, result, out_dir);
      if (!quiet) std::cerr << "wrote model.ckpt, vocab.txt, history.json to " << out_dir << '\n';
    } else if (*evalc) {
      const anssel::LoadedModel s = anssel::load_model(eval_ckpt, eval_vocab);
      const auto mode = eval_filter ? anssel::parse_filter_mode(*eval_filter)
                                    : s.config.filter_mode;
      const auto data = load_dataset(eval_data, anssel::Split::kTest);
      const auto report = anssel::evaluate(s.params, s.vocab, data, mode,
                                           s.config.truncation);
      if (!eval_run_file.empty()) {
        std::ofstream run(eval_run_file);
        if (!run) throw anssel::DataError("cannot write " + eval_run_file);
        anssel::write_trec_run(report, run, eval_run_tag);
      }
      std::cout << anssel::to_json(report).dump(2) << '\n';
    } else if (*rankc) {
      const anssel::LoadedModel s = anssel::load_model(rank_ckpt, rank_vocab);
      std::ifstream in(rank_answers);
      if (!in) throw anssel::DataError("cannot open " + rank_answers);
      anssel::Question q{"query", rank_question, {}};
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        q.candidates.push_back({std::to_string(q.candidates.size()), line, false});
      }
      if (q.candidates.empty()) throw anssel::DataError("no candidate answers in " + rank_answers);
      std::vector<double> scores;
      for (const auto& c : q.candidates) {
        scores.push_back(anssel::score_pair(s.params, s.vocab, q.text, c.text,
                                            s.config.truncation));
      }
      const auto ranked = anssel::rank_candidates(q, scores);
      auto out = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
        const auto& e = ranked.entries[i];
        out.push_back({{"rank", i + 1},
                       {"score", e.score},
                       {"answer", q.candidates[e.original_index].text}});
      }
      std::cout << out.dump(2) << '\n';
    }
  } catch (const anssel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const anssel::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const anssel::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
