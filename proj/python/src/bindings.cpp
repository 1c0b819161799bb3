#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "anssel/corpus.hpp"
#include "anssel/error.hpp"
#include "anssel/harness.hpp"
#include "anssel/metrics.hpp"
#include "anssel/objective.hpp"
#include "anssel/synthetic.hpp"
#include "anssel/textenc.hpp"

namespace py = pybind11;
using namespace anssel;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.
std::string train_run(const std::string& train_path, const std::string& dev_path,
                      const std::string& out_dir, const std::optional<std::string>& config_path,
                      std::optional<std::size_t> epochs, std::optional<std::uint64_t> seed) {
  TrainConfig cfg;
  if (config_path) cfg = load_train_config(*config_path);
  if (epochs) cfg.num_epochs = *epochs;
  if (seed) cfg.base_seed = *seed;
  cfg.validate();
  const Dataset train_set = load_canonical(train_path);
  const Dataset dev_set = load_canonical(dev_path);
  const auto result = train<float>(cfg, train_set, dev_set);
  save_run(cfg, result, out_dir);
  return to_json(result.history).dump();
}

std::pair<double, double> rank_metrics(const std::vector<double>& scores,
                                       const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  Question q{"q", "", {}};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    q.candidates.push_back({std::to_string(i), "", labels[i]});
  }
  const RankedList ranked = rank_candidates(q, scores);
  return {reciprocal_rank(ranked), average_precision(ranked)};
}

class PyModel {
 public:
  PyModel(const std::string& checkpoint, const std::string& vocab)
      : m_(load_model(checkpoint, vocab)) {}

  double score(const std::string& question, const std::string& answer) const {
    return score_pair(m_.params, m_.vocab, question, answer, m_.config.truncation);
  }

  std::vector<std::pair<std::size_t, double>> rank(const std::string& question,
                                                   const std::vector<std::string>& answers) const {
    Question q{"q", question, {}};
    std::vector<double> scores;
    for (std::size_t i = 0; i < answers.size(); ++i) {
      q.candidates.push_back({std::to_string(i), answers[i], false});
      scores.push_back(score(question, answers[i]));
    }
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& e : rank_candidates(q, scores).entries) out.emplace_back(e.original_index, e.score);
    return out;
  }

  std::string evaluate_file(const std::string& data_path, const std::optional<std::string>& filter,
                            const std::optional<std::string>& run_file) const {
    const FilterMode mode = filter ? parse_filter_mode(*filter) : m_.config.filter_mode;
    const auto report = evaluate(m_.params, m_.vocab, load_canonical(data_path), mode,
                                 m_.config.truncation);
    if (run_file) {
      std::ofstream out(*run_file);
      if (!out) throw DataError("cannot write " + *run_file);
      write_trec_run(report, out, "anssel");
    }
    return to_json(report).dump();
  }

  std::string config_json() const { return to_json(m_.config).dump(); }
  std::size_t vocab_size() const { return m_.vocab.size(); }

 private:
  LoadedModel m_;
};

}  // namespace

PYBIND11_MODULE(_anssel, m) {
  m.doc() = "Pairwise answer-selection core";

  // Later registrations are tried first, so the subclasses win over the base.
  py::register_exception<Error>(m, "AnsselError", PyExc_RuntimeError);
  const py::object base = m.attr("AnsselError");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<NumericalError>(m, "NumericalError", base);

  m.def("tokenize", &tokenize, py::arg("text"));
  m.def(
      "pairwise_loss",
      [](double yp, double yn, double lambda1, double lambda2, double margin) {
        return pairwise_loss(yp, yn, LossConfig{lambda1, lambda2, margin});
      },
      py::arg("yp"), py::arg("yn"), py::arg("lambda1") = 0.5, py::arg("lambda2") = 0.5,
      py::arg("margin") = 0.2);
  m.def("rank_metrics", &rank_metrics, py::arg("scores"), py::arg("labels"),
        "(reciprocal rank, average precision) of one candidate list");
  m.def(
      "dataset_stats",
      [](const std::string& path) { return to_json(compute_stats(load_canonical(path))).dump(); },
      py::arg("path"));
  m.def(
      "convert_tsv",
      [](const std::string& in_path, const std::string& out_path, const std::string& note) {
        std::ifstream in(in_path, std::ios::binary);
        if (!in) throw DataError("cannot open " + in_path);
        save_canonical(convert_tsv(in), out_path, note);
      },
      py::arg("in_path"), py::arg("out_path"), py::arg("note") = "");
  m.def(
      "make_separable_corpus",
      [](const std::string& out_path, std::size_t num_questions, std::size_t num_markers,
         std::uint64_t seed, const std::string& id_prefix) {
        SeparableCorpusOptions o;
        o.num_questions = num_questions;
        o.num_markers = num_markers;
        o.seed = seed;
        o.id_prefix = id_prefix;
        save_canonical(make_separable_corpus(o), out_path);
      },
      py::arg("out_path"), py::arg("num_questions") = 50, py::arg("num_markers") = 8,
      py::arg("seed") = 1, py::arg("id_prefix") = "q");
  m.def("train", &train_run, py::arg("train_path"), py::arg("dev_path"), py::arg("out_dir"),
        py::arg("config_path") = py::none(), py::arg("epochs") = py::none(),
        py::arg("seed") = py::none(), py::call_guard<py::gil_scoped_release>());

  py::class_<PyModel>(m, "Model")
      .def(py::init<const std::string&, const std::string&>(), py::arg("checkpoint"),
           py::arg("vocab"))
      .def("score", &PyModel::score, py::arg("question"), py::arg("answer"))
      .def("rank", &PyModel::rank, py::arg("question"), py::arg("answers"))
      .def("evaluate", &PyModel::evaluate_file, py::arg("data_path"),
           py::arg("filter") = py::none(), py::arg("run_file") = py::none())
      .def("config_json", &PyModel::config_json)
      .def_property_readonly("vocab_size", &PyModel::vocab_size);
}
