#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <string>
#include <vector>

#include "chdzdt/chartok.hpp"
#include "chdzdt/encoder.hpp"
#include "chdzdt/error.hpp"
#include "chdzdt/eval/embedder.hpp"
#include "chdzdt/eval/metrics.hpp"
#include "chdzdt/preprocess.hpp"
#include "chdzdt/pretrain.hpp"
#include "chdzdt/toydata.hpp"
#include "chdzdt/utf8.hpp"

namespace py = pybind11;
using namespace chdzdt;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Configs cross the boundary as JSON text; the Python layer handles dicts.
json parse(const std::string& text) { return text.empty() ? json::object() : json::parse(text); }

eval::Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  eval::Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

Array to_array(const eval::Matrix& m) {
  Array out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

std::vector<std::pair<std::string, std::string>> lexicon_rows(const Lexicon& lex) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(lex.size());
  for (const auto& e : lex) out.emplace_back(e.word, format_labels(e.labels));
  return out;
}

Lexicon lexicon_of(const std::vector<std::pair<std::string, std::string>>& rows) {
  LexiconBuilder b(1000);
  for (const auto& [word, labels] : rows) {
    const LabelSet set = parse_labels(labels);
    for (std::size_t l = 0; l < kNumLangs; ++l) {
      if (set & (1u << l)) b.add(word, static_cast<Lang>(l));
    }
  }
  return b.finish();
}

// A float encoder with its vocabulary.
struct Model {
  std::shared_ptr<const Encoder<float>> encoder;

  static Model create(const std::string& config_json, const std::string& vocab_json) {
    auto vocab = std::make_shared<const CharVocab>(
        vocab_json.empty() ? CharVocab::default_vocab() : CharVocab::build(VocabSpec::from_json(parse(vocab_json))));
    auto config = ModelConfig::from_json(parse(config_json));
    if (config.vocab_size == 0) config.vocab_size = vocab->size();
    return {std::make_shared<const Encoder<float>>(config, vocab)};
  }

  Array embed(const std::vector<std::string>& words) const {
    const eval::EncoderEmbedder e(encoder);
    return to_array(e.embed_all(words));
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "chdzdt native core";
  m.attr("__version__") = CHDZDT_VERSION;

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  py::class_<CharVocab, std::shared_ptr<CharVocab>>(m, "CharVocab")
      .def_static("default", [] { return std::make_shared<CharVocab>(CharVocab::default_vocab()); })
      .def_static("from_spec", [](const std::string& spec) {
        return std::make_shared<CharVocab>(CharVocab::build(VocabSpec::from_json(parse(spec))));
      })
      .def("__len__", &CharVocab::size)
      .def("encode", [](const CharVocab& v, const std::string& word, std::size_t max_chars) {
        return v.encode_word(word, max_chars).ids;
      }, py::arg("word"), py::arg("max_chars") = 20)
      .def("decode", [](const CharVocab& v, const std::vector<std::int32_t>& ids) { return v.decode(ids); })
      .def("id_of", [](const CharVocab& v, const std::string& ch) {
        const auto cps = utf8::decode(ch);
        if (cps.size() != 1) throw py::value_error("expected one character");
        return v.id_of(cps[0]);
      });

  py::class_<Normalizer>(m, "Normalizer")
      .def(py::init([](const std::string& rules) {
        return Normalizer(rules.empty() ? NormRules::default_rules() : NormRules::from_json(parse(rules)),
                          VocabSpec::default_spec());
      }), py::arg("rules_json") = "")
      .def("normalize", [](const Normalizer& n, const std::string& s) { return n.normalize(s); })
      .def("region_keep", [](const Normalizer& n, const std::string& s) { return n.region_keep(s); })
      .def("process_line", [](const Normalizer& n, const std::string& s, bool social) {
        return n.process_line(s, social ? SourceKind::kSocial : SourceKind::kStandard);
      }, py::arg("line"), py::arg("social") = false);

  m.def("load_lexicon", [](const std::filesystem::path& p) { return lexicon_rows(load_lexicon(p)); },
        "(word, labels) rows of a lexicon TSV");
  m.def("toy_lexicon", [](std::uint64_t seed, std::size_t n) {
    return lexicon_rows(toy::trilingual_lexicon(seed, n));
  }, py::arg("seed") = 42, py::arg("n_words") = 500);
  m.def("toy_root_clusters", [](std::uint64_t seed) {
    toy::RootAffixLanguage lang;
    toy::trilingual_lexicon(seed, 500, &lang);
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (const auto& c : toy::root_clusters(lang)) out.emplace_back(c.root, c.members);
    return out;
  }, py::arg("seed") = 42);

  py::class_<Model>(m, "Model")
      .def_static("create", &Model::create, py::arg("config_json") = "", py::arg("vocab_json") = "")
      .def_static("load", [](const std::filesystem::path& p) {
        return Model{std::make_shared<const Encoder<float>>(load_checkpoint(p).model)};
      })
      .def("save", [](const Model& self, const std::filesystem::path& p) { save_checkpoint(*self.encoder, p); })
      .def_property_readonly("config_json", [](const Model& self) { return self.encoder->config().to_json().dump(); })
      .def_property_readonly("dim", [](const Model& self) { return self.encoder->config().hidden; })
      .def("num_params", [](const Model& self) { return count_params(self.encoder->config()); })
      .def("embed", &Model::embed, "CLS vectors, one row per word")
      .def("acs", [](const Model& self, const std::vector<std::pair<std::string, std::vector<std::string>>>& cs) {
        std::vector<eval::Cluster> clusters;
        for (const auto& [root, members] : cs) clusters.push_back({root, members});
        return eval::acs(eval::EncoderEmbedder(self.encoder), clusters);
      });

  m.def("count_params", [](const std::string& config_json) {
    auto c = ModelConfig::from_json(parse(config_json));
    if (c.vocab_size == 0) c.vocab_size = CharVocab::default_vocab().size();
    return count_params(c);
  });

  m.def("train", [](const std::vector<std::pair<std::string, std::string>>& rows, const Model& init,
                    const std::string& train_json) {
    const auto config = TrainConfig::from_json(parse(train_json));
    TrainResult r = [&] {
      py::gil_scoped_release release;
      return train(lexicon_of(rows), init.encoder->config(), init.encoder->vocab_ptr(), config);
    }();
    return py::make_tuple(Model{std::make_shared<const Encoder<float>>(std::move(r.model))},
                          r.log.to_jsonl(1, false));
  }, py::arg("lexicon"), py::arg("model"), py::arg("train_json") = "",
     "Trains a fresh model with the architecture of `model`; returns (model, log_jsonl)");

  m.def("silhouette", [](const Array& points, const std::vector<int>& labels) {
    return eval::silhouette(to_matrix(points), labels);
  });
  m.def("ari", [](const std::vector<int>& pred, const std::vector<int>& gold) { return eval::ari(pred, gold); });
  m.def("kmeans", [](const Array& points, std::size_t k, std::uint64_t seed) {
    return eval::kmeans(to_matrix(points), k, seed).labels;
  }, py::arg("points"), py::arg("k"), py::arg("seed") = 42);
  m.def("kendall", [](const std::vector<double>& x, const std::vector<double>& y) { return eval::kendall(x, y); });
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return eval::spearman(x, y); });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return eval::pearson(x, y); });
}
