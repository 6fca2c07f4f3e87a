// Python bindings. The loss and weighting entry points go through the C
// bridge so the scripting side exercises the same symbols as foreign callers.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "tokenweight/bridge.h"
#include "tokenweight/corpus.hpp"
#include "tokenweight/error.hpp"
#include "tokenweight/lexicon.hpp"
#include "tokenweight/reporteval.hpp"
#include "tokenweight/spanmap.hpp"
#include "tokenweight/sweep.hpp"
#include "tokenweight/tokenizer.hpp"

namespace py = pybind11;
using namespace tokenweight;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IdArray = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;
using OffsetArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

void check_status(int status, const char* err) {
  if (status == TW_OK) return;
  if (status == TW_EINVAL) throw py::value_error(err);
  throw std::runtime_error(err);
}

py::array_t<double> weights_for(const std::string& text, const OffsetArray& spans,
                                const std::optional<std::string>& set_name,
                                const std::optional<std::vector<std::string>>& words, double gamma) {
  if (spans.ndim() != 2 || spans.shape(1) != 2) throw py::value_error("spans must have shape (T, 2)");
  if (set_name.has_value() == words.has_value()) throw py::value_error("give exactly one of set_name, words");
  const auto t = static_cast<size_t>(spans.shape(0));
  std::vector<std::int64_t> starts(t), ends(t);
  auto s = spans.unchecked<2>();
  for (size_t i = 0; i < t; ++i) {
    starts[i] = s(i, 0);
    ends[i] = s(i, 1);
  }
  std::vector<const char*> word_ptrs;
  if (words) {
    for (const auto& w : *words) word_ptrs.push_back(w.c_str());
  }
  py::array_t<double> out(static_cast<py::ssize_t>(t));
  char err[512];
  int status = tw_weights_for(text.c_str(), starts.data(), ends.data(), t,
                              set_name ? set_name->c_str() : nullptr, word_ptrs.data(), word_ptrs.size(),
                              gamma, out.mutable_data(), err, sizeof err);
  check_status(status, err);
  return out;
}

py::object loss_and_grad(const DoubleArray& logits, const IdArray& targets, const DoubleArray& weights,
                         bool with_grad) {
  if (logits.ndim() != 2) throw py::value_error("logits must be a 2-D array (T, V)");
  const auto t = static_cast<size_t>(logits.shape(0));
  const auto v = static_cast<size_t>(logits.shape(1));
  if (targets.ndim() != 1 || static_cast<size_t>(targets.shape(0)) != t) {
    throw py::value_error("targets must have shape (T,) with T = " + std::to_string(t));
  }
  if (weights.ndim() != 1 || static_cast<size_t>(weights.shape(0)) != t) {
    throw py::value_error("weights must have shape (T,) with T = " + std::to_string(t));
  }
  double value = 0.0;
  char err[512];
  if (!with_grad) {
    check_status(tw_loss_and_grad(logits.data(), t, v, targets.data(), weights.data(), &value, nullptr, err,
                                  sizeof err),
                 err);
    return py::float_(value);
  }
  py::array_t<double> grad({static_cast<py::ssize_t>(t), static_cast<py::ssize_t>(v)});
  check_status(tw_loss_and_grad(logits.data(), t, v, targets.data(), weights.data(), &value,
                                grad.mutable_data(), err, sizeof err),
               err);
  return py::make_tuple(value, grad);
}

py::dict sample_dict(const SynthSample& s) {
  py::dict d;
  d["prompt"] = s.prompt;
  d["report"] = s.report;
  d["stage"] = std::string(to_string(s.labels.stage));
  d["biomarkers"] = std::vector<bool>(s.labels.findings.present.begin(), s.labels.findings.present.end());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Keyword-weighted cross-entropy: keyword sets, tokenizer, loss and evaluation";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const RuntimeFailure& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  m.def("version", [] { return std::string(tw_version()); });

  m.def("weights_for", &weights_for, py::arg("text"), py::arg("spans"), py::arg("set_name") = py::none(),
        py::arg("words") = py::none(), py::arg("gamma") = 1.0,
        "Per-token weights for a caller tokenization given as (T, 2) code-point spans.");
  m.def("loss_and_grad", &loss_and_grad, py::arg("logits"), py::arg("targets"), py::arg("weights"),
        py::arg("with_grad") = true, "Weighted cross-entropy value and (T, V) gradient.");

  m.def("builtin_set", [](const std::string& name) {
    std::vector<std::string> out;
    for (const auto& k : builtin_set(name).entries()) out.push_back(k.surface);
    return out;
  });
  m.def("find_keyword_spans", [](const std::string& text, const std::string& set_name) {
    std::vector<py::tuple> out;
    for (const auto& m : find_keyword_spans(text, builtin_set(set_name))) {
      out.push_back(py::make_tuple(m.span.start, m.span.end, m.keyword.surface));
    }
    return out;
  }, py::arg("text"), py::arg("set_name"));

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_static("train", [](const std::vector<std::string>& lines, std::size_t size) {
        return train_vocab(lines, size);
      }, py::arg("lines"), py::arg("size"))
      .def_property_readonly("size", &Vocabulary::size)
      .def("piece", &Vocabulary::piece)
      .def("tokenize", [](const Vocabulary& v, const std::string& text) {
        auto seq = tokenize(text, v);
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        for (const auto& s : seq.spans) spans.emplace_back(s.start, s.end);
        return py::make_tuple(seq.ids, spans);
      }, "Returns (ids, [(start, end), ...]) with code-point offsets.");

  m.def("generate_corpus", [](std::size_t n, std::uint64_t seed) {
    py::list out;
    for (const auto& s : generate_corpus(n, seed)) out.append(sample_dict(s));
    return out;
  }, py::arg("n"), py::arg("seed"));
  m.def("extract_labels", [](const std::string& report) {
    auto l = extract_labels(report);
    return py::make_tuple(std::string(to_string(l.stage)),
                          std::vector<bool>(l.findings.present.begin(), l.findings.present.end()));
  });
  m.def("f1_macro", [](const std::vector<int>& preds, const std::vector<int>& golds,
                       const std::vector<std::string>& classes) {
    return f1_macro(preds, golds, classes).macro_f1;
  }, py::arg("preds"), py::arg("golds"), py::arg("classes"));
  m.def("relative_gain", &relative_gain, py::arg("weighted_score"), py::arg("baseline_score"));
}
