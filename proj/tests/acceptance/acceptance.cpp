// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run everything
//   acceptance --only X   run criterion X (see --list)
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "golden.hpp"
#include "oracles.hpp"
#include "tokenweight/corpus.hpp"
#include "tokenweight/lexicon.hpp"
#include "tokenweight/loss.hpp"
#include "tokenweight/reporteval.hpp"
#include "tokenweight/spanmap.hpp"
#include "tokenweight/sweep.hpp"
#include "tokenweight/trainer.hpp"

using namespace tokenweight;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Instance {
  Matrix logits;
  std::vector<TokenId> targets;
  std::vector<double> weights;
};

Instance random_instance(std::mt19937_64& rng, double scale, bool keyword_weights) {
  std::uniform_int_distribution<std::size_t> tdist(1, 32), vdist(2, 64);
  const std::size_t t = tdist(rng), v = vdist(rng);
  Instance x{Matrix(t, v), {}, {}};
  std::normal_distribution<double> g(0.0, scale);
  for (auto& z : x.logits.data) z = g(rng);
  std::uniform_int_distribution<TokenId> target(0, static_cast<TokenId>(v - 1));
  std::bernoulli_distribution keyword(0.3);
  const double gamma = std::uniform_real_distribution<double>(1.5, 6.0)(rng);
  for (std::size_t i = 0; i < t; ++i) {
    x.targets.push_back(target(rng));
    x.weights.push_back(keyword_weights && keyword(rng) ? gamma : 1.0);
  }
  return x;
}

// --- criteria -------------------------------------------------------------

Outcome lexicon_fidelity() {
  Outcome o;
  auto gold = golden::read_keywords(golden::data_path("keywords_golden.txt"));
  auto surfaces = [](const KeywordSet& s) {
    std::vector<std::string> out;
    for (const auto& k : s.entries()) out.push_back(k.surface);
    return out;
  };
  const auto& d = builtin_set("diagnostic");
  const auto& q = builtin_set("quantitative");
  const auto& c = builtin_set("combined");
  o.require(d.size() == 22 && q.size() == 34 && c.size() == 56, "set sizes are not 22/34/56");
  o.require(surfaces(d) == gold.diagnostic, "diagnostic set differs from the golden list");
  o.require(surfaces(q) == gold.quantitative, "quantitative set differs from the golden list");
  auto both = gold.diagnostic;
  both.insert(both.end(), gold.quantitative.begin(), gold.quantitative.end());
  auto combined = surfaces(c);
  std::sort(both.begin(), both.end());
  std::sort(combined.begin(), combined.end());
  o.require(combined == both, "combined set is not the union of the golden lists");
  if (o.pass) o.detail = "22/34/56 keywords match the golden lists";
  return o;
}

Outcome gamma_one_reduction() {
  Outcome o;
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    auto x = random_instance(rng, 3.0, false);
    std::vector<double> ones(x.targets.size(), 1.0);
    const double weighted = weighted_cross_entropy(x.logits, x.targets, ones).value;
    long double mean = 0.0L;
    for (std::size_t i = 0; i < x.targets.size(); ++i) {
      std::vector<double> row(x.logits.row(i).begin(), x.logits.row(i).end());
      mean += oracle::nll(row, x.targets[i]);
    }
    mean /= static_cast<long double>(x.targets.size());
    worst = std::max(worst, std::abs(weighted - static_cast<double>(mean)));
  }
  o.require(worst <= 1e-12, "loss mismatch " + fmt("%.3g", worst));

  auto corpus = generate_corpus(200, 5);
  auto vocab = train_corpus_vocab(corpus, 300);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TrainConfig cfg;
    cfg.learning_rate = 2.15;
    cfg.epochs = 2;
    cfg.seed = seed;
    auto plain = train(corpus, vocab, nullptr, cfg);
    auto unit = train(corpus, vocab, &builtin_set("combined"), cfg);
    o.require(plain.model == unit.model && plain.epoch_losses == unit.epoch_losses,
              "trainer trajectories differ for seed " + std::to_string(seed));
  }
  if (o.pass) o.detail = "max |diff| " + fmt("%.2g", worst) + " over 1000 instances; 3/3 seeds bitwise identical";
  return o;
}

Outcome gradient_check() {
  Outcome o;
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int n = 0; n < 200; ++n) {
    auto x = random_instance(rng, 2.0, true);
    auto analytic = loss_gradient(x.logits, x.targets, x.weights);
    auto fd = oracle::fd_gradient(
        x.logits, [&](const Matrix& m) { return weighted_cross_entropy(m, x.targets, x.weights).value; }, 1e-4);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < fd.data.size(); ++k) {
      num += (analytic.data[k] - fd.data[k]) * (analytic.data[k] - fd.data[k]);
      den += fd.data[k] * fd.data[k];
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  o.require(worst < 1e-5, "relative error " + fmt("%.3g", worst));
  if (o.pass) o.detail = "max relative error " + fmt("%.2g", worst) + " over 200 instances";
  return o;
}

Outcome span_oracle() {
  Outcome o;
  std::mt19937_64 rng(303);
  const auto& c = builtin_set("combined");
  auto vocab = train_corpus_vocab(generate_corpus(300, 3), 200);
  std::size_t split_matches = 0;
  for (int n = 0; n < 500 && o.pass; ++n) {
    auto text = oracle::random_text(rng, c, 20);
    auto matches = find_keyword_spans(text, c);
    auto expect = oracle::keyword_matches(text, c);
    bool same = matches.size() == expect.size();
    for (std::size_t i = 0; same && i < matches.size(); ++i) {
      same = matches[i].span == expect[i].first && matches[i].keyword.surface == expect[i].second;
    }
    o.require(same, "matcher disagrees on text " + std::to_string(n));
    // A random 1-4 character cut and the trained tokenizer.
    for (const auto& seq : {oracle::random_tokenization(rng, text), tokenize(text, vocab)}) {
      auto got = spans_to_token_indices(matches, seq).positions;
      o.require(got == oracle::overlap_positions(matches, seq), "index mismatch on text " + std::to_string(n));
      for (const auto& m : matches) {
        std::size_t covering = 0;
        for (const auto& s : seq.spans) covering += s.start < m.span.end && m.span.start < s.end;
        split_matches += covering > 1;
      }
    }
  }
  if (o.pass) o.detail = "500 texts, 2 tokenizations each; " + std::to_string(split_matches) + " multi-token matches";
  return o;
}

Outcome lambda_bookkeeping() {
  Outcome o;
  std::mt19937_64 rng(404);
  const auto& c = builtin_set("combined");
  std::size_t vectors = 0;
  for (int n = 0; n < 500; ++n) {
    auto text = oracle::random_text(rng, c, 16);
    auto seq = oracle::random_tokenization(rng, text);
    const double gamma = std::uniform_real_distribution<double>(0.25, 8.0)(rng);
    auto idx = spans_to_token_indices(find_keyword_spans(text, c), seq);
    auto w = build_weight_vector(seq.spans.size(), idx, gamma);
    const double t = static_cast<double>(seq.spans.size());
    const double expect = t + (gamma - 1.0) * static_cast<double>(idx.positions.size());
    o.require(std::abs(w.total - expect) <= 1e-12 * std::max(1.0, expect), "Lambda mismatch on text " + std::to_string(n));

    // Weighted mean lies between the extreme per-token NLLs.
    const std::size_t v = 16;
    Matrix logits(seq.spans.size(), v);
    std::normal_distribution<double> g(0.0, 2.0);
    for (auto& z : logits.data) z = g(rng);
    std::vector<TokenId> targets;
    std::uniform_int_distribution<TokenId> tgt(0, static_cast<TokenId>(v - 1));
    for (std::size_t i = 0; i < seq.spans.size(); ++i) targets.push_back(tgt(rng));
    auto r = weighted_cross_entropy(logits, targets, w.lambdas);
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double nll = token_nll(logits.row(i), targets[i]);
      lo = std::min(lo, nll);
      hi = std::max(hi, nll);
    }
    o.require(r.value >= lo - 1e-12 && r.value <= hi + 1e-12, "value outside per-token range on text " + std::to_string(n));
    ++vectors;
  }
  if (o.pass) o.detail = std::to_string(vectors) + " weight vectors";
  return o;
}

Outcome f1_engine() {
  Outcome o;
  const std::vector<std::string> two{"a", "b"};
  // TP=FP=FN=TN=1 for each class.
  std::vector<int> pred{0, 0, 1, 1}, gold{0, 1, 1, 0};
  auto r = f1_macro(pred, gold, two);
  o.require(r.per_class[0].f1 == 0.5 && r.per_class[1].f1 == 0.5 && r.macro_f1 == 0.5, "balanced binary != 0.5");
  o.require(f1_macro(std::vector<int>{1, 0}, std::vector<int>{0, 1}, two).macro_f1 == 0.0, "swapped != 0");
  o.require(f1_macro(gold, gold, two).macro_f1 == 1.0, "perfect binary != 1");

  std::vector<AmdStage> stages{AmdStage::healthy, AmdStage::early_intermediate, AmdStage::late_wet, AmdStage::late_dry};
  o.require(stage_f1(stages, stages).macro_f1 == 1.0, "perfect stages != 1");

  // One biomarker always predicted present, gold half present.
  std::vector<BiomarkerFindings> bp(4), bg(4);
  for (std::size_t i = 0; i < 4; ++i) {
    bp[i][Biomarker::drusen] = true;
    bg[i][Biomarker::drusen] = i < 2;
    for (std::size_t b = 1; b < kBiomarkerCount; ++b) bp[i].present[b] = bg[i].present[b] = (i % 2 == 0);
  }
  auto bio = biomarker_f1(bp, bg);
  const auto& dr = bio.per_biomarker[0];
  o.require(dr.per_class[0].f1 == 2.0 / 3.0 && dr.per_class[1].f1 == 0.0 && dr.macro_f1 == 1.0 / 3.0,
            "biomarker hand values (2/3, 0, 1/3) not reproduced");
  o.require(bio.aggregate == (1.0 / 3.0 + 7.0) / 8.0, "biomarker aggregate mismatch");

  std::vector<BiomarkerFindings> absent(1);
  o.require(biomarker_f1(absent, absent).aggregate == 0.5, "single all-absent sample != 0.5");

  auto perfect = bg;
  perfect[0][Biomarker::drusen] = true;
  perfect[1][Biomarker::drusen] = false;
  o.require(biomarker_f1(perfect, perfect).aggregate == 1.0, "perfect biomarkers != 1");
  if (o.pass) o.detail = "hand-computed values reproduced exactly";
  return o;
}

Outcome extractor_round_trip() {
  Outcome o;
  auto corpus = generate_corpus(4000, 1);
  std::size_t ok = 0;
  for (const auto& s : corpus) ok += extract_labels(s.report) == s.labels;
  const double rate = static_cast<double>(ok) / static_cast<double>(corpus.size());
  o.require(rate >= 0.99, "recovered " + fmt("%.4f", rate));
  o.detail = std::to_string(ok) + "/4000 recovered";
  return o;
}

Outcome directional_replication() {
  Outcome o;
  const double fractions[] = {0.10};
  TableOptions opt;
  opt.jobs = jobs();
  int amd_wins = 0, nll_wins = 0;
  std::ostringstream log;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto corpus = generate_corpus(4000, seed);
    auto table = comparison_table(corpus, fractions, "combined", seed, opt);
    const auto& standard = table.rows.at(0);
    const auto& weighted = table.rows.at(1);
    amd_wins += weighted.amd_f1 >= standard.amd_f1;
    nll_wins += weighted.keyword_nll < standard.keyword_nll;
    std::printf("  seed %llu: amd_f1 %.3f -> %.3f (gamma %.2g, lr %.3g), keyword NLL %.3f -> %.3f\n",
                static_cast<unsigned long long>(seed), standard.amd_f1, weighted.amd_f1,
                weighted.selected.config.gamma, weighted.selected.grid_learning_rate, standard.keyword_nll,
                weighted.keyword_nll);
    std::fflush(stdout);
  }
  o.require(amd_wins >= 4, "weighted AMD F1 >= standard in only " + std::to_string(amd_wins) + "/5 seeds");
  o.require(nll_wins == 5, "keyword NLL lower in only " + std::to_string(nll_wins) + "/5 seeds");
  if (o.pass) {
    o.detail = "AMD F1 " + std::to_string(amd_wins) + "/5, keyword NLL " + std::to_string(nll_wins) + "/5";
  }
  return o;
}

Outcome relative_gain_arithmetic() {
  Outcome o;
  o.require(std::abs(relative_gain(0.490, 0.422) - 0.161) <= 0.001, "10% AMD gain");
  o.require(std::abs(relative_gain(0.573, 0.481) - 0.1913) <= 0.001, "100% AMD gain");
  o.require(relative_gain(0.5, 0.5) == 0.0, "equal scores");
  if (o.pass) o.detail = "0.490/0.422 -> " + fmt("%.4f", relative_gain(0.490, 0.422));
  return o;
}

Outcome sweep_shape() {
  Outcome o;
  auto corpus = generate_corpus(800, 9);
  auto vocab = train_corpus_vocab(corpus, 300);
  SweepGrid grid;  // default grid, one fraction
  auto first = run_sweep(grid, corpus, vocab, 9, jobs());
  std::size_t weighted = 0, baseline = 0;
  for (const auto& t : first) {
    (t.config.keyword_set == "none" ? baseline : weighted) += 1;
    o.require(t.fold_scores.size() == 4 || t.failed, "trial without 4 fold scores");
  }
  o.require(weighted == 12 && baseline == 4,
            "got " + std::to_string(weighted) + " weighted + " + std::to_string(baseline) + " baseline trials");
  auto second = run_sweep(grid, corpus, vocab, 9, 1);
  bool same = first.size() == second.size();
  for (std::size_t i = 0; same && i < first.size(); ++i) {
    same = first[i].config.keyword_set == second[i].config.keyword_set &&
           first[i].config.gamma == second[i].config.gamma &&
           first[i].grid_learning_rate == second[i].grid_learning_rate && first[i].combined == second[i].combined;
  }
  o.require(same, "ranking changed between reruns");
  if (o.pass) o.detail = "12 weighted + 4 baseline trials, 4 folds each, identical ranking on rerun";
  return o;
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {"lexicon_fidelity", 1, lexicon_fidelity},
      {"gamma_one_reduction", 30, gamma_one_reduction},
      {"gradient_check", 30, gradient_check},
      {"span_oracle", 30, span_oracle},
      {"lambda_bookkeeping", 30, lambda_bookkeeping},
      {"f1_engine", 1, f1_engine},
      {"extractor_round_trip", 10, extractor_round_trip},
      {"directional_replication", 600, directional_replication},
      {"relative_gain", 1, relative_gain_arithmetic},
      {"sweep_shape", 300, sweep_shape},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else if (a == "--list") {
      for (const auto& c : criteria()) std::printf("%s\n", c.name);
      return 0;
    } else {
      std::fprintf(stderr, "usage: acceptance [--list] [--only NAME]\n");
      return 1;
    }
  }

  int failures = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && only != c.name) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && secs > c.budget_s) {
      o.pass = false;
      o.detail += "; exceeded time budget of " + fmt("%.0f", c.budget_s) + " s";
    }
    failures += !o.pass;
    std::printf("%s %s (%s; %.2f s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
