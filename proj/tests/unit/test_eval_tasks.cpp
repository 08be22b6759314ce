#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "chdzdt/error.hpp"
#include "chdzdt/eval/ablation.hpp"
#include "chdzdt/eval/compose.hpp"
#include "chdzdt/eval/downstream.hpp"
#include "chdzdt/eval/probe.hpp"
#include "chdzdt/eval/report.hpp"
#include "chdzdt/random.hpp"
#include "chdzdt/toydata.hpp"

namespace chdzdt::eval {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<const CharVocab> vocab() {
  static auto v = std::make_shared<const CharVocab>(CharVocab::default_vocab());
  return v;
}

// Hashed one-hots of the last three characters: enough to read any suffix.
FunctionEmbedder suffix_embedder() {
  return FunctionEmbedder(48, [](std::string_view w) {
    std::vector<double> v(48, 0.0);
    for (std::size_t k = 0; k < 3 && k < w.size(); ++k) {
      const auto c = static_cast<unsigned char>(w[w.size() - 1 - k]);
      v[k * 16 + c % 16] = 1;
    }
    return v;
  });
}

DecoderConfig small_decoder(std::size_t epochs) {
  DecoderConfig c;
  c.gru_hidden = 12;
  c.dense = 24;
  c.max_epochs = epochs;
  c.lr = 1e-2;
  c.batch_size = 16;
  c.stop_error = 0.01;
  return c;
}

// ---- probe ----

TEST(Prf, FromCounts) {
  const auto p = prf_from_counts(3, 1, 2);
  EXPECT_DOUBLE_EQ(p.precision, 0.75);
  EXPECT_DOUBLE_EQ(p.recall, 0.6);
  EXPECT_NEAR(p.f1, 2 * 0.75 * 0.6 / 1.35, 1e-12);
  const auto z = prf_from_counts(0, 0, 0);
  EXPECT_EQ(z.precision, 0);
  EXPECT_EQ(z.f1, 0);
}

TEST(StratifiedSplit, RareLabelSplitsThreeTwo) {
  std::vector<std::vector<std::size_t>> labels(100);
  for (std::size_t i = 0; i < 5; ++i) labels[i * 20].push_back(1);
  for (std::size_t i = 0; i < 100; ++i) labels[i].push_back(0);
  const auto s = stratified_split(labels, 2, 0.6, 3);
  std::size_t rare_train = 0;
  for (std::size_t i : s.train) rare_train += i % 20 == 0;
  EXPECT_EQ(rare_train, 3u);
  EXPECT_EQ(s.train.size() + s.test.size(), 100u);
  EXPECT_NEAR(static_cast<double>(s.train.size()), 60.0, 1.0);
}

TEST(StratifiedSplit, ProportionsDeterminismAndPartition) {
  Rng rng(5);
  std::vector<std::vector<std::size_t>> labels(300);
  for (auto& l : labels) {
    for (std::size_t a = 0; a < 4; ++a) {
      if (uniform01(rng) < 0.3) l.push_back(a);
    }
  }
  const auto s = stratified_split(labels, 4, 0.6, 11);
  const auto again = stratified_split(labels, 4, 0.6, 11);
  EXPECT_EQ(s.train, again.train);
  EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
  std::vector<int> seen(300, 0);
  for (std::size_t i : s.train) ++seen[i];
  for (std::size_t i : s.test) ++seen[i];
  for (int x : seen) EXPECT_EQ(x, 1);
  for (std::size_t a = 0; a < 4; ++a) {
    double total = 0, in_train = 0;
    for (std::size_t i = 0; i < 300; ++i) total += std::count(labels[i].begin(), labels[i].end(), a);
    for (std::size_t i : s.train) in_train += std::count(labels[i].begin(), labels[i].end(), a);
    EXPECT_NEAR(in_train, 0.6 * total, 1.5);
  }
}

Matrix to_matrix(const toy::ProbeFixture& f) {
  Matrix m(f.labels.size(), f.dim);
  m.data = f.points;
  return m;
}

TEST(Probe, SeparableFixtureReachesPerfectF1) {
  const auto f = toy::separable_affixes(200, 3, 5, 1);
  const auto r = probe_train(to_matrix(f), f.labels, {"a-", "-b", "-c"}, ProbeConfig{});
  ASSERT_EQ(r.affixes.size(), 3u);
  EXPECT_DOUBLE_EQ(r.macro.f1, 1.0);
  EXPECT_EQ(r.n_train + r.n_test, 200u);
}

TEST(Probe, RandomLabelsAreNearChance) {
  double f1 = 0;
  const int seeds = 6;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(100 + s);
    Matrix x(400, 8);
    for (auto& v : x.data) v = normal(rng);
    std::vector<std::vector<std::uint8_t>> y(400, std::vector<std::uint8_t>(4));
    for (auto& row : y) {
      for (auto& b : row) b = uniform01(rng) < 0.5;
    }
    ProbeConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    f1 += probe_train(x, y, {"a", "b", "c", "d"}, cfg).macro.f1;
  }
  EXPECT_NEAR(f1 / seeds, 0.5, 0.06);
}

TEST(Probe, AffixMissingFromTrainingIsExcluded) {
  Matrix x(6, 2);
  for (std::size_t i = 0; i < 6; ++i) x.row(i)[0] = static_cast<double>(i);
  std::vector<std::vector<std::uint8_t>> y = {{1, 0}, {0, 0}, {1, 0}, {0, 1}, {1, 0}, {0, 0}};
  const Split split{{0, 1, 2}, {3, 4, 5}};
  const auto r = probe_train(x, y, {"p", "q"}, ProbeConfig{}, &split);
  EXPECT_FALSE(r.affixes[0].excluded);
  EXPECT_TRUE(r.affixes[1].excluded);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Probe, AffixesSortedFromRows) {
  const auto e = suffix_embedder();
  std::vector<AffixRow> rows;
  for (int i = 0; i < 30; ++i) {
    rows.push_back({"word" + std::to_string(i) + "ek", {"-ek"}});
    rows.push_back({"word" + std::to_string(i) + "ou", {"-ou"}});
  }
  const auto r = probe_affixes(e, rows, ProbeConfig{});
  ASSERT_EQ(r.affixes.size(), 2u);
  EXPECT_EQ(r.affixes[0].affix, "-ek");
  EXPECT_GT(r.macro.f1, 0.95);
}

// ---- composition ----

std::vector<double> random_vec(Rng& rng, std::size_t d, double offset = 0) {
  std::vector<double> v(d);
  for (auto& x : v) x = offset + normal(rng);
  return v;
}

TEST(Compose, AddWithMissingPartsReturnsRoot) {
  Rng rng(1);
  Triple t;
  t.r = random_vec(rng, 6);
  t.w = t.r;
  CompositionModel m;
  m.kind = CompositionKind::kAdd;
  m.dim = 6;
  EXPECT_EQ(m.apply(t), t.r);
  t.p.assign(6, 0.0);
  t.s.assign(6, 0.0);
  t.has_p = t.has_s = true;
  EXPECT_EQ(m.apply(t), t.r);
  m.kind = CompositionKind::kMul;
  t.has_p = t.has_s = false;
  EXPECT_EQ(m.apply(t), t.r);
}

std::vector<Triple> synthetic(std::size_t n, std::size_t d, std::uint64_t seed,
                              const std::function<std::vector<double>(const Triple&)>& target,
                              double offset = 0) {
  Rng rng(seed);
  std::vector<Triple> out;
  for (std::size_t i = 0; i < n; ++i) {
    Triple t;
    t.p = random_vec(rng, d, offset);
    t.r = random_vec(rng, d, offset);
    t.s = random_vec(rng, d, offset);
    t.has_p = t.has_s = true;
    t.w = target(t);
    out.push_back(std::move(t));
  }
  return out;
}

TEST(Compose, PerfectReconstructionScoresOneAndZero) {
  auto data = synthetic(20, 4, 2, [](const Triple& t) {
    std::vector<double> w(t.r.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = t.p[i] + t.r[i] + t.s[i];
    return w;
  });
  const auto m = compose_fit(CompositionKind::kAdd, data);
  const auto e = compose_eval(m, data);
  EXPECT_NEAR(e.acs, 1.0, 1e-12);
  EXPECT_NEAR(e.aed, 0.0, 1e-12);
}

TEST(Compose, WeightedAddRecoversWeights) {
  auto data = synthetic(60, 6, 3, [](const Triple& t) {
    std::vector<double> w(t.r.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * t.p[i] + 2.0 * t.r[i] - 0.5 * t.s[i];
    return w;
  });
  ComposeConfig cfg;
  cfg.epochs = 1500;
  cfg.lr = 2e-2;
  const auto m = compose_fit(CompositionKind::kWAdd, data, cfg);
  EXPECT_NEAR(m.alpha, 0.5, 0.05);
  EXPECT_NEAR(m.beta, 2.0, 0.05);
  EXPECT_NEAR(m.gamma, -0.5, 0.05);
  EXPECT_GT(compose_eval(m, data).acs, 0.99);
}

TEST(Compose, MpCncLearnsRootProjection) {
  auto data = synthetic(80, 4, 4, [](const Triple& t) { return t.r; });
  ComposeConfig cfg;
  cfg.epochs = 800;
  const auto m = compose_fit(CompositionKind::kMpCnc, data, cfg);
  const auto e = compose_eval(m, data);
  EXPECT_GT(e.acs, 0.99);
  ASSERT_EQ(e.frobenius.size(), 3u);
  EXPECT_LT(e.frobenius[0], e.frobenius[1]);
  EXPECT_LT(e.frobenius[2], e.frobenius[1]);
}

TEST(Compose, FrobeniusOfIdentityAndBlocks) {
  Matrix id(32, 32);
  for (std::size_t i = 0; i < 32; ++i) id.row(i)[i] = 1;
  EXPECT_NEAR(frobenius(id, 0, 32), std::sqrt(32.0), 1e-12);
  Rng rng(5);
  Matrix w(4, 12);
  for (auto& x : w.data) x = normal(rng);
  const double whole = frobenius(w, 0, 12);
  const double a = frobenius(w, 0, 4), b = frobenius(w, 4, 8), c = frobenius(w, 8, 12);
  EXPECT_NEAR(whole * whole, a * a + b * b + c * c, 1e-9);
}

TEST(Compose, WMulShiftHandlesNonPositiveComponents) {
  auto data = synthetic(40, 4, 6, [](const Triple& t) {
    std::vector<double> w(t.r.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = t.p[i] * t.r[i] * t.s[i];
    return w;
  });
  ComposeConfig cfg;
  cfg.wmul_shift = false;
  EXPECT_THROW(compose_fit(CompositionKind::kWMul, data, cfg), InputError);
  cfg.wmul_shift = true;
  const auto m = compose_fit(CompositionKind::kWMul, data, cfg);
  EXPECT_GT(m.shift, 0);
  for (const auto& t : data) {
    for (double x : m.apply(t)) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(Compose, WMulRecoversExponentsOnPositiveData) {
  auto data = synthetic(
      60, 4, 7,
      [](const Triple& t) {
        std::vector<double> w(t.r.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
          w[i] = std::pow(t.p[i], 0.5) * std::pow(t.r[i], 1.5) * std::pow(t.s[i], 0.5);
        }
        return w;
      },
      6.0);
  for (auto& t : data) {
    for (auto* v : {&t.p, &t.r, &t.s}) {
      for (auto& x : *v) x = std::max(x, 0.5);
    }
    for (std::size_t i = 0; i < t.w.size(); ++i) {
      t.w[i] = std::pow(t.p[i], 0.5) * std::pow(t.r[i], 1.5) * std::pow(t.s[i], 0.5);
    }
  }
  ComposeConfig cfg;
  cfg.epochs = 2000;
  const auto m = compose_fit(CompositionKind::kWMul, data, cfg);
  EXPECT_EQ(m.shift, 0);
  EXPECT_GT(compose_eval(m, data).acs, 0.99);
}

TEST(Compose, ZeroTargetsSkippedWithWarning) {
  Triple t;
  t.r = {1, 0};
  t.w = {0, 0};
  CompositionModel m;
  m.dim = 2;
  Triple ok;
  ok.r = {1, 1};
  ok.w = {1, 1};
  const auto e = compose_eval(m, {t, ok});
  EXPECT_EQ(e.skipped, 1u);
  EXPECT_EQ(e.n, 1u);
  EXPECT_THROW(compose_eval(m, {t}), InputError);
  EXPECT_FALSE(e.warnings.empty());
}

TEST(Compose, FileFormatRoundTrip) {
  const auto rows = parse_composition("unhappy\tun\thappy\t\nwalked\t\twalk\ted\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].suffix, "");
  EXPECT_EQ(rows[1].prefix, "");
  EXPECT_EQ(parse_composition(format_composition(rows))[1].suffix, "ed");
  EXPECT_THROW(parse_composition("a\tb\n"), InputError);
  EXPECT_EQ(parse_composition_kind("mpcnc"), CompositionKind::kMpCnc);
  EXPECT_EQ(all_composition_kinds().size(), 6u);
}

// ---- downstream ----

TEST(Downstream, PosTaggerReadsSuffixes) {
  const auto e = suffix_embedder();
  const auto data = toy::suffix_pos(150, 3);
  const auto split = holdout(data.size(), 0.8, 1);
  const auto r = pos_tagger({&e, nullptr}, select(data, split.train), select(data, split.test),
                            TrainMode::kFrozen, small_decoder(30));
  EXPECT_GT(r.accuracy, 0.95);
  EXPECT_EQ(r.tags.size(), 3u);
  const auto& loss = r.trace.epoch_loss;
  ASSERT_GE(loss.size(), 2u);
  EXPECT_LT(loss.back(), loss.front());
}

TEST(Downstream, SentimentMarkersAreLearned) {
  // One-hot per distinct word.
  auto ids = std::make_shared<std::map<std::string, std::size_t, std::less<>>>();
  FunctionEmbedder one_hot(64, [ids](std::string_view w) {
    auto it = ids->find(w);
    if (it == ids->end()) it = ids->emplace(std::string(w), ids->size()).first;
    std::vector<double> v(64, 0.0);
    v.at(it->second) = 1;
    return v;
  });
  const auto data = toy::marker_sentiment(240, 4);
  const auto split = holdout(data.size(), 0.75, 2);
  auto cfg = small_decoder(40);
  cfg.max_words = 30;
  const auto r = sentiment_classifier({&one_hot, nullptr}, select(data, split.train),
                                      select(data, split.test), TrainMode::kFrozen, cfg);
  EXPECT_GT(r.accuracy, 0.9);
  EXPECT_EQ(r.classes.size(), 3u);
  std::size_t total = 0;
  for (const auto& [_, n] : r.test_distribution) total += n;
  EXPECT_EQ(total, split.test.size());
}

TEST(Downstream, Truncation) {
  FunctionEmbedder ones(4, [](std::string_view) { return std::vector<double>(4, 1.0); });
  TaggedSentence long_sentence;
  for (int i = 0; i < 70; ++i) long_sentence.tokens.emplace_back("w", i % 2 ? "A" : "B");
  const auto pos = pos_tagger({&ones, nullptr}, {long_sentence}, {long_sentence}, TrainMode::kFrozen,
                              small_decoder(1));
  EXPECT_EQ(pos.n_test_tokens, 60u);

  std::string text;
  for (int i = 0; i < 40; ++i) text += (i ? " w" : "w");
  auto cfg = small_decoder(1);
  cfg.max_words = 30;
  const auto sa = sentiment_classifier({&ones, nullptr}, {{"positive", text}}, {{"negative", text}},
                                       TrainMode::kFrozen, cfg);
  EXPECT_EQ(sa.n_test_words, 30u);
  EXPECT_THROW(sentiment_classifier({&ones, nullptr}, {{"great", "w"}}, {}, TrainMode::kFrozen, cfg),
               InputError);
}

TEST(Downstream, MorphTaggerHandlesBinaryMultiClassAndNa) {
  const auto e = suffix_embedder();
  Rng rng(8);
  std::vector<MorphRow> rows;
  const std::vector<std::string> stems = {"kat", "dar", "mal", "sor", "bin", "fel", "jor", "nuk"};
  for (int i = 0; i < 160; ++i) {
    const auto& stem = stems[uniform_index(rng, stems.size())];
    MorphRow r;
    const int kind = static_cast<int>(uniform_index(rng, 3));
    r.word = stem + std::to_string(i % 10) + (kind == 0 ? "ek" : kind == 1 ? "ou" : "at");
    r.features["Plural"] = kind == 2 ? "yes" : "no";
    if (kind != 2) r.features["Person"] = kind == 0 ? "1" : "3";  // NA for -at
    rows.push_back(r);
  }
  const auto split = holdout(rows.size(), 0.75, 3);
  const auto r = morph_tagger({&e, nullptr}, select(rows, split.train), select(rows, split.test),
                              TrainMode::kFrozen, small_decoder(40));
  ASSERT_EQ(r.features.size(), 2u);
  for (const auto& f : r.features) {
    EXPECT_GT(f.accuracy, 0.95) << f.feature;
    EXPECT_LE(f.majority_rate, 1.0);
  }
  const auto& person = r.features[0].feature == "Person" ? r.features[0] : r.features[1];
  EXPECT_EQ(person.n_classes, 3u);  // 1, 3, NA
  const auto& plural = r.features[0].feature == "Plural" ? r.features[0] : r.features[1];
  EXPECT_TRUE(plural.binary);
  EXPECT_NEAR(r.overall, (r.features[0].accuracy + r.features[1].accuracy) / 2, 1e-12);
}

TEST(Downstream, FinetuneNeedsEncoderAndLeavesOriginalUntouched) {
  const auto e = suffix_embedder();
  const auto data = toy::suffix_pos(12, 5, 3, 4);
  EXPECT_THROW(pos_tagger({&e, nullptr}, data, data, TrainMode::kFinetune, small_decoder(1)),
               ContractError);

  ModelConfig c;
  c.n_blocks = 1;
  c.hidden = 8;
  c.vocab_size = vocab()->size();
  c.dropout = 0;
  auto model = std::make_shared<const Encoder<float>>(c, vocab());
  const auto before = model->word_embedding("kitab");
  const auto r = pos_tagger({nullptr, model}, data, data, TrainMode::kFinetune, small_decoder(2));
  ASSERT_NE(r.tuned, nullptr);
  EXPECT_EQ(model->word_embedding("kitab"), before);
  EXPECT_NE(r.tuned->word_embedding("kitab"), before);
}

TEST(Downstream, EarlyStopOnLowLoss) {
  FunctionEmbedder ones(4, [](std::string_view) { return std::vector<double>(4, 1.0); });
  std::vector<TaggedSentence> data(8);
  for (auto& s : data) s.tokens = {{"w", "X"}, {"w", "X"}};
  auto cfg = small_decoder(50);
  cfg.stop_error = 0.1;
  const auto r = pos_tagger({&ones, nullptr}, data, data, TrainMode::kFrozen, cfg);
  EXPECT_TRUE(r.trace.early_stopped);
  EXPECT_LT(r.trace.epoch_loss.size(), 50u);
  EXPECT_LT(r.trace.epoch_loss.back(), 0.1);
}

// ---- ablation ----

TEST(Ablation, GridParameterCounts) {
  ModelConfig base;
  base.vocab_size = vocab()->size();
  const auto grid = default_grid(base);
  ASSERT_EQ(grid.size(), 7u);
  auto params = [&](std::size_t n, std::size_t h, std::size_t d) {
    for (const auto& c : grid) {
      if (c.n_blocks == n && c.n_heads == h && c.hidden == d) return count_params(c);
    }
    ADD_FAILURE() << "missing variant";
    return std::size_t{0};
  };
  EXPECT_EQ(params(2, 1, 16), params(2, 2, 16));
  EXPECT_EQ(params(2, 2, 16), params(2, 4, 16));
  EXPECT_LT(params(2, 2, 8), params(2, 2, 16));
  EXPECT_LT(params(2, 2, 16), params(2, 2, 32));
  EXPECT_LT(params(1, 2, 16), params(2, 2, 16));
  EXPECT_LT(params(2, 2, 16), params(3, 2, 16));
}

TEST(Ablation, ParseGridMergesOverBase) {
  ModelConfig base;
  base.vocab_size = 99;
  const auto g = parse_grid(nlohmann::json::parse(R"([{"hidden": 8}, {"n_blocks": 3}])"), base);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].hidden, 8u);
  EXPECT_EQ(g[0].vocab_size, 99u);
  const auto g2 = parse_grid(
      nlohmann::json::parse(R"({"base": {"n_heads": 4}, "variants": [{"hidden": 32}]})"), base);
  EXPECT_EQ(g2[0].n_heads, 4u);
  EXPECT_THROW(parse_grid(nlohmann::json::parse(R"([{"hiden": 8}])"), base), ConfigError);
}

TEST(Ablation, FailingVariantIsIsolated) {
  ModelConfig good;
  good.n_blocks = 1;
  good.hidden = 8;
  good.vocab_size = vocab()->size();
  ModelConfig bad = good;
  bad.n_heads = 3;  // 8 is not divisible by 3
  auto lex = toy::trilingual_lexicon(1, 500);
  lex.resize(40);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  EvalBundle bundle;
  const auto lang = toy::RootAffixLanguage::generate(5, 3, 1);
  bundle.clusters = toy::root_clusters(lang);
  const auto out = fs::temp_directory_path() / "chdzdt_ablation_test";
  fs::remove_all(out);
  AblationHooks hooks;
  hooks.out_dir = out;
  const auto r = ablation_sweep({good, bad}, lex, vocab(), tc, {"morph"}, bundle, hooks);
  ASSERT_EQ(r.variants.size(), 2u);
  EXPECT_TRUE(r.variants[0].trained);
  EXPECT_FALSE(r.variants[1].trained);
  EXPECT_FALSE(r.variants[1].error.empty());
  EXPECT_FALSE(r.all_ok());
  EXPECT_TRUE(fs::exists(out / (good.name() + ".chdz")));
  EXPECT_TRUE(fs::exists(out / (good.name() + ".log.jsonl")));
  // Every metric column is either filled or marked failed, for every variant.
  for (const auto& v : r.variants) {
    for (const auto& m : r.metrics) EXPECT_TRUE(v.metrics.count(m) + v.failed.count(m) == 1) << m;
  }
  const auto j = r.to_json(false);
  EXPECT_EQ(j["variants"].size(), 2u);
  EXPECT_NE(r.to_csv(false).find(good.name()), std::string::npos);
  EXPECT_NE(r.to_table().find("FAILED"), std::string::npos);
}

TEST(Report, TableFlattensNestedReports) {
  ClusterReport c;
  c.acs = 0.5;
  c.n_clusters = 3;
  const auto t = format_table(to_json(c));
  EXPECT_NE(t.find("acs"), std::string::npos);
  EXPECT_NE(t.find("0.5000"), std::string::npos);
  ProbeReport p;
  AffixScore a;
  a.affix = "-ek";
  p.affixes.push_back(a);
  EXPECT_NE(format_table(to_json(p)).find("affixes[-ek].f1"), std::string::npos);
}

}  // namespace
}  // namespace chdzdt::eval
