#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "chdzdt/adam.hpp"
#include "chdzdt/error.hpp"
#include "chdzdt/pretrain.hpp"
#include "chdzdt/toydata.hpp"

namespace chdzdt {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<const CharVocab> vocab() {
  static auto v = std::make_shared<const CharVocab>(CharVocab::default_vocab());
  return v;
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.n_blocks = 1;
  c.n_heads = 2;
  c.hidden = 8;
  c.vocab_size = vocab()->size();
  c.dropout = 0.1;
  return c;
}

Lexicon small_lexicon(std::size_t n = 60) {
  auto lex = toy::trilingual_lexicon(5, 500);
  lex.resize(std::min(n, lex.size()));
  return lex;
}

bool same_params(const Encoder<float>& a, const Encoder<float>& b) {
  const auto& pa = a.named_parameters();
  const auto& pb = b.named_parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].second.size() != pb[i].second.size()) return false;
    if (std::memcmp(pa[i].second.data().data(), pb[i].second.data().data(),
                    pa[i].second.size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

TEST(TrainConfig, ValidationAndJson) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(TrainConfig::from_json(c.to_json()), c);
  c.mask_ratio = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(TrainConfig::from_json(nlohmann::json{{"epoch", 3}}), ConfigError);
}

TEST(MaskCount, CeilingWithMinimumOne) {
  EXPECT_EQ(mask_count(1, 0.15), 1u);
  EXPECT_EQ(mask_count(1, 0.9), 1u);
  EXPECT_EQ(mask_count(10, 0.15), 2u);
  EXPECT_EQ(mask_count(20, 0.15), 3u);
  EXPECT_EQ(mask_count(3, 0.5), 2u);
}

TEST(MaskBatch, RecordsOriginalsAndLabels) {
  std::vector<TrainExample> ex{{"a", vocab()->encode_word("a"), bit(Lang::FR)},
                               {"abcdefghij", vocab()->encode_word("abcdefghij"),
                                static_cast<LabelSet>(bit(Lang::AR) | bit(Lang::DZ))}};
  Rng rng(1);
  auto mb = mask_batch(ex, 0.15, rng);
  ASSERT_EQ(mb.mask_offsets, (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(mb.mask_rows[0], 1u);
  EXPECT_EQ(mb.original_ids[0], vocab()->id_of('a'));
  EXPECT_EQ(mb.batch.ids[1], kMask);
  for (std::size_t k = 1; k < 3; ++k) {
    const std::size_t row = mb.mask_rows[k];
    EXPECT_EQ(row / 21, 1u);
    EXPECT_EQ(mb.batch.ids[row], kMask);
    EXPECT_EQ(mb.original_ids[k], ex[1].tokens.ids[row % 21]);
  }
  EXPECT_EQ(mb.targets, (std::vector<float>{0, 0, 0, 0, 1, 1, 0, 1, 0, 0}));
}

TEST(MaskBatch, NeverTouchesClsOrPad) {
  Rng words_rng(3), rng(4);
  const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<TrainExample> ex;
    const std::size_t b = 1 + uniform_index(words_rng, 4);
    for (std::size_t i = 0; i < b; ++i) {
      std::string w;
      const std::size_t len = 1 + uniform_index(words_rng, 25);
      for (std::size_t k = 0; k < len; ++k) w += letters[uniform_index(words_rng, letters.size())];
      ex.push_back({w, vocab()->encode_word(w), bit(Lang::DZ)});
    }
    auto mb = mask_batch(ex, 0.15, rng);
    for (std::size_t e = 0; e < b; ++e) {
      ASSERT_GE(mb.mask_offsets[e + 1] - mb.mask_offsets[e], 1u);
      for (std::size_t k = mb.mask_offsets[e]; k < mb.mask_offsets[e + 1]; ++k) {
        const std::size_t pos = mb.mask_rows[k] % 21;
        ASSERT_EQ(mb.mask_rows[k] / 21, e);
        ASSERT_GE(pos, 1u);
        ASSERT_LE(pos, ex[e].tokens.char_count());
      }
    }
  }
}

TEST(MaskBatch, FractionMatchesCeilingRule) {
  // With the ceiling rule the expected fraction for a length-L word is
  // ceil(ratio*L)/L, which is at least the ratio.
  Rng words_rng(8), rng(9);
  std::size_t masked = 0, chars = 0;
  double expected = 0;
  std::size_t n = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t len = 7 + uniform_index(words_rng, 14);
    std::string w(len, 'a');
    for (std::size_t k = 0; k < len; ++k) w[k] = static_cast<char>('a' + uniform_index(words_rng, 26));
    std::vector<TrainExample> ex{{w, vocab()->encode_word(w), bit(Lang::FR)}};
    auto mb = mask_batch(ex, 0.15, rng);
    masked += mb.mask_rows.size();
    chars += len;
    expected += static_cast<double>(mask_count(len, 0.15));
    ++n;
  }
  const double fraction = static_cast<double>(masked) / static_cast<double>(chars);
  EXPECT_NEAR(fraction, expected / static_cast<double>(chars), 0.02);
  EXPECT_GE(fraction, 0.15);
}

TEST(MaskBatch, DeterministicUnderSeed) {
  auto lex = small_lexicon();
  auto ex = make_examples(lex, *vocab(), 20);
  Rng a(77), b(77);
  auto ma = mask_batch(ex, 0.3, a);
  auto mbb = mask_batch(ex, 0.3, b);
  EXPECT_EQ(ma.mask_rows, mbb.mask_rows);
  EXPECT_EQ(ma.batch.ids, mbb.batch.ids);
}

TEST(Train, FrozenBatchLossDecreasesForTenSteps) {
  auto c = tiny_model();
  c.dropout = 0.0;
  Encoder<float> m(c, vocab());
  auto ex = make_examples(small_lexicon(16), *vocab(), 20);
  Rng rng(42);
  const auto mb = mask_batch(ex, 0.15, rng);
  Adam<float> opt(m.parameters(), AdamConfig{.lr = 1e-4});
  double previous = INFINITY;
  for (int step = 0; step < 10; ++step) {
    ad::Tape<float> tape;
    ad::TapeScope<float> scope(tape);
    auto out = m.forward(mb.batch);
    auto loss = loss_total(m.loss_mlm(out, mb.mask_rows, mb.original_ids),
                           m.loss_multilabel(out, mb.targets));
    EXPECT_LT(loss.item(), previous) << "step " << step;
    previous = loss.item();
    tape.backward(loss);
    opt.step();
  }
}

TEST(Train, ZeroEpochsLeavesInitialization) {
  TrainConfig tc;
  tc.epochs = 0;
  auto r = train(small_lexicon(), tiny_model(), vocab(), tc);
  EXPECT_TRUE(same_params(r.model, Encoder<float>(tiny_model(), vocab())));
  EXPECT_TRUE(r.log.steps.empty());
}

TEST(Train, StepCountAndLogShape) {
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 16;
  tc.log_every = 2;
  auto r = train(small_lexicon(60), tiny_model(), vocab(), tc);
  ASSERT_EQ(r.log.steps.size(), 2u * 4u);
  ASSERT_EQ(r.log.epochs.size(), 2u);
  for (std::size_t i = 1; i < r.log.steps.size(); ++i) {
    EXPECT_GT(r.log.steps[i].step, r.log.steps[i - 1].step);
  }
  for (const auto& s : r.log.steps) EXPECT_NEAR(s.total, s.mlm + s.multilabel, 1e-5);
  const auto text = r.log.to_jsonl(2, false);
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  EXPECT_EQ(lines, 2u + 1u + 4u);  // epochs, step 1, steps 2/4/6/8
  EXPECT_EQ(text.find("samples_per_sec"), std::string::npos);
}

TEST(Train, IdenticalSeedsGiveIdenticalRuns) {
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  auto a = train(small_lexicon(), tiny_model(), vocab(), tc);
  auto b = train(small_lexicon(), tiny_model(), vocab(), tc);
  EXPECT_TRUE(same_params(a.model, b.model));
  EXPECT_EQ(a.log.to_jsonl(1, false), b.log.to_jsonl(1, false));
  tc.seed = 43;
  auto c = train(small_lexicon(), tiny_model(), vocab(), tc);
  EXPECT_FALSE(same_params(a.model, c.model));
}

TEST(Train, OverfitsSmallLexicon) {
  auto c = tiny_model();
  c.n_blocks = 2;
  c.hidden = 16;
  c.dropout = 0.0;
  c.init_scheme = "fan_in";
  TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 4;
  tc.lr = 2e-3;
  auto r = train(small_lexicon(200), c, vocab(), tc);
  EXPECT_LT(r.log.epochs.back().total, 0.1 * r.log.steps.front().total);
}

TEST(Train, NonFiniteLossAbortsWithDiagnostic) {
  auto lex = small_lexicon(10);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 4;
  Encoder<float> m(tiny_model(), vocab());
  m.param("label.bias").data()[0] = NAN;
  const auto path = fs::temp_directory_path() / "chdzdt_test_nan.chdz";
  save_checkpoint(m, path);
  try {
    resume(load_checkpoint(path), lex, tc);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step 1"), std::string::npos) << msg;
    bool names_word = false;
    for (const auto& entry : lex) names_word |= msg.find(entry.word) != std::string::npos;
    EXPECT_TRUE(names_word) << msg;
  }
  fs::remove(path);
  EXPECT_THROW(train({}, tiny_model(), vocab(), tc), InputError);
}

TEST(Resume, ZeroLearningRateFreezesParameters) {
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  auto first = train(small_lexicon(), tiny_model(), vocab(), tc);
  const auto path = fs::temp_directory_path() / "chdzdt_test_resume.chdz";
  save_checkpoint(first.model, path, first.meta(tc));
  auto loaded = load_checkpoint(path, tiny_model());
  tc.lr = 0.0;
  auto second = resume(loaded, small_lexicon(), tc);
  EXPECT_TRUE(same_params(second.model, loaded.model));
  EXPECT_EQ(second.segment, 1u);
  ASSERT_FALSE(second.log.steps.empty());
  EXPECT_EQ(second.log.steps.front().step, 1u);
  EXPECT_EQ(second.log.steps.front().segment, 1u);
  fs::remove(path);
}

TEST(Resume, DeterministicAndRejectsMismatch) {
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  auto first = train(small_lexicon(), tiny_model(), vocab(), tc);
  const auto path = fs::temp_directory_path() / "chdzdt_test_resume2.chdz";
  save_checkpoint(first.model, path, first.meta(tc));
  auto a = resume(load_checkpoint(path), small_lexicon(), tc);
  auto b = resume(load_checkpoint(path), small_lexicon(), tc);
  EXPECT_TRUE(same_params(a.model, b.model));
  auto other = tiny_model();
  other.hidden = 16;
  EXPECT_THROW(load_checkpoint(path, other), ConfigMismatchError);
  fs::remove(path);
}

TEST(Train, PeriodicCheckpointsWritten) {
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 16;
  tc.checkpoint_every = 1;
  const auto dir = fs::temp_directory_path() / "chdzdt_test_ckpts";
  fs::remove_all(dir);
  TrainHooks hooks;
  hooks.checkpoint_dir = dir;
  auto r = train(small_lexicon(), tiny_model(), vocab(), tc, hooks);
  EXPECT_TRUE(fs::exists(dir / "epoch_1.chdz"));
  ASSERT_TRUE(fs::exists(dir / "epoch_2.chdz"));
  auto last = load_checkpoint(dir / "epoch_2.chdz");
  EXPECT_TRUE(same_params(last.model, r.model));
  EXPECT_EQ(last.meta.at("epochs_done"), 2);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace chdzdt
