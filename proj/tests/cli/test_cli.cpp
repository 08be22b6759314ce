#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "chdzdt/encoder.hpp"
#include "chdzdt/eval/embedder.hpp"
#include "chdzdt/io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kData = CHDZDT_TEST_DATA;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CHDZDT_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("chdzdt_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run("toy-data --out " + (dir_ / "toy").string()).code, 0);
    const auto r = run("pretrain --lexicon " + p("toy/lexicon.tsv") +
                       " --epochs 1 --blocks 1 --hidden 8 --quiet --out " + p("model.chdz"));
    ASSERT_EQ(r.code, 0) << r.out;
  }

  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string p(const std::string& rel) { return (dir_ / rel).string(); }
  static json load(const std::string& rel) { return json::parse(chdzdt::io::read_file(dir_ / rel)); }

  static fs::path dir_;
};

fs::path Cli::dir_;

TEST_F(Cli, HelpAndUnknownFlags) {
  for (const char* sub : {"preprocess", "pretrain", "encode", "eval", "ablation", "toy-data"}) {
    const auto r = run(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--out"), std::string::npos) << sub;
  }
  EXPECT_EQ(run("encode --ckpt a --words b --out c --frobnicate").code, 1);
  EXPECT_EQ(run("").code, 1);
}

TEST_F(Cli, PreprocessMatchesGoldenAndIsRepeatable) {
  const auto args = "preprocess --in " + (kData / "raw").string() + " --labels " + (kData / "labels.tsv").string();
  ASSERT_EQ(run(args + " --out " + p("pre/a.tsv")).code, 0);
  ASSERT_EQ(run(args + " --out " + p("pre/b.tsv")).code, 0);
  const auto a = chdzdt::io::read_file(p("pre/a.tsv"));
  EXPECT_EQ(a, chdzdt::io::read_file(kData / "expected_lexicon.tsv"));
  EXPECT_EQ(a, chdzdt::io::read_file(p("pre/b.tsv")));
  EXPECT_EQ(chdzdt::io::read_file(p("pre/a.stats.json")), chdzdt::io::read_file(p("pre/b.stats.json")));

  const auto m = load("pre/a.manifest.json");
  EXPECT_EQ(m["subcommand"], "preprocess");
  EXPECT_EQ(m["seed"], 42);
  EXPECT_EQ(m["inputs"].size(), 4u);  // three sources and the label map
  EXPECT_EQ(m["inputs"][0]["sha256"].get<std::string>().size(), 64u);
}

TEST_F(Cli, PreprocessEmptyInputWritesNothing) {
  fs::create_directories(dir_ / "empty");
  const auto r = run("preprocess --in " + p("empty") + " --labels " + (kData / "labels.tsv").string() +
                     " --out " + p("pre/empty.tsv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(p("pre/empty.tsv")));
  EXPECT_FALSE(fs::exists(p("pre/empty.manifest.json")));
}

TEST_F(Cli, PretrainZeroEpochsIsInitAndSeedsRepeat) {
  const auto base = "pretrain --lexicon " + p("toy/lexicon.tsv") + " --blocks 1 --hidden 8 --quiet";
  ASSERT_EQ(run(base + " --epochs 0 --out " + p("init.chdz")).code, 0);
  const auto loaded = chdzdt::load_checkpoint(p("init.chdz"));
  const chdzdt::Encoder<float> fresh(loaded.model.config(), loaded.model.vocab_ptr());
  const auto& a = loaded.model.named_parameters();
  const auto& b = fresh.named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].second.size(), b[i].second.size());
    EXPECT_TRUE(std::equal(a[i].second.data().begin(), a[i].second.data().end(), b[i].second.data().begin()))
        << a[i].first;
  }

  ASSERT_EQ(run(base + " --epochs 1 --seed 7 --out " + p("s1.chdz")).code, 0);
  ASSERT_EQ(run(base + " --epochs 1 --seed 7 --out " + p("s2.chdz")).code, 0);
  EXPECT_EQ(chdzdt::io::read_file(p("s1.chdz")), chdzdt::io::read_file(p("s2.chdz")));
  EXPECT_EQ(load("s1.manifest.json")["seed"], 7);
  EXPECT_TRUE(fs::exists(p("s1.log.jsonl")));
}

TEST_F(Cli, PretrainRejectsBadConfig) {
  std::ofstream(p("bad_model.json")) << R"({"hiden": 8})";
  EXPECT_EQ(run("pretrain --lexicon " + p("toy/lexicon.tsv") + " --model-config " + p("bad_model.json") +
                " --out " + p("bad.chdz"))
                .code,
            1);
  EXPECT_EQ(run("pretrain --lexicon " + p("missing.tsv") + " --out " + p("bad.chdz")).code, 2);
  EXPECT_FALSE(fs::exists(p("bad.chdz")));
}

TEST_F(Cli, EncodeCountsAndSkips) {
  std::ofstream(p("words.txt")) << "kitab\n\ndzayer\n\xff\xfe\nwahran\n";
  const auto r = run("encode --ckpt " + p("model.chdz") + " --words " + p("words.txt") + " --out " + p("vecs.tsv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("skipped 1"), std::string::npos);
  const auto table = chdzdt::eval::TableEmbedder::load(p("vecs.tsv"));
  EXPECT_EQ(table.size(), 3u);
  EXPECT_EQ(table.dim(), 8u);

  std::ofstream(p("none.txt")) << "";
  ASSERT_EQ(run("encode --ckpt " + p("model.chdz") + " --words " + p("none.txt") + " --out " + p("none.tsv")).code, 0);
  EXPECT_EQ(chdzdt::io::read_file(p("none.tsv")), "#dim 8\n");
}

TEST_F(Cli, EncodedVectorsReproduceCheckpointMetrics) {
  std::string words;
  for (const auto& line : chdzdt::io::read_lines(p("toy/clusters.tsv"))) {
    for (const auto& w : chdzdt::io::split(line, '\t')) {
      if (!w.empty()) words += w + "\n";
    }
  }
  std::ofstream(p("cluster_words.txt")) << words;
  ASSERT_EQ(run("encode --ckpt " + p("model.chdz") + " --words " + p("cluster_words.txt") + " --out " +
                p("cluster_vecs.tsv"))
                .code,
            0);
  const auto data = " --task morph --data " + p("toy/clusters.tsv") + " --quiet";
  ASSERT_EQ(run("eval --embedder " + p("model.chdz") + data + " --out " + p("r/ckpt.json")).code, 0);
  ASSERT_EQ(run("eval --embedder " + p("cluster_vecs.tsv") + data + " --out " + p("r/tsv.json")).code, 0);
  EXPECT_EQ(load("r/ckpt.json")["report"], load("r/tsv.json")["report"]);
}

TEST_F(Cli, EvalTasksProduceSchemas) {
  const auto e = " --embedder " + p("model.chdz") + " --quiet";
  ASSERT_EQ(run("eval --task morph --data " + p("toy/clusters.tsv") + e + " --out " + p("r/morph.json")).code, 0);
  const auto morph = load("r/morph.json")["report"];
  for (const char* k : {"acs", "aed", "silhouette", "ari"}) EXPECT_TRUE(morph.contains(k)) << k;

  ASSERT_EQ(run("eval --task probe --epochs 50 --data " + p("toy/affixes.tsv") + e + " --out " + p("r/probe.json")).code,
            0);
  EXPECT_TRUE(load("r/probe.json")["report"]["macro"].contains("f1"));

  ASSERT_EQ(run("eval --task compose --kinds add,mpadd --epochs 20 --data " + p("toy/composition.tsv") + e +
                " --out " + p("r/compose.json"))
                .code,
            0);
  EXPECT_EQ(load("r/compose.json")["report"]["models"].size(), 2u);

  ASSERT_EQ(run("eval --task noise --data " + p("toy/noise.star") + " " + p("toy/noise.hash") + e + " --out " +
                p("r/noise.json"))
                .code,
            0);
  EXPECT_EQ(load("r/noise.json")["report"]["tuples"].size(), 2u);
}

TEST_F(Cli, FinetuneWritesCheckpointAndRejectsTables) {
  const auto small = " --epochs 1 --gru-hidden 4 --dense 8 --quiet --data " + p("toy/pos.tsv");
  ASSERT_EQ(run("eval --task pos --mode finetune --embedder " + p("model.chdz") + small + " --out " + p("ft/pos.json"))
                .code,
            0);
  EXPECT_NO_THROW(chdzdt::load_checkpoint(p("ft/pos.finetuned.chdz")));
  EXPECT_EQ(load("ft/pos.json")["mode"], "finetune");

  ASSERT_TRUE(fs::exists(p("vecs.tsv")) || run("encode --ckpt " + p("model.chdz") + " --words " +
                                                p("toy/lexicon.tsv") + " --out " + p("vecs.tsv")).code == 0);
  const auto r = run("eval --task pos --mode finetune --embedder " + p("vecs.tsv") + small + " --out " + p("ft/x.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("frozen"), std::string::npos);
  EXPECT_FALSE(fs::exists(p("ft/x.json")));
}

TEST_F(Cli, EvalUsageErrors) {
  const auto e = " --embedder " + p("model.chdz") + " --out " + p("r/u.json");
  EXPECT_EQ(run("eval --task morph --data " + p("toy/clusters.tsv") + " " + p("toy/pos.tsv") + e).code, 1);
  EXPECT_EQ(run("eval --task probe --gru-hidden 3 --data " + p("toy/affixes.tsv") + e).code, 1);
  EXPECT_EQ(run("eval --task morph --mode finetune --data " + p("toy/clusters.tsv") + e).code, 1);
  EXPECT_EQ(run("eval --task lemma --data " + p("toy/clusters.tsv") + e).code, 1);
  EXPECT_EQ(run("eval --task morph --data " + p("toy/pos.tsv") + e).code, 2);
}

TEST_F(Cli, AblationTwoVariantsAndPartialFailure) {
  std::ofstream(p("grid.json")) << R"([{"n_blocks": 1, "hidden": 8}, {"n_blocks": 1, "hidden": 8, "n_heads": 4}])";
  const auto base = "ablation --lexicon " + p("toy/lexicon.tsv") + " --epochs 1 --clusters " + p("toy/clusters.tsv") +
                    " --quiet --no-timing";
  ASSERT_EQ(run(base + " --grid " + p("grid.json") + " --out " + p("ab")).code, 0);
  EXPECT_TRUE(fs::exists(p("ab/1x2x8.chdz")));
  EXPECT_TRUE(fs::exists(p("ab/1x4x8.chdz")));
  EXPECT_TRUE(fs::exists(p("ab/ablation.csv")));
  EXPECT_TRUE(fs::exists(p("ab/manifest.json")));
  EXPECT_EQ(load("ab/ablation.json")["variants"].size(), 2u);

  ASSERT_EQ(run(base + " --grid " + p("grid.json") + " --out " + p("ab_again")).code, 0);
  EXPECT_EQ(chdzdt::io::read_file(p("ab/ablation.json")), chdzdt::io::read_file(p("ab_again/ablation.json")));

  const auto timed = run("ablation --lexicon " + p("toy/lexicon.tsv") + " --epochs 1 --clusters " +
                         p("toy/clusters.tsv") + " --quiet --grid " + p("grid.json") + " --out " + p("ab_timed"));
  ASSERT_EQ(timed.code, 0);
  EXPECT_GT(load("ab_timed/ablation.json")["variants"][0]["samples_per_sec"].get<double>(), 0);

  std::ofstream(p("bad_grid.json")) << R"([{"n_blocks": 1, "hidden": 8}, {"hidden": 8, "n_heads": 3}])";
  EXPECT_EQ(run(base + " --grid " + p("bad_grid.json") + " --out " + p("ab_bad")).code, 2);
  EXPECT_EQ(load("ab_bad/ablation.json")["variants"][1]["trained"], false);
  EXPECT_EQ(run(base + " --evals probe --out " + p("ab_nodata")).code, 1);
}

}  // namespace
