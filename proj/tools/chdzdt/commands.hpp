#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chdzdt::cli {

namespace fs = std::filesystem;

// Bad flag combinations; exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PreprocessOptions {
  fs::path in;
  fs::path labels;
  std::optional<fs::path> rules;
  std::optional<fs::path> vocab;
  fs::path out;
  std::size_t max_len = 30;
};

struct PretrainOptions {
  fs::path lexicon;
  std::optional<fs::path> model_config, train_config, vocab, resume;
  fs::path out;
  std::optional<std::size_t> epochs, batch_size, log_every, checkpoint_every, warmup_steps;
  std::optional<std::size_t> blocks, heads, hidden, max_chars;
  std::optional<double> lr, mask_ratio, dropout;
  std::optional<std::string> init;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct EncodeOptions {
  fs::path ckpt;
  std::string words;  // path or "-" for stdin
  fs::path out;
};

struct EvalOptions {
  std::string task;
  fs::path embedder;  // .chdz checkpoint or embedding TSV
  std::vector<fs::path> data;
  std::string mode = "frozen";
  fs::path out;
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<double> train_fraction, lr;
  std::optional<std::size_t> epochs, gru_hidden, dense, max_words, batch_size;
  std::vector<std::string> kinds;  // compose only
  std::optional<std::string> objective;
  bool quiet = false;
};

struct AblationOptions {
  std::optional<fs::path> grid;
  fs::path lexicon;
  std::optional<fs::path> model_config, train_config, vocab, config;
  std::vector<std::string> evals;
  fs::path out;
  std::optional<fs::path> clusters, noise_clusters, affixes;
  std::vector<fs::path> noise, pos, sa;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  bool no_timing = false;
  bool quiet = false;
};

struct ToyDataOptions {
  fs::path out;
  std::uint64_t seed = 42;
  std::size_t words = 500;
};

// Each returns the process exit code; failures throw.
int run_preprocess(const PreprocessOptions& o);
int run_pretrain(const PretrainOptions& o);
int run_encode(const EncodeOptions& o);
int run_eval(const EvalOptions& o);
int run_ablation(const AblationOptions& o);
int run_toy_data(const ToyDataOptions& o);

const std::vector<std::string>& eval_tasks();

}  // namespace chdzdt::cli
