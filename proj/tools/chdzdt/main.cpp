#include <iostream>

#include <CLI11.hpp>

#include "chdzdt/error.hpp"
#include "commands.hpp"

namespace {

namespace cli = chdzdt::cli;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

int fail(int code, const std::string& what) {
  std::cerr << "chdzdt: " << what << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chdzdt: character-level word encoder toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CHDZDT_VERSION);

  cli::PreprocessOptions pre;
  auto* p = app.add_subcommand("preprocess", "Normalize raw text sources into a labeled lexicon");
  p->add_option("--in", pre.in, "Directory of raw text files")->required();
  p->add_option("--labels", pre.labels, "TSV: file TAB label [TAB social|standard]")->required();
  p->add_option("--rules", pre.rules, "Normalization rules JSON (default: built-in)");
  p->add_option("--vocab", pre.vocab, "Character vocabulary spec JSON (default: built-in)");
  p->add_option("--max-len", pre.max_len, "Drop words longer than this many characters")->capture_default_str();
  p->add_option("--out", pre.out, "Lexicon TSV; stats go to <out>.stats.json")->required();

  cli::PretrainOptions tr;
  auto* t = app.add_subcommand("pretrain", "Train an encoder on a lexicon");
  t->add_option("--lexicon", tr.lexicon, "Lexicon TSV")->required();
  t->add_option("--model-config", tr.model_config, "ModelConfig JSON");
  t->add_option("--train-config", tr.train_config, "TrainConfig JSON");
  t->add_option("--vocab", tr.vocab, "Character vocabulary spec JSON");
  t->add_option("--resume", tr.resume, "Continue from this checkpoint");
  t->add_option("--out", tr.out, "Checkpoint path; log goes to <out>.log.jsonl")->required();
  t->add_option("--epochs", tr.epochs, "Override train epochs");
  t->add_option("--batch-size", tr.batch_size, "Override batch size");
  t->add_option("--lr", tr.lr, "Override learning rate");
  t->add_option("--mask-ratio", tr.mask_ratio, "Override masked character ratio");
  t->add_option("--log-every", tr.log_every, "Steps between log lines");
  t->add_option("--checkpoint-every", tr.checkpoint_every, "Epochs between periodic checkpoints (0: off)");
  t->add_option("--warmup-steps", tr.warmup_steps, "Linear warmup steps");
  t->add_option("--blocks", tr.blocks, "Override encoder blocks");
  t->add_option("--heads", tr.heads, "Override attention heads");
  t->add_option("--hidden", tr.hidden, "Override hidden size");
  t->add_option("--max-chars", tr.max_chars, "Override characters per word");
  t->add_option("--dropout", tr.dropout, "Override dropout");
  t->add_option("--init", tr.init, "Initialization scheme")->check(CLI::IsMember({"normal", "fan_in"}));
  t->add_option("--seed", tr.seed, "Seed for model init and training (default 42)");
  t->add_flag("--quiet", tr.quiet, "No progress lines");

  cli::EncodeOptions enc;
  auto* e = app.add_subcommand("encode", "Write CLS vectors for a word list");
  e->add_option("--ckpt", enc.ckpt, "Checkpoint")->required();
  e->add_option("--words", enc.words, "One word per line, or - for stdin")->required();
  e->add_option("--out", enc.out, "Embedding TSV with a #dim header")->required();

  cli::EvalOptions ev;
  auto* v = app.add_subcommand("eval", "Run one evaluation task");
  v->add_option("--task", ev.task, "Task")->required()->check(CLI::IsMember(cli::eval_tasks()));
  v->add_option("--embedder", ev.embedder, "Checkpoint (.chdz) or embedding TSV")->required();
  v->add_option("--data", ev.data, "Task data file(s); decoder tasks take train [test]")->required();
  v->add_option("--mode", ev.mode, "frozen or finetune (tag, pos, sa)")
      ->check(CLI::IsMember({"frozen", "finetune"}))
      ->capture_default_str();
  v->add_option("--out", ev.out, "Report JSON; a finetuned checkpoint goes beside it")->required();
  v->add_option("--config", ev.config, "Task settings JSON");
  v->add_option("--seed", ev.seed, "Seed (default 42)");
  v->add_option("--train-fraction", ev.train_fraction, "Train share when splitting one file");
  v->add_option("--lr", ev.lr, "Learning rate (probe, compose, decoders)");
  v->add_option("--epochs", ev.epochs, "Epochs (probe, compose, decoders)");
  v->add_option("--gru-hidden", ev.gru_hidden, "Decoder GRU size per direction");
  v->add_option("--dense", ev.dense, "Decoder dense layer size");
  v->add_option("--max-words", ev.max_words, "Sentence truncation (pos, sa)");
  v->add_option("--batch-size", ev.batch_size, "Decoder batch size");
  v->add_option("--kinds", ev.kinds, "Composition kinds (compose; default all)")->delimiter(',');
  v->add_option("--objective", ev.objective, "mse or cosine (compose)");
  v->add_flag("--quiet", ev.quiet, "Do not print the table");

  cli::AblationOptions ab;
  auto* a = app.add_subcommand("ablation", "Train and evaluate a grid of encoder variants");
  a->add_option("--grid", ab.grid, "Grid JSON (default: the seven N x H x d variants)");
  a->add_option("--lexicon", ab.lexicon, "Lexicon TSV")->required();
  a->add_option("--model-config", ab.model_config, "Base ModelConfig JSON");
  a->add_option("--train-config", ab.train_config, "TrainConfig JSON");
  a->add_option("--vocab", ab.vocab, "Character vocabulary spec JSON");
  a->add_option("--config", ab.config, "Eval settings JSON: {probe, pos, sa}");
  a->add_option("--evals", ab.evals, "Comma list of morph,noise,probe,pos,sa (default morph)")->delimiter(',');
  a->add_option("--out", ab.out, "Output directory")->required();
  a->add_option("--clusters", ab.clusters, "Root clusters (morph)");
  a->add_option("--noise", ab.noise, "Tuple files .star/.hash/.sim (noise)");
  a->add_option("--noise-clusters", ab.noise_clusters, "Variant clusters (noise)");
  a->add_option("--affixes", ab.affixes, "Affix rows (probe)");
  a->add_option("--pos", ab.pos, "PoS train [test]");
  a->add_option("--sa", ab.sa, "Sentiment train [test]");
  a->add_option("--epochs", ab.epochs, "Override train epochs");
  a->add_option("--seed", ab.seed, "Seed (default 42)");
  a->add_flag("--no-timing", ab.no_timing, "Omit timing columns (reproducible reports)");
  a->add_flag("--quiet", ab.quiet, "No progress lines or table");

  cli::ToyDataOptions toy;
  auto* d = app.add_subcommand("toy-data", "Write the synthetic lexicon and evaluation fixtures");
  d->add_option("--out", toy.out, "Output directory")->required();
  d->add_option("--seed", toy.seed, "Seed")->capture_default_str();
  d->add_option("--words", toy.words, "Lexicon size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kUsage;
  }

  try {
    if (*p) return cli::run_preprocess(pre);
    if (*t) return cli::run_pretrain(tr);
    if (*e) return cli::run_encode(enc);
    if (*v) return cli::run_eval(ev);
    if (*a) return cli::run_ablation(ab);
    if (*d) return cli::run_toy_data(toy);
  } catch (const cli::UsageError& ex) {
    return fail(kUsage, ex.what());
  } catch (const chdzdt::ContractError& ex) {
    return fail(kUsage, ex.what());
  } catch (const chdzdt::ConfigError& ex) {
    return fail(kUsage, ex.what());
  } catch (const chdzdt::NumericalError& ex) {
    return fail(kNumerical, ex.what());
  } catch (const chdzdt::Error& ex) {
    return fail(kData, ex.what());
  } catch (const std::filesystem::filesystem_error& ex) {
    return fail(kData, ex.what());
  }
  return kUsage;
}
