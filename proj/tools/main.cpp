#include <CLI11.hpp>

#include <arvae/commands.hpp>

#include <iostream>

using namespace arvae;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* c = cmd->add_option("--config", f.config_path, "run configuration (JSON)");
  if (config_required) c->required();
  cmd->add_option("--out", f.out_override, "output directory (overrides io.out)");
  cmd->add_option("--seed", f.seed, "seed (overrides io.seed)")
      ->each([&f](const std::string&) { f.seed_set = true; });
  cmd->add_flag("--deterministic", f.deterministic,
                "single-threaded bit-reproducible mode (requires a seed)");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg = load_run_config(f.config_path);
  if (!f.out_override.empty()) cfg.io.out = f.out_override;
  if (f.seed_set) cfg.io.seed = f.seed;
  if (f.deterministic) cfg.io.deterministic = true;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autoregressive video autoencoder toolkit"};
  app.require_subcommand(1);

  CommonFlags synth_f, train_f, eval_f, entropy_f;
  CLI::App* synth = app.add_subcommand("synth", "render synthetic clips with flow sidecars");
  add_common(synth, synth_f, true);

  CLI::App* train = app.add_subcommand("train", "run the multi-stage curriculum");
  add_common(train, train_f, true);

  ReconstructOptions ropt;
  CommonFlags rec_f;
  CLI::App* rec = app.add_subcommand("reconstruct", "round-trip a clip through a checkpoint");
  rec->add_option("--checkpoint", ropt.checkpoint, "trained checkpoint")->required();
  rec->add_option("--input", ropt.input, "frames directory or .rvid clip")->required();
  rec->add_option("--out", ropt.out, "output directory")->required();
  rec->add_option("--frames", ropt.frames, "frame count (default: whole clip)");
  rec->add_flag("--dump-frames", ropt.dump_frames, "write side-by-side PNG frames");
  rec->add_option("--seed", rec_f.seed, "seed");
  rec->add_flag("--deterministic", ropt.deterministic, "single-threaded mode");

  std::string eval_ckpt;
  CLI::App* eval = app.add_subcommand("eval", "PSNR/SSIM over a dataset");
  add_common(eval, eval_f, true);
  eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();

  std::string entropy_ckpt;
  CLI::App* entropy = app.add_subcommand("entropy", "representation entropy report");
  add_common(entropy, entropy_f, true);
  entropy->add_option("--checkpoint", entropy_ckpt,
                      "trained checkpoint (omit for the zero-flow baseline)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(resolve(synth_f));
    if (train->parsed()) return cmd_train(resolve(train_f));
    if (rec->parsed()) return cmd_reconstruct(ropt);
    if (eval->parsed()) return cmd_eval(resolve(eval_f), eval_ckpt);
    if (entropy->parsed()) return cmd_entropy(resolve(entropy_f), entropy_ckpt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
