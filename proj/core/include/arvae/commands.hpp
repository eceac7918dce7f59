#pragma once

#include "arvae/run_config.hpp"

namespace arvae {

// Entry points behind the CLI subcommands. Each writes its outputs (and the
// fully-resolved config echo) into the run's output directory and also
// prints a human-readable summary to stdout.

struct ReconstructOptions {
  std::string checkpoint;
  std::string input;   // frames directory or .rvid file
  std::string out;
  int frames = -1;     // -1: full clip length
  bool dump_frames = false;
  bool deterministic = false;
  std::uint64_t seed = 1;
};

int cmd_synth(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_reconstruct(const ReconstructOptions& opt);
int cmd_eval(const RunConfig& cfg, const std::string& checkpoint);
int cmd_entropy(const RunConfig& cfg, const std::string& checkpoint /* may be empty */);

}  // namespace arvae
