// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_TOOLS_CLI_H_
#define WALKEX_TOOLS_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "walkex/pipeline.h"

namespace walkex::cli {

// Every value a command can read. Shared options live on the top-level app
// (and in the config file's top level); per-command options sit in the
// command's section.
struct Options {
  std::string dataset;
  int generate = 0;
  std::uint64_t data_seed = 7;
  std::string mdp = "walk";
  int L = 16;
  int N = 16;
  int K = 3;
  int epochs = 200;
  int batch = 32;
  int folds = 10;
  std::uint64_t seed = 0;
  double gamma = 0.9;
  double beta = 0.1;
  double eps_start = 0.1;
  double eps_end = 0.4;
  double lr_sampling = 1e-3;
  double lr_output = 1e-3;
  double input_scale = 1.0;
  std::string pooling = "mean";
  std::string out = "walkex-out";
  int jobs = 1;

  // extract
  std::string checkpoint;
  std::vector<std::size_t> graphs{0};

  // bench-actions
  std::vector<std::string> families{"ba"};
  std::vector<int> sizes{100};
  int bench_seeds = 20;

  // gen-data
  int n = 1000;
  int base_nodes = 20;
  int attach = 1;
  std::string name = "BA2MOTIFS";

  // grad-check
  int check_seeds = 20;
  std::string corrupt_block;
};

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

// Registers all options and subcommands on `app`, bound to `opts`.
void configure(CLI::App& app, Options& opts);

// TrainConfig from the parsed options; throws InputError when invalid.
TrainConfig train_config(const Options& opts);

// Parses argv and runs the selected command.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace walkex::cli

#endif  // WALKEX_TOOLS_CLI_H_
