// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.h"

int main(int argc, char** argv) { return walkex::cli::run(argc, argv, std::cout, std::cerr); }
