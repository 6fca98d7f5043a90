// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>
#include <vector>

#include "saedrift/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return saedrift::cli::run(args);
}
