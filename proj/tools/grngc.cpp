// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "grngc/cli.hpp"

int main(int argc, char** argv) {
  return grngc::cli::run_main(argc, argv, std::cout, std::cerr);
}
