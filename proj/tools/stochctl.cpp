// SPDX-License-Identifier: Apache-2.0
#include "stochctl/cli.hpp"

int main(int argc, char** argv) { return stochctl::cli::run(argc, argv); }
