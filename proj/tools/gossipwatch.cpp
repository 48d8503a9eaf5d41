// SPDX-License-Identifier: Apache-2.0
#include <csignal>
#include <iostream>

#include "gossipwatch/cli/cli.hpp"

namespace {

extern "C" void on_sigint(int) {
  gossipwatch::cli::request_interrupt();
}

}  // namespace

int main(int argc, char **argv) {
  std::signal(SIGINT, on_sigint);
  std::signal(SIGTERM, on_sigint);
  return gossipwatch::cli::run(argc, argv, std::cout, std::cerr);
}
