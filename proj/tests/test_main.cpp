// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "gossipwatch/log.hpp"

int main(int argc, char **argv) {
  gossipwatch::init_logging_from_env();
  doctest::Context ctx;
  ctx.applyCommandLine(argc, argv);
  return ctx.run();
}
