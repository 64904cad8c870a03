// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "signpose/cli.hpp"

int main(int argc, char** argv) { return signpose::cli::main(argc, argv); }
