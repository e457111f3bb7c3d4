#pragma once

#include <CLI11.hpp>

namespace collapse_lab::cli {

/// Registers `analytics <op>` under `parent`; each op prints "name,value" rows.
void add_analytics_command(CLI::App& parent, int& exit_code);

}  // namespace collapse_lab::cli
