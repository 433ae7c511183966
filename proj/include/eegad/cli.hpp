#pragma once

#include "eegad/config.hpp"

namespace eegad {

// Command implementations behind the eegad CLI; each returns a process exit
// code (0 on success) and writes its outputs under the configured paths.
int cmd_synth(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_ablate(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

}  // namespace eegad
