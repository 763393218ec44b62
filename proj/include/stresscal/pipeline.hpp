#pragma once

#include <functional>
#include <string_view>

#include "stresscal/config.hpp"

// Orchestration behind the CLI subcommands. Each stage writes its outputs
// plus a config echo into RunConfig::out_dir and streams a human-readable
// summary through `out`.
namespace stresscal::pipeline {

using OutputFn = std::function<void(std::string_view)>;

void run_extract(const ConfigFile& file, const OutputFn& out);
void run_train(const ConfigFile& file, const OutputFn& out);
void run_evaluate(const ConfigFile& file, const OutputFn& out);
void run_calibrate(const ConfigFile& file, const OutputFn& out);
void run_rank_features(const ConfigFile& file, const OutputFn& out);
void run_report(const ConfigFile& file, const OutputFn& out);

}  // namespace stresscal::pipeline
