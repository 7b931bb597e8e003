#pragma once

#include <string>

#include "synthesis.hpp"

namespace hypersynth {

const char* version_string();

std::string status_name(SynthesisStatus s);

/// Machine-readable run report.
std::string synthesis_report_json(const EvalContext& ctx, const SynthesisResult& r,
                                  const SynthesisOptions& opts, const std::string& command);

std::string check_report_json(const EvalContext& ctx, const Evaluation& ev, bool uniform);

/// Process exit code convention: 0 success, 2 infeasible, 3 budget exhausted
/// with an incumbent, 4 budget exhausted without one.
int exit_code_for(const SynthesisResult& r);

}  // namespace hypersynth
