#pragma once

#include <string>

#include "isaclab/io.hpp"
#include "isaclab/scenario.hpp"

namespace isaclab {

// Dispatches the scenario's pipeline, writes its CSVs and manifest.json into
// out_dir, and returns the manifest. scenario_bytes is the raw scenario file
// content; its hash ties outputs to the exact input. Grid points whose
// optimization is infeasible are skipped, flagged in the manifest, and make
// the run report infeasible. Identical (scenario, seed) runs produce
// byte-identical files.
Manifest run_experiment(const Scenario& sc, const std::string& scenario_bytes,
                        const std::string& out_dir);

}  // namespace isaclab
