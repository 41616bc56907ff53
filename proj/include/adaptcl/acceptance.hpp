#pragma once

#include <string>
#include <vector>

namespace adaptcl {

enum class AcceptanceSuite { quick, full };

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    bool skipped = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::string data_dir;  // for the optional full-scale run; env fallback
    /// Negative control: corrupt one frozen weight mid-sequence so the
    /// freeze-exactness criterion must fail.
    bool inject_freeze_fault = false;
};

/// Runs the acceptance criteria. `quick` covers the property checks and the
/// scaled synthetic experiments; `full` adds the MNIST-variant run when the
/// IDX files are present (skipped otherwise).
std::vector<CriterionResult> run_acceptance(AcceptanceSuite suite,
                                            const AcceptanceOptions& options = {});

}  // namespace adaptcl
