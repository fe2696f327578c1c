#pragma once

// Report rendering for completed runs: a markdown summary, a merged CSV, and
// self-contained SVG plot data for the convergence curves and fits. No
// external plotting dependency; output is deterministic given the runs.

#include <map>
#include <string>
#include <vector>

namespace gwel {

struct ReportFiles {
    std::string markdown;
    std::string merged_csv;
    // file name -> svg content, e.g. "n_x_vs_n.svg"
    std::map<std::string, std::string> svgs;
};

// run_dirs point at <out>/<id> directories produced by write_run. Throws
// MissingRun when a record.json is absent.
ReportFiles build_report(const std::vector<std::string>& run_dirs);

void write_report(const ReportFiles& files, const std::string& out_dir);

} // namespace gwel
