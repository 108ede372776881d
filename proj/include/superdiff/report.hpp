/// Static Markdown report over a directory of pipeline artifacts, with
/// optional SVG plots.
#pragma once

#include <string>
#include <vector>

namespace sdiff {

struct CriterionRow {
    std::string name;
    bool pass = false;
    std::string measured;
    std::string target;
};

struct Report {
    std::vector<CriterionRow> criteria;
    /// Markdown text of the whole report.
    std::string markdown;
    /// SVG files written next to the report (empty without plot support).
    std::vector<std::string> plots;
    bool all_pass() const;
};

bool plots_available();

struct ReportOptions {
    /// Relative tolerance of the c* comparison.
    double cstar_tolerance = 0.10;
    /// Relative tolerance of the s_bar^2 slope against 2 c* log 3.
    double growth_tolerance = 0.30;
    double flow_tolerance = 0.02;
    /// Relative tolerance of the simulation plateau against the cell estimate.
    double plateau_tolerance = 0.15;
    /// Fit window start for D(t) against sqrt(log t).
    double trend_from = 100.0;
    double trend_min_r2 = 0.9;
    double exit_max_probability = 0.01;
    bool write_plots = true;
};

/// Builds the report from whichever of cstar.csv, cells.csv, flow.csv,
/// msd.csv, exit.csv and moments.csv exist in `input_dir`, writing
/// report.md (and plots) into `output_dir`. Malformed CSVs throw CsvError.
Report emit_report(const std::string& input_dir, const std::string& output_dir, const ReportOptions& options = {});

}  // namespace sdiff
