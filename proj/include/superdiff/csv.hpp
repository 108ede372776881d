/// Plain CSV artifacts with a provenance comment line.
///
/// Layout: one or more lines starting with '#' (the first reads
/// `# config_hash=<hex> seed=<n>` plus optional key=value pairs), one
/// header line, then numeric rows. Numbers use the shortest round-trip form.
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdiff {

struct Stamp {
    std::string config_hash;
    std::uint64_t seed = 0;
    /// Extra key=value pairs appended to the stamp line (sorted by key).
    std::map<std::string, std::string> extra;
};

struct CsvTable {
    Stamp stamp;
    bool has_stamp = false;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    /// Index of `name`; throws when absent.
    std::size_t column(const std::string& name) const;
    std::vector<double> values(const std::string& name) const;
};

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string format_number(double v);

/// Serializes a table (stamp line, header, rows) to text.
std::string csv_text(const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);

/// Parses a table. With `expected` non-empty the header must list exactly
/// these columns in order. Errors name the file and the 1-based line number.
CsvTable parse_csv(const std::string& text, const std::string& name, const std::vector<std::string>& expected = {});
CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected = {});

/// Declared column sets of the pipeline artifacts.
namespace columns {
inline const std::vector<std::string> cells = {"sample_id", "m", "s11", "s12", "s22", "sstar11",
                                               "sstar12", "sstar22", "k12", "residual"};
inline const std::vector<std::string> flow = {"n", "sbar", "asymptote", "ratio"};
inline const std::vector<std::string> msd = {"t", "msd", "msd_se", "m4", "D", "D_lo", "D_hi"};
inline const std::vector<std::string> exit = {"t", "p_exit", "lo", "hi"};
inline const std::vector<std::string> cstar = {"l", "m", "samples", "value", "se", "lo", "hi", "closed_form"};
inline const std::vector<std::string> moments = {"t", "ratio2", "ratio4", "kurtosis_ratio"};
}  // namespace columns

}  // namespace sdiff
