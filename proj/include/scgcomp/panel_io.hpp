#pragma once

#include "scgcomp/panel.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace scgcomp {

/// Sidecar description of a wide-format panel file.
struct PanelSchema
{
    int tau = 0;
    std::vector<CovariateInfo> covariates;
    /// Whether the file carries a Y0 column.
    bool baseline_state = false;
};

PanelSchema parse_schema(std::string_view json_text);
PanelSchema read_schema(const std::filesystem::path& path);
std::string schema_json(const PanelSchema& schema);
PanelSchema schema_of(const PanelDataset& data);

/// Column names in the canonical temporal order.
std::vector<std::string> panel_column_names(const PanelSchema& schema);

/// Reads one row per individual; empty cells and "NA" are missing. Leading
/// lines starting with '#' are skipped.
PanelDataset read_panel_csv(std::istream& in, const PanelSchema& schema);
PanelDataset read_panel_csv(const std::filesystem::path& path, const PanelSchema& schema);

void write_panel_csv(std::ostream& out, const PanelDataset& data);

/// Shortest round-trip decimal text of a double.
std::string format_double(double v);

}  // namespace scgcomp
